#include <bit>
#include <cstring>
#include <fstream>

#include "shelab/error.hpp"
#include "shelab/sim.hpp"

namespace shelab {

namespace {

void write_doubles(std::ofstream& os, const std::vector<double>& v) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  } else {
    for (double d : v) {
      auto u = std::bit_cast<std::uint64_t>(d);
      unsigned char b[8];
      for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
      os.write(reinterpret_cast<const char*>(b), 8);
    }
  }
}

void read_doubles(std::ifstream& is, std::vector<double>& v) {
  std::vector<unsigned char> raw(v.size() * 8);
  is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(is.gcount()) != raw.size()) throw ValidationError("ensemble file is truncated");
  for (std::size_t k = 0; k < v.size(); ++k) {
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= std::uint64_t{raw[k * 8 + i]} << (8 * i);
    v[k] = std::bit_cast<double>(u);
  }
}

}  // namespace

void write_ensemble(const std::string& path, const Ensemble& e) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open " + path + " for writing");
  os << e.header().dump() << '\n';
  write_doubles(os, e.values);
  write_doubles(os, e.final_fields);
  if (!os) throw ValidationError("failed writing " + path);
}

Ensemble read_ensemble(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open " + path);
  std::string line;
  std::getline(is, line);
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(path + ": bad ensemble header");
  }
  if (h.value("format", "") != "shelab.ensemble" || h.value("version", 0) != 1) {
    throw ValidationError(path + ": unsupported ensemble format or version");
  }
  Ensemble e;
  e.source = h["source"];
  Source src = NarrowWedge{};
  if (e.source.value("kind", "") != "narrow_wedge") src = Profile::flat(0.0);
  e.lattice = make_lattice(LatticeConfig::from_json(h["config"]), src);
  e.seed = h["seed"].get<std::uint64_t>();
  e.n_replicas = h["n_replicas"].get<std::size_t>();
  e.times = h["times"].get<std::vector<double>>();
  e.sites = h["sites"].get<std::vector<double>>();
  e.clamped = h.value("clamped", std::uint64_t{0});
  e.site_updates = h.value("site_updates", std::uint64_t{0});
  e.values.resize(e.n_replicas * e.times.size() * e.sites.size());
  read_doubles(is, e.values);
  if (h.value("has_final_fields", false)) {
    e.final_fields.resize(e.n_replicas * e.lattice.size());
    read_doubles(is, e.final_fields);
  }
  return e;
}

}  // namespace shelab
