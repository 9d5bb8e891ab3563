#include <cmath>
#include <limits>
#include <vector>

#include "shelab/error.hpp"
#include "shelab/kernels.hpp"
#include "shelab/parallel.hpp"
#include "shelab/rates.hpp"
#include "shelab/streams.hpp"

namespace shelab {

namespace {

constexpr std::uint64_t kBlock = 4096;
constexpr std::uint64_t kMinHits = 100;

struct BlockSums {
  std::vector<std::uint64_t> hits;
  std::vector<double> w;
  std::vector<double> w2;
};

}  // namespace

CramerReport cramer_toy_validate(std::span<const double> s_list, int t, std::uint64_t n_replicas,
                                 std::uint64_t seed, double rel_tolerance, unsigned threads) {
  if (t < 1) throw ValidationError("cramer_toy_validate: t must be a positive integer");
  if (n_replicas == 0) throw ValidationError("cramer_toy_validate: need at least one replica");
  if (n_replicas > std::numeric_limits<std::uint32_t>::max()) {
    throw ValidationError("cramer_toy_validate: too many replicas for the 32-bit replica counter");
  }
  for (double s : s_list) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw ValidationError("cramer_toy_validate: s must be finite and >= 0");
  }
  const std::size_t ns = s_list.size();
  const double tt = static_cast<double>(t);
  const std::uint64_t n_blocks = (n_replicas + kBlock - 1) / kBlock;
  std::vector<BlockSums> blocks(n_blocks);

  parallel_blocks(n_blocks, threads, [&](std::size_t b) {
    BlockSums& out = blocks[b];
    out.hits.assign(ns, 0);
    out.w.assign(ns, 0.0);
    out.w2.assign(ns, 0.0);
    std::vector<double> xi(static_cast<std::size_t>(t));
    const std::uint64_t begin = b * kBlock;
    const std::uint64_t end = std::min(n_replicas, begin + kBlock);
    for (std::uint64_t r = begin; r < end; ++r) {
      const kernels::StreamKey key{seed, static_cast<std::uint32_t>(r), streams::kCramer};
      kernels::gaussian_fill(key, 0, xi);
      double x = 0.0;
      for (double v : xi) x += v;
      for (std::size_t k = 0; k < ns; ++k) {
        if (x > s_list[k] * tt) ++out.hits[k];
      }
      for (std::size_t k = 0; k < ns; ++k) {
        const double q = s_list[k];
        kernels::gaussian_fill(key, static_cast<std::uint32_t>(k + 1), xi);
        double y = 0.0;
        for (double v : xi) y += v + q;
        if (y > s_list[k] * tt) {
          const double w = std::exp(-q * y + 0.5 * tt * q * q);
          out.w[k] += w;
          out.w2[k] += w * w;
        }
      }
    }
  });

  CramerReport rep;
  rep.t = t;
  rep.n_replicas = n_replicas;
  rep.seed = seed;
  rep.tolerance = rel_tolerance;
  const double n = static_cast<double>(n_replicas);

  std::vector<double> p_grid, h_grid;
  for (int i = 1; i <= 800; ++i) {
    p_grid.push_back(0.01 * i);
    h_grid.push_back(0.5 * p_grid.back() * p_grid.back());
  }
  const LdpFromSamples ldp(p_grid, h_grid);

  for (std::size_t k = 0; k < ns; ++k) {
    CramerRow row;
    row.s = s_list[k];
    double wsum = 0.0, w2sum = 0.0;
    for (const auto& blk : blocks) {
      row.hits += blk.hits[k];
      wsum += blk.w[k];
      w2sum += blk.w2[k];
    }
    row.too_few_hits = row.hits < kMinHits;
    const double inf = std::numeric_limits<double>::infinity();
    row.direct_rate = row.hits > 0 ? -std::log(static_cast<double>(row.hits) / n) / tt : inf;
    const double pw = wsum / n;
    row.tilted_rate = pw > 0.0 ? -std::log(pw) / tt : inf;
    const double var = std::max(w2sum / n - pw * pw, 0.0);
    row.tilted_rel_stderr = pw > 0.0 ? std::sqrt(var / n) / pw : inf;
    row.exact_rate = -std::log(0.5 * std::erfc(row.s * std::sqrt(tt / 2.0))) / tt;
    row.ldp_rate = row.s > ldp.zeta() ? ldp.at(row.s).rate : 0.0;
    row.empirical_rate = row.too_few_hits ? row.tilted_rate : row.direct_rate;
    if (row.ldp_rate > 0.0) {
      row.rel_error = std::abs(row.empirical_rate - row.ldp_rate) / row.ldp_rate;
      row.pass = row.rel_error <= rel_tolerance;
    } else {
      row.rel_error = std::abs(row.empirical_rate);
      row.pass = row.rel_error <= rel_tolerance;
    }
    rep.rows.push_back(row);
  }
  return rep;
}

nlohmann::json CramerReport::to_json() const {
  nlohmann::json rows_j = nlohmann::json::array();
  for (const auto& r : rows) {
    rows_j.push_back({{"s", r.s},
                      {"hits", r.hits},
                      {"too_few_hits", r.too_few_hits},
                      {"direct_rate", std::isfinite(r.direct_rate) ? nlohmann::json(r.direct_rate) : nlohmann::json()},
                      {"tilted_rate", std::isfinite(r.tilted_rate) ? nlohmann::json(r.tilted_rate) : nlohmann::json()},
                      {"tilted_rel_stderr", r.tilted_rel_stderr},
                      {"exact_rate", r.exact_rate},
                      {"ldp_rate", r.ldp_rate},
                      {"empirical_rate", r.empirical_rate},
                      {"rel_error", r.rel_error},
                      {"pass", r.pass}});
  }
  return {{"t", t}, {"n_replicas", n_replicas}, {"seed", seed}, {"tolerance", tolerance}, {"rows", rows_j}};
}

}  // namespace shelab
