#pragma once

#include <stdexcept>

namespace shelab {

// Bad user input: out-of-domain parameters, malformed descriptors, violated
// preconditions. The CLI maps it to exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace shelab
