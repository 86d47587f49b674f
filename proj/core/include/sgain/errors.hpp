#pragma once

#include <stdexcept>

namespace sgain {

/// Invalid model data (non-cooperative drift, malformed noise, bad parameters, ...).
class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace sgain
