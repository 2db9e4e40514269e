#pragma once

#include <iosfwd>

#include "funcpool/model.hpp"

namespace funcpool {

struct SelfTestOptions {
  std::size_t grid_resolution = 2;  // keeps the full-model check fast
  double tolerance = 1e-4;
  std::uint64_t seed = 12345;
};

/// Central finite-difference checks of every hand-derived gradient: conv
/// layer, function pooling (including log sigma), dense layers and the full
/// model. Prints one line per check; returns true when all pass.
bool run_self_test(std::ostream& out, const SelfTestOptions& opts = {});

}  // namespace funcpool
