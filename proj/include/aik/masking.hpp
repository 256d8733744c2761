#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <utility>

#include "aik/dataset.hpp"
#include "aik/parallel.hpp"
#include "aik/rng.hpp"
#include "aik/types.hpp"

namespace aik {

// Zero-pads `values` outside `mask`.
inline MaskedVector to_masked(const Vector& values, const Mask& mask) {
  if (values.size() != mask.size()) {
    throw ShapeError("to_masked: " + std::to_string(values.size()) + " values but " +
                     std::to_string(mask.size()) + " mask entries");
  }
  return {values, mask};
}

inline MaskedVector to_masked(std::span<const double> values, std::span<const bool> mask) {
  if (values.size() != mask.size()) {
    throw ShapeError("to_masked: " + std::to_string(values.size()) + " values but " +
                     std::to_string(mask.size()) + " mask entries");
  }
  Vector v(static_cast<Eigen::Index>(values.size()));
  Mask m(static_cast<Eigen::Index>(mask.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = values[i];
    m[static_cast<Eigen::Index>(i)] = mask[i];
  }
  return {std::move(v), std::move(m)};
}

// Restricts both vectors to their common observed support.
inline std::pair<MaskedVector, MaskedVector> double_mask(const MaskedVector& a, const MaskedVector& b) {
  require_same_size(a, b, "double_mask");
  const Mask common = a.mask() && b.mask();
  return {MaskedVector(a.values(), common), MaskedVector(b.values(), common)};
}

struct MissingSpec {
  double rate = 0.0;
  std::uint64_t seed = 0;
};

// Bernoulli missingness, one independent draw per cell. Row r draws from
// its own stream seeded by (seed, r), so the pattern does not depend on
// how rows are scheduled. Cells that are already missing stay missing and
// count toward the target rate: present cells are masked with probability
// (rate - m) / (1 - m), where m is the existing missing fraction.
inline Dataset inject_missing(const Dataset& d, const MissingSpec& spec) {
  if (!(spec.rate >= 0.0 && spec.rate < 1.0)) {
    throw ParameterError("inject_missing: rate must lie in [0, 1)");
  }
  if (spec.rate == 0.0 || d.rows() == 0 || d.dims() == 0) return d;

  const double existing = d.missing_fraction();
  const double q = std::max(0.0, (spec.rate - existing) / (1.0 - existing));
  PresenceMatrix presence = d.presence();
  parallel_for(d.rows(), [&](std::size_t r) {
    SplitMixStream rng(mix_seed(spec.seed, static_cast<std::uint64_t>(r)));
    const auto row = static_cast<Eigen::Index>(r);
    for (Eigen::Index c = 0; c < presence.cols(); ++c) {
      const bool drop = rng.uniform() < q;
      if (drop) presence(row, c) = false;
    }
  });
  return d.with_presence(presence);
}

}  // namespace aik
