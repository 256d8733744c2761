#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

#include "aik/dataset.hpp"
#include "aik/parallel.hpp"
#include "aik/types.hpp"

namespace aik {

/// Running mean after appending `eta` to `n` values whose mean is `mu`.
constexpr double incremental_mean(double mu, std::uint64_t n, double eta) noexcept {
  return mu + (eta - mu) / static_cast<double>(n + 1);
}

/// Streaming mean and sample variance of one dimension (Welford).
///
/// The variance uses the n-1 denominator and is only defined for count >= 2;
/// the mean is only defined for count >= 1. Appending the current mean leaves
/// the mean unchanged and scales the variance by (n-1)/n.
class RunningMoments {
 public:
  RunningMoments() = default;

  // Rebuilds the accumulator from summary values, e.g. a PartialMoments slot.
  static RunningMoments from(double mean, double variance, std::uint64_t count) {
    RunningMoments m;
    m.count_ = count;
    m.mean_ = count > 0 ? mean : 0.0;
    m.m2_ = count > 1 ? variance * static_cast<double>(count - 1) : 0.0;
    return m;
  }

  void push(double eta) noexcept {
    const double delta = eta - mean_;
    mean_ = incremental_mean(mean_, count_, eta);
    ++count_;
    m2_ += delta * (eta - mean_);
  }

  std::uint64_t count() const noexcept { return count_; }
  bool has_mean() const noexcept { return count_ >= 1; }
  bool has_variance() const noexcept { return count_ >= 2; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept { return count_ >= 2 ? m2_ / static_cast<double>(count_ - 1) : 0.0; }

 private:
  std::uint64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// Per-dimension class moments over observed entries.
struct PartialMoments {
  Vector mean;
  Vector var;
  std::vector<std::uint64_t> count;

  std::size_t dims() const noexcept { return count.size(); }
  bool has_mean(std::size_t t) const { return count.at(t) >= 1; }
  bool has_variance(std::size_t t) const { return count.at(t) >= 2; }

  RunningMoments at(std::size_t t) const {
    const auto i = static_cast<Eigen::Index>(t);
    return RunningMoments::from(mean[i], var[i], count.at(t));
  }
};

// One streaming step on dimension t of `state`.
inline void incremental_moments(PartialMoments& state, std::size_t t, double eta) {
  auto m = state.at(t);
  m.push(eta);
  const auto i = static_cast<Eigen::Index>(t);
  state.mean[i] = m.mean();
  state.var[i] = m.variance();
  state.count[t] = m.count();
}

// Moments of the rows labelled `label`, observed entries only. Each
// dimension is reduced in row order, so the result does not depend on the
// parallel schedule.
inline PartialMoments partial_moments(const Dataset& d, Label label) {
  const auto m = static_cast<Eigen::Index>(d.dims());
  PartialMoments out{Vector::Zero(m), Vector::Zero(m), std::vector<std::uint64_t>(d.dims(), 0)};
  parallel_for(d.dims(), [&](std::size_t t) {
    const auto c = static_cast<Eigen::Index>(t);
    RunningMoments acc;
    for (std::size_t i = 0; i < d.rows(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      if (d.label(i) == label && d.presence()(r, c)) acc.push(d.features()(r, c));
    }
    out.mean[c] = acc.mean();
    out.var[c] = acc.variance();
    out.count[t] = acc.count();
  });
  return out;
}

struct FdrReport {
  Vector f;
  std::vector<std::size_t> ranked_dims;
};

inline constexpr double kDefaultFdrEps = 1e-12;

// Partial Fisher discriminant ratio per dimension:
//   F_t = (mean+ - mean-)^2 / (var+ + var- + eps),
// or 0 where either class has fewer than two observed entries. Ranking is by
// F descending, ties to the lower dimension index.
inline FdrReport partial_fdr(const PartialMoments& pos, const PartialMoments& neg, double eps = kDefaultFdrEps) {
  if (!(eps > 0.0)) throw ParameterError("partial_fdr: eps must be positive");
  if (pos.dims() != neg.dims()) throw ShapeError("partial_fdr: class moments differ in dimension");
  const std::size_t m = pos.dims();
  FdrReport r{Vector::Zero(static_cast<Eigen::Index>(m)), std::vector<std::size_t>(m)};
  for (std::size_t t = 0; t < m; ++t) {
    if (!pos.has_variance(t) || !neg.has_variance(t)) continue;
    const auto i = static_cast<Eigen::Index>(t);
    const double gap = pos.mean[i] - neg.mean[i];
    r.f[i] = gap * gap / (pos.var[i] + neg.var[i] + eps);
  }
  std::iota(r.ranked_dims.begin(), r.ranked_dims.end(), std::size_t{0});
  std::stable_sort(r.ranked_dims.begin(), r.ranked_dims.end(), [&](std::size_t a, std::size_t b) {
    return r.f[static_cast<Eigen::Index>(a)] > r.f[static_cast<Eigen::Index>(b)];
  });
  return r;
}

inline FdrReport partial_fdr(const Dataset& d, double eps = kDefaultFdrEps) {
  return partial_fdr(partial_moments(d, Label::positive), partial_moments(d, Label::negative), eps);
}

inline std::vector<std::size_t> select_top_k(const FdrReport& r, std::size_t k) {
  if (k < 1 || k > r.ranked_dims.size()) {
    throw ParameterError("select_top_k: k = " + std::to_string(k) + " outside [1, " +
                         std::to_string(r.ranked_dims.size()) + "]");
  }
  return {r.ranked_dims.begin(), r.ranked_dims.begin() + static_cast<std::ptrdiff_t>(k)};
}

}  // namespace aik
