#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aik/centroids.hpp"
#include "aik/masking.hpp"
#include "aik/parallel.hpp"
#include "aik/types.hpp"

namespace aik {

enum class KernelFamily {
  cosine,       // plain cosine on zero-padded vectors
  mpc,          // masked partial cosine (common support)
  mpp,          // masked partial Pearson, centroid-centred; training only
  mpt_linear,   // three-side cosine against (x_j + z_q)
  mpt_poly,
  mpt_rbf,
  masked_poly,  // polynomial over mpc
  masked_rbf,   // RBF over common-support unit vectors
};

inline constexpr std::string_view kernel_family_name(KernelFamily f) noexcept {
  switch (f) {
    case KernelFamily::cosine: return "cosine";
    case KernelFamily::mpc: return "mpc";
    case KernelFamily::mpp: return "mpp";
    case KernelFamily::mpt_linear: return "mpt-linear";
    case KernelFamily::mpt_poly: return "mpt-poly";
    case KernelFamily::mpt_rbf: return "mpt-rbf";
    case KernelFamily::masked_poly: return "masked-poly";
    case KernelFamily::masked_rbf: return "masked-rbf";
  }
  return "?";
}

inline KernelFamily parse_kernel_family(std::string_view name) {
  for (auto f : {KernelFamily::cosine, KernelFamily::mpc, KernelFamily::mpp, KernelFamily::mpt_linear,
                 KernelFamily::mpt_poly, KernelFamily::mpt_rbf, KernelFamily::masked_poly,
                 KernelFamily::masked_rbf}) {
    if (kernel_family_name(f) == name) return f;
  }
  throw ConfigError("unknown kernel family '" + std::string(name) + "'");
}

constexpr bool uses_class_centroid(KernelFamily f) noexcept {
  return f == KernelFamily::mpt_linear || f == KernelFamily::mpt_poly || f == KernelFamily::mpt_rbf ||
         f == KernelFamily::mpp;
}

constexpr bool is_rbf(KernelFamily f) noexcept {
  return f == KernelFamily::mpt_rbf || f == KernelFamily::masked_rbf;
}

constexpr bool is_poly(KernelFamily f) noexcept {
  return f == KernelFamily::mpt_poly || f == KernelFamily::masked_poly;
}

struct KernelSpec {
  KernelFamily family = KernelFamily::mpt_linear;
  int p = 3;
  double tau2 = 1.0;
  double eps = 1e-12;

  void validate() const {
    if (p < 1) throw ParameterError("kernel: polynomial order p must be >= 1");
    if (!(tau2 > 0.0)) throw ParameterError("kernel: tau2 must be positive");
    if (!(eps > 0.0)) throw ParameterError("kernel: eps must be positive");
  }
};

// A kernel value plus whether the zero-norm guard fired.
struct KernelValue {
  double value = 0.0;
  bool degenerate = false;
};

namespace detail {

inline KernelValue guarded_cosine(const Vector& a, double na, const Vector& b, double nb, double eps) {
  if (na < eps || nb < eps) return {0.0, true};
  return {a.dot(b) / (na * nb), false};
}

inline KernelValue guarded_cosine(const Vector& a, const Vector& b, double eps) {
  return guarded_cosine(a, a.norm(), b, b.norm(), eps);
}

// exp(-|a/|a| - b/|b||^2 / (2 tau2)), 0 on a zero-norm argument.
inline KernelValue guarded_unit_rbf(const Vector& a, double na, const Vector& b, double nb, double tau2,
                                    double eps) {
  if (na < eps || nb < eps) return {0.0, true};
  const double d2 = (a / na - b / nb).squaredNorm();
  return {std::exp(-d2 / (2.0 * tau2)), false};
}

// (1 + base / tau2)^p. The scaling is tau^-2, as printed.
inline double poly(double base, int p, double tau2) { return std::pow(1.0 + base / tau2, p); }

inline KernelValue poly(KernelValue base, int p, double tau2) {
  return {poly(base.value, p, tau2), base.degenerate};
}

inline Vector restrict(const Vector& v, const Mask& m) { return m.select(v.array(), 0.0).matrix(); }

}  // namespace detail

inline double cosine(const MaskedVector& a, const MaskedVector& b, double eps = 1e-12) {
  require_same_size(a, b, "cosine");
  return detail::guarded_cosine(a.values(), b.values(), eps).value;
}

inline KernelValue mpc_value(const MaskedVector& a, const MaskedVector& b, double eps = 1e-12) {
  require_same_size(a, b, "mpc");
  const Mask common = a.mask() && b.mask();
  return detail::guarded_cosine(detail::restrict(a.values(), common), detail::restrict(b.values(), common), eps);
}

inline double mpc(const MaskedVector& a, const MaskedVector& b, double eps = 1e-12) {
  return mpc_value(a, b, eps).value;
}

inline KernelValue mpp_value(const MaskedVector& a, const MaskedVector& b, const ClassCentroid* zr,
                             const ClassCentroid* zq, double eps = 1e-12) {
  require_same_size(a, b, "mpp");
  if (zr == nullptr || zq == nullptr) {
    throw PhaseError("mpp: class centroids are required for both samples (training phase only)");
  }
  if (zr->size() != a.size() || zq->size() != b.size()) throw ShapeError("mpp: centroid dimension mismatch");
  const Mask common = a.mask() && b.mask();
  return detail::guarded_cosine(detail::restrict(a.values() - zr->mean, common),
                                detail::restrict(b.values() - zq->mean, common), eps);
}

inline double mpp(const MaskedVector& a, const MaskedVector& b, const ClassCentroid* zr, const ClassCentroid* zq,
                  double eps = 1e-12) {
  return mpp_value(a, b, zr, zq, eps).value;
}

inline KernelValue mpt_linear_value(const MaskedVector& a, const MaskedVector& b, const ClassCentroid& zq,
                                    double eps = 1e-12) {
  require_same_size(a, b, "mpt_linear");
  return detail::guarded_cosine(a.values(), centroid_augment(b, zq), eps);
}

/// Three-side cosine: x_a^T (x_b + z_q) / (|x_a| |x_b + z_q|).
///
/// `zq` is the centroid of b's class. The left vector stays zero-padded;
/// the centroid fills the right vector's holes, so no cross mask is applied.
inline double mpt_linear(const MaskedVector& a, const MaskedVector& b, const ClassCentroid& zq,
                         double eps = 1e-12) {
  return mpt_linear_value(a, b, zq, eps).value;
}

inline double mpt_poly(const MaskedVector& a, const MaskedVector& b, const ClassCentroid& zq, int p = 3,
                       double tau2 = 1.0, double eps = 1e-12) {
  return detail::poly(mpt_linear(a, b, zq, eps), p, tau2);
}

inline KernelValue mpt_rbf_value(const MaskedVector& a, const MaskedVector& b, const ClassCentroid& zq,
                                 double tau2 = 1.0, double eps = 1e-12) {
  require_same_size(a, b, "mpt_rbf");
  const Vector right = centroid_augment(b, zq);
  return detail::guarded_unit_rbf(a.values(), a.values().norm(), right, right.norm(), tau2, eps);
}

inline double mpt_rbf(const MaskedVector& a, const MaskedVector& b, const ClassCentroid& zq, double tau2 = 1.0,
                      double eps = 1e-12) {
  return mpt_rbf_value(a, b, zq, tau2, eps).value;
}

inline double masked_poly(const MaskedVector& a, const MaskedVector& b, int p = 3, double tau2 = 1.0,
                          double eps = 1e-12) {
  return detail::poly(mpc(a, b, eps), p, tau2);
}

inline KernelValue masked_rbf_value(const MaskedVector& a, const MaskedVector& b, double tau2 = 1.0,
                                    double eps = 1e-12) {
  require_same_size(a, b, "masked_rbf");
  const Mask common = a.mask() && b.mask();
  const Vector ra = detail::restrict(a.values(), common);
  const Vector rb = detail::restrict(b.values(), common);
  return detail::guarded_unit_rbf(ra, ra.norm(), rb, rb.norm(), tau2, eps);
}

inline double masked_rbf(const MaskedVector& a, const MaskedVector& b, double tau2 = 1.0, double eps = 1e-12) {
  return masked_rbf_value(a, b, tau2, eps).value;
}

// k(left, right) for any family. `right_label` selects the centroid for
// the three-side families; `left_label` is needed only by mpp.
inline KernelValue evaluate(const KernelSpec& spec, const MaskedVector& left, const MaskedVector& right,
                            Label right_label, const ClassCentroids& centroids,
                            const Label* left_label = nullptr) {
  switch (spec.family) {
    case KernelFamily::cosine: {
      require_same_size(left, right, "cosine");
      return detail::guarded_cosine(left.values(), right.values(), spec.eps);
    }
    case KernelFamily::mpc: return mpc_value(left, right, spec.eps);
    case KernelFamily::mpp: {
      if (left_label == nullptr) {
        throw PhaseError("mpp: the left sample has no class label (test-phase use is not supported)");
      }
      return mpp_value(left, right, &centroids.of(*left_label), &centroids.of(right_label), spec.eps);
    }
    case KernelFamily::mpt_linear: return mpt_linear_value(left, right, centroids.of(right_label), spec.eps);
    case KernelFamily::mpt_poly:
      return detail::poly(mpt_linear_value(left, right, centroids.of(right_label), spec.eps), spec.p, spec.tau2);
    case KernelFamily::mpt_rbf: return mpt_rbf_value(left, right, centroids.of(right_label), spec.tau2, spec.eps);
    case KernelFamily::masked_poly: return detail::poly(mpc_value(left, right, spec.eps), spec.p, spec.tau2);
    case KernelFamily::masked_rbf: return masked_rbf_value(left, right, spec.tau2, spec.eps);
  }
  throw ConfigError("evaluate: unknown kernel family");
}

// Rectangular kernel matrix; asymmetric in general for the MPT families.
struct GramMatrix {
  Matrix entries;
  std::vector<std::size_t> left_ids;
  std::vector<std::size_t> right_ids;
  KernelSpec spec;
  // Entries where a zero-norm guard fired.
  std::size_t degenerate = 0;

  double max_asymmetry() const {
    if (entries.rows() != entries.cols()) return 0.0;
    return (entries - entries.transpose()).cwiseAbs().maxCoeff();
  }
};

namespace detail {

inline std::vector<std::size_t> iota_ids(std::size_t n) {
  std::vector<std::size_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = i;
  return ids;
}

// Three-side families: the right-hand vectors (x_j + z_q(j)) and all norms
// are computed once; each entry is then one dot product.
inline std::size_t fill_mpt(GramMatrix& g, std::span<const MaskedVector> left, std::span<const MaskedVector> right,
                            std::span<const Label> right_labels, const ClassCentroids& centroids) {
  const auto& spec = g.spec;
  std::vector<Vector> augmented(right.size());
  std::vector<double> right_norms(right.size());
  for (std::size_t j = 0; j < right.size(); ++j) {
    augmented[j] = centroid_augment(right[j], centroids.of(right_labels[j]));
    right_norms[j] = augmented[j].norm();
  }
  std::vector<std::size_t> row_degenerate(left.size(), 0);
  parallel_for(left.size(), [&](std::size_t i) {
    const Vector& a = left[i].values();
    const double na = a.norm();
    for (std::size_t j = 0; j < right.size(); ++j) {
      KernelValue kv;
      if (spec.family == KernelFamily::mpt_rbf) {
        kv = guarded_unit_rbf(a, na, augmented[j], right_norms[j], spec.tau2, spec.eps);
      } else {
        kv = guarded_cosine(a, na, augmented[j], right_norms[j], spec.eps);
        if (spec.family == KernelFamily::mpt_poly) kv = poly(kv, spec.p, spec.tau2);
      }
      g.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = kv.value;
      row_degenerate[i] += kv.degenerate ? 1 : 0;
    }
  });
  std::size_t total = 0;
  for (auto d : row_degenerate) total += d;
  return total;
}

}  // namespace detail

/// Kernel matrix between `left` samples and labelled `right` (training)
/// samples: entries(i, j) = k(left_i, right_j, centroid of right_j's class).
///
/// Rows are filled in parallel; each entry is computed independently, so the
/// result is identical for any thread count. Zero-norm arguments never
/// throw: the entry takes the family's guard value and is tallied.
inline GramMatrix gram(std::span<const MaskedVector> left, std::span<const MaskedVector> right,
                       std::span<const Label> right_labels, const ClassCentroids& centroids,
                       const KernelSpec& spec, std::span<const Label> left_labels = {}) {
  spec.validate();
  if (right.size() != right_labels.size()) throw ShapeError("gram: right samples and labels differ in length");
  if (!left_labels.empty() && left_labels.size() != left.size()) {
    throw ShapeError("gram: left samples and labels differ in length");
  }
  if (!left.empty() && !right.empty() && left.front().size() != right.front().size()) {
    throw ShapeError("gram: left and right samples differ in dimension");
  }
  if (uses_class_centroid(spec.family)) {
    for (Label l : right_labels) {
      if (!centroids.has(l)) {
        throw ConfigError(std::string("gram: no centroid for class ") + label_tag(l) + " present in right samples");
      }
    }
  }
  if (spec.family == KernelFamily::mpp && left_labels.empty()) {
    throw PhaseError("gram: mpp needs labels for the left samples (training phase only)");
  }

  GramMatrix g{Matrix::Zero(static_cast<Eigen::Index>(left.size()), static_cast<Eigen::Index>(right.size())),
               detail::iota_ids(left.size()), detail::iota_ids(right.size()), spec, 0};

  switch (spec.family) {
    case KernelFamily::mpt_linear:
    case KernelFamily::mpt_poly:
    case KernelFamily::mpt_rbf: g.degenerate = detail::fill_mpt(g, left, right, right_labels, centroids); break;
    default: {
      std::vector<std::size_t> row_degenerate(left.size(), 0);
      parallel_for(left.size(), [&](std::size_t i) {
        const Label* ll = left_labels.empty() ? nullptr : &left_labels[i];
        for (std::size_t j = 0; j < right.size(); ++j) {
          const auto kv = evaluate(spec, left[i], right[j], right_labels[j], centroids, ll);
          g.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = kv.value;
          row_degenerate[i] += kv.degenerate ? 1 : 0;
        }
      });
      for (auto d : row_degenerate) g.degenerate += d;
    }
  }
  return g;
}

}  // namespace aik
