#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/LU>

#include "aik/centroids.hpp"
#include "aik/dataset.hpp"
#include "aik/kernels.hpp"
#include "aik/parallel.hpp"
#include "aik/types.hpp"

namespace aik {

// Reciprocal condition estimate below which a system counts as singular.
inline constexpr double kMinRcond = 1e-14;
// Normwise relative residual every accepted solve must meet.
inline constexpr double kMaxResidual = 1e-8;

struct SolveReport {
  double residual = 0.0;  // |A x - r| / (|A| |x| + |r|)
  double rcond = 0.0;
};

namespace detail {

template <typename Mat>
Eigen::PartialPivLU<Matrix> factorize(const Mat& a, const char* what) {
  Eigen::PartialPivLU<Matrix> lu(a);
  const double rc = lu.rcond();
  if (!(rc >= kMinRcond)) {
    throw SolverError(std::string(what) + ": system is singular to working precision (rcond estimate " +
                          std::to_string(rc) + ", condition ~" + std::to_string(rc > 0 ? 1.0 / rc : INFINITY) + ")",
                      rc);
  }
  return lu;
}

inline double relative_residual(const Matrix& a, const Vector& x, const Vector& rhs) {
  const double denom = a.norm() * x.norm() + rhs.norm();
  const double r = (a * x - rhs).norm();
  return denom > 0.0 ? r / denom : r;
}

inline void check_targets(std::span<const double> y, const char* what) {
  for (double v : y) {
    if (!std::isfinite(v)) throw ParameterError(std::string(what) + ": non-finite target");
  }
}

inline Vector to_vector(std::span<const double> y) {
  Vector v(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) v[static_cast<Eigen::Index>(i)] = y[i];
  return v;
}

}  // namespace detail

// Which explicit map produced the intrinsic features.
enum class FeatureMap {
  identity,    // rows supplied as-is
  unit,        // x / |x| on both sides (cosine kernel)
  mpt_linear,  // x / |x| on the left, (x + z_q) / |x + z_q| on the right
};

struct IntrinsicModel {
  Vector u;
  double b = 0.0;
  double rho = 0.0;
  FeatureMap feature_map = FeatureMap::identity;
  SolveReport report;
};

/// Ridge regression in intrinsic space.
///
/// `phi_rows` holds one J-dimensional feature vector per training sample.
/// Solves the (J+1) x (J+1) system
///
///   [ Phi Phi^T + rho I   Phi e ] [u]   [ Phi y ]
///   [ e^T Phi^T           N     ] [b] = [ e^T y ]
///
/// with a pivoted LU and rejects the result if the residual check fails.
inline IntrinsicModel fit_intrinsic(const RowMatrix& phi_rows, std::span<const double> y, double rho,
                                    FeatureMap map = FeatureMap::identity) {
  if (!(rho > 0.0)) throw ParameterError("fit_intrinsic: rho must be positive");
  const auto n = phi_rows.rows();
  const auto j = phi_rows.cols();
  if (static_cast<std::size_t>(n) != y.size()) throw ShapeError("fit_intrinsic: features and targets differ in length");
  if (n < 2) throw DegenerateError("fit_intrinsic: need at least 2 samples");
  detail::check_targets(y, "fit_intrinsic");
  bool pos = false, neg = false;
  for (double v : y) (v > 0 ? pos : neg) = true;
  if (!pos || !neg) throw DegenerateError("fit_intrinsic: both classes must be present in the targets");

  const Vector yv = detail::to_vector(y);
  Matrix a(j + 1, j + 1);
  a.topLeftCorner(j, j) = phi_rows.transpose() * phi_rows;
  a.topLeftCorner(j, j).diagonal().array() += rho;
  const Vector phi_e = phi_rows.colwise().sum().transpose();
  a.topRightCorner(j, 1) = phi_e;
  a.bottomLeftCorner(1, j) = phi_e.transpose();
  a(j, j) = static_cast<double>(n);

  Vector rhs(j + 1);
  rhs.head(j) = phi_rows.transpose() * yv;
  rhs[j] = yv.sum();

  const auto lu = detail::factorize(a, "fit_intrinsic");
  const Vector sol = lu.solve(rhs);
  IntrinsicModel m{sol.head(j), sol[j], rho, map, {detail::relative_residual(a, sol, rhs), lu.rcond()}};
  if (!(m.report.residual < kMaxResidual)) {
    throw SolverError("fit_intrinsic: residual " + std::to_string(m.report.residual) + " exceeds tolerance",
                      m.report.rcond);
  }
  return m;
}

inline double predict_score(const IntrinsicModel& m, const Vector& phi) {
  if (phi.size() != m.u.size()) throw ShapeError("predict: feature vector dimension does not match the model");
  return m.u.dot(phi) + m.b;
}

struct EmpiricalModel {
  Vector a;
  double b = 0.0;
  double rho = 0.0;
  SolveReport report;
  // |e^T a|: zero at the stationary point of the bias.
  double stationarity = 0.0;
  // Retained training samples (already restricted to the selected
  // dimensions) and their labels; empty for a bare solve.
  std::vector<MaskedVector> training;
  std::vector<Label> labels;
};

/// Ridge regression in empirical space over an N x N training Gram.
///
/// With A = K + rho I: b = e^T A^-1 y / e^T A^-1 e and a = A^-1 (y - b e).
/// For symmetric K this is the familiar y^T A^-1 e / e^T A^-1 e. For the
/// asymmetric three-side Gram the e^T A^-1 y form is the one that zeroes the
/// bias stationarity condition e^T a = 0, so that is what is computed.
/// A is factorized once and never inverted.
inline EmpiricalModel fit_empirical(const Matrix& k, std::span<const double> y, double rho) {
  if (!(rho > 0.0)) throw ParameterError("fit_empirical: rho must be positive");
  const auto n = k.rows();
  if (k.cols() != n) throw ShapeError("fit_empirical: Gram matrix must be square");
  if (static_cast<std::size_t>(n) != y.size()) throw ShapeError("fit_empirical: Gram and targets differ in size");
  if (n == 0) throw DegenerateError("fit_empirical: no training samples");
  if (!k.allFinite()) throw ParameterError("fit_empirical: Gram matrix has non-finite entries");
  detail::check_targets(y, "fit_empirical");

  Matrix a = k;
  a.diagonal().array() += rho;
  const auto lu = detail::factorize(a, "fit_empirical");
  const Vector yv = detail::to_vector(y);
  const Vector e = Vector::Ones(n);
  const Vector solve_e = lu.solve(e);
  const Vector solve_y = lu.solve(yv);
  const double denom = e.dot(solve_e);
  if (!(std::abs(denom) > kMinRcond * static_cast<double>(n) * solve_e.cwiseAbs().maxCoeff())) {
    throw DegenerateError("fit_empirical: e^T (K + rho I)^-1 e vanishes; the bias is undetermined");
  }

  EmpiricalModel m;
  m.rho = rho;
  m.b = e.dot(solve_y) / denom;
  m.a = solve_y - m.b * solve_e;
  m.report = {detail::relative_residual(a, m.a, yv - m.b * e), lu.rcond()};
  m.stationarity = std::abs(m.a.sum());
  if (!(m.report.residual < kMaxResidual)) {
    throw SolverError("fit_empirical: residual " + std::to_string(m.report.residual) + " exceeds tolerance",
                      m.report.rcond);
  }
  const double scale = std::max(1.0, m.a.cwiseAbs().sum());
  if (!(m.stationarity <= kMaxResidual * scale)) {
    throw SolverError("fit_empirical: bias stationarity e^T a = " + std::to_string(m.stationarity), m.report.rcond);
  }
  return m;
}

inline double predict_score(const EmpiricalModel& m, const Vector& kernel_row) {
  if (kernel_row.size() != m.a.size()) throw ShapeError("predict: kernel row length does not match the model");
  return m.a.dot(kernel_row) + m.b;
}

enum class MapSide { left, right };

struct MappedFeatures {
  Vector phi;
  bool degenerate = false;
};

/// Explicit finite feature map for the cosine and MPT-linear kernels.
///
/// Cosine: x/|x| on both sides. MPT-linear: phi_L(x) = x/|x| and
/// phi_R(x) = (x + z_q)/|x + z_q|, so phi_L(a)^T phi_R(b) = mpt_linear(a, b).
/// Zero-norm inputs map to the zero vector.
inline MappedFeatures intrinsic_feature_map(const MaskedVector& x, MapSide side, const KernelSpec& spec,
                                            const ClassCentroids* centroids = nullptr,
                                            std::optional<Label> label = std::nullopt) {
  Vector v;
  switch (spec.family) {
    case KernelFamily::cosine: v = x.values(); break;
    case KernelFamily::mpt_linear:
      if (side == MapSide::left) {
        v = x.values();
      } else {
        if (!label || centroids == nullptr) {
          throw PhaseError("intrinsic_feature_map: the right-side map needs the sample's class and centroids");
        }
        v = centroid_augment(x, centroids->of(*label));
      }
      break;
    default:
      throw ConfigError("intrinsic_feature_map: no explicit finite map for kernel '" +
                        std::string(kernel_family_name(spec.family)) + "'");
  }
  const double norm = v.norm();
  if (norm < spec.eps) return {Vector::Zero(v.size()), true};
  return {v / norm, false};
}

// Explicit features of a batch of samples, one row each. Adds the number of
// zero-norm rows to `degenerate`.
inline RowMatrix feature_rows(std::span<const MaskedVector> xs, MapSide side, const KernelSpec& spec,
                              const ClassCentroids* centroids, std::span<const Label> labels,
                              std::size_t& degenerate) {
  const Eigen::Index m = xs.empty() ? 0 : xs.front().size();
  RowMatrix rows(static_cast<Eigen::Index>(xs.size()), m);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::optional<Label> l;
    if (!labels.empty()) l = labels[i];
    auto f = intrinsic_feature_map(xs[i], side, spec, centroids, l);
    if (f.phi.size() != m) throw ShapeError("feature_rows: samples differ in dimension");
    rows.row(static_cast<Eigen::Index>(i)) = f.phi.transpose();
    degenerate += f.degenerate ? 1 : 0;
  }
  return rows;
}

enum class Solver { intrinsic, empirical, automatic };

inline std::string_view solver_name(Solver s) noexcept {
  switch (s) {
    case Solver::intrinsic: return "intrinsic";
    case Solver::empirical: return "empirical";
    case Solver::automatic: return "auto";
  }
  return "?";
}

inline Solver parse_solver(std::string_view s) {
  if (s == "intrinsic") return Solver::intrinsic;
  if (s == "empirical") return Solver::empirical;
  if (s == "auto") return Solver::automatic;
  throw ConfigError("unknown solver '" + std::string(s) + "'");
}

constexpr bool has_intrinsic_map(KernelFamily f) noexcept {
  return f == KernelFamily::cosine || f == KernelFamily::mpt_linear;
}

// How the empirical training Gram is formed for MPT-linear.
enum class TrainingGram {
  asymmetric,           // K_ij = mpt(x_i, x_j, z_q(j)), as the kernel defines it
  symmetric_surrogate,  // K = Phi_R^T Phi_R, the exact dual of the intrinsic fit
};

struct TrainOptions {
  KernelSpec kernel;
  Solver solver = Solver::automatic;
  double rho = 5.0;
  // Dimensions the model keeps, in order; empty keeps all.
  std::vector<std::size_t> selected_dims{};
  TrainingGram training_gram = TrainingGram::asymmetric;
};

// A fitted classifier: everything needed to score a raw input row.
struct KrrModel {
  KernelSpec kernel;
  Solver solver = Solver::empirical;  // resolved, never automatic
  TrainingGram training_gram = TrainingGram::asymmetric;
  std::size_t input_dims = 0;
  std::vector<std::size_t> selected_dims{};
  ClassCentroids centroids;  // restricted to selected_dims
  std::variant<IntrinsicModel, EmpiricalModel> fit;
  LabelNames label_names;
  // Zero-norm guards hit while fitting.
  std::size_t degenerate = 0;

  double bias() const {
    return std::visit([](const auto& f) { return f.b; }, fit);
  }
  double rho() const {
    return std::visit([](const auto& f) { return f.rho; }, fit);
  }
  const SolveReport& report() const {
    return std::visit([](const auto& f) -> const SolveReport& { return f.report; }, fit);
  }
};

inline Solver resolve_solver(Solver requested, KernelFamily family, std::size_t n, std::size_t j) {
  if (requested == Solver::automatic) {
    return has_intrinsic_map(family) && n > j ? Solver::intrinsic : Solver::empirical;
  }
  if (requested == Solver::intrinsic && !has_intrinsic_map(family)) {
    throw ConfigError("intrinsic solver supports only the cosine and mpt-linear kernels, not '" +
                      std::string(kernel_family_name(family)) + "'");
  }
  return requested;
}

inline MaskedVector restrict_dims(const MaskedVector& x, std::span<const std::size_t> dims) {
  Vector v(static_cast<Eigen::Index>(dims.size()));
  Mask m(static_cast<Eigen::Index>(dims.size()));
  for (std::size_t k = 0; k < dims.size(); ++k) {
    const auto t = static_cast<Eigen::Index>(dims[k]);
    if (t >= x.size()) throw ShapeError("restrict_dims: dimension index out of range");
    v[static_cast<Eigen::Index>(k)] = x.values()[t];
    m[static_cast<Eigen::Index>(k)] = x.mask()[t];
  }
  return {std::move(v), std::move(m)};
}

/// Fits centroids and a KRR model on `train`, restricted to the selected
/// dimensions.
inline KrrModel train_model(const Dataset& train, const TrainOptions& opts) {
  opts.kernel.validate();
  if (!(opts.rho > 0.0)) throw ParameterError("train: rho must be positive");
  std::vector<std::size_t> dims = opts.selected_dims;
  if (dims.empty()) dims = detail::iota_ids(train.dims());
  const Dataset data = train.select_dims(dims);

  KrrModel model;
  model.kernel = opts.kernel;
  model.training_gram = opts.training_gram;
  model.input_dims = train.dims();
  model.selected_dims = dims;
  model.label_names = train.label_names();
  model.centroids = ClassCentroids::fit(data);
  model.solver = resolve_solver(opts.solver, opts.kernel.family, data.rows(), data.dims());

  const auto samples = data.samples();
  std::vector<double> y;
  y.reserve(data.rows());
  for (Label l : data.labels()) y.push_back(to_target(l));

  if (model.solver == Solver::intrinsic) {
    const auto map = opts.kernel.family == KernelFamily::cosine ? FeatureMap::unit : FeatureMap::mpt_linear;
    const auto phi = feature_rows(samples, MapSide::right, opts.kernel, &model.centroids, data.labels(),
                                  model.degenerate);
    model.fit = fit_intrinsic(phi, y, opts.rho, map);
    return model;
  }

  Matrix k;
  if (opts.training_gram == TrainingGram::symmetric_surrogate) {
    if (!has_intrinsic_map(opts.kernel.family)) {
      throw ConfigError("symmetric surrogate Gram needs the cosine or mpt-linear kernel");
    }
    const auto phi = feature_rows(samples, MapSide::right, opts.kernel, &model.centroids, data.labels(),
                                  model.degenerate);
    k = phi * phi.transpose();
  } else {
    auto g = gram(samples, samples, data.labels(), model.centroids, opts.kernel, data.labels());
    model.degenerate += g.degenerate;
    k = std::move(g.entries);
  }
  auto fit = fit_empirical(k, y, opts.rho);
  fit.training = samples;
  fit.labels = data.labels();
  model.fit = std::move(fit);
  return model;
}

struct ScoreBatch {
  Vector scores;
  std::size_t degenerate = 0;
};

/// Scores raw rows (full input dimension) against a fitted model.
inline ScoreBatch score_batch(const KrrModel& model, std::span<const MaskedVector> xs) {
  std::vector<MaskedVector> restricted;
  restricted.reserve(xs.size());
  for (const auto& x : xs) {
    if (static_cast<std::size_t>(x.size()) != model.input_dims) {
      throw ShapeError("predict: input has " + std::to_string(x.size()) + " dims, model expects " +
                       std::to_string(model.input_dims));
    }
    restricted.push_back(restrict_dims(x, model.selected_dims));
  }

  ScoreBatch out;
  if (const auto* im = std::get_if<IntrinsicModel>(&model.fit)) {
    const auto phi = feature_rows(restricted, MapSide::left, model.kernel, &model.centroids, {}, out.degenerate);
    out.scores = (phi * im->u).array() + im->b;
    return out;
  }
  const auto& em = std::get<EmpiricalModel>(model.fit);
  const auto g = gram(restricted, em.training, em.labels, model.centroids, model.kernel);
  out.degenerate = g.degenerate;
  out.scores = (g.entries * em.a).array() + em.b;
  return out;
}

inline double score(const KrrModel& model, const MaskedVector& x) {
  return score_batch(model, std::span(&x, 1)).scores[0];
}

inline Label predict(const KrrModel& model, const MaskedVector& x) { return label_of_score(score(model, x)); }

}  // namespace aik
