#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <utility>

#include "aik/error.hpp"

namespace aik {

using Vector = Eigen::VectorXd;
using Mask = Eigen::Array<bool, Eigen::Dynamic, 1>;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using PresenceMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Matrix = Eigen::MatrixXd;

enum class Label : int { negative = -1, positive = 1 };

constexpr double to_target(Label l) noexcept { return static_cast<double>(static_cast<int>(l)); }

// sign() with the tie rule sign(0) = +1.
constexpr Label label_of_score(double score) noexcept {
  return score < 0.0 ? Label::negative : Label::positive;
}

inline const char* label_tag(Label l) noexcept { return l == Label::positive ? "+1" : "-1"; }

// A sample in zero-padded form: values[t] == 0 wherever mask[t] is false.
// The invariant is established by the constructor and cannot be broken
// through the const accessors.
class MaskedVector {
 public:
  MaskedVector() = default;

  MaskedVector(Vector values, Mask mask) : values_(std::move(values)), mask_(std::move(mask)) {
    if (values_.size() != mask_.size()) {
      throw ShapeError("MaskedVector: values has " + std::to_string(values_.size()) +
                       " entries but mask has " + std::to_string(mask_.size()));
    }
    values_ = mask_.select(values_.array(), 0.0).matrix();
  }

  // Fully observed vector.
  static MaskedVector complete(Vector values) {
    Mask m = Mask::Constant(values.size(), true);
    return {std::move(values), std::move(m)};
  }

  Eigen::Index size() const noexcept { return values_.size(); }
  const Vector& values() const noexcept { return values_; }
  const Mask& mask() const noexcept { return mask_; }
  Eigen::Index observed() const { return mask_.count(); }

 private:
  Vector values_;
  Mask mask_;
};

inline void require_same_size(const MaskedVector& a, const MaskedVector& b, const char* where) {
  if (a.size() != b.size()) {
    throw ShapeError(std::string(where) + ": dimension mismatch (" + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()) + ")");
  }
}

}  // namespace aik
