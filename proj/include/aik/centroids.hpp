#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "aik/dataset.hpp"
#include "aik/stats.hpp"
#include "aik/types.hpp"

namespace aik {

// Per-class, per-dimension mean over observed training entries. Dimensions
// never observed in the class keep mean 0 and count 0 (see starved()).
struct ClassCentroid {
  Label class_label = Label::positive;
  Vector mean;
  std::vector<std::uint64_t> count;

  Eigen::Index size() const noexcept { return mean.size(); }

  std::vector<std::size_t> starved() const {
    std::vector<std::size_t> out;
    for (std::size_t t = 0; t < count.size(); ++t) {
      if (count[t] == 0) out.push_back(t);
    }
    return out;
  }

  ClassCentroid select_dims(std::span<const std::size_t> dims) const {
    ClassCentroid c{class_label, Vector(static_cast<Eigen::Index>(dims.size())), {}};
    for (std::size_t k = 0; k < dims.size(); ++k) {
      c.mean[static_cast<Eigen::Index>(k)] = mean[static_cast<Eigen::Index>(dims[k])];
      c.count.push_back(count.at(dims[k]));
    }
    return c;
  }
};

// Streams the class rows through the running-mean update, skipping missing
// entries. No clustering: the class label alone decides membership.
inline ClassCentroid class_centroid(const Dataset& train, Label label) {
  if (train.count(label) == 0) {
    throw DegenerateError(std::string("class_centroid: no training rows with label ") + label_tag(label));
  }
  const auto m = static_cast<Eigen::Index>(train.dims());
  ClassCentroid c{label, Vector::Zero(m), std::vector<std::uint64_t>(train.dims(), 0)};
  for (std::size_t i = 0; i < train.rows(); ++i) {
    if (train.label(i) != label) continue;
    const auto r = static_cast<Eigen::Index>(i);
    for (Eigen::Index t = 0; t < m; ++t) {
      if (!train.presence()(r, t)) continue;
      auto& n = c.count[static_cast<std::size_t>(t)];
      c.mean[t] = incremental_mean(c.mean[t], n, train.features()(r, t));
      ++n;
    }
  }
  return c;
}

// x~ + z~: observed dimensions hold value + class mean, missing dimensions
// hold the class mean alone.
inline Vector centroid_augment(const MaskedVector& x, const ClassCentroid& z) {
  if (x.size() != z.size()) {
    throw ShapeError("centroid_augment: vector has " + std::to_string(x.size()) + " dims, centroid " +
                     std::to_string(z.size()));
  }
  return x.values() + z.mean;
}

// The two class centroids of a training set.
class ClassCentroids {
 public:
  ClassCentroids() = default;
  ClassCentroids(std::optional<ClassCentroid> pos, std::optional<ClassCentroid> neg)
      : pos_(std::move(pos)), neg_(std::move(neg)) {}

  static ClassCentroids fit(const Dataset& train) {
    return {class_centroid(train, Label::positive), class_centroid(train, Label::negative)};
  }

  bool has(Label l) const noexcept { return l == Label::positive ? pos_.has_value() : neg_.has_value(); }

  const ClassCentroid& of(Label l) const {
    const auto& c = l == Label::positive ? pos_ : neg_;
    if (!c) throw ConfigError(std::string("no centroid for class ") + label_tag(l));
    return *c;
  }

  ClassCentroids select_dims(std::span<const std::size_t> dims) const {
    ClassCentroids out;
    if (pos_) out.pos_ = pos_->select_dims(dims);
    if (neg_) out.neg_ = neg_->select_dims(dims);
    return out;
  }

 private:
  std::optional<ClassCentroid> pos_;
  std::optional<ClassCentroid> neg_;
};

}  // namespace aik
