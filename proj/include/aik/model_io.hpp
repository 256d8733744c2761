#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "aik/krr.hpp"
#include "aik/version.hpp"

namespace aik {

inline constexpr const char* kModelFormat = "aik-krr-model";
inline constexpr int kModelFormatVersion = 1;

namespace detail {

inline nlohmann::json vector_json(const Vector& v) {
  auto arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

inline Vector vector_from_json(const nlohmann::json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j.at(i).get<double>();
  return v;
}

inline std::string mask_string(const Mask& m) {
  std::string s(static_cast<std::size_t>(m.size()), '0');
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    if (m[i]) s[static_cast<std::size_t>(i)] = '1';
  }
  return s;
}

inline Mask mask_from_string(const std::string& s) {
  Mask m(static_cast<Eigen::Index>(s.size()));
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '0' && s[i] != '1') throw ConfigError("model file: mask strings may only contain 0 and 1");
    m[static_cast<Eigen::Index>(i)] = s[i] == '1';
  }
  return m;
}

inline nlohmann::json centroid_json(const ClassCentroids& c, Label l) {
  if (!c.has(l)) return nullptr;
  const auto& z = c.of(l);
  return {{"mean", vector_json(z.mean)}, {"count", z.count}};
}

inline std::optional<ClassCentroid> centroid_from_json(const nlohmann::json& j, Label l) {
  if (j.is_null()) return std::nullopt;
  ClassCentroid z{l, vector_from_json(j.at("mean")), j.at("count").get<std::vector<std::uint64_t>>()};
  if (static_cast<std::size_t>(z.mean.size()) != z.count.size()) throw ConfigError("model file: centroid shape");
  return z;
}

inline std::string_view feature_map_name(FeatureMap m) {
  switch (m) {
    case FeatureMap::identity: return "identity";
    case FeatureMap::unit: return "unit";
    case FeatureMap::mpt_linear: return "mpt-linear";
  }
  return "?";
}

inline FeatureMap parse_feature_map(const std::string& s) {
  if (s == "identity") return FeatureMap::identity;
  if (s == "unit") return FeatureMap::unit;
  if (s == "mpt-linear") return FeatureMap::mpt_linear;
  throw ConfigError("model file: unknown feature map '" + s + "'");
}

}  // namespace detail

inline nlohmann::json kernel_to_json(const KernelSpec& k) {
  return {{"family", kernel_family_name(k.family)}, {"p", k.p}, {"tau2", k.tau2}, {"eps", k.eps}};
}

inline KernelSpec kernel_from_json(const nlohmann::json& j) {
  KernelSpec k;
  for (const auto& [key, value] : j.items()) {
    if (key == "family") k.family = parse_kernel_family(value.get<std::string>());
    else if (key == "p") k.p = value.get<int>();
    else if (key == "tau2") k.tau2 = value.get<double>();
    else if (key == "eps") k.eps = value.get<double>();
    else throw ConfigError("kernel: unknown field '" + key + "'");
  }
  k.validate();
  return k;
}

inline nlohmann::json model_to_json(const KrrModel& m) {
  nlohmann::json j;
  j["format"] = kModelFormat;
  j["version"] = kModelFormatVersion;
  j["library_version"] = kVersion;
  j["kernel"] = kernel_to_json(m.kernel);
  j["solver"] = solver_name(m.solver);
  j["training_gram"] = m.training_gram == TrainingGram::asymmetric ? "asymmetric" : "symmetric-surrogate";
  j["rho"] = m.rho();
  j["b"] = m.bias();
  j["input_dims"] = m.input_dims;
  j["selected_dims"] = m.selected_dims;
  j["label_names"] = {{"positive", m.label_names.positive}, {"negative", m.label_names.negative}};
  j["centroids"] = {{"positive", detail::centroid_json(m.centroids, Label::positive)},
                    {"negative", detail::centroid_json(m.centroids, Label::negative)}};
  j["solve"] = {{"residual", m.report().residual}, {"rcond", m.report().rcond}};
  j["degenerate"] = m.degenerate;
  if (const auto* im = std::get_if<IntrinsicModel>(&m.fit)) {
    j["intrinsic"] = {{"u", detail::vector_json(im->u)}, {"feature_map", detail::feature_map_name(im->feature_map)}};
  } else {
    const auto& em = std::get<EmpiricalModel>(m.fit);
    auto samples = nlohmann::json::array();
    for (std::size_t i = 0; i < em.training.size(); ++i) {
      samples.push_back({{"label", static_cast<int>(em.labels[i])},
                         {"values", detail::vector_json(em.training[i].values())},
                         {"mask", detail::mask_string(em.training[i].mask())}});
    }
    j["empirical"] = {{"a", detail::vector_json(em.a)}, {"stationarity", em.stationarity}, {"samples", samples}};
  }
  return j;
}

inline KrrModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kModelFormat) throw ConfigError("not an aik model file");
    if (j.at("version").get<int>() != kModelFormatVersion) {
      throw ConfigError("unsupported model format version " + std::to_string(j.at("version").get<int>()));
    }
    KrrModel m;
    m.kernel = kernel_from_json(j.at("kernel"));
    m.solver = parse_solver(j.at("solver").get<std::string>());
    m.training_gram = j.at("training_gram").get<std::string>() == "asymmetric" ? TrainingGram::asymmetric
                                                                                : TrainingGram::symmetric_surrogate;
    m.input_dims = j.at("input_dims").get<std::size_t>();
    m.selected_dims = j.at("selected_dims").get<std::vector<std::size_t>>();
    m.label_names = {j.at("label_names").at("positive").get<std::string>(),
                     j.at("label_names").at("negative").get<std::string>()};
    m.centroids = ClassCentroids(detail::centroid_from_json(j.at("centroids").at("positive"), Label::positive),
                                 detail::centroid_from_json(j.at("centroids").at("negative"), Label::negative));
    m.degenerate = j.at("degenerate").get<std::size_t>();
    const SolveReport report{j.at("solve").at("residual").get<double>(), j.at("solve").at("rcond").get<double>()};
    const double rho = j.at("rho").get<double>();
    const double b = j.at("b").get<double>();
    for (auto d : m.selected_dims) {
      if (d >= m.input_dims) throw ConfigError("model file: selected dimension out of range");
    }

    if (m.solver == Solver::intrinsic) {
      const auto& ij = j.at("intrinsic");
      IntrinsicModel im{detail::vector_from_json(ij.at("u")), b, rho,
                        detail::parse_feature_map(ij.at("feature_map").get<std::string>()), report};
      if (static_cast<std::size_t>(im.u.size()) != m.selected_dims.size()) throw ConfigError("model file: |u| != J");
      m.fit = std::move(im);
    } else if (m.solver == Solver::empirical) {
      const auto& ej = j.at("empirical");
      EmpiricalModel em;
      em.a = detail::vector_from_json(ej.at("a"));
      em.b = b;
      em.rho = rho;
      em.report = report;
      em.stationarity = ej.at("stationarity").get<double>();
      for (const auto& s : ej.at("samples")) {
        const int l = s.at("label").get<int>();
        if (l != 1 && l != -1) throw ConfigError("model file: sample label must be +1 or -1");
        em.labels.push_back(static_cast<Label>(l));
        em.training.emplace_back(detail::vector_from_json(s.at("values")),
                                 detail::mask_from_string(s.at("mask").get<std::string>()));
        if (static_cast<std::size_t>(em.training.back().size()) != m.selected_dims.size()) {
          throw ConfigError("model file: training sample dimension mismatch");
        }
      }
      if (static_cast<std::size_t>(em.a.size()) != em.training.size()) throw ConfigError("model file: |a| != N");
      m.fit = std::move(em);
    } else {
      throw ConfigError("model file: solver must be intrinsic or empirical");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model file: ") + e.what());
  }
}

inline void save_model(const KrrModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << model_to_json(m).dump(1) << '\n';
}

inline KrrModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return model_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("'" + path + "': " + e.what());
  }
}

}  // namespace aik
