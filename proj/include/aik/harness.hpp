#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "aik/dataset.hpp"
#include "aik/krr.hpp"
#include "aik/masking.hpp"
#include "aik/model_io.hpp"
#include "aik/parallel.hpp"
#include "aik/rng.hpp"
#include "aik/stats.hpp"
#include "aik/version.hpp"

namespace aik {

// Which sides of the split receive synthetic missingness. The first letter
// is the training side, the second the test side; I = incomplete,
// C = complete.
struct ExperimentMode {
  bool train_incomplete = true;
  bool test_incomplete = true;

  std::string name() const { return {train_incomplete ? 'I' : 'C', test_incomplete ? 'I' : 'C'}; }

  static ExperimentMode parse(std::string_view s) {
    if (s.size() != 2 || (s[0] != 'I' && s[0] != 'C') || (s[1] != 'I' && s[1] != 'C')) {
      throw ConfigError("unknown mode '" + std::string(s) + "' (expected II, IC, CI or CC)");
    }
    return {s[0] == 'I', s[1] == 'I'};
  }

  bool operator==(const ExperimentMode&) const = default;
};

// Top-K FDR selection policy. `automatic` selects min(k, M) dimensions only
// when M exceeds the number of training rows.
struct TopKPolicy {
  enum class Kind { automatic, off, fixed };
  Kind kind = Kind::automatic;
  std::size_t k = 200;
};

struct ExperimentConfig {
  std::string label = "experiment";
  std::string dataset_path;
  CsvOptions csv;
  double train_fraction = 0.8;
  std::vector<double> missing_rates{0.0, 0.1, 0.2, 0.3, 0.4};
  std::vector<ExperimentMode> modes{{true, true}};
  KernelSpec kernel;
  Solver solver = Solver::automatic;
  TrainingGram training_gram = TrainingGram::asymmetric;
  double rho = 5.0;
  TopKPolicy top_k;
  std::vector<std::uint64_t> seeds{0};
  std::optional<std::size_t> subsample;
  std::optional<std::size_t> test_subsample;
  bool record_timing = false;

  void validate() const {
    if (modes.empty()) throw ConfigError("config: at least one mode is required");
    if (missing_rates.empty()) throw ConfigError("config: at least one missing rate is required");
    if (seeds.empty()) throw ConfigError("config: at least one seed is required");
    if (!(rho > 0.0)) throw ConfigError("config: rho must be positive");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("config: train_fraction must be in (0,1)");
    for (double r : missing_rates) {
      if (!(r >= 0.0 && r < 1.0)) throw ConfigError("config: missing rates must lie in [0, 1)");
    }
    if (top_k.kind != TopKPolicy::Kind::off && top_k.k == 0) throw ConfigError("config: top_k must be >= 1");
    if (subsample && *subsample < 2) throw ConfigError("config: subsample must be >= 2");
    if (test_subsample && *test_subsample < 1) throw ConfigError("config: test_subsample must be >= 1");
    kernel.validate();
  }
};

struct Confusion {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;

  std::size_t total() const noexcept { return tp + tn + fp + fn; }
  double accuracy() const noexcept {
    return total() == 0 ? 0.0 : static_cast<double>(tp + tn) / static_cast<double>(total());
  }
};

struct CellResult {
  ExperimentMode mode;
  double rate = 0.0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  Confusion confusion;
  std::size_t degenerate_kernels = 0;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  std::size_t selected_dims = 0;
  std::string solver;
  double ms = 0.0;

  double accuracy() const noexcept { return confusion.accuracy(); }
};

struct Aggregate {
  ExperimentMode mode;
  double rate = 0.0;
  std::size_t runs = 0;
  std::size_t failed = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for a single run
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::size_t dataset_rows = 0;
  std::size_t dataset_dims = 0;
  std::vector<CellResult> cells;  // ordered by (seed, rate, mode)
  std::vector<Aggregate> aggregates;  // ordered by (mode, rate)

  const Aggregate& aggregate(const ExperimentMode& mode, double rate) const {
    for (const auto& a : aggregates) {
      if (a.mode == mode && a.rate == rate) return a;
    }
    throw ConfigError("report has no aggregate for mode " + mode.name() + " at rate " + format_double(rate));
  }
};

// Seed for one (master seed, rate index, mode, phase) cell. Distinct phases
// give distinct masks, so training and test patterns never coincide.
inline std::uint64_t derive_seed(std::uint64_t master, std::size_t rate_index, const ExperimentMode& mode,
                                 std::string_view phase) {
  std::uint64_t s = mix_seed(master, static_cast<std::uint64_t>(rate_index));
  s = mix_seed(s, hash_tag(mode.name()));
  return mix_seed(s, hash_tag(phase));
}

namespace detail {

// Keeps at most `limit` rows, chosen uniformly with a seeded shuffle; the
// kept rows stay in their original order.
inline Dataset subsample_rows(const Dataset& d, std::optional<std::size_t> limit, std::uint64_t seed) {
  if (!limit || *limit >= d.rows()) return d;
  std::vector<std::size_t> order(d.rows());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  SplitMixStream rng(seed);
  deterministic_shuffle(order, rng);
  order.resize(*limit);
  std::sort(order.begin(), order.end());
  return d.select_rows(order);
}

inline std::vector<std::size_t> choose_dims(const Dataset& train, const TopKPolicy& policy) {
  std::size_t k = 0;
  switch (policy.kind) {
    case TopKPolicy::Kind::off: return {};
    case TopKPolicy::Kind::automatic:
      if (train.dims() <= train.rows()) return {};
      k = std::min(policy.k, train.dims());
      break;
    case TopKPolicy::Kind::fixed: k = policy.k; break;
  }
  return select_top_k(partial_fdr(train), k);
}

inline CellResult run_cell(const Dataset& data, const ExperimentConfig& cfg, std::uint64_t seed,
                           std::size_t rate_index, const ExperimentMode& mode) {
  CellResult cell;
  cell.mode = mode;
  cell.rate = cfg.missing_rates[rate_index];
  cell.seed = seed;
  const auto start = std::chrono::steady_clock::now();
  try {
    const auto parts = split(data, {cfg.train_fraction, seed});
    Dataset train = subsample_rows(parts.train, cfg.subsample, mix_seed(seed, hash_tag("subsample-train")));
    Dataset test = subsample_rows(parts.test, cfg.test_subsample, mix_seed(seed, hash_tag("subsample-test")));
    if (mode.train_incomplete) {
      train = inject_missing(train, {cell.rate, derive_seed(seed, rate_index, mode, "train")});
    }
    if (mode.test_incomplete) {
      test = inject_missing(test, {cell.rate, derive_seed(seed, rate_index, mode, "test")});
    }

    TrainOptions opts;
    opts.kernel = cfg.kernel;
    opts.solver = cfg.solver;
    opts.rho = cfg.rho;
    opts.training_gram = cfg.training_gram;
    opts.selected_dims = choose_dims(train, cfg.top_k);
    const KrrModel model = train_model(train, opts);
    const auto batch = score_batch(model, test.samples());

    for (std::size_t i = 0; i < test.rows(); ++i) {
      const bool predicted_pos = label_of_score(batch.scores[static_cast<Eigen::Index>(i)]) == Label::positive;
      const bool actual_pos = test.label(i) == Label::positive;
      if (actual_pos) {
        ++(predicted_pos ? cell.confusion.tp : cell.confusion.fn);
      } else {
        ++(predicted_pos ? cell.confusion.fp : cell.confusion.tn);
      }
    }
    cell.degenerate_kernels = model.degenerate + batch.degenerate;
    cell.train_rows = train.rows();
    cell.test_rows = test.rows();
    cell.selected_dims = model.selected_dims.size();
    cell.solver = std::string(solver_name(model.solver));
    cell.ok = true;
  } catch (const std::exception& e) {
    cell.ok = false;
    cell.error = "seed " + std::to_string(seed) + ", rate " + format_double(cell.rate) + ", mode " + mode.name() +
                 ": " + e.what();
  }
  if (cfg.record_timing) {
    cell.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  }
  return cell;
}

inline Aggregate aggregate_cells(const std::vector<CellResult>& cells, const ExperimentMode& mode, double rate) {
  Aggregate a{mode, rate};
  std::vector<double> acc;
  for (const auto& c : cells) {
    if (!(c.mode == mode) || c.rate != rate) continue;
    if (!c.ok) {
      ++a.failed;
      continue;
    }
    acc.push_back(c.accuracy());
  }
  a.runs = acc.size();
  if (acc.empty()) return a;
  double sum = 0.0;
  for (double v : acc) sum += v;
  a.mean = sum / static_cast<double>(acc.size());
  if (acc.size() > 1) {
    double ss = 0.0;
    for (double v : acc) ss += (v - a.mean) * (v - a.mean);
    a.stddev = std::sqrt(ss / static_cast<double>(acc.size() - 1));
  }
  std::sort(acc.begin(), acc.end());
  const std::size_t n = acc.size();
  a.median = n % 2 == 1 ? acc[n / 2] : 0.5 * (acc[n / 2 - 1] + acc[n / 2]);
  a.min = acc.front();
  a.max = acc.back();
  return a;
}

}  // namespace detail

/// Runs every (seed, rate, mode) cell on an in-memory dataset.
///
/// Cells run in parallel and are merged back in (seed, rate, mode) order.
/// Each cell: split, optional subsampling, missingness injection on the
/// sides named by the mode, FDR top-K selection on the masked training
/// part, fit, score. A cell that throws is recorded as failed.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg, const Dataset& data) {
  cfg.validate();
  struct Key {
    std::uint64_t seed;
    std::size_t rate_index;
    ExperimentMode mode;
  };
  std::vector<Key> keys;
  for (auto seed : cfg.seeds) {
    for (std::size_t r = 0; r < cfg.missing_rates.size(); ++r) {
      for (const auto& mode : cfg.modes) keys.push_back({seed, r, mode});
    }
  }

  ExperimentReport report;
  report.config = cfg;
  report.dataset_rows = data.rows();
  report.dataset_dims = data.dims();
  report.cells.resize(keys.size());
  parallel_for(keys.size(), [&](std::size_t i) {
    report.cells[i] = detail::run_cell(data, cfg, keys[i].seed, keys[i].rate_index, keys[i].mode);
  });

  for (const auto& mode : cfg.modes) {
    for (double rate : cfg.missing_rates) report.aggregates.push_back(detail::aggregate_cells(report.cells, mode, rate));
  }
  return report;
}

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  if (cfg.dataset_path.empty()) throw ConfigError("config: dataset path is required");
  return run_experiment(cfg, load_csv(cfg.dataset_path, cfg.csv));
}

// ---------------------------------------------------------------------------
// Config and report serialization

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["label"] = cfg.label;
  j["dataset"] = {{"path", cfg.dataset_path},
                  {"label_column", cfg.csv.label_column},
                  {"has_header", cfg.csv.has_header},
                  {"positive_label", cfg.csv.positive_label},
                  {"missing_tokens", std::vector<std::string>(cfg.csv.missing_tokens.begin(), cfg.csv.missing_tokens.end())}};
  j["train_fraction"] = cfg.train_fraction;
  j["missing_rates"] = cfg.missing_rates;
  auto modes = nlohmann::json::array();
  for (const auto& m : cfg.modes) modes.push_back(m.name());
  j["modes"] = modes;
  j["kernel"] = kernel_to_json(cfg.kernel);
  j["solver"] = solver_name(cfg.solver);
  j["training_gram"] = cfg.training_gram == TrainingGram::asymmetric ? "asymmetric" : "symmetric-surrogate";
  j["rho"] = cfg.rho;
  switch (cfg.top_k.kind) {
    case TopKPolicy::Kind::automatic: j["top_k"] = "auto"; break;
    case TopKPolicy::Kind::off: j["top_k"] = "off"; break;
    case TopKPolicy::Kind::fixed: j["top_k"] = cfg.top_k.k; break;
  }
  j["seeds"] = cfg.seeds;
  j["subsample"] = cfg.subsample ? nlohmann::json(*cfg.subsample) : nlohmann::json(nullptr);
  j["test_subsample"] = cfg.test_subsample ? nlohmann::json(*cfg.test_subsample) : nlohmann::json(nullptr);
  j["record_timing"] = cfg.record_timing;
  return j;
}

inline TopKPolicy parse_top_k(const nlohmann::json& v) {
  if (v.is_null()) return {};
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "auto") return {};
    if (s == "off") return {TopKPolicy::Kind::off, 0};
    throw ConfigError("config: top_k must be \"auto\", \"off\" or a positive integer");
  }
  if (v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0)) {
    const auto k = v.get<std::size_t>();
    if (k == 0) return {TopKPolicy::Kind::off, 0};
    return {TopKPolicy::Kind::fixed, k};
  }
  throw ConfigError("config: top_k must be \"auto\", \"off\" or a positive integer");
}

// Applies the fields present in `j` on top of `cfg`. Unknown keys are errors.
inline void apply_config_json(ExperimentConfig& cfg, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "label") cfg.label = v.get<std::string>();
      else if (key == "dataset") {
        for (const auto& [dk, dv] : v.items()) {
          if (dk == "path") cfg.dataset_path = dv.get<std::string>();
          else if (dk == "label_column") cfg.csv.label_column = dv.get<long>();
          else if (dk == "has_header") cfg.csv.has_header = dv.get<bool>();
          else if (dk == "positive_label") cfg.csv.positive_label = dv.get<std::string>();
          else if (dk == "missing_tokens") {
            const auto tokens = dv.get<std::vector<std::string>>();
            cfg.csv.missing_tokens = {tokens.begin(), tokens.end()};
          } else throw ConfigError("config: unknown dataset field '" + dk + "'");
        }
      } else if (key == "train_fraction") cfg.train_fraction = v.get<double>();
      else if (key == "missing_rates") cfg.missing_rates = v.get<std::vector<double>>();
      else if (key == "modes") {
        cfg.modes.clear();
        for (const auto& m : v) cfg.modes.push_back(ExperimentMode::parse(m.get<std::string>()));
      } else if (key == "kernel") {
        if (v.is_string()) cfg.kernel.family = parse_kernel_family(v.get<std::string>());
        else {
          auto merged = kernel_to_json(cfg.kernel);
          merged.update(v);
          cfg.kernel = kernel_from_json(merged);
        }
      } else if (key == "solver") cfg.solver = parse_solver(v.get<std::string>());
      else if (key == "training_gram") {
        const auto s = v.get<std::string>();
        if (s == "asymmetric") cfg.training_gram = TrainingGram::asymmetric;
        else if (s == "symmetric-surrogate") cfg.training_gram = TrainingGram::symmetric_surrogate;
        else throw ConfigError("config: training_gram must be asymmetric or symmetric-surrogate");
      } else if (key == "rho") cfg.rho = v.get<double>();
      else if (key == "top_k") cfg.top_k = parse_top_k(v);
      else if (key == "seeds") cfg.seeds = v.get<std::vector<std::uint64_t>>();
      else if (key == "subsample") cfg.subsample = v.is_null() ? std::nullopt : std::optional(v.get<std::size_t>());
      else if (key == "test_subsample") {
        cfg.test_subsample = v.is_null() ? std::nullopt : std::optional(v.get<std::size_t>());
      } else if (key == "record_timing") cfg.record_timing = v.get<bool>();
      else throw ConfigError("config: unknown field '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  apply_config_json(cfg, j);
  return cfg;
}

inline nlohmann::json report_to_json(const ExperimentReport& r) {
  nlohmann::json j;
  j["format"] = "aik-experiment-report";
  j["version"] = 1;
  j["library_version"] = kVersion;
  j["config"] = config_to_json(r.config);
  j["dataset"] = {{"rows", r.dataset_rows}, {"dims", r.dataset_dims}};
  auto cells = nlohmann::json::array();
  for (const auto& c : r.cells) {
    nlohmann::json cj{{"mode", c.mode.name()}, {"rate", c.rate}, {"seed", c.seed}, {"status", c.ok ? "ok" : "failed"}};
    if (c.ok) {
      cj["accuracy"] = c.accuracy();
      cj["tp"] = c.confusion.tp;
      cj["tn"] = c.confusion.tn;
      cj["fp"] = c.confusion.fp;
      cj["fn"] = c.confusion.fn;
      cj["degenerate_kernels"] = c.degenerate_kernels;
      cj["train_rows"] = c.train_rows;
      cj["test_rows"] = c.test_rows;
      cj["selected_dims"] = c.selected_dims;
      cj["solver"] = c.solver;
    } else {
      cj["error"] = c.error;
    }
    cj["ms"] = c.ms;
    cells.push_back(std::move(cj));
  }
  j["cells"] = std::move(cells);
  auto aggs = nlohmann::json::array();
  for (const auto& a : r.aggregates) {
    aggs.push_back({{"mode", a.mode.name()}, {"rate", a.rate},     {"runs", a.runs},     {"failed", a.failed},
                    {"mean", a.mean},        {"stddev", a.stddev}, {"median", a.median}, {"min", a.min},
                    {"max", a.max}});
  }
  j["aggregates"] = std::move(aggs);
  return j;
}

inline ExperimentReport report_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "aik-experiment-report") throw ConfigError("not an experiment report");
    ExperimentReport r;
    r.config = config_from_json(j.at("config"));
    r.dataset_rows = j.at("dataset").at("rows").get<std::size_t>();
    r.dataset_dims = j.at("dataset").at("dims").get<std::size_t>();
    for (const auto& cj : j.at("cells")) {
      CellResult c;
      c.mode = ExperimentMode::parse(cj.at("mode").get<std::string>());
      c.rate = cj.at("rate").get<double>();
      c.seed = cj.at("seed").get<std::uint64_t>();
      c.ok = cj.at("status").get<std::string>() == "ok";
      c.ms = cj.at("ms").get<double>();
      if (c.ok) {
        c.confusion = {cj.at("tp").get<std::size_t>(), cj.at("tn").get<std::size_t>(), cj.at("fp").get<std::size_t>(),
                       cj.at("fn").get<std::size_t>()};
        c.degenerate_kernels = cj.at("degenerate_kernels").get<std::size_t>();
        c.train_rows = cj.at("train_rows").get<std::size_t>();
        c.test_rows = cj.at("test_rows").get<std::size_t>();
        c.selected_dims = cj.at("selected_dims").get<std::size_t>();
        c.solver = cj.at("solver").get<std::string>();
      } else {
        c.error = cj.at("error").get<std::string>();
      }
      r.cells.push_back(std::move(c));
    }
    for (const auto& mode : r.config.modes) {
      for (double rate : r.config.missing_rates) r.aggregates.push_back(detail::aggregate_cells(r.cells, mode, rate));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("report: ") + e.what());
  }
}

inline void write_cells_csv(std::ostream& out, const ExperimentReport& r) {
  out << "mode,rate,seed,accuracy,tp,tn,fp,fn,degenerate_kernels,ms\n";
  for (const auto& c : r.cells) {
    out << c.mode.name() << ',' << format_double(c.rate) << ',' << c.seed << ',';
    if (c.ok) {
      out << format_double(c.accuracy()) << ',' << c.confusion.tp << ',' << c.confusion.tn << ',' << c.confusion.fp
          << ',' << c.confusion.fn << ',' << c.degenerate_kernels;
    } else {
      out << "failed,,,,,";
    }
    out << ',' << format_double(c.ms) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Comparison across methods

struct LabeledReport {
  std::string label;
  const ExperimentReport* report = nullptr;
};

struct ComparisonTable {
  std::vector<std::string> methods;
  std::vector<ExperimentMode> modes;
  std::vector<double> rates;
  // mean_accuracy[method][mode][rate]
  std::vector<std::vector<std::vector<double>>> mean_accuracy;

  // Last method minus first method.
  double difference(std::size_t mode, std::size_t rate) const {
    return mean_accuracy.back()[mode][rate] - mean_accuracy.front()[mode][rate];
  }
};

/// Lines up several reports on a shared (mode, rate) grid.
inline ComparisonTable compare(const std::vector<LabeledReport>& reports) {
  if (reports.empty()) throw ComparisonError("compare: no reports given");
  const auto& first = *reports.front().report;
  ComparisonTable t;
  t.modes = first.config.modes;
  t.rates = first.config.missing_rates;
  for (const auto& lr : reports) {
    const auto& cfg = lr.report->config;
    if (cfg.missing_rates != t.rates) throw ComparisonError("compare: '" + lr.label + "' uses a different rate grid");
    if (cfg.modes != t.modes) throw ComparisonError("compare: '" + lr.label + "' uses different modes");
    t.methods.push_back(lr.label);
    std::vector<std::vector<double>> per_mode;
    for (const auto& mode : t.modes) {
      std::vector<double> per_rate;
      for (double rate : t.rates) per_rate.push_back(lr.report->aggregate(mode, rate).mean);
      per_mode.push_back(std::move(per_rate));
    }
    t.mean_accuracy.push_back(std::move(per_mode));
  }
  return t;
}

inline nlohmann::json comparison_to_json(const ComparisonTable& t) {
  auto rows = nlohmann::json::array();
  for (std::size_t m = 0; m < t.modes.size(); ++m) {
    for (std::size_t r = 0; r < t.rates.size(); ++r) {
      nlohmann::json row{{"mode", t.modes[m].name()}, {"rate", t.rates[r]}};
      auto acc = nlohmann::json::array();
      for (std::size_t k = 0; k < t.methods.size(); ++k) acc.push_back(t.mean_accuracy[k][m][r]);
      row["accuracy"] = acc;
      row["difference"] = t.difference(m, r);
      rows.push_back(std::move(row));
    }
  }
  return {{"methods", t.methods}, {"rows", rows}};
}

// Plot-ready: one row per (mode, rate), one column per method, then the
// last-minus-first difference.
inline void write_comparison_csv(std::ostream& out, const ComparisonTable& t) {
  out << "mode,rate";
  for (const auto& m : t.methods) out << ',' << m;
  out << ",difference\n";
  for (std::size_t m = 0; m < t.modes.size(); ++m) {
    for (std::size_t r = 0; r < t.rates.size(); ++r) {
      out << t.modes[m].name() << ',' << format_double(t.rates[r]);
      for (std::size_t k = 0; k < t.methods.size(); ++k) out << ',' << format_double(t.mean_accuracy[k][m][r]);
      out << ',' << format_double(t.difference(m, r)) << '\n';
    }
  }
}

}  // namespace aik
