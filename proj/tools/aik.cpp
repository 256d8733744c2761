// aik: command-line front end for the asymmetric imputation kernel library.
//
//   aik experiment  run a missing-rate sweep and write report JSON / cell CSV
//   aik fit         train one model on a CSV and persist it
//   aik predict     score a CSV with a persisted model
//   aik fdr         per-dimension partial Fisher discriminant ratios
//   aik inject      write a copy of a CSV with synthetic missing cells
//   aik compare     line up several experiment reports

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "aik/aik.hpp"

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  if (!s.empty() && s.back() == ',') out.emplace_back();
  return out;
}

double parse_real(const std::string& s, const std::string& flag) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw CLI::ValidationError(flag, "'" + s + "' is not a number");
  }
}

std::uint64_t parse_uint(const std::string& s, const std::string& flag) {
  try {
    std::size_t used = 0;
    if (s.empty() || s.front() == '-') throw std::invalid_argument(s);
    const auto v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw CLI::ValidationError(flag, "'" + s + "' is not a non-negative integer");
  }
}

std::vector<double> parse_real_list(const std::string& s, const std::string& flag) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) out.push_back(parse_real(item, flag));
  if (out.empty()) throw CLI::ValidationError(flag, "empty list");
  return out;
}

std::vector<std::uint64_t> parse_uint_list(const std::string& s, const std::string& flag) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(s)) out.push_back(parse_uint(item, flag));
  if (out.empty()) throw CLI::ValidationError(flag, "empty list");
  return out;
}

aik::TopKPolicy parse_top_k_flag(const std::string& s) {
  if (s == "auto") return {};
  if (s == "off") return {aik::TopKPolicy::Kind::off, 0};
  const auto k = parse_uint(s, "--top-k");
  if (k == 0) return {aik::TopKPolicy::Kind::off, 0};
  return {aik::TopKPolicy::Kind::fixed, static_cast<std::size_t>(k)};
}

template <typename T>
void write_text(const std::string& path, const T& writer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw aik::ConfigError("cannot write '" + path + "'");
  writer(out);
  if (!out) throw aik::ConfigError("failed writing '" + path + "'");
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw aik::ConfigError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw aik::ConfigError("'" + path + "': " + e.what());
  }
}

// CSV parsing flags shared by several subcommands.
struct CsvFlags {
  std::string path;
  long label_column = -1;
  bool header = false;
  std::string positive_label;
  std::string missing_tokens;
  CLI::Option* label_column_opt = nullptr;
  CLI::Option* header_opt = nullptr;
  CLI::Option* positive_opt = nullptr;
  CLI::Option* missing_opt = nullptr;

  void add(CLI::App& app, const std::string& data_flag, bool required) {
    auto* o = app.add_option(data_flag, path, "Input CSV file");
    if (required) o->required();
    label_column_opt = app.add_option("--label-column", label_column, "Label column index (negative counts from the end)");
    header_opt = app.add_flag("--header", header, "First row is a header");
    positive_opt = app.add_option("--positive-label", positive_label, "Label value mapped to +1 (default: first seen)");
    missing_opt = app.add_option("--missing-tokens", missing_tokens,
                                 "Comma-separated cell values treated as missing (default: empty, ?, NaN)");
  }

  void apply(aik::CsvOptions& csv) const {
    if (label_column_opt->count()) csv.label_column = label_column;
    if (header_opt->count()) csv.has_header = header;
    if (positive_opt->count()) csv.positive_label = positive_label;
    if (missing_opt->count()) {
      const auto tokens = split_list(missing_tokens);
      csv.missing_tokens = {tokens.begin(), tokens.end()};
    }
  }

  aik::CsvOptions options() const {
    aik::CsvOptions csv;
    apply(csv);
    return csv;
  }
};

// Model flags shared by `experiment` and `fit`.
struct ModelFlags {
  std::string kernel;
  int p = 3;
  double tau2 = 1.0;
  std::string solver;
  std::string training_gram;
  double rho = 5.0;
  std::string top_k;
  CLI::Option* kernel_opt = nullptr;
  CLI::Option* p_opt = nullptr;
  CLI::Option* tau2_opt = nullptr;
  CLI::Option* solver_opt = nullptr;
  CLI::Option* gram_opt = nullptr;
  CLI::Option* rho_opt = nullptr;
  CLI::Option* top_k_opt = nullptr;

  void add(CLI::App& app) {
    kernel_opt = app.add_option("--kernel", kernel,
                                "cosine, mpc, mpp, mpt-linear, mpt-poly, mpt-rbf, masked-poly, masked-rbf");
    p_opt = app.add_option("--p", p, "Polynomial order");
    tau2_opt = app.add_option("--tau2", tau2, "Kernel variance tau^2");
    solver_opt = app.add_option("--solver", solver, "intrinsic, empirical or auto");
    gram_opt = app.add_option("--training-gram", training_gram, "asymmetric or symmetric-surrogate");
    rho_opt = app.add_option("--rho", rho, "Ridge parameter");
    top_k_opt = app.add_option("--top-k", top_k, "FDR top-K: auto, off or a count");
  }

  void apply(aik::KernelSpec& k, aik::Solver& s, aik::TrainingGram& g, double& r, aik::TopKPolicy& t) const {
    if (kernel_opt->count()) k.family = aik::parse_kernel_family(kernel);
    if (p_opt->count()) k.p = p;
    if (tau2_opt->count()) k.tau2 = tau2;
    if (solver_opt->count()) s = aik::parse_solver(solver);
    if (gram_opt->count()) {
      if (training_gram == "asymmetric") g = aik::TrainingGram::asymmetric;
      else if (training_gram == "symmetric-surrogate") g = aik::TrainingGram::symmetric_surrogate;
      else throw CLI::ValidationError("--training-gram", "expected asymmetric or symmetric-surrogate");
    }
    if (rho_opt->count()) r = rho;
    if (top_k_opt->count()) t = parse_top_k_flag(top_k);
  }
};

int run_cli(int argc, char** argv) {
  CLI::App app{"Asymmetric imputation kernels: KRR classification of incomplete data"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker thread cap (default: AIK_MAX_THREADS or all cores)");
  app.set_version_flag("--version", std::string(aik::kVersion));

  // experiment
  auto* exp = app.add_subcommand("experiment", "Run a missing-rate sweep");
  std::string config_path, report_path, cells_path, label, rates, modes, seeds;
  double train_fraction = 0.8;
  std::size_t subsample = 0, test_subsample = 0;
  bool timing = false;
  CsvFlags exp_csv;
  ModelFlags exp_model;
  exp->add_option("--config", config_path, "JSON config file; flags override its fields");
  exp_csv.add(*exp, "--data", false);
  exp_model.add(*exp);
  auto* label_opt = exp->add_option("--label", label, "Method name used in comparisons");
  auto* tf_opt = exp->add_option("--train-fraction", train_fraction, "Training fraction of each split");
  auto* rates_opt = exp->add_option("--rates", rates, "Comma-separated missing rates");
  auto* modes_opt = exp->add_option("--modes", modes, "Comma-separated modes (II,IC,CI,CC)");
  auto* seeds_opt = exp->add_option("--seeds", seeds, "Comma-separated seeds");
  auto* sub_opt = exp->add_option("--subsample", subsample, "Max training rows per cell");
  auto* tsub_opt = exp->add_option("--test-subsample", test_subsample, "Max test rows per cell");
  auto* timing_opt = exp->add_flag("--timing", timing, "Record wall time per cell (reports stop being byte-stable)");
  exp->add_option("--out", report_path, "Report JSON output")->required();
  exp->add_option("--csv", cells_path, "Per-cell CSV output");

  // fit
  auto* fit = app.add_subcommand("fit", "Train a model and save it");
  CsvFlags fit_csv;
  ModelFlags fit_model;
  std::string model_out;
  fit_csv.add(*fit, "--data", true);
  fit_model.add(*fit);
  fit->add_option("--out", model_out, "Model file output")->required();

  // predict
  auto* pred = app.add_subcommand("predict", "Score a CSV with a saved model");
  std::string model_in, pred_in, pred_out, pred_missing;
  long pred_label_column = -1;
  bool pred_header = false;
  pred->add_option("--model", model_in, "Model file")->required();
  pred->add_option("--in", pred_in, "CSV to score")->required();
  pred->add_option("--out", pred_out, "Predictions CSV output")->required();
  pred->add_option("--label-column", pred_label_column,
                   "Label column to drop when the CSV has one extra column (default: last)");
  pred->add_flag("--header", pred_header, "First row is a header");
  auto* pred_missing_opt = pred->add_option("--missing-tokens", pred_missing, "Comma-separated missing tokens");

  // fdr
  auto* fdr = app.add_subcommand("fdr", "Partial Fisher discriminant ratios per dimension");
  CsvFlags fdr_csv;
  std::string fdr_out, fdr_csv_out;
  std::size_t fdr_top = 0;
  fdr_csv.add(*fdr, "--data", true);
  fdr->add_option("--top-k", fdr_top, "Also list the top-K dimensions");
  fdr->add_option("--out", fdr_out, "FDR report JSON output")->required();
  fdr->add_option("--csv", fdr_csv_out, "FDR CSV output (dim,name,f,rank)");

  // inject
  auto* inj = app.add_subcommand("inject", "Write a copy of a CSV with synthetic missing cells");
  CsvFlags inj_csv;
  std::string inj_out, inj_token = "?";
  double inj_rate = 0.0;
  std::uint64_t inj_seed = 0;
  inj_csv.add(*inj, "--in", true);
  inj->add_option("--rate", inj_rate, "Missing rate in [0,1)")->required();
  inj->add_option("--seed", inj_seed, "Seed");
  inj->add_option("--missing-token", inj_token, "Token written for missing cells");
  inj->add_option("--out", inj_out, "Masked CSV output")->required();

  // compare
  auto* cmp = app.add_subcommand("compare", "Compare experiment reports side by side");
  std::vector<std::string> cmp_reports;
  std::string cmp_labels, cmp_out, cmp_csv;
  cmp->add_option("--report", cmp_reports, "Report JSON (repeatable)")->required();
  cmp->add_option("--labels", cmp_labels, "Comma-separated method names (default: report labels)");
  cmp->add_option("--out", cmp_out, "Comparison JSON output")->required();
  cmp->add_option("--csv", cmp_csv, "Plot-ready CSV output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  if (threads > 0) aik::set_max_threads(threads);

  try {
    if (*exp) {
      aik::ExperimentConfig cfg;
      if (!config_path.empty()) aik::apply_config_json(cfg, read_json(config_path));
      if (!exp_csv.path.empty()) cfg.dataset_path = exp_csv.path;
      exp_csv.apply(cfg.csv);
      exp_model.apply(cfg.kernel, cfg.solver, cfg.training_gram, cfg.rho, cfg.top_k);
      if (label_opt->count()) cfg.label = label;
      if (tf_opt->count()) cfg.train_fraction = train_fraction;
      if (rates_opt->count()) cfg.missing_rates = parse_real_list(rates, "--rates");
      if (modes_opt->count()) {
        cfg.modes.clear();
        for (const auto& m : split_list(modes)) cfg.modes.push_back(aik::ExperimentMode::parse(m));
      }
      if (seeds_opt->count()) cfg.seeds = parse_uint_list(seeds, "--seeds");
      if (sub_opt->count()) cfg.subsample = subsample;
      if (tsub_opt->count()) cfg.test_subsample = test_subsample;
      if (timing_opt->count()) cfg.record_timing = timing;

      const auto report = aik::run_experiment(cfg);
      write_text(report_path, [&](std::ostream& o) { o << aik::report_to_json(report).dump(2) << '\n'; });
      if (!cells_path.empty()) write_text(cells_path, [&](std::ostream& o) { aik::write_cells_csv(o, report); });
      std::size_t failed = 0;
      for (const auto& c : report.cells) failed += c.ok ? 0 : 1;
      for (const auto& a : report.aggregates) {
        std::cerr << cfg.label << ' ' << a.mode.name() << " rate=" << a.rate << " mean=" << a.mean
                  << " sd=" << a.stddev << " runs=" << a.runs << " failed=" << a.failed << '\n';
      }
      if (failed > 0) std::cerr << "aik: warning: " << failed << " cell(s) failed; see the report\n";
      return 0;
    }

    if (*fit) {
      const auto data = aik::load_csv(fit_csv.path, fit_csv.options());
      aik::TrainOptions opts;
      aik::TopKPolicy top_k;
      fit_model.apply(opts.kernel, opts.solver, opts.training_gram, opts.rho, top_k);
      opts.selected_dims = aik::detail::choose_dims(data, top_k);
      const auto model = aik::train_model(data, opts);
      aik::save_model(model, model_out);
      std::cerr << "aik: fitted " << aik::solver_name(model.solver) << " model on " << data.rows() << " rows, "
                << model.selected_dims.size() << " dims, residual " << model.report().residual << '\n';
      return 0;
    }

    if (*pred) {
      const auto model = aik::load_model(model_in);
      aik::CsvOptions csv;
      csv.has_header = pred_header;
      if (pred_missing_opt->count()) {
        const auto tokens = split_list(pred_missing);
        csv.missing_tokens = {tokens.begin(), tokens.end()};
      }
      csv.label_column = pred_label_column;
      const auto table = aik::load_features_csv(pred_in, csv, std::nullopt, model.input_dims);
      if (static_cast<std::size_t>(table.values.cols()) != model.input_dims) {
        throw aik::ShapeError("predict: CSV has " + std::to_string(table.values.cols()) + " feature columns, model expects " +
                              std::to_string(model.input_dims));
      }
      std::vector<aik::MaskedVector> rows;
      for (Eigen::Index i = 0; i < table.values.rows(); ++i) {
        rows.emplace_back(table.values.row(i).transpose(), table.presence.row(i).transpose());
      }
      const auto batch = aik::score_batch(model, rows);
      write_text(pred_out, [&](std::ostream& o) {
        o << "row,score,label\n";
        for (Eigen::Index i = 0; i < batch.scores.size(); ++i) {
          const auto l = aik::label_of_score(batch.scores[i]);
          o << i << ',' << aik::format_double(batch.scores[i]) << ','
            << (l == aik::Label::positive ? model.label_names.positive : model.label_names.negative) << '\n';
        }
      });
      return 0;
    }

    if (*fdr) {
      const auto data = aik::load_csv(fdr_csv.path, fdr_csv.options());
      const auto pos = aik::partial_moments(data, aik::Label::positive);
      const auto neg = aik::partial_moments(data, aik::Label::negative);
      const auto report = aik::partial_fdr(pos, neg);
      nlohmann::json j;
      j["dims"] = data.dims();
      j["f"] = std::vector<double>(report.f.data(), report.f.data() + report.f.size());
      j["ranked_dims"] = report.ranked_dims;
      j["count_positive"] = pos.count;
      j["count_negative"] = neg.count;
      if (fdr_top > 0) j["top_k"] = aik::select_top_k(report, fdr_top);
      write_text(fdr_out, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
      if (!fdr_csv_out.empty()) {
        std::vector<std::size_t> rank(data.dims());
        for (std::size_t r = 0; r < report.ranked_dims.size(); ++r) rank[report.ranked_dims[r]] = r;
        write_text(fdr_csv_out, [&](std::ostream& o) {
          o << "dim,name,f,rank\n";
          for (std::size_t t = 0; t < data.dims(); ++t) {
            o << t << ',' << (data.dim_names().empty() ? "" : data.dim_names()[t]) << ','
              << aik::format_double(report.f[static_cast<Eigen::Index>(t)]) << ',' << rank[t] << '\n';
          }
        });
      }
      return 0;
    }

    if (*inj) {
      const auto data = aik::load_csv(inj_csv.path, inj_csv.options());
      const auto masked = aik::inject_missing(data, {inj_rate, inj_seed});
      write_text(inj_out, [&](std::ostream& o) { aik::write_csv(o, masked, inj_token); });
      return 0;
    }

    if (*cmp) {
      std::vector<aik::ExperimentReport> reports;
      for (const auto& path : cmp_reports) reports.push_back(aik::report_from_json(read_json(path)));
      const auto names = cmp_labels.empty() ? std::vector<std::string>{} : split_list(cmp_labels);
      if (!names.empty() && names.size() != reports.size()) {
        throw CLI::ValidationError("--labels", "expected one label per report");
      }
      std::vector<aik::LabeledReport> labeled;
      for (std::size_t i = 0; i < reports.size(); ++i) {
        labeled.push_back({names.empty() ? reports[i].config.label : names[i], &reports[i]});
      }
      const auto table = aik::compare(labeled);
      write_text(cmp_out, [&](std::ostream& o) { o << aik::comparison_to_json(table).dump(2) << '\n'; });
      if (!cmp_csv.empty()) write_text(cmp_csv, [&](std::ostream& o) { aik::write_comparison_csv(o, table); });
      return 0;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "aik: usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "aik: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return run_cli(argc, argv); }
