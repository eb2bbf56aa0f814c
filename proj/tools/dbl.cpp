// Command-line front end: discretize, train, predict, cv, biasvar, signtest
// and trace. Exit codes: 0 ok, 1 runtime failure, 2 invalid usage or config.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dbl/model_io.hpp"

namespace {

struct InputOpts {
  std::string data;
  std::string meta;
};

struct AlgoOpts {
  std::string algo;     // empty: per-command default
  std::uint32_t n = 0;  // 0: default (2, or 1 for nb)
  double C = 1e-2;
  std::optional<double> center;
  double m = 1.0;
  std::size_t max_iters = 10000;
  double grad_tol = 1e-5;
  double obj_tol = 1e-9;
  int threads = 0;  // 0: DBL_THREADS or 1
  bool allow_large_n = false;
};

void add_input_options(CLI::App* cmd, InputOpts& opts) {
  cmd->add_option("--data", opts.data, "input CSV (header row, class column)")->required();
  cmd->add_option("--meta", opts.meta,
                  "JSON sidecar with attribute kinds and missing tokens "
                  "(default: <data>.meta.json when present)");
}

void add_algo_options(CLI::App* cmd, AlgoOpts& opts, bool trainable_only = false) {
  cmd->add_option("--algo", opts.algo,
                  trainable_only ? "algorithm (dbl, lr)" : "algorithm (nb, anje, ande, dbl, lr)");
  cmd->add_option("--n", opts.n, "attribute subset size (default 2; nb fixes 1)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--C", opts.C, "regularization strength (default 0.01)");
  cmd->add_option("--reg-center", opts.center,
                  "regularization center (default: 1 for dbl, 0 for lr)");
  cmd->add_option("--m", opts.m, "MAP smoothing pseudo-count (default 1)");
  cmd->add_option("--max-iters", opts.max_iters, "optimizer iteration cap (default 10000)");
  cmd->add_option("--grad-tol", opts.grad_tol,
                  "gradient tolerance, inf-norm relative to max(1,|f|) (default 1e-5)");
  cmd->add_option("--obj-tol", opts.obj_tol, "relative objective tolerance (default 1e-9)");
  cmd->add_option("--threads", opts.threads, "worker threads (default: DBL_THREADS or 1)");
  cmd->add_flag("--allow-large-n", opts.allow_large_n, "lift the default n <= 3 limit");
}

unsigned resolve_threads(int cli_value) {
  if (cli_value > 0) return static_cast<unsigned>(cli_value);
  if (const char* env = std::getenv("DBL_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return 1;
}

dbl::AlgoConfig build_config(const AlgoOpts& opts, const std::string& default_algo = "anje") {
  dbl::AlgoConfig config;
  config.algo = dbl::parse_algo(opts.algo.empty() ? default_algo : opts.algo);
  if (config.algo == dbl::Algo::nb) {
    if (opts.n != 0 && opts.n != 1)
      throw dbl::config_error("nb fixes n = 1; use --algo anje for larger n");
    config.n = 1;
  } else {
    config.n = opts.n == 0 ? 2 : opts.n;
  }
  if (config.n > 3 && !opts.allow_large_n)
    throw dbl::config_error("n > 3 grows the parameter space combinatorially; "
                            "pass --allow-large-n to proceed");
  config.C = opts.C;
  config.center = opts.center;
  config.m = opts.m;
  config.solver.max_iterations = opts.max_iters;
  config.solver.grad_tol = opts.grad_tol;
  config.solver.objective_tol = opts.obj_tol;
  config.threads = resolve_threads(opts.threads);
  return config;
}

dbl::RawDataset load_input(const InputOpts& opts, bool allow_empty = false,
                           bool allow_unlabeled = false) {
  std::string meta = opts.meta;
  if (meta.empty()) {
    // Pick up the conventional sidecar next to the data file; without one the
    // loader falls back to inferring attribute kinds from the values.
    auto guess = std::filesystem::path(opts.data);
    guess.replace_extension(".meta.json");
    if (std::filesystem::exists(guess)) meta = guess.string();
  }
  if (meta.empty()) return dbl::load_csv(opts.data, nullptr, allow_empty, allow_unlabeled);
  const auto schema = dbl::load_sidecar(meta);
  return dbl::load_csv(opts.data, &schema, allow_empty, allow_unlabeled);
}

std::string dataset_name(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

void write_text(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw dbl::error("cannot write '" + out_path + "'");
  out << text;
}

std::vector<std::size_t> all_rows(const dbl::RawDataset& raw) {
  std::vector<std::size_t> rows(raw.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return rows;
}

void cmd_discretize(const InputOpts& input, const std::string& out_path) {
  const auto raw = load_input(input);
  const auto rows = all_rows(raw);
  const auto cuts = dbl::fit_mdl_cuts(raw, rows);
  write_text(out_path, dbl::cuts_to_json(raw.meta, cuts).dump(2) + "\n");
}

void cmd_train(const InputOpts& input, const AlgoOpts& algo, const std::string& out_path,
               const std::string& trace_path, const std::string& trace_format) {
  if (out_path.empty()) throw dbl::config_error("train needs --out for the model file");
  const auto raw = load_input(input);
  const auto config = build_config(algo);
  const auto model = dbl::train_model(raw, config);
  dbl::save_model(model, out_path);

  if (!trace_path.empty()) {
    if (model.trace.empty()) throw dbl::config_error("--trace-out applies to dbl and lr only");
    if (trace_format == "json") {
      write_text(trace_path, dbl::trace_to_json(model.trace).dump(2) + "\n");
    } else {
      std::ostringstream os;
      dbl::write_trace_csv(os, model.trace);
      write_text(trace_path, os.str());
    }
  }

  nlohmann::json summary{{"algo", dbl::to_string(model.algo)},
                         {"n", model.n},
                         {"model", out_path},
                         {"classes", model.class_labels().size()},
                         {"attributes", raw.attr_count()},
                         {"instances", raw.size()},
                         {"warnings", model.warnings}};
  if (!model.trace.empty()) {
    summary["iterations"] = model.trace.back().iteration;
    summary["initial_objective"] = model.trace.front().objective;
    summary["final_objective"] = model.trace.back().objective;
    summary["termination"] = dbl::to_string(*model.termination);
  }
  std::cout << summary.dump() << "\n";
}

void cmd_predict(const std::string& model_path, const InputOpts& input,
                 const std::string& out_path, const std::string& format) {
  const auto model = dbl::load_model(model_path);
  dbl::SidecarSchema schema;
  schema.attributes = model.discretizer->meta();
  if (!model.class_name.empty()) schema.class_name = model.class_name;
  const auto raw = dbl::load_csv(input.data, &schema, /*allow_empty=*/true,
                                 /*allow_unlabeled=*/true);

  const auto& labels = model.class_labels();
  if (format == "json") {
    nlohmann::json out = nlohmann::json::array();
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const auto post = dbl::score_raw(model, raw, i);
      nlohmann::json probs = nlohmann::json::object();
      for (std::uint32_t c = 0; c < labels.size(); ++c) probs[labels[c]] = post.prob(c);
      out.push_back({{"row", i},
                     {"prediction", labels[dbl::predict(post)]},
                     {"posterior", std::move(probs)}});
    }
    write_text(out_path, out.dump(2) + "\n");
  } else {
    std::ostringstream os;
    os << "row,prediction";
    for (const auto& label : labels) os << ',' << dbl::csv_escape("p_" + label);
    os << '\n';
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const auto post = dbl::score_raw(model, raw, i);
      os << i << ',' << dbl::csv_escape(labels[dbl::predict(post)]);
      for (std::uint32_t c = 0; c < labels.size(); ++c) os << ',' << dbl::fmt_double(post.prob(c));
      os << '\n';
    }
    write_text(out_path, os.str());
  }
}

dbl::ExperimentResult run_cv(const InputOpts& input, const AlgoOpts& algo, std::uint32_t rounds,
                             std::uint32_t folds, std::uint64_t seed, bool global_cuts) {
  const auto raw = load_input(input);
  const auto config = build_config(algo);
  const auto labels = dbl::class_label_order(raw);

  std::optional<dbl::Discretizer> prefit;
  if (global_cuts) {
    const auto rows = all_rows(raw);
    prefit = dbl::Discretizer::fit(raw, rows, labels);
  }
  const auto plan = dbl::CvPlan::make(rounds, folds, seed, raw.size());
  const auto result = dbl::cross_validate(
      raw, labels,
      [&] {
        return std::make_unique<dbl::ModelClassifier>(config, prefit ? &*prefit : nullptr);
      },
      plan);

  dbl::ExperimentResult er;
  er.dataset = dataset_name(input.data);
  er.algo = dbl::to_string(config.algo);
  er.n = config.n;
  er.C = config.C;
  er.seed = seed;
  er.rounds = rounds;
  er.folds = folds;
  er.zero_one = dbl::zero_one_loss(result);
  er.rmse = dbl::rmse(result);
  if (rounds >= 2) {
    const auto bv = dbl::bias_variance(result);
    er.bias = bv.bias;
    er.variance = bv.variance;
  } else {
    er.warnings.push_back("bias/variance need at least 2 rounds; reported as 0");
  }
  er.train_seconds = result.train_seconds;
  er.classify_seconds = result.classify_seconds;
  er.warnings.insert(er.warnings.end(), result.warnings.begin(), result.warnings.end());
  return er;
}

void write_experiment(const dbl::ExperimentResult& er, const std::string& out_path,
                      const std::string& format) {
  if (format == "csv") {
    std::ostringstream os;
    dbl::write_experiments_csv(os, {&er, 1});
    write_text(out_path, os.str());
  } else {
    write_text(out_path, dbl::experiment_to_json(er).dump(2) + "\n");
  }
}

std::string algo_label(const dbl::ExperimentResult& er) {
  return er.algo == "nb" ? er.algo : er.algo + std::to_string(er.n);
}

void cmd_signtest(const std::string& left_path, const std::string& right_path,
                  std::string reference, const std::string& out_path) {
  const auto left = dbl::load_experiments(left_path);
  const auto right = dbl::load_experiments(right_path);

  std::map<std::string, const dbl::ExperimentResult*> left_by_ds, right_by_ds;
  for (const auto& r : left) left_by_ds[r.dataset] = &r;
  for (const auto& r : right) right_by_ds[r.dataset] = &r;
  if (left_by_ds.size() != left.size() || right_by_ds.size() != right.size())
    throw dbl::error("signtest: duplicate dataset entries in a results file");
  for (const auto& entry : left_by_ds)
    if (!right_by_ds.count(entry.first))
      throw dbl::error("signtest: dataset '" + entry.first + "' missing on the right");
  if (left_by_ds.size() != right_by_ds.size())
    throw dbl::error("signtest: the two results files cover different dataset sets");

  std::string left_label = algo_label(left.front());
  std::string right_label = algo_label(right.front());
  if (left_label == right_label) {
    left_label += "/left";
    right_label += "/right";
  }
  if (reference.empty()) reference = left_label;
  if (reference != left_label && reference != right_label)
    throw dbl::config_error("--reference must be '" + left_label + "' or '" + right_label + "'");

  const std::vector<std::pair<std::string, double dbl::ExperimentResult::*>> metrics = {
      {"zero_one", &dbl::ExperimentResult::zero_one},
      {"rmse", &dbl::ExperimentResult::rmse},
      {"bias", &dbl::ExperimentResult::bias},
      {"variance", &dbl::ExperimentResult::variance}};

  nlohmann::json out;
  out["left"] = left_label;
  out["right"] = right_label;
  out["reference"] = reference;
  nlohmann::json datasets = nlohmann::json::array();
  for (const auto& entry : left_by_ds) datasets.push_back(entry.first);
  out["datasets"] = datasets;
  std::vector<std::string> warnings;

  for (const auto& [name, member] : metrics) {
    std::vector<double> ours, theirs;
    std::map<std::string, std::map<std::string, double>> table;
    for (const auto& [ds, lp] : left_by_ds) {
      ours.push_back(lp->*member);
      theirs.push_back(right_by_ds.at(ds)->*member);
      table[left_label][ds] = lp->*member;
      table[right_label][ds] = right_by_ds.at(ds)->*member;
    }
    const auto wdl = dbl::win_draw_loss(ours, theirs);
    if (!wdl.p_defined)
      warnings.push_back(name + ": all comparisons are draws; p undefined, reported as 1.0");
    out["metrics"][name] = {{"wins", wdl.wins},
                            {"draws", wdl.draws},
                            {"losses", wdl.losses},
                            {"p", wdl.p}};
    auto normalized = dbl::normalized_summary(table, reference);
    for (const auto& w : normalized.warnings) warnings.push_back(name + ": " + w);
    nlohmann::json norm = nlohmann::json::object();
    for (const auto& [label, gm] : normalized.per_algo) norm[label] = gm;
    out["normalized"][name] = std::move(norm);
  }
  out["warnings"] = warnings;
  write_text(out_path, out.dump(2) + "\n");
}

void cmd_trace(const InputOpts& input, const AlgoOpts& algo, const std::string& out_path,
               const std::string& format) {
  const auto config = build_config(algo, "dbl");
  if (config.algo != dbl::Algo::dbl && config.algo != dbl::Algo::lr)
    throw dbl::config_error("trace applies to dbl and lr only");
  const auto raw = load_input(input);
  const auto model = dbl::train_model(raw, config);
  if (format == "json") {
    write_text(out_path, dbl::trace_to_json(model.trace).dump(2) + "\n");
  } else {
    std::ostringstream os;
    dbl::write_trace_csv(os, model.trace);
    write_text(out_path, os.str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  bool json_errors = false;
  for (int i = 1; i < argc; ++i)
    if (std::string(argv[i]) == "--json-errors") json_errors = true;

  const auto report = [&](const char* kind, const std::string& message) {
    if (json_errors) {
      std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << "\n";
    } else {
      std::cerr << "error: " << message << "\n";
    }
  };

  try {
    CLI::App app{"AnJE / AnDE / DBL / LR classifiers over discretized data"};
    app.require_subcommand(1);
    app.fallthrough();  // let --json-errors appear after the subcommand too
    app.add_flag("--json-errors", json_errors, "emit errors as JSON lines on stderr");

    InputOpts input;
    AlgoOpts algo;
    std::string out_path, model_path, format;
    std::string trace_path, trace_format = "csv";
    std::uint32_t rounds = 5, folds = 2;
    std::uint64_t seed = 1;
    bool global_cuts = false;
    std::string left_path, right_path, reference;

    auto* discretize = app.add_subcommand("discretize", "fit MDL cut points and emit them");
    add_input_options(discretize, input);
    discretize->add_option("--out", out_path, "output path (default stdout)");
    discretize->callback([&] { cmd_discretize(input, out_path); });

    auto* train = app.add_subcommand("train", "fit a model and write a model file");
    add_input_options(train, input);
    add_algo_options(train, algo);
    train->add_option("--out", out_path, "model file path")->required();
    train->add_option("--trace-out", trace_path, "also write the convergence trace here");
    train->add_option("--trace-format", trace_format, "trace format: csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    train->callback([&] { cmd_train(input, algo, out_path, trace_path, trace_format); });

    auto* predict = app.add_subcommand("predict", "score rows with a saved model");
    predict->add_option("--model", model_path, "model file")->required();
    predict->add_option("--data", input.data, "CSV to score")->required();
    predict->add_option("--out", out_path, "output path (default stdout)");
    predict->add_option("--format", format, "csv (default) or json")
        ->check(CLI::IsMember({"csv", "json"}));
    predict->callback([&] { cmd_predict(model_path, input, out_path, format); });

    auto* cv = app.add_subcommand("cv", "repeated k-fold cross-validation");
    add_input_options(cv, input);
    add_algo_options(cv, algo);
    cv->add_option("--rounds", rounds, "CV rounds (default 5)");
    cv->add_option("--folds", folds, "folds per round (default 2)");
    cv->add_option("--seed", seed, "shuffle seed (default 1)");
    cv->add_flag("--global-cuts", global_cuts,
                 "fit discretization once on the full dataset instead of per fold");
    cv->add_option("--out", out_path, "output path (default stdout)");
    cv->add_option("--format", format, "json (default) or csv")
        ->check(CLI::IsMember({"csv", "json"}));
    cv->callback([&] {
      write_experiment(run_cv(input, algo, rounds, folds, seed, global_cuts), out_path, format);
    });

    auto* biasvar = app.add_subcommand("biasvar", "bias-variance decomposition over repeated splits");
    add_input_options(biasvar, input);
    add_algo_options(biasvar, algo);
    biasvar->add_option("--rounds", rounds, "rounds of 2-fold splits (default 5)");
    biasvar->add_option("--seed", seed, "shuffle seed (default 1)");
    biasvar->add_flag("--global-cuts", global_cuts,
                      "fit discretization once on the full dataset instead of per fold");
    biasvar->add_option("--out", out_path, "output path (default stdout)");
    biasvar->add_option("--format", format, "json (default) or csv")
        ->check(CLI::IsMember({"csv", "json"}));
    biasvar->callback([&] {
      if (rounds < 2) throw dbl::config_error("biasvar needs at least 2 rounds");
      write_experiment(run_cv(input, algo, rounds, 2, seed, global_cuts), out_path, format);
    });

    auto* signtest = app.add_subcommand("signtest", "win-draw-loss sign test over two results files");
    signtest->add_option("--left", left_path, "results JSON (object or array)")->required();
    signtest->add_option("--right", right_path, "results JSON (object or array)")->required();
    signtest->add_option("--reference", reference,
                         "normalization reference (default: the left algo)");
    signtest->add_option("--out", out_path, "output path (default stdout)");
    signtest->callback([&] { cmd_signtest(left_path, right_path, reference, out_path); });

    auto* trace = app.add_subcommand("trace", "train dbl or lr and emit the convergence trace");
    add_input_options(trace, input);
    add_algo_options(trace, algo, /*trainable_only=*/true);
    trace->add_option("--out", out_path, "output path (default stdout)");
    trace->add_option("--format", format, "csv (default) or json")
        ->check(CLI::IsMember({"csv", "json"}));
    trace->callback([&] { cmd_trace(input, algo, out_path, format); });

    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      report("usage", e.what());
      return 2;
    }
    return 0;
  } catch (const dbl::config_error& e) {
    report("usage", e.what());
    return 2;
  } catch (const dbl::error& e) {
    report("runtime", e.what());
    return 1;
  } catch (const std::exception& e) {
    report("runtime", e.what());
    return 1;
  }
}
