#pragma once

// End-to-end training pipeline: discretize, count, estimate, and (for dbl/lr)
// optimize. A TrainedModel carries everything needed to score new rows.

#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dbl/csv.hpp"
#include "dbl/objective.hpp"

namespace dbl {

enum class Algo { nb, anje, ande, dbl, lr };

inline const char* to_string(Algo a) {
  switch (a) {
    case Algo::nb: return "nb";
    case Algo::anje: return "anje";
    case Algo::ande: return "ande";
    case Algo::dbl: return "dbl";
    case Algo::lr: return "lr";
  }
  return "unknown";
}

inline Algo parse_algo(const std::string& name) {
  if (name == "nb") return Algo::nb;
  if (name == "anje") return Algo::anje;
  if (name == "ande") return Algo::ande;
  if (name == "dbl") return Algo::dbl;
  if (name == "lr") return Algo::lr;
  throw config_error("unknown algorithm '" + name + "' (expected nb, anje, ande, dbl or lr)");
}

struct AlgoConfig {
  Algo algo = Algo::anje;
  std::uint32_t n = 2;
  double C = 1e-2;
  std::optional<double> center;  // defaults: dbl 1, lr 0
  double m = 1.0;                // MAP smoothing
  SolverConfig solver;
  unsigned threads = 1;
};

// nb is anje with n = 1; ande needs n >= 2.
inline AlgoConfig resolve_config(AlgoConfig config) {
  if (config.algo == Algo::nb) {
    if (config.n != 1 && config.n != 2)  // 2 is the untouched default
      throw config_error("nb fixes n = 1; use --algo anje for larger n");
    config.n = 1;
  }
  if (config.n < 1) throw config_error("n must be at least 1");
  if (config.algo == Algo::ande && config.n < 2)
    throw config_error("ande requires n >= 2 (its statistics are n-ary)");
  if (!(config.m > 0)) throw config_error("smoothing m must be positive");
  if (config.C < 0) throw config_error("regularization C must be >= 0");
  return config;
}

struct TrainedModel {
  Algo algo = Algo::anje;
  std::uint32_t n = 1;
  double C = 0.0;
  double center = 0.0;
  double m = 1.0;
  std::string class_name;
  std::optional<Discretizer> discretizer;
  std::shared_ptr<const FeatureSpace> space;
  ProbabilityTables tables;
  std::optional<AnjeModel> anje;
  std::optional<AndeModel> ande;
  std::optional<WeightVector> weights;
  std::optional<BetaVector> betas;
  std::vector<TraceRecord> trace;
  std::optional<TerminationReason> termination;
  std::vector<std::string> warnings;

  std::uint32_t class_count() const { return static_cast<std::uint32_t>(class_labels().size()); }
  const std::vector<std::string>& class_labels() const { return discretizer->class_labels(); }
};

inline Posterior score_encoded(const TrainedModel& model, std::span<const std::uint32_t> x) {
  switch (model.algo) {
    case Algo::nb:
    case Algo::anje: return anje_log_posterior(*model.anje, x);
    case Algo::ande: return ande_log_posterior(*model.ande, x);
    case Algo::dbl: return dbl_log_posterior(model.tables, *model.weights, x);
    case Algo::lr: return lr_log_posterior(*model.betas, x);
  }
  throw error("score_encoded: unknown algorithm");
}

inline Posterior score_raw(const TrainedModel& model, const RawDataset& raw, std::size_t row) {
  const auto x = model.discretizer->encode_row(raw.rows[row]);
  return score_encoded(model, x);
}

// Train on the given rows. When `prefit` is supplied (e.g. globally fitted
// cuts), it is used as-is instead of fitting discretization on the rows.
inline TrainedModel train_model(const RawDataset& raw, std::span<const std::size_t> train_rows,
                                const std::vector<std::string>& class_labels,
                                const AlgoConfig& raw_config,
                                const Discretizer* prefit = nullptr) {
  const AlgoConfig config = resolve_config(raw_config);
  if (train_rows.empty()) throw error("train_model: no training rows");

  TrainedModel model;
  model.algo = config.algo;
  model.n = config.n;
  model.m = config.m;
  model.C = config.C;
  model.class_name = raw.class_name;
  if (config.algo == Algo::dbl || config.algo == Algo::lr)
    model.center =
        config.center ? *config.center : (config.algo == Algo::dbl ? 1.0 : 0.0);
  model.discretizer = prefit ? *prefit : Discretizer::fit(raw, train_rows, class_labels);

  const auto data = std::make_shared<DiscretizedDataset>(
      model.discretizer->encode(raw, train_rows));

  if (config.algo == Algo::ande) {
    model.ande = make_ande(*data, config.n, config.m);
    const CountTable& counts =
        model.ande->joints ? model.ande->joint_counts : model.ande->parent_counts;
    model.space = counts.space;
    model.tables = map_estimates(counts, config.m);
  } else {
    if (config.n > data->attr_count())
      throw config_error("n = " + std::to_string(config.n) + " exceeds the " +
                         std::to_string(data->attr_count()) + " attributes");
    model.space = make_feature_space(data->cardinalities, config.n, data->class_count);
    const auto counts = accumulate(*data, model.space);
    for (std::uint32_t y = 0; y < data->class_count; ++y)
      if (counts.cells[y] == 0)
        model.warnings.push_back("class '" + class_labels[y] + "' absent from training split");
    model.tables = map_estimates(counts, config.m);
  }

  switch (config.algo) {
    case Algo::nb:
    case Algo::anje: model.anje = make_anje(model.tables); break;
    case Algo::ande: break;
    case Algo::dbl: {
      const auto tables = std::make_shared<const ProbabilityTables>(model.tables);
      const auto spec = make_objective(model.space, data, tables, Parameterization::dbl, config.C,
                                       model.center, config.threads);
      auto result = minimize(objective_fn(spec), init_dbl(model.space).values, config.solver);
      model.weights = WeightVector{model.space, std::move(result.parameters)};
      model.trace = std::move(result.trace);
      model.termination = result.reason;
      if (result.reason == TerminationReason::line_search_failure)
        model.warnings.push_back("optimizer stopped early (" + result.message +
                                 "); keeping the best parameters seen");
      break;
    }
    case Algo::lr: {
      const auto spec = make_objective(model.space, data, nullptr, Parameterization::lr, config.C,
                                       model.center, config.threads);
      auto result = minimize(objective_fn(spec), init_lr(model.space).values, config.solver);
      model.betas = BetaVector{model.space, std::move(result.parameters)};
      model.trace = std::move(result.trace);
      model.termination = result.reason;
      if (result.reason == TerminationReason::line_search_failure)
        model.warnings.push_back("optimizer stopped early (" + result.message +
                                 "); keeping the best parameters seen");
      break;
    }
  }
  return model;
}

inline TrainedModel train_model(const RawDataset& raw, const AlgoConfig& config) {
  std::vector<std::size_t> rows(raw.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return train_model(raw, rows, class_label_order(raw), config);
}

}  // namespace dbl
