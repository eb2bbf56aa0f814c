#pragma once

// The experimental protocol: seeded repeated k-fold cross-validation, 0-1
// loss, RMSE, a Kohavi-Wolpert bias-variance decomposition over the repeated
// splits, exact binomial sign tests and geometric-mean normalized summaries.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dbl/classifier.hpp"

namespace dbl {

namespace detail {

// Uniform integer in [0, bound) by rejection, so results do not depend on
// how a platform's distribution object slices the generator output.
inline std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

}  // namespace detail

struct CvPlan {
  std::uint32_t rounds = 5;
  std::uint32_t folds = 2;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::uint8_t>> fold_of;  // [round][instance]

  static CvPlan make(std::uint32_t rounds, std::uint32_t folds, std::uint64_t seed,
                     std::size_t instance_count) {
    if (rounds < 1) throw config_error("cv needs at least 1 round");
    if (folds < 2 || folds > 255) throw config_error("cv needs between 2 and 255 folds");
    if (instance_count < folds) throw error("fewer instances than folds");
    CvPlan plan{rounds, folds, seed, {}};
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> perm(instance_count);
    for (std::uint32_t r = 0; r < rounds; ++r) {
      for (std::size_t i = 0; i < instance_count; ++i) perm[i] = i;
      for (std::size_t i = instance_count - 1; i > 0; --i)
        std::swap(perm[i], perm[detail::bounded(rng, i + 1)]);
      std::vector<std::uint8_t> fold(instance_count);
      for (std::size_t pos = 0; pos < instance_count; ++pos)
        fold[perm[pos]] = static_cast<std::uint8_t>(pos % folds);
      plan.fold_of.push_back(std::move(fold));
    }
    return plan;
  }
};

class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual void fit(const RawDataset& raw, std::span<const std::size_t> train,
                   const std::vector<std::string>& class_labels) = 0;
  virtual Posterior posterior(const RawDataset& raw, std::size_t row) = 0;
  virtual std::vector<std::string> warnings() const { return {}; }
};

using ClassifierFactory = std::function<std::unique_ptr<Classifier>()>;

class ModelClassifier : public Classifier {
 public:
  explicit ModelClassifier(AlgoConfig config, const Discretizer* prefit = nullptr)
      : config_(std::move(config)), prefit_(prefit) {}

  void fit(const RawDataset& raw, std::span<const std::size_t> train,
           const std::vector<std::string>& class_labels) override {
    model_ = train_model(raw, train, class_labels, config_, prefit_);
  }
  Posterior posterior(const RawDataset& raw, std::size_t row) override {
    return score_raw(*model_, raw, row);
  }
  std::vector<std::string> warnings() const override { return model_->warnings; }
  const TrainedModel& model() const { return *model_; }

 private:
  AlgoConfig config_;
  const Discretizer* prefit_;
  std::optional<TrainedModel> model_;
};

struct EvalResult {
  std::uint32_t rounds = 0;
  std::uint32_t folds = 0;
  std::uint32_t class_count = 0;
  std::vector<std::uint32_t> truth;        // per instance
  std::vector<std::uint32_t> predictions;  // [round * N + i]
  std::vector<double> posteriors;          // [(round * N + i) * class_count + c]
  double train_seconds = 0.0;
  double classify_seconds = 0.0;
  std::vector<std::string> warnings;

  std::size_t instance_count() const { return truth.size(); }
};

// Every fold serves once as test per round; discretization and all statistics
// are fit on the training part only (unless the factory bakes in a prefit).
inline EvalResult cross_validate(const RawDataset& raw,
                                 const std::vector<std::string>& class_labels,
                                 const ClassifierFactory& factory, const CvPlan& plan) {
  const std::size_t n = raw.size();
  if (n == 0) throw error("cross_validate: empty dataset");
  if (plan.fold_of.size() != plan.rounds || plan.fold_of[0].size() != n)
    throw error("cross_validate: plan does not match dataset size");

  std::map<std::string, std::uint32_t> class_index;
  for (std::uint32_t i = 0; i < class_labels.size(); ++i) class_index[class_labels[i]] = i;

  EvalResult result;
  result.rounds = plan.rounds;
  result.folds = plan.folds;
  result.class_count = static_cast<std::uint32_t>(class_labels.size());
  result.truth.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto it = class_index.find(raw.row_class[i]);
    if (it == class_index.end()) throw error("class label '" + raw.row_class[i] + "' not listed");
    result.truth[i] = it->second;
  }
  result.predictions.resize(static_cast<std::size_t>(plan.rounds) * n);
  result.posteriors.resize(static_cast<std::size_t>(plan.rounds) * n * result.class_count);

  using clock = std::chrono::steady_clock;
  for (std::uint32_t round = 0; round < plan.rounds; ++round) {
    for (std::uint32_t f = 0; f < plan.folds; ++f) {
      std::vector<std::size_t> train, test;
      for (std::size_t i = 0; i < n; ++i)
        (plan.fold_of[round][i] == f ? test : train).push_back(i);
      if (train.empty() || test.empty()) throw error("cross_validate: degenerate fold split");

      auto classifier = factory();
      const auto t0 = clock::now();
      classifier->fit(raw, train, class_labels);
      const auto t1 = clock::now();
      for (auto i : test) {
        auto post = classifier->posterior(raw, i);
        if (post.size() != result.class_count)
          throw error("classifier returned a posterior of the wrong arity");
        const std::size_t slot = static_cast<std::size_t>(round) * n + i;
        result.predictions[slot] = predict(post);
        for (std::uint32_t c = 0; c < result.class_count; ++c)
          result.posteriors[slot * result.class_count + c] = post.prob(c);
      }
      const auto t2 = clock::now();
      result.train_seconds += std::chrono::duration<double>(t1 - t0).count();
      result.classify_seconds += std::chrono::duration<double>(t2 - t1).count();
      for (const auto& w : classifier->warnings())
        result.warnings.push_back("round " + std::to_string(round) + " fold " + std::to_string(f) +
                                  ": " + w);
    }
  }
  return result;
}

inline double zero_one_loss(const EvalResult& result) {
  const std::size_t n = result.instance_count();
  std::size_t wrong = 0;
  for (std::uint32_t round = 0; round < result.rounds; ++round)
    for (std::size_t i = 0; i < n; ++i)
      wrong += result.predictions[static_cast<std::size_t>(round) * n + i] != result.truth[i];
  return static_cast<double>(wrong) / (static_cast<double>(result.rounds) * n);
}

// sqrt of the per-class squared error averaged over classes, then instances.
inline double rmse(const EvalResult& result) {
  const std::size_t n = result.instance_count();
  const std::uint32_t classes = result.class_count;
  double sum = 0.0;
  for (std::uint32_t round = 0; round < result.rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t slot = static_cast<std::size_t>(round) * n + i;
      double inst = 0.0;
      for (std::uint32_t c = 0; c < classes; ++c) {
        const double d =
            result.posteriors[slot * classes + c] - (c == result.truth[i] ? 1.0 : 0.0);
        inst += d * d;
      }
      sum += inst / classes;
    }
  }
  return std::sqrt(sum / (static_cast<double>(result.rounds) * n));
}

struct BiasVariance {
  double bias = 0.0;
  double variance = 0.0;
};

// Kohavi-Wolpert 0-1 decomposition over the repeated splits: with p_c the
// fraction of rounds predicting class c for an instance,
//   bias = 1/2 sum_c (p_c - [c = y])^2,  variance = 1/2 (1 - sum_c p_c^2),
// so bias + variance equals the mean 0-1 loss exactly.
inline BiasVariance bias_variance(const EvalResult& result) {
  if (result.rounds < 2) throw error("bias_variance needs at least 2 rounds");
  const std::size_t n = result.instance_count();
  BiasVariance out;
  std::vector<double> freq(result.class_count);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(freq.begin(), freq.end(), 0.0);
    for (std::uint32_t round = 0; round < result.rounds; ++round)
      freq[result.predictions[static_cast<std::size_t>(round) * n + i]] += 1.0;
    double bias_i = 0.0, sq = 0.0;
    for (std::uint32_t c = 0; c < result.class_count; ++c) {
      const double p = freq[c] / result.rounds;
      const double d = p - (c == result.truth[i] ? 1.0 : 0.0);
      bias_i += d * d;
      sq += p * p;
    }
    out.bias += 0.5 * bias_i;
    out.variance += 0.5 * (1.0 - sq);
  }
  out.bias /= static_cast<double>(n);
  out.variance /= static_cast<double>(n);
  return out;
}

inline BiasVariance bias_variance(const RawDataset& raw, const AlgoConfig& config,
                                  std::uint32_t rounds, std::uint64_t seed) {
  const auto labels = class_label_order(raw);
  const auto plan = CvPlan::make(rounds, 2, seed, raw.size());
  const auto result = cross_validate(
      raw, labels, [&] { return std::make_unique<ModelClassifier>(config); }, plan);
  return bias_variance(result);
}

// Two-tailed exact binomial sign test, draws already excluded:
// p = min(1, 2 * sum_{k >= max(w,l)} C(w+l, k) / 2^(w+l)).
inline double sign_test(std::uint64_t wins, std::uint64_t losses) {
  const std::uint64_t n = wins + losses;
  if (n == 0) throw error("sign_test needs at least one non-draw");
  const std::uint64_t hi = std::max(wins, losses);
  double tail = 0.0;
  if (n <= 62) {
    std::uint64_t sum = 0;
    for (std::uint64_t k = hi; k <= n; ++k) sum += binomial(n, k);
    tail = static_cast<double>(sum) * std::pow(0.5, static_cast<double>(n));
  } else {
    for (std::uint64_t k = hi; k <= n; ++k) {
      const double log_term = std::lgamma(static_cast<double>(n + 1)) -
                              std::lgamma(static_cast<double>(k + 1)) -
                              std::lgamma(static_cast<double>(n - k + 1)) -
                              static_cast<double>(n) * std::log(2.0);
      tail += std::exp(log_term);
    }
  }
  return std::min(1.0, 2.0 * tail);
}

struct WdlSummary {
  std::uint64_t wins = 0;
  std::uint64_t draws = 0;
  std::uint64_t losses = 0;
  double p = 1.0;
  bool p_defined = false;
};

// Compare paired metric values (lower is better); |difference| < tol draws.
inline WdlSummary win_draw_loss(std::span<const double> ours, std::span<const double> theirs,
                                double tol = 1e-10) {
  if (ours.size() != theirs.size()) throw error("win_draw_loss: length mismatch");
  WdlSummary s;
  for (std::size_t i = 0; i < ours.size(); ++i) {
    const double diff = ours[i] - theirs[i];
    if (std::abs(diff) < tol)
      ++s.draws;
    else if (diff < 0)
      ++s.wins;
    else
      ++s.losses;
  }
  if (s.wins + s.losses > 0) {
    s.p = sign_test(s.wins, s.losses);
    s.p_defined = true;
  }
  return s;
}

struct NormalizedSummary {
  std::map<std::string, double> per_algo;  // geometric mean of metric / reference metric
  std::vector<std::string> warnings;
};

// Divide each algo's metric by the reference algo's value on the same dataset
// and take the geometric mean across datasets. Zeros are floored at 1e-10.
inline NormalizedSummary normalized_summary(
    const std::map<std::string, std::map<std::string, double>>& metric_by_algo_dataset,
    const std::string& reference) {
  constexpr double kFloor = 1e-10;
  const auto ref_it = metric_by_algo_dataset.find(reference);
  if (ref_it == metric_by_algo_dataset.end())
    throw error("normalized_summary: reference algo '" + reference + "' missing");
  NormalizedSummary out;
  for (const auto& [algo, by_dataset] : metric_by_algo_dataset) {
    if (by_dataset.size() != ref_it->second.size())
      throw error("normalized_summary: algo '" + algo + "' missing datasets");
    double log_sum = 0.0;
    for (const auto& [dataset, value] : by_dataset) {
      const auto ref_cell = ref_it->second.find(dataset);
      if (ref_cell == ref_it->second.end())
        throw error("normalized_summary: reference missing dataset '" + dataset + "'");
      double num = value, den = ref_cell->second;
      if (num < kFloor || den < kFloor) {
        out.warnings.push_back("metric near zero on '" + dataset + "'; floored at 1e-10");
        num = std::max(num, kFloor);
        den = std::max(den, kFloor);
      }
      log_sum += std::log(num / den);
    }
    out.per_algo[algo] = std::exp(log_sum / static_cast<double>(by_dataset.size()));
  }
  return out;
}

}  // namespace dbl
