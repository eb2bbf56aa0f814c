#pragma once

// Regularized negative conditional-log-likelihood objectives for DBL^n and
// LR^n over the shared flat layout. The two parameterizations differ only in
// the per-slot multiplier: DBL scores through w * log-value, LR through the
// raw parameter. Gradients use the softmax residual (P(c|x) - 1_{c=y}).

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "dbl/lbfgs.hpp"
#include "dbl/models.hpp"

namespace dbl {

enum class Parameterization { dbl, lr };

struct ObjectiveSpec {
  std::shared_ptr<const FeatureSpace> space;
  std::shared_ptr<const DiscretizedDataset> data;
  std::shared_ptr<const ProbabilityTables> tables;  // required for dbl
  Parameterization parameterization = Parameterization::dbl;
  double C = 1e-2;
  double center = 1.0;
  unsigned threads = 1;

  // Per instance and subset, the block-relative slot (subset offset + tuple
  // rank); the class-c index is class_count + c*block_len + this value.
  std::vector<std::uint64_t> block_index;
};

inline ObjectiveSpec make_objective(std::shared_ptr<const FeatureSpace> space,
                                    std::shared_ptr<const DiscretizedDataset> data,
                                    std::shared_ptr<const ProbabilityTables> tables,
                                    Parameterization parameterization, double C = 1e-2,
                                    std::optional<double> center = std::nullopt,
                                    unsigned threads = 1) {
  if (C < 0) throw error("regularization strength must be >= 0");
  if (data->attr_count() != space->attr_count() ||
      (data->class_count != 0 && data->class_count != space->class_count))
    throw error("objective: dataset shape does not match layout");
  if (parameterization == Parameterization::dbl && !tables)
    throw error("dbl objective needs probability tables");
  ObjectiveSpec spec;
  spec.space = space;
  spec.data = std::move(data);
  spec.tables = std::move(tables);
  spec.parameterization = parameterization;
  spec.C = C;
  spec.center = center ? *center : (parameterization == Parameterization::dbl ? 1.0 : 0.0);
  spec.threads = threads == 0 ? 1 : threads;

  const auto& catalog = space->catalog;
  const std::size_t r_count = catalog.size();
  spec.block_index.resize(spec.data->size() * r_count);
  for (std::size_t i = 0; i < spec.data->size(); ++i) {
    const auto x = spec.data->instance(i);
    for (std::size_t r = 0; r < r_count; ++r)
      spec.block_index[i * r_count + r] =
          space->layout.subset_offsets[r] +
          value_tuple_index(catalog.subset(r), x, space->cardinalities);
  }
  return spec;
}

namespace detail {

// NLL and gradient contribution of instances [begin, end); the penalty term
// is added by the caller exactly once.
inline double nll_shard(const ObjectiveSpec& spec, std::span<const double> params,
                        std::span<double> grad, std::size_t begin, std::size_t end) {
  const auto& space = *spec.space;
  const std::size_t r_count = space.catalog.size();
  const std::uint32_t classes = space.class_count;
  const std::uint64_t block_len = space.layout.block_len;
  const double* mult =
      spec.parameterization == Parameterization::dbl ? spec.tables->log_values.data() : nullptr;

  double obj = 0.0;
  std::vector<double> scores(classes), probs(classes);
  for (std::size_t i = begin; i < end; ++i) {
    const std::uint64_t* blocks = spec.block_index.data() + i * r_count;
    for (std::uint32_t c = 0; c < classes; ++c) {
      const std::uint64_t base = classes + static_cast<std::uint64_t>(c) * block_len;
      double s = params[c] * (mult ? mult[c] : 1.0);
      for (std::size_t r = 0; r < r_count; ++r) {
        const std::uint64_t idx = base + blocks[r];
        s += params[idx] * (mult ? mult[idx] : 1.0);
      }
      scores[c] = s;
    }
    const double lse = log_sum_exp(scores);
    const std::uint32_t label = spec.data->labels[i];
    obj += lse - scores[label];
    for (std::uint32_t c = 0; c < classes; ++c) {
      const double resid = std::exp(scores[c] - lse) - (c == label ? 1.0 : 0.0);
      const std::uint64_t base = classes + static_cast<std::uint64_t>(c) * block_len;
      grad[c] += resid * (mult ? mult[c] : 1.0);
      for (std::size_t r = 0; r < r_count; ++r) {
        const std::uint64_t idx = base + blocks[r];
        grad[idx] += resid * (mult ? mult[idx] : 1.0);
      }
    }
  }
  return obj;
}

}  // namespace detail

// Objective value and gradient (written into `grad`). Instances may be
// sharded across threads; shard partials are combined in shard order, so the
// result is deterministic for a fixed thread count.
inline double nll_grad(const ObjectiveSpec& spec, std::span<const double> params,
                       std::span<double> grad) {
  const std::size_t dim = spec.space->layout.total_len;
  if (params.size() != dim || grad.size() != dim)
    throw error("nll_grad: parameter vector does not match layout");
  std::fill(grad.begin(), grad.end(), 0.0);

  const std::size_t n = spec.data->size();
  double obj = 0.0;
  const unsigned shards =
      spec.threads > 1 ? static_cast<unsigned>(std::min<std::size_t>(spec.threads, n ? n : 1)) : 1;
  if (shards <= 1) {
    obj = detail::nll_shard(spec, params, grad, 0, n);
  } else {
    std::vector<double> partial_obj(shards, 0.0);
    std::vector<std::vector<double>> partial_grad(shards);
    std::vector<std::thread> workers;
    const std::size_t chunk = (n + shards - 1) / shards;
    for (unsigned s = 0; s < shards; ++s) {
      partial_grad[s].assign(dim, 0.0);
      workers.emplace_back([&, s] {
        const std::size_t begin = s * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin < end)
          partial_obj[s] = detail::nll_shard(spec, params, partial_grad[s], begin, end);
      });
    }
    for (auto& w : workers) w.join();
    for (unsigned s = 0; s < shards; ++s) {
      obj += partial_obj[s];
      for (std::size_t j = 0; j < dim; ++j) grad[j] += partial_grad[s][j];
    }
  }

  if (spec.C > 0.0) {
    double penalty = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double d = params[j] - spec.center;
      penalty += d * d;
      grad[j] += spec.C * d;
    }
    obj += 0.5 * spec.C * penalty;
  }

  if (!std::isfinite(obj)) throw error("objective value is not finite");
  for (std::size_t j = 0; j < dim; ++j)
    if (!std::isfinite(grad[j]))
      throw error("non-finite gradient component at parameter index " + std::to_string(j));
  return obj;
}

inline std::pair<double, std::vector<double>> nll_grad_dbl(const ObjectiveSpec& spec,
                                                           const WeightVector& w) {
  if (spec.parameterization != Parameterization::dbl)
    throw error("nll_grad_dbl called on an lr objective");
  std::vector<double> grad(w.values.size());
  const double obj = nll_grad(spec, w.values, grad);
  return {obj, std::move(grad)};
}

inline std::pair<double, std::vector<double>> nll_grad_lr(const ObjectiveSpec& spec,
                                                          const BetaVector& beta) {
  if (spec.parameterization != Parameterization::lr)
    throw error("nll_grad_lr called on a dbl objective");
  std::vector<double> grad(beta.values.size());
  const double obj = nll_grad(spec, beta.values, grad);
  return {obj, std::move(grad)};
}

inline ObjectiveFn objective_fn(const ObjectiveSpec& spec) {
  return [&spec](std::span<const double> p, std::span<double> g) { return nll_grad(spec, p, g); };
}

// Class weights 1 and subset weights anje_exponent(a, n): DBL^n scores
// identically to AnJE at this point.
inline WeightVector init_dbl(std::shared_ptr<const FeatureSpace> space) {
  WeightVector w;
  w.space = std::move(space);
  const auto& s = *w.space;
  w.values.assign(s.layout.total_len, anje_exponent(s.attr_count(), s.subset_size()));
  for (std::uint32_t c = 0; c < s.class_count; ++c) w.values[c] = 1.0;
  return w;
}

inline BetaVector init_lr(std::shared_ptr<const FeatureSpace> space) {
  BetaVector beta;
  beta.space = std::move(space);
  beta.values.assign(beta.space->layout.total_len, 0.0);
  return beta;
}

}  // namespace dbl
