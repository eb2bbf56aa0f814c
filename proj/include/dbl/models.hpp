#pragma once

// Instance scoring for the four classifiers. Everything works in natural-log
// space; posteriors are normalized with a max-shifted log-sum-exp.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "dbl/statistics.hpp"

namespace dbl {

inline double log_sum_exp(std::span<const double> v) {
  double hi = -std::numeric_limits<double>::infinity();
  for (auto x : v) hi = std::max(hi, x);
  if (!std::isfinite(hi)) return hi;
  double sum = 0.0;
  for (auto x : v) sum += std::exp(x - hi);
  return hi + std::log(sum);
}

struct Posterior {
  std::vector<double> log_prob;  // normalized: logsumexp == 0

  double prob(std::uint32_t cls) const { return std::exp(log_prob[cls]); }
  std::size_t size() const { return log_prob.size(); }
};

inline Posterior normalize_scores(std::vector<double> scores) {
  const double lse = log_sum_exp(scores);
  for (auto& s : scores) s -= lse;
  return Posterior{std::move(scores)};
}

// Argmax class; ties go to the smallest index.
inline std::uint32_t predict(const Posterior& p) {
  std::uint32_t best = 0;
  for (std::uint32_t c = 1; c < p.log_prob.size(); ++c)
    if (p.log_prob[c] > p.log_prob[best]) best = c;
  return best;
}

struct WeightVector {
  std::shared_ptr<const FeatureSpace> space;
  std::vector<double> values;
};

struct BetaVector {
  std::shared_ptr<const FeatureSpace> space;
  std::vector<double> values;
};

struct AnjeModel {
  ProbabilityTables tables;
  double exponent = 1.0;
};

inline AnjeModel make_anje(ProbabilityTables tables) {
  const auto& space = *tables.space;
  const double e = anje_exponent(space.attr_count(), space.subset_size());
  return AnjeModel{std::move(tables), e};
}

// score_y = log pi_y + exponent * sum_alpha log theta_{x_alpha|y}
inline Posterior anje_log_posterior(const AnjeModel& model, std::span<const std::uint32_t> x) {
  const auto& space = *model.tables.space;
  if (x.size() != space.attr_count()) throw error("anje_log_posterior: dimension mismatch");
  std::vector<double> scores(space.class_count);
  std::vector<std::uint64_t> tuples(space.catalog.size());
  for (std::size_t r = 0; r < space.catalog.size(); ++r)
    tuples[r] = value_tuple_index(space.catalog.subset(r), x, space.cardinalities);
  for (std::uint32_t y = 0; y < space.class_count; ++y) {
    double joint = 0.0;
    for (std::size_t r = 0; r < space.catalog.size(); ++r)
      joint += model.tables.log_values[space.layout.index(y, r, tuples[r])];
    scores[y] = model.tables.log_prior(y) + model.exponent * joint;
  }
  return normalize_scores(std::move(scores));
}

// score_y = w_y log pi_y + sum_alpha w_{y,alpha,x_alpha} log theta_{x_alpha|y}
inline Posterior dbl_log_posterior(const ProbabilityTables& tables, const WeightVector& w,
                                   std::span<const std::uint32_t> x) {
  const auto& space = *tables.space;
  if (x.size() != space.attr_count() || w.values.size() != space.layout.total_len)
    throw error("dbl_log_posterior: dimension mismatch");
  std::vector<double> scores(space.class_count);
  std::vector<std::uint64_t> tuples(space.catalog.size());
  for (std::size_t r = 0; r < space.catalog.size(); ++r)
    tuples[r] = value_tuple_index(space.catalog.subset(r), x, space.cardinalities);
  for (std::uint32_t y = 0; y < space.class_count; ++y) {
    double s = w.values[y] * tables.log_prior(y);
    for (std::size_t r = 0; r < space.catalog.size(); ++r) {
      const auto idx = space.layout.index(y, r, tuples[r]);
      s += w.values[idx] * tables.log_values[idx];
    }
    scores[y] = s;
  }
  return normalize_scores(std::move(scores));
}

// score_y = beta_y + sum_alpha beta_{y,alpha,x_alpha}
inline Posterior lr_log_posterior(const BetaVector& beta, std::span<const std::uint32_t> x) {
  const auto& space = *beta.space;
  if (x.size() != space.attr_count() || beta.values.size() != space.layout.total_len)
    throw error("lr_log_posterior: dimension mismatch");
  std::vector<double> scores(space.class_count);
  for (std::uint32_t y = 0; y < space.class_count; ++y) {
    double s = beta.values[y];
    for (std::size_t r = 0; r < space.catalog.size(); ++r) {
      const auto tuple = value_tuple_index(space.catalog.subset(r), x, space.cardinalities);
      s += beta.values[space.layout.index(y, r, tuple)];
    }
    scores[y] = s;
  }
  return normalize_scores(std::move(scores));
}

// beta = w (elementwise *) log-values: beta_y = w_y log pi_y, and likewise
// per (class, subset, tuple) slot.
inline BetaVector to_lr(const ProbabilityTables& tables, const WeightVector& w) {
  if (w.values.size() != tables.log_values.size()) throw error("to_lr: dimension mismatch");
  BetaVector beta;
  beta.space = tables.space;
  beta.values.resize(w.values.size());
  for (std::size_t i = 0; i < w.values.size(); ++i)
    beta.values[i] = w.values[i] * tables.log_values[i];
  return beta;
}

// A(n-1)DE built on the n-ary count table: superparents are the (n-1)-subsets
// and every conditional comes from the n-ary joints. The superparent counts
// are marginals of the n-ary table (no extra pass over the data) except in the
// degenerate a == n-1 case, where no n-ary subsets exist.
struct AndeModel {
  std::uint32_t n = 2;
  double m = 1.0;
  std::shared_ptr<const FeatureSpace> parents;  // (n-1)-subsets
  std::shared_ptr<const FeatureSpace> joints;   // n-subsets; null when a == n-1
  CountTable parent_counts;
  CountTable joint_counts;  // empty when joints is null
  // Per parent rank: (child attribute, joint subset rank) for every child.
  std::vector<std::vector<std::pair<std::uint32_t, std::size_t>>> children;
};

namespace detail {

inline std::vector<std::vector<std::pair<std::uint32_t, std::size_t>>> ande_children(
    const FeatureSpace& parents, const FeatureSpace* joints) {
  std::vector<std::vector<std::pair<std::uint32_t, std::size_t>>> children(parents.catalog.size());
  if (!joints) return children;
  for (std::size_t p = 0; p < parents.catalog.size(); ++p) {
    const auto& s = parents.catalog.subset(p);
    for (std::uint32_t i = 0; i < parents.attr_count(); ++i) {
      if (std::find(s.begin(), s.end(), i) != s.end()) continue;
      std::vector<std::uint32_t> u(s.begin(), s.end());
      u.insert(std::upper_bound(u.begin(), u.end(), i), i);
      children[p].emplace_back(i, joints->catalog.rank_of(u));
    }
  }
  return children;
}

// Superparent counts as marginals of the n-ary table: sum out one extra
// attribute from the lexicographically smallest covering n-subset.
inline CountTable marginalize_parents(const CountTable& joint,
                                      std::shared_ptr<const FeatureSpace> parents) {
  const auto& jspace = *joint.space;
  auto table = make_count_table(std::move(parents));
  const auto& pspace = *table.space;
  table.total = joint.total;
  for (std::uint32_t y = 0; y < pspace.class_count; ++y) table.cells[y] = joint.cells[y];
  for (std::size_t p = 0; p < pspace.catalog.size(); ++p) {
    const auto& s = pspace.catalog.subset(p);
    std::uint32_t extra = 0;
    while (std::find(s.begin(), s.end(), extra) != s.end()) ++extra;
    std::vector<std::uint32_t> u(s.begin(), s.end());
    u.insert(std::upper_bound(u.begin(), u.end(), extra), extra);
    const std::size_t jr = jspace.catalog.rank_of(u);
    for (std::uint32_t y = 0; y < pspace.class_count; ++y) {
      const std::uint64_t jbase = jspace.layout.offset(y, jr);
      const std::uint64_t pbase = pspace.layout.offset(y, p);
      for (std::uint64_t t = 0; t < jspace.layout.subset_sizes[jr]; ++t) {
        const auto values = tuple_from_index(u, t, jspace.cardinalities);
        std::uint64_t ptuple = 0;
        for (std::size_t i = 0; i < u.size(); ++i)
          if (u[i] != extra) ptuple = ptuple * jspace.cardinalities[u[i]] + values[i];
        table.cells[pbase + ptuple] += joint.cells[jbase + t];
      }
    }
  }
  return table;
}

}  // namespace detail

inline AndeModel make_ande(const DiscretizedDataset& data, std::uint32_t n, double m = 1.0) {
  if (n < 2) throw error("ande requires n >= 2 (A0DE is undefined here)");
  const auto a = static_cast<std::uint32_t>(data.attr_count());
  if (n - 1 > a) throw error("ande: n - 1 exceeds attribute count");
  AndeModel model;
  model.n = n;
  model.m = m;
  model.parents = make_feature_space(data.cardinalities, n - 1, data.class_count);
  if (n <= a) {
    model.joints = make_feature_space(data.cardinalities, n, data.class_count);
    model.joint_counts = accumulate(data, model.joints);
    model.parent_counts = detail::marginalize_parents(model.joint_counts, model.parents);
  } else {
    model.parent_counts = accumulate(data, model.parents);
  }
  model.children = detail::ande_children(*model.parents, model.joints.get());
  return model;
}

// Rebuild the derived pieces after deserializing counts.
inline void rebuild_ande(AndeModel& model) {
  model.children = detail::ande_children(*model.parents, model.joints.get());
}

// P(y,x) proportional to the mean over superparents s of
// P(y, x_s) * prod_{i not in s} P(x_i | y, x_s), all factors MAP-smoothed.
inline Posterior ande_log_posterior(const AndeModel& model, std::span<const std::uint32_t> x) {
  const auto& pspace = *model.parents;
  if (x.size() != pspace.attr_count()) throw error("ande_log_posterior: dimension mismatch");
  const double m = model.m;
  const double t = static_cast<double>(model.parent_counts.total);
  std::vector<double> scores(pspace.class_count);
  std::vector<double> terms(pspace.catalog.size());
  for (std::uint32_t y = 0; y < pspace.class_count; ++y) {
    for (std::size_t p = 0; p < pspace.catalog.size(); ++p) {
      const auto ptuple = value_tuple_index(pspace.catalog.subset(p), x, pspace.cardinalities);
      const double cs = static_cast<double>(model.parent_counts.joint(y, p, ptuple));
      const double s_s = static_cast<double>(pspace.layout.subset_sizes[p]);
      double term = std::log((cs + m / (pspace.class_count * s_s)) / (t + m));
      for (const auto& [child, jr] : model.children[p]) {
        const auto& jspace = *model.joints;
        const auto jtuple = value_tuple_index(jspace.catalog.subset(jr), x, jspace.cardinalities);
        const double cj = static_cast<double>(model.joint_counts.joint(y, jr, jtuple));
        term += std::log((cj + m / jspace.cardinalities[child]) / (cs + m));
      }
      terms[p] = term;
    }
    scores[y] = log_sum_exp(terms) - std::log(static_cast<double>(terms.size()));
  }
  return normalize_scores(std::move(scores));
}

// The (subset, tuple, class) joint keys touched while scoring one instance;
// used to check that AnJE(n) and A(n-1)DE read the same core statistics.
struct ScoringKey {
  std::size_t subset_rank;
  std::uint64_t tuple;
  std::uint32_t cls;
  auto operator<=>(const ScoringKey&) const = default;
};

inline std::vector<ScoringKey> anje_scoring_keys(const FeatureSpace& space,
                                                 std::span<const std::uint32_t> x) {
  std::vector<ScoringKey> keys;
  for (std::uint32_t y = 0; y < space.class_count; ++y)
    for (std::size_t r = 0; r < space.catalog.size(); ++r)
      keys.push_back({r, value_tuple_index(space.catalog.subset(r), x, space.cardinalities), y});
  return keys;
}

inline std::vector<ScoringKey> ande_scoring_keys(const AndeModel& model,
                                                 std::span<const std::uint32_t> x) {
  std::vector<ScoringKey> keys;
  if (!model.joints) return keys;
  const auto& jspace = *model.joints;
  for (std::uint32_t y = 0; y < jspace.class_count; ++y)
    for (std::size_t p = 0; p < model.children.size(); ++p)
      for (const auto& [child, jr] : model.children[p])
        keys.push_back(
            {jr, value_tuple_index(jspace.catalog.subset(jr), x, jspace.cardinalities), y});
  return keys;
}

}  // namespace dbl
