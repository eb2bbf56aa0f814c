#pragma once

// Sufficient statistics over all size-n attribute subsets and their MAP
// probability estimates. Counts and log-probabilities live in the same flat
// layout: the first class_count slots hold per-class values, the rest holds
// one dense block per (class, subset) pair.

#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "dbl/combinatorics.hpp"
#include "dbl/dataset.hpp"

namespace dbl {

// Everything the models need to know about the index space: the subset
// catalog, attribute cardinalities and the flat parameter layout.
struct FeatureSpace {
  SubsetCatalog catalog;
  std::vector<std::uint32_t> cardinalities;
  std::uint32_t class_count = 0;
  ParameterLayout layout;

  std::uint32_t attr_count() const { return catalog.attr_count; }
  std::uint32_t subset_size() const { return catalog.subset_size; }

  bool same_shape(const FeatureSpace& other) const {
    return catalog.attr_count == other.catalog.attr_count &&
           catalog.subset_size == other.catalog.subset_size &&
           cardinalities == other.cardinalities && class_count == other.class_count;
  }
};

inline std::shared_ptr<const FeatureSpace> make_feature_space(
    std::vector<std::uint32_t> cardinalities, std::uint32_t subset_size,
    std::uint32_t class_count) {
  auto space = std::make_shared<FeatureSpace>();
  space->catalog = enumerate_subsets(static_cast<std::uint32_t>(cardinalities.size()), subset_size);
  space->cardinalities = std::move(cardinalities);
  space->class_count = class_count;
  space->layout = build_layout(space->catalog, space->cardinalities, class_count);
  return space;
}

struct CountTable {
  std::shared_ptr<const FeatureSpace> space;
  std::uint64_t total = 0;
  std::vector<std::uint64_t> cells;  // layout-flat: class counts then joint blocks

  std::uint64_t class_count_of(std::uint32_t cls) const { return cells[cls]; }
  std::uint64_t joint(std::uint32_t cls, std::size_t subset_rank, std::uint64_t tuple) const {
    return cells[space->layout.index(cls, subset_rank, tuple)];
  }
};

inline CountTable make_count_table(std::shared_ptr<const FeatureSpace> space) {
  CountTable table;
  table.space = std::move(space);
  table.cells.assign(table.space->layout.total_len, 0);
  return table;
}

inline void accumulate_instance(CountTable& table, std::span<const std::uint32_t> x,
                                std::uint32_t y) {
  const auto& space = *table.space;
  table.total += 1;
  table.cells[y] += 1;
  for (std::size_t r = 0; r < space.catalog.size(); ++r) {
    const auto tuple = value_tuple_index(space.catalog.subset(r), x, space.cardinalities);
    table.cells[space.layout.index(y, r, tuple)] += 1;
  }
}

inline CountTable accumulate_range(const DiscretizedDataset& data,
                                   std::shared_ptr<const FeatureSpace> space, std::size_t begin,
                                   std::size_t end) {
  if (space->attr_count() != data.attr_count() || space->class_count != data.class_count)
    throw error("accumulate: catalog does not match dataset shape");
  auto table = make_count_table(std::move(space));
  for (std::size_t i = begin; i < end; ++i)
    accumulate_instance(table, data.instance(i), data.labels[i]);
  return table;
}

inline CountTable accumulate(const DiscretizedDataset& data,
                             std::shared_ptr<const FeatureSpace> space) {
  return accumulate_range(data, std::move(space), 0, data.size());
}

inline CountTable merge(const CountTable& lhs, const CountTable& rhs) {
  if (!lhs.space || !rhs.space || !lhs.space->same_shape(*rhs.space))
    throw error("merge: count table shapes differ");
  CountTable out = lhs;
  out.total += rhs.total;
  for (std::size_t i = 0; i < out.cells.size(); ++i) out.cells[i] += rhs.cells[i];
  return out;
}

// MAP log-probabilities in the same flat layout: class slots carry log pi_y,
// joint blocks carry log theta_{x_alpha|y}.
struct ProbabilityTables {
  std::shared_ptr<const FeatureSpace> space;
  double smoothing_m = 1.0;
  std::vector<double> log_values;

  double log_prior(std::uint32_t cls) const { return log_values[cls]; }
  double log_theta(std::uint32_t cls, std::size_t subset_rank, std::uint64_t tuple) const {
    return log_values[space->layout.index(cls, subset_rank, tuple)];
  }
};

// pi_y = (#_y + m/|Y|) / (t + m); theta_{x_a|y} = (#_{x_a,y} + m/s_a) / (#_y + m).
inline ProbabilityTables map_estimates(const CountTable& counts, double m = 1.0) {
  if (counts.total == 0) throw error("map_estimates: empty count table");
  if (!(m > 0)) throw error("map_estimates: smoothing must be positive");
  const auto& space = *counts.space;
  ProbabilityTables tables;
  tables.space = counts.space;
  tables.smoothing_m = m;
  tables.log_values.resize(space.layout.total_len);

  const double t = static_cast<double>(counts.total);
  for (std::uint32_t y = 0; y < space.class_count; ++y) {
    const double class_count = static_cast<double>(counts.cells[y]);
    tables.log_values[y] = std::log((class_count + m / space.class_count) / (t + m));
    const double denom = class_count + m;
    for (std::size_t r = 0; r < space.catalog.size(); ++r) {
      const double pseudo = m / static_cast<double>(space.layout.subset_sizes[r]);
      const std::uint64_t base = space.layout.offset(y, r);
      for (std::uint64_t v = 0; v < space.layout.subset_sizes[r]; ++v)
        tables.log_values[base + v] =
            std::log((static_cast<double>(counts.cells[base + v]) + pseudo) / denom);
    }
  }
  return tables;
}

}  // namespace dbl
