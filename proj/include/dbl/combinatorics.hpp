#pragma once

// Attribute-subset enumeration, value-tuple ranking and the flat parameter
// layout shared by every model in this library. Subsets are always kept in
// lexicographic order so indices are reproducible across runs.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dbl/common.hpp"

namespace dbl {

// C(n, k), exact. Throws if the result does not fit in 64 bits.
inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  if (n - k < k) k = n - k;
  unsigned __int128 result = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    result = result * (n - k + i) / i;  // exact: C(n-k+i, i) is an integer
    if (result > static_cast<unsigned __int128>(UINT64_MAX))
      throw error("binomial(" + std::to_string(n) + ", " + std::to_string(k) +
                  ") overflows 64 bits");
  }
  return static_cast<std::uint64_t>(result);
}

// All size-n subsets of {0, ..., a-1} in lexicographic order, plus the
// inverse mapping from subset to its position in that order.
struct SubsetCatalog {
  std::uint32_t attr_count = 0;
  std::uint32_t subset_size = 0;
  std::vector<std::vector<std::uint32_t>> subsets;

  std::size_t size() const { return subsets.size(); }
  const std::vector<std::uint32_t>& subset(std::size_t r) const { return subsets[r]; }

  // Lexicographic rank of a sorted index subset (combinadic formula).
  std::size_t rank_of(std::span<const std::uint32_t> s) const {
    if (s.size() != subset_size) throw error("rank_of: subset size mismatch");
    std::uint64_t rank = 0;
    std::uint32_t from = 0;
    for (std::uint32_t i = 0; i < subset_size; ++i) {
      for (std::uint32_t v = from; v < s[i]; ++v)
        rank += binomial(attr_count - 1 - v, subset_size - 1 - i);
      from = s[i] + 1;
    }
    return static_cast<std::size_t>(rank);
  }
};

inline SubsetCatalog enumerate_subsets(std::uint32_t attr_count, std::uint32_t subset_size) {
  if (subset_size == 0) throw error("subset size must be at least 1");
  if (subset_size > attr_count)
    throw error("subset size " + std::to_string(subset_size) +
                " exceeds attribute count " + std::to_string(attr_count));
  SubsetCatalog catalog;
  catalog.attr_count = attr_count;
  catalog.subset_size = subset_size;
  catalog.subsets.reserve(binomial(attr_count, subset_size));
  std::vector<std::uint32_t> current(subset_size);
  for (std::uint32_t i = 0; i < subset_size; ++i) current[i] = i;
  while (true) {
    catalog.subsets.push_back(current);
    // advance to the next combination in lexicographic order
    std::int64_t i = subset_size - 1;
    while (i >= 0 && current[i] == attr_count - subset_size + i) --i;
    if (i < 0) break;
    ++current[i];
    for (std::uint32_t j = i + 1; j < subset_size; ++j) current[j] = current[j - 1] + 1;
  }
  return catalog;
}

// Product of the cardinalities over one subset (the size of its value space).
inline std::uint64_t subset_value_space(std::span<const std::uint32_t> subset,
                                        std::span<const std::uint32_t> cardinalities) {
  unsigned __int128 s = 1;
  for (auto attr : subset) {
    s *= cardinalities[attr];
    if (s > static_cast<unsigned __int128>(UINT64_MAX))
      throw error("subset value space overflows 64 bits");
  }
  return static_cast<std::uint64_t>(s);
}

// Mixed-radix rank of the values an instance takes on one subset. Attributes
// are taken in ascending order; the first is the most significant digit.
inline std::uint64_t value_tuple_index(std::span<const std::uint32_t> subset,
                                       std::span<const std::uint32_t> values,
                                       std::span<const std::uint32_t> cardinalities) {
  std::uint64_t rank = 0;
  for (auto attr : subset) {
    if (values[attr] >= cardinalities[attr])
      throw error("value index " + std::to_string(values[attr]) +
                  " out of range for attribute " + std::to_string(attr));
    rank = rank * cardinalities[attr] + values[attr];
  }
  return rank;
}

// Inverse of value_tuple_index: the per-attribute values of a tuple rank,
// in the subset's (ascending) attribute order.
inline std::vector<std::uint32_t> tuple_from_index(std::span<const std::uint32_t> subset,
                                                   std::uint64_t rank,
                                                   std::span<const std::uint32_t> cardinalities) {
  std::vector<std::uint32_t> out(subset.size());
  for (std::size_t i = subset.size(); i-- > 0;) {
    const std::uint32_t card = cardinalities[subset[i]];
    out[i] = static_cast<std::uint32_t>(rank % card);
    rank /= card;
  }
  return out;
}

// Number of partitions of a attributes into size-n blocks needed to cover
// every n-subset exactly once: (a-1)! / ((n-1)! (a-n)!) = C(a-1, n-1).
inline std::uint64_t partition_count(std::uint32_t attr_count, std::uint32_t subset_size) {
  if (subset_size == 0 || subset_size > attr_count)
    throw error("partition_count requires 1 <= n <= a");
  return binomial(attr_count - 1, subset_size - 1);
}

// Per-subset log-likelihood scale (n-1)!(a-n)!/(a-1)!, i.e. the reciprocal
// of partition_count. Exact where the denominator fits 64 bits, otherwise
// evaluated through log-gamma.
inline double anje_exponent(std::uint32_t attr_count, std::uint32_t subset_size) {
  if (subset_size == 0 || subset_size > attr_count)
    throw error("anje_exponent requires 1 <= n <= a");
  const double log_p = std::lgamma(static_cast<double>(attr_count)) -
                       std::lgamma(static_cast<double>(subset_size)) -
                       std::lgamma(static_cast<double>(attr_count - subset_size + 1));
  if (log_p < 62.0 * 0.6931471805599453)
    return 1.0 / static_cast<double>(partition_count(attr_count, subset_size));
  return std::exp(-log_p);
}

// Flat index space holding one slot per class plus one dense block per
// (class, subset) pair, sized by the subset's value space. Class slots come
// first; blocks are class-major in catalog order.
struct ParameterLayout {
  std::uint32_t class_count = 0;
  std::vector<std::uint64_t> subset_sizes;    // s_alpha per subset, catalog order
  std::vector<std::uint64_t> subset_offsets;  // prefix sums of subset_sizes
  std::uint64_t block_len = 0;                // sum of subset_sizes
  std::uint64_t total_len = 0;                // class_count * (1 + block_len)

  std::uint64_t offset(std::uint32_t cls, std::size_t subset_rank) const {
    return class_count + static_cast<std::uint64_t>(cls) * block_len +
           subset_offsets[subset_rank];
  }
  std::uint64_t index(std::uint32_t cls, std::size_t subset_rank, std::uint64_t tuple) const {
    return offset(cls, subset_rank) + tuple;
  }
};

inline ParameterLayout build_layout(const SubsetCatalog& catalog,
                                    std::span<const std::uint32_t> cardinalities,
                                    std::uint32_t class_count) {
  for (auto c : cardinalities)
    if (c == 0) throw error("build_layout: zero cardinality");
  ParameterLayout layout;
  layout.class_count = class_count;
  layout.subset_sizes.reserve(catalog.size());
  layout.subset_offsets.reserve(catalog.size());
  unsigned __int128 block = 0;
  for (std::size_t r = 0; r < catalog.size(); ++r) {
    const std::uint64_t s = subset_value_space(catalog.subset(r), cardinalities);
    layout.subset_offsets.push_back(static_cast<std::uint64_t>(block));
    layout.subset_sizes.push_back(s);
    block += s;
  }
  const unsigned __int128 total = static_cast<unsigned __int128>(class_count) * (1 + block);
  if (total > (static_cast<unsigned __int128>(1) << 40))
    throw error("parameter layout needs " + std::to_string(static_cast<double>(total)) +
                " slots, above the 2^40 limit; lower n or reduce cardinalities");
  layout.block_len = static_cast<std::uint64_t>(block);
  layout.total_len = static_cast<std::uint64_t>(total);
  return layout;
}

}  // namespace dbl
