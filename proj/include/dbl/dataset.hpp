#pragma once

// Raw tabular data, Fayyad-Irani MDL discretization and the encoding of rows
// into dense category indices. Every attribute gets one reserved index that
// absorbs missing values and labels unseen during training, so encoding is a
// total function.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dbl/common.hpp"

namespace dbl {

enum class AttrKind { numeric, categorical };

struct AttributeMeta {
  std::string name;
  AttrKind kind = AttrKind::categorical;
  std::vector<std::string> categories;  // training-order labels, categorical only
  bool has_missing = false;
  std::vector<std::string> missing_tokens;
};

struct RawCell {
  enum class Kind : std::uint8_t { number, label, missing };
  Kind kind = Kind::missing;
  double number = 0.0;
  std::string label;

  static RawCell make_number(double v) { return {Kind::number, v, {}}; }
  static RawCell make_label(std::string s) { return {Kind::label, 0.0, std::move(s)}; }
  static RawCell make_missing() { return {}; }
  bool missing() const { return kind == Kind::missing; }
};

struct RawDataset {
  std::vector<AttributeMeta> meta;
  std::string class_name;
  std::vector<std::vector<RawCell>> rows;  // attr_count cells per row
  std::vector<std::string> row_class;      // empty strings allowed only in unlabeled data
  bool labeled = true;

  std::size_t attr_count() const { return meta.size(); }
  std::size_t size() const { return rows.size(); }
};

// Distinct class labels in first-appearance order over all rows.
inline std::vector<std::string> class_label_order(const RawDataset& raw) {
  std::vector<std::string> labels;
  std::unordered_map<std::string, std::uint32_t> seen;
  for (const auto& c : raw.row_class)
    if (seen.emplace(c, labels.size()).second) labels.push_back(c);
  return labels;
}

struct CutPoints {
  // One (possibly empty) strictly increasing threshold list per attribute;
  // categorical attributes keep an empty list.
  std::vector<std::vector<double>> thresholds;
};

struct DiscretizedDataset {
  std::vector<std::uint32_t> cardinalities;
  std::uint32_t class_count = 0;
  std::vector<std::uint32_t> values;  // row-major, attr_count entries per instance
  std::vector<std::uint32_t> labels;

  std::size_t attr_count() const { return cardinalities.size(); }
  std::size_t size() const { return labels.size(); }
  std::span<const std::uint32_t> instance(std::size_t i) const {
    return {values.data() + i * attr_count(), attr_count()};
  }
};

namespace detail {

inline double entropy_bits(std::span<const std::uint64_t> counts, std::uint64_t total) {
  if (total == 0) return 0.0;
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h;
}

inline std::uint32_t classes_present(std::span<const std::uint64_t> counts) {
  std::uint32_t k = 0;
  for (auto c : counts) k += (c != 0);
  return k;
}

inline double log2_pow3_minus2(std::uint32_t k) {
  if (k < 40) return std::log2(std::pow(3.0, static_cast<double>(k)) - 2.0);
  return static_cast<double>(k) * std::log2(3.0);
}

// A maximal run of equal values with its class distribution.
struct ValueRun {
  double value = 0.0;
  std::uint64_t total = 0;
  std::vector<std::uint64_t> counts;
};

// Exact test for equal class distributions via cross multiplication.
inline bool same_distribution(const ValueRun& a, const ValueRun& b) {
  for (std::size_t c = 0; c < a.counts.size(); ++c)
    if (a.counts[c] * b.total != b.counts[c] * a.total) return false;
  return true;
}

class MdlSplitter {
 public:
  MdlSplitter(std::vector<ValueRun> runs, std::size_t class_count)
      : runs_(std::move(runs)), class_count_(class_count) {
    boundary_.assign(runs_.size(), false);
    for (std::size_t i = 1; i < runs_.size(); ++i)
      boundary_[i] = !same_distribution(runs_[i - 1], runs_[i]);
  }

  std::vector<double> cuts() {
    std::vector<double> out;
    if (!runs_.empty()) split(0, runs_.size(), out);
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  void split(std::size_t lo, std::size_t hi, std::vector<double>& out) {
    std::vector<std::uint64_t> total_counts(class_count_, 0);
    std::uint64_t total = 0;
    for (std::size_t i = lo; i < hi; ++i) {
      total += runs_[i].total;
      for (std::size_t c = 0; c < class_count_; ++c) total_counts[c] += runs_[i].counts[c];
    }
    if (total < 2) return;

    // Scan candidate boundaries, tracking left-side counts incrementally.
    std::vector<std::uint64_t> left_counts(class_count_, 0);
    std::uint64_t left_total = 0;
    double best_weighted = 0.0;
    std::size_t best_b = 0;
    std::vector<std::uint64_t> best_left;
    std::uint64_t best_left_total = 0;
    for (std::size_t b = lo + 1; b < hi; ++b) {
      left_total += runs_[b - 1].total;
      for (std::size_t c = 0; c < class_count_; ++c) left_counts[c] += runs_[b - 1].counts[c];
      if (!boundary_[b]) continue;
      std::vector<std::uint64_t> right_counts(class_count_);
      for (std::size_t c = 0; c < class_count_; ++c)
        right_counts[c] = total_counts[c] - left_counts[c];
      const std::uint64_t right_total = total - left_total;
      const double weighted =
          static_cast<double>(left_total) * entropy_bits(left_counts, left_total) +
          static_cast<double>(right_total) * entropy_bits(right_counts, right_total);
      if (best_b == 0 || weighted < best_weighted) {  // ties keep the smaller threshold
        best_weighted = weighted;
        best_b = b;
        best_left = left_counts;
        best_left_total = left_total;
      }
    }
    if (best_b == 0) return;  // no candidate boundary in this range

    std::vector<std::uint64_t> right_counts(class_count_);
    for (std::size_t c = 0; c < class_count_; ++c)
      right_counts[c] = total_counts[c] - best_left[c];
    const std::uint64_t right_total = total - best_left_total;

    const double ent_s = entropy_bits(total_counts, total);
    const double ent1 = entropy_bits(best_left, best_left_total);
    const double ent2 = entropy_bits(right_counts, right_total);
    const double n = static_cast<double>(total);
    const double gain = ent_s - (static_cast<double>(best_left_total) / n) * ent1 -
                        (static_cast<double>(right_total) / n) * ent2;
    const double k = classes_present(total_counts);
    const double k1 = classes_present(best_left);
    const double k2 = classes_present(right_counts);
    const double delta = log2_pow3_minus2(static_cast<std::uint32_t>(k)) -
                         (k * ent_s - k1 * ent1 - k2 * ent2);
    if (gain <= (std::log2(n - 1.0) + delta) / n) return;

    out.push_back((runs_[best_b - 1].value + runs_[best_b].value) / 2.0);
    split(lo, best_b, out);
    split(best_b, hi, out);
  }

  std::vector<ValueRun> runs_;
  std::size_t class_count_;
  std::vector<bool> boundary_;
};

inline std::vector<ValueRun> collect_runs(std::vector<std::pair<double, std::uint32_t>>& pairs,
                                          std::size_t class_count) {
  std::sort(pairs.begin(), pairs.end());
  std::vector<ValueRun> runs;
  for (const auto& [value, cls] : pairs) {
    if (runs.empty() || runs.back().value != value) {
      runs.push_back({value, 0, std::vector<std::uint64_t>(class_count, 0)});
    }
    runs.back().total += 1;
    runs.back().counts[cls] += 1;
  }
  return runs;
}

}  // namespace detail

// Fit MDL cut points per numeric attribute from the given training rows.
// Missing cells are skipped; categorical attributes get empty lists.
inline CutPoints fit_mdl_cuts(const RawDataset& raw, std::span<const std::size_t> train_rows) {
  if (train_rows.empty()) throw error("fit_mdl_cuts: no training rows");
  // Local class map: only the class distribution matters here.
  std::unordered_map<std::string, std::uint32_t> class_index;
  for (auto r : train_rows) class_index.emplace(raw.row_class[r], class_index.size());
  const std::size_t class_count = class_index.size();

  CutPoints cuts;
  cuts.thresholds.resize(raw.attr_count());
  for (std::size_t a = 0; a < raw.attr_count(); ++a) {
    if (raw.meta[a].kind != AttrKind::numeric) continue;
    std::vector<std::pair<double, std::uint32_t>> pairs;
    pairs.reserve(train_rows.size());
    for (auto r : train_rows) {
      const RawCell& cell = raw.rows[r][a];
      if (cell.missing()) continue;
      pairs.emplace_back(cell.number, class_index.at(raw.row_class[r]));
    }
    auto runs = detail::collect_runs(pairs, class_count);
    cuts.thresholds[a] = detail::MdlSplitter(std::move(runs), class_count).cuts();
  }
  return cuts;
}

// Frozen per-attribute encoders plus the class label map. Numeric values bin
// by threshold count, categorical labels map to their training index, and
// the last index of every attribute is reserved for missing/unseen values.
class Discretizer {
 public:
  static Discretizer fit(const RawDataset& raw, std::span<const std::size_t> train_rows,
                         std::vector<std::string> class_labels) {
    return Discretizer(raw, fit_mdl_cuts(raw, train_rows), train_rows, std::move(class_labels));
  }

  // Build encoders from externally supplied cuts; categorical maps are taken
  // from the given rows (all of them when `rows` is empty).
  static Discretizer from_cuts(const RawDataset& raw, CutPoints cuts,
                               std::vector<std::string> class_labels,
                               std::span<const std::size_t> rows = {}) {
    std::vector<std::size_t> all;
    if (rows.empty()) {
      all.resize(raw.size());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
      rows = all;
    }
    return Discretizer(raw, std::move(cuts), rows, std::move(class_labels));
  }

  // Reconstruct from serialized pieces (model loading).
  Discretizer(std::vector<AttributeMeta> meta, CutPoints cuts,
              std::vector<std::string> class_labels)
      : meta_(std::move(meta)), cuts_(std::move(cuts)), class_labels_(std::move(class_labels)) {
    if (cuts_.thresholds.size() != meta_.size())
      throw error("discretizer: cuts do not cover every attribute");
    finish_init();
  }

  const std::vector<AttributeMeta>& meta() const { return meta_; }
  const CutPoints& cuts() const { return cuts_; }
  const std::vector<std::uint32_t>& cardinalities() const { return cardinalities_; }
  const std::vector<std::string>& class_labels() const { return class_labels_; }
  std::uint32_t class_count() const { return static_cast<std::uint32_t>(class_labels_.size()); }

  std::uint32_t reserved_index(std::size_t attr) const { return cardinalities_[attr] - 1; }

  std::uint32_t encode_cell(std::size_t attr, const RawCell& cell) const {
    if (cell.missing()) return reserved_index(attr);
    if (meta_[attr].kind == AttrKind::numeric) {
      if (cell.kind != RawCell::Kind::number)
        throw error("attribute '" + meta_[attr].name + "': expected a numeric cell");
      const auto& th = cuts_.thresholds[attr];
      // bin = number of thresholds strictly below the value
      return static_cast<std::uint32_t>(
          std::lower_bound(th.begin(), th.end(), cell.number) - th.begin());
    }
    const auto it = category_index_[attr].find(cell.label);
    return it == category_index_[attr].end() ? reserved_index(attr) : it->second;
  }

  std::vector<std::uint32_t> encode_row(std::span<const RawCell> cells) const {
    if (cells.size() != meta_.size()) throw error("encode_row: cell count mismatch");
    std::vector<std::uint32_t> out(cells.size());
    for (std::size_t a = 0; a < cells.size(); ++a) out[a] = encode_cell(a, cells[a]);
    return out;
  }

  std::uint32_t class_index(const std::string& label) const {
    const auto it = class_index_.find(label);
    if (it == class_index_.end()) throw error("class label '" + label + "' not seen in training");
    return it->second;
  }

  DiscretizedDataset encode(const RawDataset& raw, std::span<const std::size_t> rows) const {
    if (raw.attr_count() != meta_.size()) throw error("encode: attribute count mismatch");
    DiscretizedDataset out;
    out.cardinalities = cardinalities_;
    out.class_count = class_count();
    out.values.reserve(rows.size() * meta_.size());
    out.labels.reserve(rows.size());
    for (auto r : rows) {
      for (std::size_t a = 0; a < meta_.size(); ++a)
        out.values.push_back(encode_cell(a, raw.rows[r][a]));
      out.labels.push_back(class_index(raw.row_class[r]));
    }
    return out;
  }

  DiscretizedDataset encode_all(const RawDataset& raw) const {
    std::vector<std::size_t> rows(raw.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    return encode(raw, rows);
  }

 private:
  Discretizer(const RawDataset& raw, CutPoints cuts, std::span<const std::size_t> rows,
              std::vector<std::string> class_labels)
      : meta_(raw.meta), cuts_(std::move(cuts)), class_labels_(std::move(class_labels)) {
    if (cuts_.thresholds.size() != meta_.size())
      throw error("discretizer: cuts do not cover every attribute");
    // Categorical labels get indices in first-appearance order over the
    // training rows; the metas record what was seen.
    for (std::size_t a = 0; a < meta_.size(); ++a) {
      meta_[a].categories.clear();
      meta_[a].has_missing = false;
    }
    for (auto r : rows) {
      for (std::size_t a = 0; a < meta_.size(); ++a) {
        const RawCell& cell = raw.rows[r][a];
        if (cell.missing()) {
          meta_[a].has_missing = true;
        } else if (meta_[a].kind == AttrKind::categorical) {
          auto& cats = meta_[a].categories;
          if (std::find(cats.begin(), cats.end(), cell.label) == cats.end())
            cats.push_back(cell.label);
        }
      }
    }
    finish_init();
  }

  void finish_init() {
    if (class_labels_.size() < 2) throw error("need at least 2 class labels");
    for (std::size_t i = 0; i < class_labels_.size(); ++i)
      if (!class_index_.emplace(class_labels_[i], static_cast<std::uint32_t>(i)).second)
        throw error("duplicate class label '" + class_labels_[i] + "'");
    cardinalities_.resize(meta_.size());
    category_index_.resize(meta_.size());
    for (std::size_t a = 0; a < meta_.size(); ++a) {
      const auto& th = cuts_.thresholds[a];
      for (std::size_t i = 1; i < th.size(); ++i)
        if (!(th[i - 1] < th[i]))
          throw error("attribute '" + meta_[a].name + "': thresholds not strictly increasing");
      if (meta_[a].kind == AttrKind::numeric) {
        cardinalities_[a] = static_cast<std::uint32_t>(th.size() + 2);  // bins + reserved
      } else {
        for (std::size_t i = 0; i < meta_[a].categories.size(); ++i)
          if (!category_index_[a].emplace(meta_[a].categories[i], static_cast<std::uint32_t>(i))
                   .second)
            throw error("attribute '" + meta_[a].name + "': duplicate category");
        cardinalities_[a] = static_cast<std::uint32_t>(meta_[a].categories.size() + 1);
      }
    }
  }

  std::vector<AttributeMeta> meta_;
  CutPoints cuts_;
  std::vector<std::string> class_labels_;
  std::vector<std::uint32_t> cardinalities_;
  std::vector<std::unordered_map<std::string, std::uint32_t>> category_index_;
  std::unordered_map<std::string, std::uint32_t> class_index_;
};

// Convenience form: categorical maps and class labels from the whole dataset.
inline DiscretizedDataset apply_discretization(const RawDataset& raw, const CutPoints& cuts) {
  auto disc = Discretizer::from_cuts(raw, cuts, class_label_order(raw));
  return disc.encode_all(raw);
}

}  // namespace dbl
