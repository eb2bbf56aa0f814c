#pragma once

// Independent re-implementations used to cross-check the library. Everything
// here is written the slow, obvious way on purpose: plain loops, no shared
// code with the headers under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <tuple>
#include <vector>

#include "dbl/dataset.hpp"
#include "dbl/statistics.hpp"

namespace oracle {

// --- gradients -------------------------------------------------------------

// Central finite differences of f at x. f takes (x, grad_out) and returns the
// value; the gradient output is ignored here.
template <typename Fn>
std::vector<double> finite_difference_gradient(Fn&& f, std::vector<double> x,
                                               double h = 1e-5) {
    std::vector<double> g(x.size()), scratch(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + h;
        const double fp = f(std::span<const double>(x), std::span<double>(scratch));
        x[i] = saved - h;
        const double fm = f(std::span<const double>(x), std::span<double>(scratch));
        x[i] = saved;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

inline double max_relative_gap(const std::vector<double>& a,
                               const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double scale = std::max({1.0, std::fabs(a[i]), std::fabs(b[i])});
        worst = std::max(worst, std::fabs(a[i] - b[i]) / scale);
    }
    return worst;
}

// --- counting --------------------------------------------------------------

// key: (subset rank in lexicographic order, value tuple index, class)
using CountKey = std::tuple<std::size_t, std::size_t, std::size_t>;

// Recounts subset-value statistics with nested loops and a map, no layout
// arithmetic shared with the library.
inline std::map<CountKey, long> brute_force_counts(
    const dbl::DiscretizedDataset& data, std::size_t subset_size) {
    const std::size_t a = data.cardinalities.size();
    // enumerate subsets lexicographically
    std::vector<std::vector<std::size_t>> subsets;
    std::vector<std::size_t> pick(subset_size);
    for (std::size_t i = 0; i < subset_size; ++i) pick[i] = i;
    while (true) {
        subsets.push_back(pick);
        std::size_t i = subset_size;
        while (i > 0 && pick[i - 1] == a - subset_size + (i - 1)) --i;
        if (i == 0) break;
        ++pick[i - 1];
        for (std::size_t j = i; j < subset_size; ++j) pick[j] = pick[j - 1] + 1;
    }
    std::map<CountKey, long> counts;
    for (std::size_t row = 0; row < data.labels.size(); ++row) {
        const auto x = data.instance(row);
        for (std::size_t r = 0; r < subsets.size(); ++r) {
            std::size_t tuple = 0;
            for (std::size_t attr : subsets[r])
                tuple = tuple * data.cardinalities[attr] + x[attr];
            ++counts[{r, tuple, data.labels[row]}];
        }
    }
    return counts;
}

inline long class_total(const dbl::DiscretizedDataset& data, std::size_t cls) {
    long t = 0;
    for (std::size_t label : data.labels)
        if (label == cls) ++t;
    return t;
}

// --- discretization --------------------------------------------------------

// A from-scratch Fayyad-Irani pass: sort, scan every midpoint between
// adjacent distinct values with different class mixes, recurse on acceptance.
namespace mdl {

inline double entropy(const std::map<int, long>& counts, long total) {
    if (total == 0) return 0.0;
    double h = 0.0;
    for (const auto& [cls, k] : counts) {
        (void)cls;
        if (k == 0) continue;
        const double p = static_cast<double>(k) / static_cast<double>(total);
        h -= p * std::log2(p);
    }
    return h;
}

inline std::size_t distinct_classes(const std::map<int, long>& counts) {
    std::size_t k = 0;
    for (const auto& [cls, n] : counts) {
        (void)cls;
        if (n > 0) ++k;
    }
    return k;
}

inline void split(const std::vector<std::pair<double, int>>& sorted,
                  std::size_t lo, std::size_t hi,  // [lo, hi)
                  std::vector<double>& out) {
    const long total = static_cast<long>(hi - lo);
    if (total < 2) return;
    std::map<int, long> all;
    for (std::size_t i = lo; i < hi; ++i) ++all[sorted[i].second];
    const double ent = entropy(all, total);
    const std::size_t k = distinct_classes(all);
    if (k < 2) return;

    double best_gain = -1.0, best_threshold = 0.0;
    std::size_t best_cut = 0;
    std::map<int, long> best_left;
    // candidate boundaries: between adjacent distinct values whose class
    // distributions differ
    for (std::size_t cut = lo + 1; cut < hi; ++cut) {
        if (sorted[cut].first == sorted[cut - 1].first) continue;
        // class distribution of the left run vs the right run of the boundary
        std::map<int, long> lrun, rrun;
        for (std::size_t i = cut; i-- > lo;) {
            if (sorted[i].first != sorted[cut - 1].first) break;
            ++lrun[sorted[i].second];
        }
        for (std::size_t i = cut; i < hi; ++i) {
            if (sorted[i].first != sorted[cut].first) break;
            ++rrun[sorted[i].second];
        }
        long lt = 0, rt = 0;
        for (auto& [c, n] : lrun) {
            (void)c;
            lt += n;
        }
        for (auto& [c, n] : rrun) {
            (void)c;
            rt += n;
        }
        bool same = true;
        std::map<int, long> merged = lrun;
        for (auto& [c, n] : rrun) merged[c] += n;
        for (auto& [c, n] : merged) {
            (void)n;
            const long ln = lrun.count(c) ? lrun.at(c) : 0;
            const long rn = rrun.count(c) ? rrun.at(c) : 0;
            if (ln * rt != rn * lt) same = false;
        }
        if (same) continue;

        std::map<int, long> left;
        for (std::size_t i = lo; i < cut; ++i) ++left[sorted[i].second];
        std::map<int, long> right = all;
        for (auto& [cls, n] : left) right[cls] -= n;
        const long ln = static_cast<long>(cut - lo), rn = total - ln;
        const double gain = ent -
                            (static_cast<double>(ln) / total) * entropy(left, ln) -
                            (static_cast<double>(rn) / total) * entropy(right, rn);
        if (gain > best_gain + 1e-15) {
            best_gain = gain;
            best_cut = cut;
            best_threshold =
                (sorted[cut - 1].first + sorted[cut].first) / 2.0;
            best_left = left;
        }
    }
    if (best_gain <= 0.0) return;

    std::map<int, long> best_right = all;
    for (auto& [cls, n] : best_left) best_right[cls] -= n;
    const long ln = static_cast<long>(best_cut - lo), rn = total - ln;
    const double k1 = static_cast<double>(distinct_classes(best_left));
    const double k2 = static_cast<double>(distinct_classes(best_right));
    const double delta = std::log2(std::pow(3.0, static_cast<double>(k)) - 2.0) -
                         (static_cast<double>(k) * ent -
                          k1 * entropy(best_left, ln) -
                          k2 * entropy(best_right, rn));
    const double bar =
        (std::log2(static_cast<double>(total - 1)) + delta) / total;
    if (best_gain <= bar) return;

    split(sorted, lo, best_cut, out);
    out.push_back(best_threshold);
    split(sorted, best_cut, hi, out);
}

inline std::vector<double> cuts(std::vector<std::pair<double, int>> values) {
    std::sort(values.begin(), values.end());
    std::vector<double> out;
    split(values, 0, values.size(), out);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace mdl

}  // namespace oracle
