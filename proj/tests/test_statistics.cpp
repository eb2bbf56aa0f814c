#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "dbl/models.hpp"
#include "dbl/statistics.hpp"
#include "oracles.hpp"

using namespace dbl;

namespace {

DiscretizedDataset random_dataset(std::vector<std::uint32_t> cards, std::uint32_t classes,
                                  std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    DiscretizedDataset data;
    data.cardinalities = std::move(cards);
    data.class_count = classes;
    for (std::size_t i = 0; i < n; ++i) {
        for (auto c : data.cardinalities)
            data.values.push_back(static_cast<std::uint32_t>(rng() % c));
        data.labels.push_back(static_cast<std::uint32_t>(rng() % classes));
    }
    return data;
}

}  // namespace

TEST_CASE("class counts and totals") {
    DiscretizedDataset data;
    data.cardinalities = {2, 2};
    data.class_count = 2;
    data.values = {0, 0, 1, 0, 0, 1, 1, 1};
    data.labels = {0, 0, 1, 1};
    const auto counts = accumulate(data, make_feature_space(data.cardinalities, 1, 2));
    CHECK(counts.total == 4);
    CHECK(counts.class_count_of(0) == 2);
    CHECK(counts.class_count_of(1) == 2);
}

TEST_CASE("one instance touches one tuple per subset") {
    DiscretizedDataset data;
    data.cardinalities = {2, 3, 2};
    data.class_count = 2;
    data.values = {1, 2, 0};
    data.labels = {1};
    const auto space = make_feature_space(data.cardinalities, 2, 2);
    const auto counts = accumulate(data, space);
    REQUIRE(space->catalog.size() == 3);  // C(3,2)

    std::uint64_t ones = 0, nonzero = 0;
    for (std::size_t i = space->class_count; i < counts.cells.size(); ++i) {
        nonzero += counts.cells[i] != 0;
        ones += counts.cells[i] == 1;
    }
    CHECK(nonzero == 3);
    CHECK(ones == 3);
    // and they sit exactly where the instance's tuples rank
    const std::vector<std::uint32_t> x = {1, 2, 0};
    for (std::size_t r = 0; r < 3; ++r) {
        const auto t = value_tuple_index(space->catalog.subset(r), x, data.cardinalities);
        CHECK(counts.joint(1, r, t) == 1);
    }
}

TEST_CASE("counts match a brute-force recount") {
    const auto data = random_dataset({2, 3, 2, 4, 3}, 3, 50, 11);
    for (std::uint32_t n : {1u, 2u, 3u}) {
        const auto space = make_feature_space(data.cardinalities, n, 3);
        const auto counts = accumulate(data, space);
        const auto expected = oracle::brute_force_counts(data, n);

        std::uint64_t checked = 0;
        for (std::uint32_t y = 0; y < 3; ++y) {
            CHECK(counts.class_count_of(y) ==
                  static_cast<std::uint64_t>(oracle::class_total(data, y)));
            for (std::size_t r = 0; r < space->catalog.size(); ++r) {
                for (std::uint64_t t = 0; t < space->layout.subset_sizes[r]; ++t) {
                    const auto it = expected.find({r, t, y});
                    const std::uint64_t want = it == expected.end() ? 0 : it->second;
                    REQUIRE(counts.joint(y, r, t) == want);
                    ++checked;
                }
            }
        }
        CHECK(checked == (counts.cells.size() - 3));
    }
}

TEST_CASE("merge identity and commutativity") {
    const auto data = random_dataset({2, 3}, 2, 20, 3);
    const auto space = make_feature_space(data.cardinalities, 1, 2);
    const auto table = accumulate(data, space);
    const auto empty = make_count_table(space);

    const auto merged = merge(table, empty);
    CHECK(merged.cells == table.cells);
    CHECK(merged.total == table.total);

    const auto other = accumulate(random_dataset({2, 3}, 2, 15, 4), space);
    const auto ab = merge(table, other);
    const auto ba = merge(other, table);
    CHECK(ab.cells == ba.cells);
    CHECK(ab.total == ba.total);
}

TEST_CASE("sharded accumulation equals one pass") {
    const auto data = random_dataset({2, 2, 3}, 2, 33, 5);
    const auto space = make_feature_space(data.cardinalities, 2, 2);
    const auto whole = accumulate(data, space);
    const auto lo = accumulate_range(data, space, 0, 17);
    const auto hi = accumulate_range(data, space, 17, data.size());
    const auto merged = merge(lo, hi);
    CHECK(merged.cells == whole.cells);
    CHECK(merged.total == whole.total);
}

TEST_CASE("merge rejects mismatched shapes") {
    const auto a = make_count_table(make_feature_space({2, 2}, 1, 2));
    const auto b = make_count_table(make_feature_space({2, 3}, 1, 2));
    const auto c = make_count_table(make_feature_space({2, 2}, 2, 2));
    const auto d = make_count_table(make_feature_space({2, 2}, 1, 3));
    CHECK_THROWS_AS(merge(a, b), error);
    CHECK_THROWS_AS(merge(a, c), error);
    CHECK_THROWS_AS(merge(a, d), error);
}

TEST_CASE("map prior anchor: 3.5/11") {
    DiscretizedDataset data;
    data.cardinalities = {2};
    data.class_count = 2;
    for (int i = 0; i < 10; ++i) {
        data.values.push_back(0);
        data.labels.push_back(i < 3 ? 0 : 1);
    }
    const auto counts = accumulate(data, make_feature_space(data.cardinalities, 1, 2));
    const auto tables = map_estimates(counts, 1.0);
    CHECK(std::exp(tables.log_prior(0)) == Catch::Approx(3.5 / 11.0).epsilon(1e-12));
    CHECK(std::exp(tables.log_prior(1)) == Catch::Approx(7.5 / 11.0).epsilon(1e-12));
}

TEST_CASE("map theta anchor: (2 + 1/6) / 6") {
    // class 0 holds 5 instances, 2 of them with value 0, over a 6-value space
    DiscretizedDataset data;
    data.cardinalities = {6};
    data.class_count = 2;
    data.values = {0, 0, 1, 2, 3, 4};
    data.labels = {0, 0, 0, 0, 0, 1};
    const auto counts = accumulate(data, make_feature_space(data.cardinalities, 1, 2));
    REQUIRE(counts.class_count_of(0) == 5);
    const auto tables = map_estimates(counts, 1.0);
    CHECK(std::exp(tables.log_theta(0, 0, 0)) ==
          Catch::Approx((2.0 + 1.0 / 6.0) / 6.0).epsilon(1e-12));
}

TEST_CASE("map handles a class with zero instances") {
    DiscretizedDataset data;
    data.cardinalities = {3, 2};
    data.class_count = 4;  // class 3 never appears
    for (int i = 0; i < 8; ++i) {
        data.values.push_back(static_cast<std::uint32_t>(i % 3));
        data.values.push_back(static_cast<std::uint32_t>(i % 2));
        data.labels.push_back(static_cast<std::uint32_t>(i % 3));
    }
    const auto space = make_feature_space(data.cardinalities, 1, 4);
    const auto tables = map_estimates(accumulate(data, space), 1.0);
    CHECK(std::exp(tables.log_prior(3)) == Catch::Approx(0.25 / 9.0).epsilon(1e-12));
    for (std::size_t r = 0; r < space->catalog.size(); ++r) {
        const double uniform = 1.0 / static_cast<double>(space->layout.subset_sizes[r]);
        for (std::uint64_t t = 0; t < space->layout.subset_sizes[r]; ++t)
            CHECK(std::exp(tables.log_theta(3, r, t)) == Catch::Approx(uniform).epsilon(1e-12));
    }
}

TEST_CASE("map estimates normalize exactly") {
    const auto data = random_dataset({3, 2, 4}, 3, 40, 17);
    for (std::uint32_t n : {1u, 2u, 3u}) {
        const auto space = make_feature_space(data.cardinalities, n, 3);
        const auto tables = map_estimates(accumulate(data, space), 1.0);

        double prior_sum = 0.0;
        for (std::uint32_t y = 0; y < 3; ++y) prior_sum += std::exp(tables.log_prior(y));
        CHECK(prior_sum == Catch::Approx(1.0).margin(1e-12));

        for (std::uint32_t y = 0; y < 3; ++y) {
            for (std::size_t r = 0; r < space->catalog.size(); ++r) {
                double sum = 0.0;
                for (std::uint64_t t = 0; t < space->layout.subset_sizes[r]; ++t)
                    sum += std::exp(tables.log_theta(y, r, t));
                REQUIRE(sum == Catch::Approx(1.0).margin(1e-12));
            }
        }
    }
}

TEST_CASE("adding an observation moves theta monotonically") {
    DiscretizedDataset base;
    base.cardinalities = {2};
    base.class_count = 2;
    base.values = {0, 1, 1, 0};
    base.labels = {0, 0, 0, 1};
    auto grown = base;
    grown.values.push_back(0);
    grown.labels.push_back(0);

    const auto space = make_feature_space(base.cardinalities, 1, 2);
    const auto before = map_estimates(accumulate(base, space), 1.0);
    const auto after = map_estimates(accumulate(grown, space), 1.0);
    CHECK(after.log_theta(0, 0, 0) > before.log_theta(0, 0, 0));
    CHECK(after.log_theta(0, 0, 1) < before.log_theta(0, 0, 1));
}

TEST_CASE("map estimate guards") {
    const auto space = make_feature_space({2}, 1, 2);
    const auto empty = make_count_table(space);
    CHECK_THROWS_AS(map_estimates(empty, 1.0), error);

    DiscretizedDataset data;
    data.cardinalities = {2};
    data.class_count = 2;
    data.values = {0, 1};
    data.labels = {0, 1};
    const auto counts = accumulate(data, space);
    CHECK_THROWS_AS(map_estimates(counts, 0.0), error);
    CHECK_THROWS_AS(map_estimates(counts, -1.0), error);
}

TEST_CASE("anje and ande read the same statistics") {
    const auto data = random_dataset({2, 3, 2, 3}, 2, 25, 23);
    const std::vector<std::uint32_t> x = {1, 2, 0, 1};
    for (std::uint32_t n : {2u, 3u}) {
        const auto space = make_feature_space(data.cardinalities, n, 2);
        const auto ande = make_ande(data, n, 1.0);

        const auto anje_keys = anje_scoring_keys(*space, x);
        const auto ande_keys = ande_scoring_keys(ande, x);
        const std::set<ScoringKey> anje_set(anje_keys.begin(), anje_keys.end());
        const std::set<ScoringKey> ande_set(ande_keys.begin(), ande_keys.end());
        CHECK(anje_set == ande_set);
        // ande touches each n-ary key once per choice of child within it
        CHECK(ande_keys.size() == anje_keys.size() * n);
    }
}
