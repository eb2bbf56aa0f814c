#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <map>
#include <random>

#include "dbl/evaluation.hpp"

using namespace dbl;

namespace {

// Categorical dataset with attribute values "v0".."v{k-1}" and given labels.
RawDataset categorical_raw(const std::vector<std::vector<int>>& rows,
                           const std::vector<std::string>& classes) {
    RawDataset raw;
    for (std::size_t a = 0; a < rows[0].size(); ++a) {
        AttributeMeta meta;
        meta.name = "x" + std::to_string(a);
        meta.kind = AttrKind::categorical;
        raw.meta.push_back(meta);
    }
    raw.class_name = "class";
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::vector<RawCell> cells;
        for (int v : rows[r]) cells.push_back(RawCell::make_label("v" + std::to_string(v)));
        raw.rows.push_back(std::move(cells));
        raw.row_class.push_back(classes[r]);
    }
    return raw;
}

RawDataset random_label_raw(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::vector<int>> rows;
    std::vector<std::string> classes;
    for (std::size_t i = 0; i < n; ++i) {
        rows.push_back({static_cast<int>(i), static_cast<int>(rng() % 3)});
        classes.push_back(rng() % 2 ? "pos" : "neg");
    }
    return categorical_raw(rows, classes);
}

Posterior one_hot(std::uint32_t cls, std::uint32_t classes) {
    std::vector<double> log_prob(classes, -1e9);
    log_prob[cls] = 0.0;
    return normalize_scores(std::move(log_prob));
}

// Predicts the majority label among exact training matches, else class 0.
class MemorizingClassifier : public Classifier {
 public:
    void fit(const RawDataset& raw, std::span<const std::size_t> train,
             const std::vector<std::string>& labels) override {
        classes_ = static_cast<std::uint32_t>(labels.size());
        std::map<std::string, std::uint32_t> class_of;
        for (std::uint32_t i = 0; i < labels.size(); ++i) class_of[labels[i]] = i;
        for (auto r : train) {
            auto& counts = seen_[key(raw, r)];
            counts.resize(classes_, 0);
            ++counts[class_of.at(raw.row_class[r])];
        }
    }
    Posterior posterior(const RawDataset& raw, std::size_t row) override {
        const auto it = seen_.find(key(raw, row));
        if (it == seen_.end()) return one_hot(0, classes_);
        std::uint32_t best = 0;
        for (std::uint32_t c = 1; c < classes_; ++c)
            if (it->second[c] > it->second[best]) best = c;
        return one_hot(best, classes_);
    }

 private:
    static std::string key(const RawDataset& raw, std::size_t row) {
        std::string k;
        for (const auto& cell : raw.rows[row]) k += cell.label + "|";
        return k;
    }
    std::uint32_t classes_ = 0;
    std::map<std::string, std::vector<std::uint32_t>> seen_;
};

class ConstantClassifier : public Classifier {
 public:
    void fit(const RawDataset&, std::span<const std::size_t>,
             const std::vector<std::string>& labels) override {
        classes_ = static_cast<std::uint32_t>(labels.size());
    }
    Posterior posterior(const RawDataset&, std::size_t) override {
        return one_hot(0, classes_);
    }

 private:
    std::uint32_t classes_ = 0;
};

// Peeks at the true label; a stand-in for a perfect model.
class OracleClassifier : public Classifier {
 public:
    void fit(const RawDataset&, std::span<const std::size_t>,
             const std::vector<std::string>& labels) override {
        labels_ = labels;
    }
    Posterior posterior(const RawDataset& raw, std::size_t row) override {
        const auto it = std::find(labels_.begin(), labels_.end(), raw.row_class[row]);
        return one_hot(static_cast<std::uint32_t>(it - labels_.begin()),
                       static_cast<std::uint32_t>(labels_.size()));
    }

 private:
    std::vector<std::string> labels_;
};

class CoinFlipClassifier : public Classifier {
 public:
    CoinFlipClassifier() : rng_(next_seed()++) {}
    void fit(const RawDataset&, std::span<const std::size_t>,
             const std::vector<std::string>& labels) override {
        classes_ = static_cast<std::uint32_t>(labels.size());
    }
    Posterior posterior(const RawDataset&, std::size_t) override {
        return one_hot(static_cast<std::uint32_t>(rng_() % classes_), classes_);
    }

 private:
    static std::atomic<std::uint64_t>& next_seed() {
        static std::atomic<std::uint64_t> seed{12345};
        return seed;
    }
    std::mt19937_64 rng_;
    std::uint32_t classes_ = 0;
};

}  // namespace

TEST_CASE("cv plan arithmetic and determinism") {
    const auto plan = CvPlan::make(5, 2, 42, 100);
    REQUIRE(plan.fold_of.size() == 5);
    for (const auto& round : plan.fold_of) {
        REQUIRE(round.size() == 100);
        std::size_t in_fold_0 = 0;
        for (auto f : round) {
            REQUIRE(f <= 1);
            in_fold_0 += f == 0;
        }
        CHECK(in_fold_0 == 50);  // even split
    }
    const auto again = CvPlan::make(5, 2, 42, 100);
    CHECK(plan.fold_of == again.fold_of);
    const auto reseeded = CvPlan::make(5, 2, 43, 100);
    CHECK(plan.fold_of != reseeded.fold_of);

    CHECK_THROWS_AS(CvPlan::make(0, 2, 1, 10), config_error);
    CHECK_THROWS_AS(CvPlan::make(5, 1, 1, 10), config_error);
    CHECK_THROWS_AS(CvPlan::make(5, 256, 1, 300), config_error);
    CHECK_THROWS_AS(CvPlan::make(5, 2, 1, 1), error);
}

TEST_CASE("cross_validate runs the full protocol") {
    const auto raw = random_label_raw(100, 5);
    const auto labels = class_label_order(raw);
    const auto plan = CvPlan::make(5, 2, 7, raw.size());
    const auto result = cross_validate(
        raw, labels, [] { return std::make_unique<ConstantClassifier>(); }, plan);
    CHECK(result.rounds == 5);
    CHECK(result.predictions.size() == 500);  // each instance tested once per round
    CHECK(result.posteriors.size() == 1000);
    CHECK(result.train_seconds >= 0.0);
    CHECK(result.warnings.empty());
}

TEST_CASE("memorizer looks perfect in-sample but not under cv") {
    const auto raw = random_label_raw(60, 9);
    const auto labels = class_label_order(raw);

    // in-sample: fit on everything, score everything
    MemorizingClassifier memorizer;
    std::vector<std::size_t> all(raw.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    memorizer.fit(raw, all, labels);
    std::size_t wrong = 0;
    std::map<std::string, std::uint32_t> class_of;
    for (std::uint32_t i = 0; i < labels.size(); ++i) class_of[labels[i]] = i;
    for (std::size_t i = 0; i < raw.size(); ++i)
        wrong += predict(memorizer.posterior(raw, i)) != class_of.at(raw.row_class[i]);
    const double in_sample = static_cast<double>(wrong) / raw.size();
    CHECK(in_sample == 0.0);  // attribute x0 is a unique row id

    const auto plan = CvPlan::make(5, 2, 11, raw.size());
    const auto result = cross_validate(
        raw, labels, [] { return std::make_unique<MemorizingClassifier>(); }, plan);
    const double cv_loss = zero_one_loss(result);
    CHECK(cv_loss >= in_sample);
    CHECK(cv_loss > 0.2);  // unseen rows fall back to a blind guess
}

TEST_CASE("zero-one loss counts mistakes") {
    EvalResult r;
    r.rounds = 1;
    r.folds = 2;
    r.class_count = 2;
    r.truth = {0, 1, 0, 1};
    r.predictions = {0, 1, 0, 0};  // one mistake
    r.posteriors.assign(8, 0.5);
    CHECK(zero_one_loss(r) == 0.25);

    r.predictions = {0, 1, 0, 1};
    CHECK(zero_one_loss(r) == 0.0);
    r.predictions = {1, 0, 1, 0};
    CHECK(zero_one_loss(r) == 1.0);
}

TEST_CASE("rmse on one-hot and uniform posteriors") {
    EvalResult r;
    r.rounds = 1;
    r.folds = 2;
    r.class_count = 2;
    r.truth = {0, 1};
    r.predictions = {0, 1};
    r.posteriors = {1.0, 0.0, 0.0, 1.0};  // perfect
    CHECK(rmse(r) == 0.0);

    r.posteriors = {0.5, 0.5, 0.5, 0.5};  // uniform
    CHECK(rmse(r) == Catch::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("rmse matches scalar arithmetic on a hand case") {
    EvalResult r;
    r.rounds = 1;
    r.folds = 2;
    r.class_count = 2;
    r.truth = {0, 1};
    r.predictions = {0, 0};
    r.posteriors = {0.9, 0.1, 0.7, 0.3};
    // instance 1: ((0.9-1)^2 + 0.1^2)/2 = 0.01; instance 2: (0.49 + 0.49)/2 = 0.49
    CHECK(rmse(r) == Catch::Approx(std::sqrt((0.01 + 0.49) / 2.0)).epsilon(1e-12));
}

TEST_CASE("bias-variance of degenerate classifiers") {
    const auto raw = random_label_raw(50, 13);
    const auto labels = class_label_order(raw);
    const auto plan = CvPlan::make(10, 2, 17, raw.size());

    const auto constant = cross_validate(
        raw, labels, [] { return std::make_unique<ConstantClassifier>(); }, plan);
    const auto bv_const = bias_variance(constant);
    CHECK(bv_const.variance == 0.0);
    CHECK(bv_const.bias == Catch::Approx(zero_one_loss(constant)).margin(1e-12));

    const auto oracle = cross_validate(
        raw, labels, [] { return std::make_unique<OracleClassifier>(); }, plan);
    const auto bv_oracle = bias_variance(oracle);
    CHECK(bv_oracle.bias == 0.0);
    CHECK(bv_oracle.variance == 0.0);
}

TEST_CASE("coin flips have variance near one quarter") {
    const auto raw = random_label_raw(100, 19);
    const auto labels = class_label_order(raw);
    const auto plan = CvPlan::make(60, 2, 23, raw.size());
    const auto result = cross_validate(
        raw, labels, [] { return std::make_unique<CoinFlipClassifier>(); }, plan);
    const auto bv = bias_variance(result);
    // E[variance] = (1/4)(1 - 1/rounds) for a fair binary coin
    CHECK(bv.variance == Catch::Approx(0.25).margin(0.015));
}

TEST_CASE("bias plus variance equals the mean loss exactly") {
    const auto raw = random_label_raw(80, 29);
    const auto labels = class_label_order(raw);
    const auto plan = CvPlan::make(7, 2, 31, raw.size());
    for (const ClassifierFactory& factory :
         {ClassifierFactory([] { return std::make_unique<CoinFlipClassifier>(); }),
          ClassifierFactory([] { return std::make_unique<MemorizingClassifier>(); })}) {
        const auto result = cross_validate(raw, labels, factory, plan);
        const auto bv = bias_variance(result);
        REQUIRE(bv.bias + bv.variance == Catch::Approx(zero_one_loss(result)).margin(1e-12));
    }
}

TEST_CASE("bias_variance needs repeats") {
    EvalResult r;
    r.rounds = 1;
    CHECK_THROWS_AS(bias_variance(r), error);
}

TEST_CASE("sign test anchors") {
    CHECK(sign_test(7, 1) == Catch::Approx(0.0703125).epsilon(1e-12));
    CHECK(sign_test(7, 1) >= 0.0695);
    CHECK(sign_test(7, 1) <= 0.0705);
    CHECK(sign_test(8, 0) == Catch::Approx(0.0078125).epsilon(1e-12));
    CHECK(sign_test(4, 4) == 1.0);
    CHECK(sign_test(1, 0) == 1.0);  // 2 * 0.5 clipped
    CHECK_THROWS_AS(sign_test(0, 0), error);
}

TEST_CASE("sign test symmetry and monotonicity") {
    for (std::uint64_t w = 0; w <= 12; ++w)
        for (std::uint64_t l = 0; l <= 12; ++l) {
            if (w + l == 0) continue;
            CHECK(sign_test(w, l) == sign_test(l, w));
        }
    // at fixed w + l, a wider margin is more surprising
    for (std::uint64_t w = 6; w < 12; ++w)
        CHECK(sign_test(w + 1, 11 - w) < sign_test(w, 12 - w));
}

TEST_CASE("sign test large-sample branch agrees with exact integers") {
    // n = 63 takes the log-gamma path; recompute the tail exactly
    const std::uint64_t w = 40, l = 23;
    double tail = 0.0;
    for (std::uint64_t k = w; k <= w + l; ++k)
        tail += static_cast<double>(binomial(w + l, k));
    const double exact = 2.0 * tail * std::pow(0.5, 63.0);
    CHECK(sign_test(w, l) == Catch::Approx(exact).epsilon(1e-10));
}

TEST_CASE("win-draw-loss tallies and p-values") {
    const std::vector<double> ours = {0.10, 0.20, 0.30, 0.40};
    const std::vector<double> theirs = {0.15, 0.20 + 5e-11, 0.25, 0.50};
    const auto s = win_draw_loss(ours, theirs);
    CHECK(s.wins == 2);
    CHECK(s.draws == 1);
    CHECK(s.losses == 1);
    CHECK(s.p_defined);
    CHECK(s.p == Catch::Approx(1.0));  // 2-1 split is no evidence

    const auto all_draws = win_draw_loss(ours, ours);
    CHECK(all_draws.draws == 4);
    CHECK_FALSE(all_draws.p_defined);
    CHECK(all_draws.p == 1.0);

    const std::vector<double> shorter = {0.1};
    CHECK_THROWS_AS(win_draw_loss(ours, shorter), error);
}

TEST_CASE("normalized summary") {
    std::map<std::string, std::map<std::string, double>> table;
    table["ref"] = {{"d1", 2.0}, {"d2", 2.0}};
    table["even"] = {{"d1", 1.0}, {"d2", 4.0}};  // ratios 0.5 and 2.0
    const auto summary = normalized_summary(table, "ref");
    CHECK(summary.per_algo.at("ref") == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(summary.per_algo.at("even") == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(summary.warnings.empty());
}

TEST_CASE("normalized summary matches hand-computed geometric means") {
    std::map<std::string, std::map<std::string, double>> table;
    table["ref"] = {{"d1", 0.2}, {"d2", 0.1}, {"d3", 0.4}};
    table["a"] = {{"d1", 0.1}, {"d2", 0.2}, {"d3", 0.4}};
    table["b"] = {{"d1", 0.3}, {"d2", 0.05}, {"d3", 0.2}};
    const auto summary = normalized_summary(table, "ref");
    CHECK(summary.per_algo.at("a") ==
          Catch::Approx(std::cbrt(0.5 * 2.0 * 1.0)).epsilon(1e-12));
    CHECK(summary.per_algo.at("b") ==
          Catch::Approx(std::cbrt(1.5 * 0.5 * 0.5)).epsilon(1e-12));
}

TEST_CASE("normalized summary guards") {
    std::map<std::string, std::map<std::string, double>> table;
    table["ref"] = {{"d1", 1.0}, {"d2", 1.0}};
    table["short"] = {{"d1", 1.0}};
    CHECK_THROWS_AS(normalized_summary(table, "ref"), error);
    CHECK_THROWS_AS(normalized_summary(table, "missing"), error);

    std::map<std::string, std::map<std::string, double>> zeros;
    zeros["ref"] = {{"d1", 0.5}};
    zeros["z"] = {{"d1", 0.0}};
    const auto summary = normalized_summary(zeros, "ref");
    CHECK_FALSE(summary.warnings.empty());
    CHECK(std::isfinite(summary.per_algo.at("z")));
}
