#include <doctest.h>

#include <cmath>

#include "percept/random_forest.hpp"
#include "percept/rng.hpp"

using namespace percept;

namespace {

/// Exhaustive best-stump oracle: evaluates every (feature, midpoint threshold)
/// by weighted Gini with the same tie rules (lower Gini, then lower feature,
/// then lower threshold) and predicts by leaf majority with ties toward 0.
int stump_oracle_predict(const std::vector<std::vector<double>>& features,
                         const std::vector<int>& labels,
                         const std::vector<double>& query) {
    const int n = static_cast<int>(features.size());
    const int d = static_cast<int>(features[0].size());
    int total_pos = 0;
    for (int y : labels) total_pos += y;

    bool found = false;
    double best_gini = 0.0;
    int best_feature = -1;
    double best_threshold = 0.0;
    for (int f = 0; f < d; ++f) {
        std::vector<std::pair<double, int>> column;
        for (int i = 0; i < n; ++i) column.push_back({features[i][f], labels[i]});
        std::sort(column.begin(), column.end());
        int left_pos = 0;
        for (int i = 0; i < n - 1; ++i) {
            left_pos += column[i].second;
            if (column[i].first == column[i + 1].first) continue;
            const double threshold =
                column[i].first + (column[i + 1].first - column[i].first) / 2.0;
            const int left_n = i + 1;
            const int right_n = n - left_n;
            const int right_pos = total_pos - left_pos;
            auto gini = [](int pos, int count) {
                if (count == 0) return 0.0;
                const double p = static_cast<double>(pos) / count;
                return count * (1.0 - p * p - (1.0 - p) * (1.0 - p));
            };
            const double g = gini(left_pos, left_n) + gini(right_pos, right_n);
            const bool better =
                !found || g < best_gini ||
                (g == best_gini &&
                 (f < best_feature || (f == best_feature && threshold < best_threshold)));
            if (better) {
                found = true;
                best_gini = g;
                best_feature = f;
                best_threshold = threshold;
            }
        }
    }
    auto majority = [&](bool left_side) {
        int pos = 0, count = 0;
        for (int i = 0; i < n; ++i) {
            const bool is_left = features[i][best_feature] < best_threshold;
            if (is_left == left_side) {
                pos += labels[i];
                ++count;
            }
        }
        return pos > count - pos ? 1 : 0;
    };
    if (!found) {
        int pos = 0;
        for (int y : labels) pos += y;
        return pos > n - pos ? 1 : 0;
    }
    return majority(query[best_feature] < best_threshold);
}

}  // namespace

TEST_CASE("random forest separates a one-feature dataset perfectly") {
    std::vector<std::vector<double>> features;
    std::vector<int> labels;
    Rng rng(50);
    for (int i = 0; i < 30; ++i) {
        const bool positive = i % 2 == 0;
        features.push_back({positive ? rng.uniform(2.0, 3.0) : rng.uniform(-3.0, -2.0)});
        labels.push_back(positive ? 1 : 0);
    }
    RfConfig config;
    config.seed = 4;
    const RandomForest forest = RandomForest::fit(features, labels, config);
    for (std::size_t i = 0; i < features.size(); ++i) {
        CHECK(forest.predict(features[i]) == labels[i]);
    }
}

TEST_CASE("identical features with mixed labels fall back to the majority, ties to 0") {
    const std::vector<std::vector<double>> features(4, std::vector<double>{1.0, 2.0});
    SUBCASE("tie") {
        const RandomForest forest =
            RandomForest::fit(features, {1, 0, 1, 0}, RfConfig{10, -1, 0, true, 1});
        CHECK(forest.predict(features[0]) == 0);
    }
    SUBCASE("majority positive") {
        const RandomForest forest =
            RandomForest::fit(features, {1, 1, 1, 0}, RfConfig{10, -1, 0, true, 1});
        CHECK(forest.predict(features[0]) == 1);
    }
}

TEST_CASE("single-label training data predicts that label constantly") {
    std::vector<std::vector<double>> features;
    std::vector<int> labels;
    Rng rng(51);
    for (int i = 0; i < 8; ++i) {
        features.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1)});
        labels.push_back(1);
    }
    const RandomForest forest = RandomForest::fit(features, labels, RfConfig{});
    CHECK(forest.predict(std::vector<double>{5.0, 5.0}) == 1);
    CHECK(forest.predict(std::vector<double>{-5.0, -5.0}) == 1);
}

TEST_CASE("forest training is deterministic per seed") {
    std::vector<std::vector<double>> features;
    std::vector<int> labels;
    Rng rng(52);
    for (int i = 0; i < 40; ++i) {
        features.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
        labels.push_back(rng.bernoulli(0.5) ? 1 : 0);
    }
    RfConfig config;
    config.seed = 9;
    const RandomForest a = RandomForest::fit(features, labels, config);
    const RandomForest b = RandomForest::fit(features, labels, config);
    CHECK(a.to_json() == b.to_json());
}

TEST_CASE("a single depth-1 tree without bootstrap equals exhaustive stump search") {
    Rng rng(53);
    int agreements = 0;
    const int trials = 100;
    for (int trial = 0; trial < trials; ++trial) {
        const int d = 6;
        std::vector<std::vector<double>> features;
        std::vector<int> labels;
        for (int i = 0; i < 4; ++i) {  // K = 4 demonstrations
            std::vector<double> row;
            for (int f = 0; f < d; ++f) row.push_back(rng.uniform(-2, 2));
            features.push_back(std::move(row));
            labels.push_back(static_cast<int>(rng.next_below(2)));
        }
        std::vector<double> query;
        for (int f = 0; f < d; ++f) query.push_back(rng.uniform(-2, 2));

        RfConfig config;
        config.tree_count = 1;
        config.max_depth = 1;
        config.bootstrap = false;
        config.features_per_split = d;
        config.seed = trial;
        const RandomForest forest = RandomForest::fit(features, labels, config);
        if (forest.predict(query) == stump_oracle_predict(features, labels, query)) {
            ++agreements;
        }
    }
    CHECK(agreements == trials);
}

TEST_CASE("fit rejects bad inputs") {
    CHECK_THROWS_AS(RandomForest::fit({}, {}, RfConfig{}), InvalidArgument);
    CHECK_THROWS_AS(RandomForest::fit({{1.0}}, {1, 0}, RfConfig{}), InvalidArgument);
    RfConfig config;
    config.tree_count = 0;
    CHECK_THROWS_AS(RandomForest::fit({{1.0}}, {1}, config), InvalidArgument);
}
