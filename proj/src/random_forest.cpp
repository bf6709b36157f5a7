#include "percept/random_forest.hpp"

#include <algorithm>
#include <cmath>

#include "percept/rng.hpp"

namespace percept {

namespace {

struct SplitCandidate {
    bool found{false};
    double gini{0.0};
    int feature{-1};
    double threshold{0.0};
};

/// Weighted Gini impurity of a binary split: sum over both sides of
/// n_side * (1 - p0^2 - p1^2).
double weighted_gini(int left_pos, int left_n, int pos, int n) {
    const int right_n = n - left_n;
    const int right_pos = pos - left_pos;
    double g = 0.0;
    if (left_n > 0) {
        const double p = static_cast<double>(left_pos) / left_n;
        g += left_n * (1.0 - p * p - (1.0 - p) * (1.0 - p));
    }
    if (right_n > 0) {
        const double p = static_cast<double>(right_pos) / right_n;
        g += right_n * (1.0 - p * p - (1.0 - p) * (1.0 - p));
    }
    return g;
}

bool better_than(const SplitCandidate& a, const SplitCandidate& b) {
    if (!b.found) return true;
    if (a.gini != b.gini) return a.gini < b.gini;
    if (a.feature != b.feature) return a.feature < b.feature;
    return a.threshold < b.threshold;
}

struct TreeBuilder {
    const std::vector<std::vector<double>>& features;
    const std::vector<int>& labels;
    int max_depth;
    int mtry;
    Rng& rng;
    std::vector<RandomForest::Node> nodes;

    int majority(const std::vector<std::size_t>& rows) const {
        int pos = 0;
        for (std::size_t r : rows) pos += labels[r];
        const int neg = static_cast<int>(rows.size()) - pos;
        return pos > neg ? 1 : 0;  // tie -> 0
    }

    SplitCandidate best_split(const std::vector<std::size_t>& rows) {
        const int n = static_cast<int>(rows.size());
        int pos = 0;
        for (std::size_t r : rows) pos += labels[r];

        const int d = static_cast<int>(features[rows[0]].size());
        std::vector<std::size_t> feature_ids =
            rng.sample_without_replacement(static_cast<std::size_t>(d),
                                           static_cast<std::size_t>(std::min(mtry, d)));

        SplitCandidate best;
        std::vector<std::pair<double, int>> column(n);  // (value, label)
        for (std::size_t f : feature_ids) {
            for (int i = 0; i < n; ++i) {
                column[i] = {features[rows[i]][f], labels[rows[i]]};
            }
            std::sort(column.begin(), column.end());
            int left_pos = 0;
            for (int i = 0; i < n - 1; ++i) {
                left_pos += column[i].second;
                if (column[i].first == column[i + 1].first) continue;
                const double threshold =
                    column[i].first + (column[i + 1].first - column[i].first) / 2.0;
                SplitCandidate cand{true, weighted_gini(left_pos, i + 1, pos, n),
                                    static_cast<int>(f), threshold};
                if (better_than(cand, best)) best = cand;
            }
        }
        return best;
    }

    int build(const std::vector<std::size_t>& rows, int depth) {
        const int id = static_cast<int>(nodes.size());
        nodes.push_back({});

        int pos = 0;
        for (std::size_t r : rows) pos += labels[r];
        const bool pure = pos == 0 || pos == static_cast<int>(rows.size());
        const bool depth_capped = max_depth >= 0 && depth >= max_depth;
        if (pure || depth_capped || rows.size() < 2) {
            nodes[id].label = majority(rows);
            return id;
        }
        const SplitCandidate split = best_split(rows);
        if (!split.found) {  // all candidate features constant
            nodes[id].label = majority(rows);
            return id;
        }
        std::vector<std::size_t> left_rows, right_rows;
        for (std::size_t r : rows) {
            if (features[r][split.feature] < split.threshold) {
                left_rows.push_back(r);
            } else {
                right_rows.push_back(r);
            }
        }
        nodes[id].leaf = false;
        nodes[id].feature = split.feature;
        nodes[id].threshold = split.threshold;
        const int left = build(left_rows, depth + 1);
        const int right = build(right_rows, depth + 1);
        nodes[id].left = left;
        nodes[id].right = right;
        return id;
    }
};

}  // namespace

RandomForest RandomForest::fit(const std::vector<std::vector<double>>& features,
                               const std::vector<int>& labels, const RfConfig& config) {
    if (features.empty() || features.size() != labels.size()) {
        throw InvalidArgument("RandomForest::fit: empty or mismatched training data");
    }
    if (config.tree_count < 1) {
        throw InvalidArgument("RandomForest::fit: tree_count must be >= 1");
    }
    const int n = static_cast<int>(features.size());
    const int d = static_cast<int>(features[0].size());
    const int mtry = config.features_per_split > 0
                         ? config.features_per_split
                         : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d))));

    RandomForest forest;
    forest.trees_.reserve(config.tree_count);
    for (int t = 0; t < config.tree_count; ++t) {
        Rng rng(derive_seed(config.seed, "tree", static_cast<std::uint64_t>(t)));
        std::vector<std::size_t> rows;
        rows.reserve(n);
        if (config.bootstrap) {
            for (int i = 0; i < n; ++i) {
                rows.push_back(rng.next_below(static_cast<std::uint64_t>(n)));
            }
        } else {
            for (int i = 0; i < n; ++i) rows.push_back(i);
        }
        TreeBuilder builder{features, labels, config.max_depth, mtry, rng, {}};
        builder.build(rows, 0);
        forest.trees_.push_back(std::move(builder.nodes));
    }
    return forest;
}

int RandomForest::predict(std::span<const double> features) const {
    int votes = 0;
    for (const std::vector<Node>& tree : trees_) {
        int id = 0;
        while (!tree[id].leaf) {
            id = features[tree[id].feature] < tree[id].threshold ? tree[id].left
                                                                 : tree[id].right;
        }
        votes += tree[id].label;
    }
    const int against = static_cast<int>(trees_.size()) - votes;
    return votes > against ? 1 : 0;  // tie -> 0
}

nlohmann::json RandomForest::to_json() const {
    nlohmann::json trees = nlohmann::json::array();
    for (const std::vector<Node>& tree : trees_) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const Node& n : tree) {
            nodes.push_back({{"leaf", n.leaf},
                             {"feature", n.feature},
                             {"threshold", n.threshold},
                             {"label", n.label},
                             {"left", n.left},
                             {"right", n.right}});
        }
        trees.push_back(std::move(nodes));
    }
    return {{"trees", std::move(trees)}};
}

}  // namespace percept
