#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "percept/errors.hpp"

namespace percept {

struct RfConfig {
    int tree_count{100};
    int max_depth{-1};          // -1 = unlimited
    int features_per_split{0};  // 0 = ceil(sqrt(feature count))
    bool bootstrap{true};
    std::uint64_t seed{0};
};

/// Random forest of CART trees for binary labels, trained from scratch:
/// bootstrap resamples, Gini impurity splits over midpoint thresholds,
/// majority vote with ties broken toward label 0. Deterministic given the
/// config seed. Split ties resolve to the lowest feature index, then the
/// lowest threshold, so the search order never affects the tree.
class RandomForest {
public:
    static RandomForest fit(const std::vector<std::vector<double>>& features,
                            const std::vector<int>& labels, const RfConfig& config);

    int predict(std::span<const double> features) const;

    nlohmann::json to_json() const;  // debugging aid

    struct Node {
        bool leaf{true};
        int feature{-1};
        double threshold{0.0};
        int label{0};    // leaves only
        int left{-1};    // feature < threshold
        int right{-1};   // feature >= threshold
    };

private:
    std::vector<std::vector<Node>> trees_;
};

}  // namespace percept
