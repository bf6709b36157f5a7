#include "percept/sampler.hpp"

#include <algorithm>

#include "percept/rng.hpp"

namespace percept {

std::string to_string(AblationLevel level) {
    switch (level) {
        case AblationLevel::GoalRobot: return "goal_robot";
        case AblationLevel::GoalRobotFollower: return "goal_robot_follower";
        case AblationLevel::Full: return "full";
    }
    throw InvalidArgument("unknown ablation level");
}

AblationLevel ablation_from_string(std::string_view name) {
    if (name == "goal_robot") return AblationLevel::GoalRobot;
    if (name == "goal_robot_follower") return AblationLevel::GoalRobotFollower;
    if (name == "full") return AblationLevel::Full;
    throw InvalidArgument("unknown ablation level: " + std::string(name));
}

namespace {

/// Draws `want_pos` positives and `want_neg` negatives, backfilling from the
/// other stratum when one runs short, then shuffles the union.
DemoSample draw_strata(const Dataset& dataset, std::vector<std::size_t> positives,
                       std::vector<std::size_t> negatives, int want_pos, int want_neg,
                       Rng& rng) {
    const int total = want_pos + want_neg;
    // Backfill: a short stratum borrows from the other.
    int take_pos = std::min<int>(want_pos, static_cast<int>(positives.size()));
    int take_neg = std::min<int>(want_neg, static_cast<int>(negatives.size()));
    int shortfall = total - take_pos - take_neg;
    if (shortfall > 0) {
        const int spare_pos = static_cast<int>(positives.size()) - take_pos;
        const int from_pos = std::min(shortfall, spare_pos);
        take_pos += from_pos;
        shortfall -= from_pos;
        take_neg += std::min(shortfall, static_cast<int>(negatives.size()) - take_neg);
    }

    DemoSample out;
    for (std::size_t i : rng.sample_without_replacement(positives.size(), take_pos)) {
        out.examples.push_back(positives[i]);
    }
    for (std::size_t i : rng.sample_without_replacement(negatives.size(), take_neg)) {
        out.examples.push_back(negatives[i]);
    }
    rng.shuffle(out.examples);
    for (std::size_t idx : out.examples) {
        if (dataset.at(idx).label == BinaryLabel::Positive) {
            ++out.positive_count;
        } else {
            ++out.negative_count;
        }
    }
    return out;
}

}  // namespace

DemoSample sample_nonpersonalized(const Dataset& dataset, std::span<const std::size_t> pool,
                                  std::string_view eval_participant, const SamplerSpec& spec,
                                  PerceptionDimension dimension) {
    const int l = spec.k_nonpersonalized;
    if (l < 0) throw InvalidArgument("sample_nonpersonalized: L must be nonnegative");
    if (l == 0) return {};

    std::vector<std::size_t> positives, negatives;
    for (std::size_t idx : pool) {
        const LabeledExample& ex = dataset.at(idx);
        if (ex.dimension != dimension) continue;
        if (ex.participant_id == eval_participant) continue;  // no leakage
        (ex.label == BinaryLabel::Positive ? positives : negatives).push_back(idx);
    }
    const int available = static_cast<int>(positives.size() + negatives.size());
    if (available < l) {
        throw InsufficientDemos("non-personalized pool has " + std::to_string(available) +
                                    " examples, need " + std::to_string(l),
                                l, available);
    }

    Rng rng(spec.seed);
    int want_pos = l / 2;
    int want_neg = l - want_pos;
    if (!spec.balanced) {
        // Unstratified: draw uniformly from the merged pool.
        std::vector<std::size_t> merged = positives;
        merged.insert(merged.end(), negatives.begin(), negatives.end());
        std::sort(merged.begin(), merged.end());
        DemoSample out;
        for (std::size_t i : rng.sample_without_replacement(merged.size(), l)) {
            out.examples.push_back(merged[i]);
        }
        rng.shuffle(out.examples);
        for (std::size_t idx : out.examples) {
            if (dataset.at(idx).label == BinaryLabel::Positive) {
                ++out.positive_count;
            } else {
                ++out.negative_count;
            }
        }
        return out;
    }
    return draw_strata(dataset, std::move(positives), std::move(negatives), want_pos,
                       want_neg, rng);
}

DemoSample sample_personalized(const Dataset& dataset, std::span<const std::size_t> pool,
                               std::string_view eval_participant,
                               std::size_t eval_example_index, int m, std::uint64_t seed) {
    if (m < 0) throw InvalidArgument("sample_personalized: M must be nonnegative");
    if (m == 0) return {};

    const PerceptionDimension dimension = dataset.at(eval_example_index).dimension;
    std::vector<std::size_t> positives, negatives;
    for (std::size_t idx : pool) {
        if (idx == eval_example_index) continue;
        const LabeledExample& ex = dataset.at(idx);
        if (ex.dimension != dimension) continue;
        if (ex.participant_id != eval_participant) continue;
        (ex.label == BinaryLabel::Positive ? positives : negatives).push_back(idx);
    }
    const int available = static_cast<int>(positives.size() + negatives.size());
    if (available < m) {
        throw InsufficientDemos("participant " + std::string(eval_participant) + " has " +
                                    std::to_string(available) +
                                    " personalized examples, need " + std::to_string(m),
                                m, available);
    }
    Rng rng(seed);
    return draw_strata(dataset, std::move(positives), std::move(negatives), m / 2,
                       m - m / 2, rng);
}

ObservationSet apply_ablation(const ObservationSet& obs, AblationLevel level) {
    ObservationSet out = obs;
    if (level == AblationLevel::Full) return out;
    out.pedestrian_tracks.clear();
    if (level == AblationLevel::GoalRobot) {
        out.follower_track.assign(obs.robot_track.size(), std::nullopt);
    }
    return out;
}

}  // namespace percept
