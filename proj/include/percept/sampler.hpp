#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "percept/episode.hpp"

namespace percept {

/// Demonstration-selection parameters. K = L + M where L counts
/// non-personalized and M personalized demonstrations.
struct SamplerSpec {
    int k_nonpersonalized{0};  // L
    int k_personalized{0};     // M
    bool balanced{true};
    std::uint64_t seed{0};

    int k() const { return k_nonpersonalized + k_personalized; }
};

/// Observation ablation. Retained sections are nested:
/// GoalRobot < GoalRobotFollower < Full. The goal is always retained.
enum class AblationLevel { GoalRobot, GoalRobotFollower, Full };

std::string to_string(AblationLevel level);
AblationLevel ablation_from_string(std::string_view name);

/// Sampled demonstration set; counts record the realized label balance (it
/// can deviate from half/half when a stratum runs short).
struct DemoSample {
    std::vector<std::size_t> examples;  // indices into the dataset
    int positive_count{0};
    int negative_count{0};
};

/// Draws L demonstrations for `eval_participant` from `pool` (indices of
/// candidate examples, typically the training split for one dimension).
/// Candidates from the evaluated participant or other dimensions are ignored.
/// When balanced, strata are sampled uniformly without replacement and a
/// short stratum is backfilled from the other; the returned order is a
/// seeded permutation. Throws InsufficientDemos when the pool is too small.
DemoSample sample_nonpersonalized(const Dataset& dataset, std::span<const std::size_t> pool,
                                  std::string_view eval_participant, const SamplerSpec& spec,
                                  PerceptionDimension dimension);

/// Draws M demonstrations from the evaluated participant's own examples
/// (same dimension, never the evaluation example itself). Balanced
/// best-effort; throws InsufficientDemos when fewer than M are available.
DemoSample sample_personalized(const Dataset& dataset, std::span<const std::size_t> pool,
                               std::string_view eval_participant,
                               std::size_t eval_example_index, int m, std::uint64_t seed);

/// Drops observation sections below the requested level: the follower track
/// becomes unknown-at-every-step and pedestrian tracks are removed. Full is
/// the identity.
ObservationSet apply_ablation(const ObservationSet& obs, AblationLevel level);

}  // namespace percept
