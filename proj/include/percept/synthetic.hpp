#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "percept/episode.hpp"

namespace percept {

/// Scripted robot behavior executed during an episode.
enum class BehaviorKind { NavStack, Spinning, WrongWay };

std::string to_string(BehaviorKind kind);
BehaviorKind behavior_from_string(std::string_view name);

/// Corridor scene: the robot starts at the origin and guides the follower
/// toward `goal`; pedestrians walk the corridor independently.
struct SceneConfig {
    Vec2 goal{10.0, 0.0};
    double corridor_half_width{2.0};
    int pedestrian_count{3};
    double pedestrian_speed_min{0.6};  // m/s
    double pedestrian_speed_max{1.4};  // m/s

    void validate() const;
};

/// Synthetic rater. Leniency shifts the latent score per dimension before it
/// is mapped onto the 5-point scale; noise_sd perturbs each rating event.
struct ParticipantProfile {
    std::string participant_id;
    std::array<double, 3> leniency{0.0, 0.0, 0.0};  // indexed by PerceptionDimension
    double noise_sd{0.3};
    std::uint64_t seed{0};
};

/// Latent behavior-quality table in [-1, 1], indexed by (behavior, dimension).
/// Positive Surprise values mean surprising behavior (matching the survey
/// polarity), so NavStack carries a negative Surprise entry.
struct LatentTable {
    std::array<std::array<double, 3>, 3> values{{
        {{0.8, -0.8, 0.8}},   // NavStack: competent, unsurprising, clear intent
        {{-0.8, 0.8, -0.8}},  // Spinning
        {{-0.8, 0.8, -0.8}},  // WrongWay
    }};

    double at(BehaviorKind kind, PerceptionDimension dim) const {
        return values[static_cast<int>(kind)][dimension_index(dim)];
    }
};

/// What drives the synthetic labels.
///   Behavior:    labels follow the scripted behavior kind (default).
///   FollowerLag: all episodes run the Nav-Stack script; labels follow whether
///                the follower trails closely or far behind. Fixture for
///                follower-observation ablation studies.
enum class LabelModel { Behavior, FollowerLag };

/// Follower dynamics: the follower shadows the robot's pose lag seconds ago,
/// offset sideways from the corridor axis, with positional jitter and an
/// independent per-sample detection dropout.
struct FollowerParams {
    double lag_seconds{1.5};
    double lateral_offset{0.0};  // meters, perpendicular to the corridor axis
    double jitter_sd{0.15};
    double dropout_rate{0.05};
};

struct GenConfig {
    int participant_count{10};
    int episodes_per_participant{6};
    std::array<double, 3> behavior_mix{1.0 / 3, 1.0 / 3, 1.0 / 3};  // NavStack, Spinning, WrongWay
    SceneConfig scene;
    double min_duration{20.0};  // seconds
    double max_duration{40.0};
    std::uint64_t master_seed{0};

    // Rater population.
    double leniency_sd{0.5};
    double noise_sd{0.3};

    FollowerParams follower;
    // Each participant follows with a personal style: their lag is drawn
    // from this range and their lateral offset from
    // [-personal_lateral, personal_lateral], fixed across their episodes.
    double personal_lag_min{1.0};
    double personal_lag_max{2.5};
    double personal_lateral{0.4};

    LabelModel label_model{LabelModel::Behavior};
    double follower_lag_short{0.5};  // FollowerLag mode: positive-label lag
    double follower_lag_long{3.5};   //                   negative-label lag

    WindowConfig window;
    LatentTable latents;

    void validate() const;
};

GenConfig gen_config_from_json(const nlohmann::json& doc);
nlohmann::json gen_config_to_json(const GenConfig& config);
GenConfig load_gen_config(const std::string& path);

/// World-frame episode log at 10 Hz. Deterministic given all arguments.
EpisodeTimeline generate_behavior_trajectory(BehaviorKind kind, const SceneConfig& scene,
                                             double duration_seconds, std::uint64_t seed,
                                             const FollowerParams& follower = {});

double latent_score(BehaviorKind kind, PerceptionDimension dim,
                    const LatentTable& table = {});

/// rating = clamp(round(3 + 2 * (score + leniency[dim]) + gaussian(0, noise_sd)), 1, 5)
int simulate_rating(double score, const ParticipantProfile& profile,
                    PerceptionDimension dim, std::uint64_t seed);

/// Seeded rater population for a generator config.
std::vector<ParticipantProfile> make_profiles(const GenConfig& config);

/// Full pipeline: trajectories -> windows -> simulated ratings -> binarized
/// labels (neutral ratings excluded). Deterministic given config.master_seed.
Dataset generate_dataset(const GenConfig& config);

}  // namespace percept
