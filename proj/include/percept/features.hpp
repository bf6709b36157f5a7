#pragma once

#include <span>
#include <vector>

#include "percept/episode.hpp"

namespace percept {

inline constexpr int kMaxPedestrians = 5;

/// Fixed-length layout shared by every baseline model:
///   goal (2) + robot track (steps x 4) + follower track (steps x 5)
///   + max_peds pedestrian tracks (steps x 5 each).
/// Tracked agents other than the robot carry a presence flag per timestep;
/// unknown points contribute flag 0 and a zeroed pose. Missing pedestrian
/// slots are zero-padded.
struct FeatureLayout {
    int steps{9};
    int max_peds{kMaxPedestrians};

    int length() const { return 2 + steps * 4 + steps * 5 * (1 + max_peds); }
    /// Width of one per-timestep slice: goal (2) + robot (4) + follower (5)
    /// + pedestrians (5 each).
    int slice_width() const { return 2 + 4 + 5 * (1 + max_peds); }
};

/// Flattens observations into the fixed layout. Pedestrians are ordered by
/// distance to the robot at their first present timestep (nearest first,
/// stable for ties) and truncated or zero-padded to max_peds.
std::vector<double> flatten_features(const ObservationSet& obs,
                                     int max_peds = kMaxPedestrians);

/// Per-timestep view of the same encoding for recurrent models: slice t is
/// [goal(2), robot_t(4), follower_t(5), ped_1..max_peds (5 each)], with the
/// identical pedestrian ordering as flatten_features.
std::vector<std::vector<double>> timestep_slices(const ObservationSet& obs,
                                                 int max_peds = kMaxPedestrians);

double euclidean_distance(std::span<const double> a, std::span<const double> b);

}  // namespace percept
