#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "percept/errors.hpp"

namespace percept {

inline constexpr double kPedestrianRadiusMeters = 7.2;

struct Vec2 {
    double x{0.0};
    double y{0.0};
};

/// 2D pose with the heading stored as its (cos, sin) encoding.
struct OrientedPose {
    double x{0.0};
    double y{0.0};
    double cos_h{1.0};
    double sin_h{0.0};
};

inline bool has_unit_heading(const OrientedPose& p, double tol = 1e-9) {
    const double norm2 = p.cos_h * p.cos_h + p.sin_h * p.sin_h;
    return norm2 > 1.0 - tol && norm2 < 1.0 + tol;
}

/// One 1 Hz sample of an agent track; empty means the agent was not detected
/// at that timestep ("unknown"). Absence is always explicit, never a sentinel
/// coordinate.
using TrackPoint = std::optional<OrientedPose>;

/// Agent track sampled at 1 Hz over the observation horizon.
using TimedTrack = std::vector<TrackPoint>;

enum class PerceptionDimension { Competence, Surprise, Intention };

inline constexpr std::array<PerceptionDimension, 3> kAllDimensions = {
    PerceptionDimension::Competence,
    PerceptionDimension::Surprise,
    PerceptionDimension::Intention,
};

std::string to_string(PerceptionDimension dim);
PerceptionDimension dimension_from_string(std::string_view name);
inline int dimension_index(PerceptionDimension dim) { return static_cast<int>(dim); }

enum class BinaryLabel : int { Negative = 0, Positive = 1 };

inline int label_value(BinaryLabel label) { return static_cast<int>(label); }
BinaryLabel label_from_int(int value);

/// Spatial observations for one rated window, in the robot-centric frame
/// anchored at the window's first timestep.
struct ObservationSet {
    Vec2 goal;                                  // robot frame at t=0, meters
    TimedTrack robot_track;                     // every point present
    TimedTrack follower_track;                  // points may be unknown
    std::vector<TimedTrack> pedestrian_tracks;  // already radius-filtered

    int steps() const { return static_cast<int>(robot_track.size()); }
};

/// One (participant, observations, dimension, label) sample.
struct LabeledExample {
    std::string participant_id;
    std::string episode_id;
    ObservationSet observations;
    PerceptionDimension dimension{PerceptionDimension::Competence};
    BinaryLabel label{BinaryLabel::Negative};
    std::optional<int> rating;  // raw 1-5 Likert response, when known
};

/// Immutable collection of labeled examples with a participant index.
class Dataset {
public:
    Dataset() = default;

    /// Validates (participant, episode, dimension) uniqueness and builds the
    /// participant index.
    static Dataset build(std::vector<LabeledExample> examples);

    const std::vector<LabeledExample>& examples() const { return examples_; }
    const LabeledExample& at(std::size_t i) const { return examples_.at(i); }
    std::size_t size() const { return examples_.size(); }

    /// Distinct participant ids, sorted.
    std::vector<std::string> participants() const;
    std::size_t participant_count() const { return by_participant_.size(); }

    /// Indices of all examples contributed by a participant (empty if none).
    std::span<const std::size_t> indices_for(std::string_view participant_id) const;

private:
    std::vector<LabeledExample> examples_;
    std::map<std::string, std::vector<std::size_t>, std::less<>> by_participant_;
};

// ---- Operations -----------------------------------------------------------

/// (cos theta, sin theta) for a finite angle in radians.
std::pair<double, double> encode_heading(double theta_radians);

/// Rigid transform of a single pose into the frame anchored at `origin`
/// (origin maps to (0, 0) with heading encoding (1, 0)).
OrientedPose pose_to_frame(const OrientedPose& world, const OrientedPose& origin);
Vec2 point_to_frame(const Vec2& world, const OrientedPose& origin);

/// Transforms a world-frame track into the robot frame anchored at
/// robot_pose_t0; absent entries stay absent.
TimedTrack to_robot_frame(std::span<const TrackPoint> world_poses,
                          const OrientedPose& robot_pose_t0);

/// Per-timestep observability filter: a pedestrian point survives only if it
/// is within `radius` (inclusive) of the robot at the same timestep. Tracks
/// left with no present point are dropped; relative order is preserved.
std::vector<TimedTrack> filter_pedestrians(const std::vector<TimedTrack>& tracks,
                                           const TimedTrack& robot_track,
                                           double radius = kPedestrianRadiusMeters);

/// Likert binarization: 4/5 -> positive, 1/2 -> negative, 3 -> no label.
std::optional<BinaryLabel> binarize_rating(int rating);

// ---- Window extraction ------------------------------------------------------

struct TimedPose {
    double t{0.0};
    TrackPoint pose;
};

/// Raw world-frame samples for one agent, sorted by timestamp.
struct AgentTimeline {
    std::vector<TimedPose> samples;
};

/// World-frame log of one navigation episode.
struct EpisodeTimeline {
    Vec2 goal_world;
    AgentTimeline robot;  // pose known (present) at every sample
    AgentTimeline follower;
    std::vector<AgentTimeline> pedestrians;
};

/// Observation-window parameters. The default is a 9-sample window: both
/// endpoints of the 8 s horizon are included at 1 Hz.
struct WindowConfig {
    double horizon_seconds{8.0};
    double sample_hz{1.0};
    double pedestrian_radius{kPedestrianRadiusMeters};
    double resample_tolerance{0.5};  // nearest sample must be this close, seconds

    int steps() const {
        return static_cast<int>(std::llround(horizon_seconds * sample_hz)) + 1;
    }
};

/// Resamples all agents at the window grid (nearest timestamp, no
/// interpolation), transforms everything into the robot frame at the window
/// start, and applies the pedestrian radius filter.
///
/// The window is [response_time - horizon, response_time], endpoints included.
/// Throws InsufficientData when the robot pose is not available throughout.
ObservationSet extract_window(const EpisodeTimeline& timeline, double response_time,
                              const WindowConfig& config = {});

}  // namespace percept
