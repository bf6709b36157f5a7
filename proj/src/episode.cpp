#include "percept/episode.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace percept {

std::string to_string(PerceptionDimension dim) {
    switch (dim) {
        case PerceptionDimension::Competence: return "competence";
        case PerceptionDimension::Surprise: return "surprise";
        case PerceptionDimension::Intention: return "intention";
    }
    throw InvalidArgument("unknown perception dimension");
}

PerceptionDimension dimension_from_string(std::string_view name) {
    if (name == "competence") return PerceptionDimension::Competence;
    if (name == "surprise") return PerceptionDimension::Surprise;
    if (name == "intention") return PerceptionDimension::Intention;
    throw InvalidArgument("unknown perception dimension: " + std::string(name));
}

BinaryLabel label_from_int(int value) {
    if (value == 0) return BinaryLabel::Negative;
    if (value == 1) return BinaryLabel::Positive;
    throw InvalidArgument("binary label must be 0 or 1, got " + std::to_string(value));
}

Dataset Dataset::build(std::vector<LabeledExample> examples) {
    Dataset data;
    data.examples_ = std::move(examples);
    std::set<std::string> keys;
    for (std::size_t i = 0; i < data.examples_.size(); ++i) {
        const LabeledExample& ex = data.examples_[i];
        std::string key = ex.participant_id + "\x1f" + ex.episode_id + "\x1f" +
                          to_string(ex.dimension);
        if (!keys.insert(std::move(key)).second) {
            throw InvalidArgument("duplicate (participant, episode, dimension): " +
                                  ex.participant_id + "/" + ex.episode_id + "/" +
                                  to_string(ex.dimension));
        }
        data.by_participant_[ex.participant_id].push_back(i);
    }
    return data;
}

std::vector<std::string> Dataset::participants() const {
    std::vector<std::string> ids;
    ids.reserve(by_participant_.size());
    for (const auto& [id, _] : by_participant_) ids.push_back(id);
    return ids;
}

std::span<const std::size_t> Dataset::indices_for(std::string_view participant_id) const {
    auto it = by_participant_.find(participant_id);
    if (it == by_participant_.end()) return {};
    return it->second;
}

std::pair<double, double> encode_heading(double theta_radians) {
    if (!std::isfinite(theta_radians)) {
        throw InvalidArgument("encode_heading: angle must be finite");
    }
    return {std::cos(theta_radians), std::sin(theta_radians)};
}

namespace {

void require_valid_origin(const OrientedPose& origin) {
    // Tolerates accumulated floating-point drift but rejects degenerate
    // (zero-norm or wildly scaled) heading encodings.
    if (!has_unit_heading(origin, 1e-6)) {
        throw InvalidArgument("to_robot_frame: origin heading is not unit-norm");
    }
}

}  // namespace

OrientedPose pose_to_frame(const OrientedPose& world, const OrientedPose& origin) {
    const double dx = world.x - origin.x;
    const double dy = world.y - origin.y;
    return OrientedPose{
        origin.cos_h * dx + origin.sin_h * dy,
        -origin.sin_h * dx + origin.cos_h * dy,
        world.cos_h * origin.cos_h + world.sin_h * origin.sin_h,
        world.sin_h * origin.cos_h - world.cos_h * origin.sin_h,
    };
}

Vec2 point_to_frame(const Vec2& world, const OrientedPose& origin) {
    const double dx = world.x - origin.x;
    const double dy = world.y - origin.y;
    return Vec2{origin.cos_h * dx + origin.sin_h * dy,
                -origin.sin_h * dx + origin.cos_h * dy};
}

TimedTrack to_robot_frame(std::span<const TrackPoint> world_poses,
                          const OrientedPose& robot_pose_t0) {
    require_valid_origin(robot_pose_t0);
    TimedTrack out;
    out.reserve(world_poses.size());
    for (const TrackPoint& p : world_poses) {
        if (p.has_value()) {
            out.push_back(pose_to_frame(*p, robot_pose_t0));
        } else {
            out.push_back(std::nullopt);
        }
    }
    return out;
}

std::vector<TimedTrack> filter_pedestrians(const std::vector<TimedTrack>& tracks,
                                           const TimedTrack& robot_track,
                                           double radius) {
    const std::size_t steps = robot_track.size();
    for (std::size_t t = 0; t < steps; ++t) {
        if (!robot_track[t].has_value()) {
            throw InvalidArgument("filter_pedestrians: robot pose missing at timestep " +
                                  std::to_string(t));
        }
    }
    const double radius2 = radius * radius;
    std::vector<TimedTrack> kept;
    for (const TimedTrack& track : tracks) {
        if (track.size() != steps) {
            throw InvalidArgument("filter_pedestrians: track length " +
                                  std::to_string(track.size()) + " != horizon " +
                                  std::to_string(steps));
        }
        TimedTrack masked(steps);
        bool any_present = false;
        for (std::size_t t = 0; t < steps; ++t) {
            if (!track[t].has_value()) continue;
            const double dx = track[t]->x - robot_track[t]->x;
            const double dy = track[t]->y - robot_track[t]->y;
            if (dx * dx + dy * dy <= radius2) {  // boundary inclusive
                masked[t] = track[t];
                any_present = true;
            }
        }
        if (any_present) kept.push_back(std::move(masked));
    }
    return kept;
}

std::optional<BinaryLabel> binarize_rating(int rating) {
    if (rating < 1 || rating > 5) {
        throw InvalidArgument("Likert rating must be in [1, 5], got " +
                              std::to_string(rating));
    }
    if (rating >= 4) return BinaryLabel::Positive;
    if (rating <= 2) return BinaryLabel::Negative;
    return std::nullopt;  // neutral, example excluded
}

namespace {

/// Nearest sample to time `t`, or nullopt when none is within `tol` seconds.
/// Equidistant neighbors resolve to the earlier sample.
TrackPoint resample_at(const AgentTimeline& agent, double t, double tol) {
    const auto& samples = agent.samples;
    if (samples.empty()) return std::nullopt;
    auto it = std::lower_bound(samples.begin(), samples.end(), t,
                               [](const TimedPose& s, double value) { return s.t < value; });
    const TimedPose* best = nullptr;
    if (it != samples.end()) best = &*it;
    if (it != samples.begin()) {
        const TimedPose* prev = &*std::prev(it);
        if (best == nullptr || (t - prev->t) <= (best->t - t)) best = prev;
    }
    if (best == nullptr || std::abs(best->t - t) > tol) return std::nullopt;
    return best->pose;
}

}  // namespace

ObservationSet extract_window(const EpisodeTimeline& timeline, double response_time,
                              const WindowConfig& config) {
    const int steps = config.steps();
    if (steps < 1) throw InvalidArgument("extract_window: empty window");
    const double t_start = response_time - config.horizon_seconds;
    const double dt = 1.0 / config.sample_hz;

    std::vector<double> grid(steps);
    for (int k = 0; k < steps; ++k) grid[k] = t_start + k * dt;

    // Robot poses must be known at every grid point.
    std::vector<OrientedPose> robot_world(steps);
    for (int k = 0; k < steps; ++k) {
        TrackPoint p = resample_at(timeline.robot, grid[k], config.resample_tolerance);
        if (!p.has_value()) {
            std::ostringstream msg;
            msg << "extract_window: timeline does not cover the window; no robot pose near t="
                << grid[k];
            throw InsufficientData(msg.str());
        }
        robot_world[k] = *p;
    }

    const OrientedPose& origin = robot_world[0];
    require_valid_origin(origin);

    ObservationSet obs;
    obs.goal = point_to_frame(timeline.goal_world, origin);
    obs.robot_track.reserve(steps);
    for (const OrientedPose& p : robot_world) {
        obs.robot_track.push_back(pose_to_frame(p, origin));
    }

    TimedTrack follower_world(steps);
    for (int k = 0; k < steps; ++k) {
        follower_world[k] = resample_at(timeline.follower, grid[k], config.resample_tolerance);
    }
    obs.follower_track = to_robot_frame(follower_world, origin);

    std::vector<TimedTrack> ped_tracks;
    ped_tracks.reserve(timeline.pedestrians.size());
    for (const AgentTimeline& ped : timeline.pedestrians) {
        TimedTrack world(steps);
        for (int k = 0; k < steps; ++k) {
            world[k] = resample_at(ped, grid[k], config.resample_tolerance);
        }
        ped_tracks.push_back(to_robot_frame(world, origin));
    }
    obs.pedestrian_tracks =
        filter_pedestrians(ped_tracks, obs.robot_track, config.pedestrian_radius);
    return obs;
}

}  // namespace percept
