#include "percept/features.hpp"

#include <algorithm>
#include <cmath>

namespace percept {

namespace {

/// Pedestrian tracks sorted by distance to the robot at their first present
/// timestep, truncated to max_peds. Stable, so equidistant tracks keep their
/// original order.
std::vector<const TimedTrack*> ordered_pedestrians(const ObservationSet& obs,
                                                   int max_peds) {
    struct Entry {
        const TimedTrack* track;
        double distance;
    };
    std::vector<Entry> entries;
    for (const TimedTrack& track : obs.pedestrian_tracks) {
        for (std::size_t t = 0; t < track.size(); ++t) {
            if (!track[t].has_value()) continue;
            const double dx = track[t]->x - obs.robot_track[t]->x;
            const double dy = track[t]->y - obs.robot_track[t]->y;
            entries.push_back(Entry{&track, std::hypot(dx, dy)});
            break;
        }
    }
    std::stable_sort(entries.begin(), entries.end(),
                     [](const Entry& a, const Entry& b) { return a.distance < b.distance; });
    std::vector<const TimedTrack*> out;
    for (const Entry& e : entries) {
        if (static_cast<int>(out.size()) == max_peds) break;
        out.push_back(e.track);
    }
    return out;
}

void append_flagged_point(std::vector<double>& out, const TrackPoint& p) {
    if (p.has_value()) {
        out.insert(out.end(), {1.0, p->x, p->y, p->cos_h, p->sin_h});
    } else {
        out.insert(out.end(), {0.0, 0.0, 0.0, 0.0, 0.0});
    }
}

}  // namespace

std::vector<double> flatten_features(const ObservationSet& obs, int max_peds) {
    const int steps = obs.steps();
    const FeatureLayout layout{steps, max_peds};
    std::vector<double> out;
    out.reserve(layout.length());

    out.push_back(obs.goal.x);
    out.push_back(obs.goal.y);
    for (const TrackPoint& p : obs.robot_track) {
        if (!p.has_value()) {
            throw InvalidArgument("flatten_features: robot track point is unknown");
        }
        out.insert(out.end(), {p->x, p->y, p->cos_h, p->sin_h});
    }
    for (const TrackPoint& p : obs.follower_track) {
        append_flagged_point(out, p);
    }
    const std::vector<const TimedTrack*> peds = ordered_pedestrians(obs, max_peds);
    for (const TimedTrack* track : peds) {
        for (const TrackPoint& p : *track) append_flagged_point(out, p);
    }
    for (int pad = static_cast<int>(peds.size()); pad < max_peds; ++pad) {
        for (int t = 0; t < steps; ++t) out.insert(out.end(), {0.0, 0.0, 0.0, 0.0, 0.0});
    }
    return out;
}

std::vector<std::vector<double>> timestep_slices(const ObservationSet& obs, int max_peds) {
    const int steps = obs.steps();
    const std::vector<const TimedTrack*> peds = ordered_pedestrians(obs, max_peds);
    std::vector<std::vector<double>> slices(steps);
    for (int t = 0; t < steps; ++t) {
        std::vector<double>& s = slices[t];
        s.reserve(FeatureLayout{steps, max_peds}.slice_width());
        s.push_back(obs.goal.x);
        s.push_back(obs.goal.y);
        const TrackPoint& r = obs.robot_track[t];
        s.insert(s.end(), {r->x, r->y, r->cos_h, r->sin_h});
        append_flagged_point(s, obs.follower_track[t]);
        for (const TimedTrack* track : peds) append_flagged_point(s, (*track)[t]);
        for (int pad = static_cast<int>(peds.size()); pad < max_peds; ++pad) {
            s.insert(s.end(), {0.0, 0.0, 0.0, 0.0, 0.0});
        }
    }
    return slices;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw InvalidArgument("euclidean_distance: length mismatch");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

}  // namespace percept
