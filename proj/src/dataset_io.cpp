#include "percept/dataset_io.hpp"

#include <cmath>
#include <fstream>

namespace percept {

using nlohmann::json;

namespace {

json track_point_to_json(const TrackPoint& p) {
    if (!p.has_value()) return nullptr;
    return json::array({p->x, p->y, p->cos_h, p->sin_h});
}

json track_to_json(const TimedTrack& track) {
    json arr = json::array();
    for (const TrackPoint& p : track) arr.push_back(track_point_to_json(p));
    return arr;
}

TrackPoint track_point_from_json(const json& j) {
    if (j.is_null()) return std::nullopt;
    if (!j.is_array() || j.size() != 4) {
        throw InvalidArgument("dataset: track point must be null or [x, y, cos, sin]");
    }
    OrientedPose p{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                   j[3].get<double>()};
    if (!has_unit_heading(p, 1e-9)) {
        throw InvalidArgument("dataset: track point heading is not unit-norm");
    }
    return p;
}

TimedTrack track_from_json(const json& j, std::size_t expected_len, const char* what) {
    if (!j.is_array() || j.size() != expected_len) {
        throw InvalidArgument(std::string("dataset: ") + what + " must have " +
                              std::to_string(expected_len) + " points");
    }
    TimedTrack track;
    track.reserve(expected_len);
    for (const json& p : j) track.push_back(track_point_from_json(p));
    return track;
}

void validate_observations(const ObservationSet& obs, double radius) {
    if (obs.robot_track.empty()) {
        throw InvalidArgument("dataset: robot_track must be nonempty");
    }
    for (const TrackPoint& p : obs.robot_track) {
        if (!p.has_value()) {
            throw InvalidArgument("dataset: robot_track points must all be present");
        }
    }
    const OrientedPose& first = *obs.robot_track[0];
    if (std::abs(first.x) > 1e-9 || std::abs(first.y) > 1e-9 ||
        std::abs(first.cos_h - 1.0) > 1e-9 || std::abs(first.sin_h) > 1e-9) {
        throw InvalidArgument(
            "dataset: robot_track[0] must be the origin with heading (1, 0)");
    }
    // Radius invariant with a small slack for values written by other tools.
    const double r = radius + 1e-9;
    for (const TimedTrack& ped : obs.pedestrian_tracks) {
        bool ok = false;
        for (std::size_t t = 0; t < ped.size(); ++t) {
            if (!ped[t].has_value()) continue;
            const double dx = ped[t]->x - obs.robot_track[t]->x;
            const double dy = ped[t]->y - obs.robot_track[t]->y;
            if (std::sqrt(dx * dx + dy * dy) <= r) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw InvalidArgument(
                "dataset: pedestrian track has no present point within the radius");
        }
    }
}

}  // namespace

json dataset_to_json(const Dataset& dataset) {
    json doc;
    doc["schema_version"] = 1;
    doc["horizon_steps"] =
        dataset.size() == 0 ? 0 : dataset.at(0).observations.steps();
    doc["pedestrian_radius"] = kPedestrianRadiusMeters;
    json examples = json::array();
    for (const LabeledExample& ex : dataset.examples()) {
        json obs;
        obs["goal"] = json::array({ex.observations.goal.x, ex.observations.goal.y});
        obs["robot_track"] = track_to_json(ex.observations.robot_track);
        obs["follower_track"] = track_to_json(ex.observations.follower_track);
        json peds = json::array();
        for (const TimedTrack& t : ex.observations.pedestrian_tracks) {
            peds.push_back(track_to_json(t));
        }
        obs["pedestrian_tracks"] = std::move(peds);

        json e;
        e["participant_id"] = ex.participant_id;
        e["episode_id"] = ex.episode_id;
        e["dimension"] = to_string(ex.dimension);
        e["label"] = label_value(ex.label);
        if (ex.rating.has_value()) e["rating"] = *ex.rating;
        e["observations"] = std::move(obs);
        examples.push_back(std::move(e));
    }
    doc["examples"] = std::move(examples);
    return doc;
}

Dataset dataset_from_json(const json& doc) {
    if (!doc.is_object() || !doc.contains("schema_version")) {
        throw InvalidArgument("dataset: missing schema_version");
    }
    if (doc["schema_version"].get<int>() != 1) {
        throw InvalidArgument("dataset: unsupported schema_version");
    }
    const double radius = doc.value("pedestrian_radius", kPedestrianRadiusMeters);
    std::vector<LabeledExample> examples;
    for (const json& e : doc.at("examples")) {
        LabeledExample ex;
        ex.participant_id = e.at("participant_id").get<std::string>();
        ex.episode_id = e.at("episode_id").get<std::string>();
        ex.dimension = dimension_from_string(e.at("dimension").get<std::string>());
        ex.label = label_from_int(e.at("label").get<int>());
        if (e.contains("rating") && !e["rating"].is_null()) {
            const int r = e["rating"].get<int>();
            if (r < 1 || r > 5) throw InvalidArgument("dataset: rating out of [1, 5]");
            ex.rating = r;
        }
        const json& o = e.at("observations");
        const json& goal = o.at("goal");
        ex.observations.goal = Vec2{goal.at(0).get<double>(), goal.at(1).get<double>()};
        const std::size_t steps = o.at("robot_track").size();
        ex.observations.robot_track = track_from_json(o.at("robot_track"), steps, "robot_track");
        ex.observations.follower_track =
            track_from_json(o.at("follower_track"), steps, "follower_track");
        for (const json& t : o.at("pedestrian_tracks")) {
            ex.observations.pedestrian_tracks.push_back(
                track_from_json(t, steps, "pedestrian track"));
        }
        validate_observations(ex.observations, radius);
        examples.push_back(std::move(ex));
    }
    return Dataset::build(std::move(examples));
}

void save_dataset(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path);
    out << dataset_to_json(dataset).dump(2) << "\n";
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open dataset: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& ex) {
        throw InvalidArgument("dataset: malformed JSON in " + path + ": " + ex.what());
    }
    return dataset_from_json(doc);
}

}  // namespace percept
