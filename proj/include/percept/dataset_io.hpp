#pragma once

#include <string>

#include <json.hpp>

#include "percept/episode.hpp"

namespace percept {

// Dataset JSON schema (version 1):
//   {
//     "schema_version": 1,
//     "horizon_steps": 9,
//     "pedestrian_radius": 7.2,
//     "examples": [
//       {
//         "participant_id": "p001",
//         "episode_id": "p001-e00",
//         "dimension": "competence",
//         "label": 1,
//         "rating": 5,                       // optional, raw Likert 1-5
//         "observations": {
//           "goal": [9.8, 0.2],              // meters, robot frame at t=0
//           "robot_track": [[x, y, cos, sin], ...],
//           "follower_track": [[x, y, cos, sin], null, ...],  // null = unknown
//           "pedestrian_tracks": [[[...], null, ...], ...]
//         }
//       }, ...
//     ]
//   }
// Positions are decimal numbers in meters; headings are the [cos, sin] pair.

nlohmann::json dataset_to_json(const Dataset& dataset);

/// Parses and validates a dataset document: schema version, track lengths,
/// heading norms, the robot-frame anchor invariant, and the pedestrian
/// radius invariant.
Dataset dataset_from_json(const nlohmann::json& doc);

void save_dataset(const Dataset& dataset, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace percept
