#include "percept/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "percept/rng.hpp"

namespace percept {

using nlohmann::json;

namespace {
constexpr double kSimHz = 10.0;  // world-frame log rate
constexpr double kSimDt = 1.0 / kSimHz;
}  // namespace

std::string to_string(BehaviorKind kind) {
    switch (kind) {
        case BehaviorKind::NavStack: return "nav_stack";
        case BehaviorKind::Spinning: return "spinning";
        case BehaviorKind::WrongWay: return "wrong_way";
    }
    throw InvalidArgument("unknown behavior kind");
}

BehaviorKind behavior_from_string(std::string_view name) {
    if (name == "nav_stack") return BehaviorKind::NavStack;
    if (name == "spinning") return BehaviorKind::Spinning;
    if (name == "wrong_way") return BehaviorKind::WrongWay;
    throw InvalidArgument("unknown behavior kind: " + std::string(name));
}

void SceneConfig::validate() const {
    if (corridor_half_width <= 0.0) {
        throw InvalidArgument("scene: corridor half-width must be positive");
    }
    if (pedestrian_count < 0) {
        throw InvalidArgument("scene: pedestrian count must be nonnegative");
    }
    if (pedestrian_speed_min < 0.0 || pedestrian_speed_max < pedestrian_speed_min) {
        throw InvalidArgument("scene: pedestrian speed range is empty or negative");
    }
}

void GenConfig::validate() const {
    scene.validate();
    if (participant_count < 1) throw InvalidArgument("gen: participant count must be >= 1");
    if (episodes_per_participant < 1) {
        throw InvalidArgument("gen: episodes per participant must be >= 1");
    }
    double mix_sum = 0.0;
    for (double m : behavior_mix) {
        if (m < 0.0) throw InvalidArgument("gen: behavior mix entries must be nonnegative");
        mix_sum += m;
    }
    if (std::abs(mix_sum - 1.0) > 1e-9) {
        throw InvalidArgument("gen: behavior mix must sum to 1");
    }
    if (min_duration > max_duration) throw InvalidArgument("gen: empty duration range");
    if (min_duration < window.horizon_seconds) {
        throw InvalidArgument("gen: episode duration must cover the observation window");
    }
    if (noise_sd < 0.0) throw InvalidArgument("gen: noise_sd must be nonnegative");
    if (leniency_sd < 0.0) throw InvalidArgument("gen: leniency_sd must be nonnegative");
}

namespace {

/// Robot pose sequence over [0, duration] at 10 Hz for one behavior script.
std::vector<OrientedPose> robot_script(BehaviorKind kind, const SceneConfig& scene,
                                       int n_samples, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "robot"));
    std::vector<OrientedPose> poses;
    poses.reserve(n_samples);

    const double goal_dir = std::atan2(scene.goal.y, scene.goal.x);

    switch (kind) {
        case BehaviorKind::NavStack: {
            const double speed = rng.uniform(0.45, 0.7);
            double x = 0.0, y = 0.0;
            double theta = goal_dir;
            for (int i = 0; i < n_samples; ++i) {
                auto [c, s] = encode_heading(theta);
                poses.push_back(OrientedPose{x, y, c, s});
                const double dx = scene.goal.x - x;
                const double dy = scene.goal.y - y;
                const double dist = std::hypot(dx, dy);
                if (dist > 0.4) {
                    // Heading jitter stays within +-0.3 rad of the goal
                    // bearing, so every step strictly reduces goal distance.
                    theta = std::atan2(dy, dx) + rng.gaussian(0.0, 0.08);
                    theta = std::clamp(theta, std::atan2(dy, dx) - 0.3,
                                       std::atan2(dy, dx) + 0.3);
                    const double step = std::min(speed * kSimDt, dist - 0.3);
                    x += step * std::cos(theta);
                    y += step * std::sin(theta);
                }
            }
            break;
        }
        case BehaviorKind::Spinning: {
            const double omega = (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(0.6, 1.2);
            const double wobble = rng.uniform(0.03, 0.08);
            double theta = rng.uniform(0.0, 2.0 * M_PI);
            for (int i = 0; i < n_samples; ++i) {
                const double t = i * kSimDt;
                auto [c, s] = encode_heading(theta);
                // Bounded wobble around the start keeps net displacement small.
                poses.push_back(OrientedPose{wobble * std::sin(0.8 * t),
                                             wobble * std::cos(1.1 * t), c, s});
                theta += omega * kSimDt + rng.gaussian(0.0, 0.02);
            }
            break;
        }
        case BehaviorKind::WrongWay: {
            const double speed = rng.uniform(0.35, 0.6);
            double x = 0.0, y = 0.0;
            for (int i = 0; i < n_samples; ++i) {
                const double away = std::atan2(y - scene.goal.y, x - scene.goal.x);
                const double theta = away + rng.gaussian(0.0, 0.05);
                auto [c, s] = encode_heading(theta);
                poses.push_back(OrientedPose{x, y, c, s});
                x += speed * kSimDt * std::cos(away);
                y += speed * kSimDt * std::sin(away);
            }
            break;
        }
    }
    return poses;
}

}  // namespace

EpisodeTimeline generate_behavior_trajectory(BehaviorKind kind, const SceneConfig& scene,
                                             double duration_seconds, std::uint64_t seed,
                                             const FollowerParams& follower) {
    scene.validate();
    if (duration_seconds <= 0.0) {
        throw InvalidArgument("generate_behavior_trajectory: duration must be positive");
    }
    const int n_samples = static_cast<int>(std::floor(duration_seconds * kSimHz)) + 1;

    EpisodeTimeline timeline;
    timeline.goal_world = scene.goal;

    const std::vector<OrientedPose> robot = robot_script(kind, scene, n_samples, seed);
    timeline.robot.samples.reserve(n_samples);
    for (int i = 0; i < n_samples; ++i) {
        timeline.robot.samples.push_back(TimedPose{i * kSimDt, robot[i]});
    }

    // Follower shadows the robot's pose `lag` seconds ago, walking offset to
    // one side of the corridor axis. Before the episode starts, it stands one
    // step behind the robot's initial pose.
    Rng frng(derive_seed(seed, "follower"));
    const double goal_dir = std::atan2(scene.goal.y, scene.goal.x);
    auto [axis_cos, axis_sin] = encode_heading(goal_dir);
    const double side_x = -axis_sin * follower.lateral_offset;
    const double side_y = axis_cos * follower.lateral_offset;
    const int lag_samples = static_cast<int>(std::llround(follower.lag_seconds * kSimHz));
    timeline.follower.samples.reserve(n_samples);
    for (int i = 0; i < n_samples; ++i) {
        OrientedPose base;
        const int j = i - lag_samples;
        if (j >= 0) {
            base = robot[j];
        } else {
            base = OrientedPose{robot[0].x - 0.8 * axis_cos, robot[0].y - 0.8 * axis_sin,
                                axis_cos, axis_sin};
        }
        base.x += side_x + frng.gaussian(0.0, follower.jitter_sd);
        base.y += side_y + frng.gaussian(0.0, follower.jitter_sd);
        TrackPoint point = base;
        if (frng.bernoulli(follower.dropout_rate)) point = std::nullopt;  // missed detection
        timeline.follower.samples.push_back(TimedPose{i * kSimDt, point});
    }

    // Constant-velocity corridor walkers with random entry times. The corridor
    // axis runs from the robot start toward the goal.
    for (int p = 0; p < scene.pedestrian_count; ++p) {
        Rng prng(derive_seed(seed, "pedestrian", static_cast<std::uint64_t>(p)));
        const double speed = prng.uniform(scene.pedestrian_speed_min,
                                          scene.pedestrian_speed_max);
        const bool along = prng.bernoulli(0.5);  // walking toward or against the goal
        const double lateral = prng.uniform(-scene.corridor_half_width,
                                            scene.corridor_half_width);
        const double entry_time = prng.uniform(0.0, 0.8 * duration_seconds);
        const double entry_x = prng.uniform(-2.0, std::hypot(scene.goal.x, scene.goal.y) + 2.0);
        auto [axis_c, axis_s] = encode_heading(goal_dir);
        const double heading = along ? goal_dir : goal_dir + M_PI;
        auto [c, s] = encode_heading(heading);

        AgentTimeline ped;
        ped.samples.reserve(n_samples);
        for (int i = 0; i < n_samples; ++i) {
            const double t = i * kSimDt;
            if (t < entry_time) {
                ped.samples.push_back(TimedPose{t, std::nullopt});
                continue;
            }
            const double s_along = entry_x + (along ? 1.0 : -1.0) * speed * (t - entry_time);
            ped.samples.push_back(TimedPose{
                t, OrientedPose{s_along * axis_c - lateral * axis_s,
                                s_along * axis_s + lateral * axis_c, c, s}});
        }
        timeline.pedestrians.push_back(std::move(ped));
    }
    return timeline;
}

double latent_score(BehaviorKind kind, PerceptionDimension dim, const LatentTable& table) {
    return table.at(kind, dim);
}

int simulate_rating(double score, const ParticipantProfile& profile,
                    PerceptionDimension dim, std::uint64_t seed) {
    Rng rng(derive_seed(profile.seed, seed));
    const double latent = score + profile.leniency[dimension_index(dim)];
    const double raw = 3.0 + 2.0 * latent + rng.gaussian(0.0, profile.noise_sd);
    const long long rounded = std::llround(raw);
    return static_cast<int>(std::clamp(rounded, 1LL, 5LL));
}

std::vector<ParticipantProfile> make_profiles(const GenConfig& config) {
    std::vector<ParticipantProfile> profiles;
    profiles.reserve(config.participant_count);
    for (int p = 0; p < config.participant_count; ++p) {
        ParticipantProfile profile;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "p%03d", p + 1);
        profile.participant_id = buf;
        Rng rng(derive_seed(config.master_seed, "profile", static_cast<std::uint64_t>(p)));
        for (int d = 0; d < 3; ++d) {
            profile.leniency[d] = std::clamp(rng.gaussian(0.0, config.leniency_sd), -1.0, 1.0);
        }
        profile.noise_sd = config.noise_sd;
        profile.seed = derive_seed(config.master_seed, "rater", static_cast<std::uint64_t>(p));
        profiles.push_back(std::move(profile));
    }
    return profiles;
}

Dataset generate_dataset(const GenConfig& config) {
    config.validate();
    const std::vector<ParticipantProfile> profiles = make_profiles(config);

    std::vector<LabeledExample> examples;
    for (const ParticipantProfile& profile : profiles) {
        // Personal following style: fixed per participant across episodes.
        Rng style_rng(derive_seed(config.master_seed, "follower-style",
                                  profile.participant_id));
        const double personal_lag =
            style_rng.uniform(config.personal_lag_min, config.personal_lag_max);
        const double personal_side =
            style_rng.uniform(-config.personal_lateral, config.personal_lateral);

        for (int e = 0; e < config.episodes_per_participant; ++e) {
            // Documented, stable per-episode stream: master seed, participant
            // id and episode index fully determine everything below.
            const std::uint64_t ep_seed = derive_seed(
                config.master_seed, "episode", profile.participant_id,
                static_cast<std::uint64_t>(e));

            Rng ep_rng(derive_seed(ep_seed, "setup"));
            BehaviorKind kind = BehaviorKind::NavStack;
            if (config.label_model == LabelModel::Behavior) {
                const double u = ep_rng.next_double();
                if (u < config.behavior_mix[0]) {
                    kind = BehaviorKind::NavStack;
                } else if (u < config.behavior_mix[0] + config.behavior_mix[1]) {
                    kind = BehaviorKind::Spinning;
                } else {
                    kind = BehaviorKind::WrongWay;
                }
            }
            const double duration = ep_rng.uniform(config.min_duration, config.max_duration);

            FollowerParams follower = config.follower;
            follower.lateral_offset = personal_side;
            bool follower_close = true;
            if (config.label_model == LabelModel::FollowerLag) {
                follower_close = ep_rng.bernoulli(0.5);
                follower.lag_seconds =
                    follower_close ? config.follower_lag_short : config.follower_lag_long;
            } else {
                follower.lag_seconds = personal_lag;
            }

            const EpisodeTimeline timeline = generate_behavior_trajectory(
                kind, config.scene, duration, derive_seed(ep_seed, "trajectory"), follower);
            const ObservationSet obs = extract_window(timeline, duration, config.window);

            char ep_buf[32];
            std::snprintf(ep_buf, sizeof(ep_buf), "%s-e%02d",
                          profile.participant_id.c_str(), e);

            for (PerceptionDimension dim : kAllDimensions) {
                const double score =
                    config.label_model == LabelModel::Behavior
                        ? latent_score(kind, dim, config.latents)
                        : (follower_close ? 0.8 : -0.8);
                const int rating = simulate_rating(
                    score, profile, dim,
                    derive_seed(ep_seed, "rating", static_cast<std::uint64_t>(
                                                       dimension_index(dim))));
                const std::optional<BinaryLabel> label = binarize_rating(rating);
                if (!label.has_value()) continue;  // neutral rating, excluded
                LabeledExample ex;
                ex.participant_id = profile.participant_id;
                ex.episode_id = ep_buf;
                ex.observations = obs;
                ex.dimension = dim;
                ex.label = *label;
                ex.rating = rating;
                examples.push_back(std::move(ex));
            }
        }
    }
    return Dataset::build(std::move(examples));
}

namespace {

template <typename T>
void read_if(const json& doc, const char* key, T& out) {
    if (doc.contains(key)) out = doc.at(key).get<T>();
}

}  // namespace

GenConfig gen_config_from_json(const json& doc) {
    GenConfig config;
    read_if(doc, "participant_count", config.participant_count);
    read_if(doc, "episodes_per_participant", config.episodes_per_participant);
    if (doc.contains("behavior_mix")) {
        const json& mix = doc.at("behavior_mix");
        if (!mix.is_array() || mix.size() != 3) {
            throw InvalidArgument("gen config: behavior_mix must have 3 entries");
        }
        for (int i = 0; i < 3; ++i) config.behavior_mix[i] = mix[i].get<double>();
    }
    if (doc.contains("scene")) {
        const json& s = doc.at("scene");
        if (s.contains("goal")) {
            config.scene.goal = Vec2{s.at("goal").at(0).get<double>(),
                                     s.at("goal").at(1).get<double>()};
        }
        read_if(s, "corridor_half_width", config.scene.corridor_half_width);
        read_if(s, "pedestrian_count", config.scene.pedestrian_count);
        read_if(s, "pedestrian_speed_min", config.scene.pedestrian_speed_min);
        read_if(s, "pedestrian_speed_max", config.scene.pedestrian_speed_max);
    }
    read_if(doc, "min_duration", config.min_duration);
    read_if(doc, "max_duration", config.max_duration);
    read_if(doc, "master_seed", config.master_seed);
    read_if(doc, "leniency_sd", config.leniency_sd);
    read_if(doc, "noise_sd", config.noise_sd);
    if (doc.contains("follower")) {
        const json& f = doc.at("follower");
        read_if(f, "lag_seconds", config.follower.lag_seconds);
        read_if(f, "jitter_sd", config.follower.jitter_sd);
        read_if(f, "dropout_rate", config.follower.dropout_rate);
    }
    read_if(doc, "personal_lag_min", config.personal_lag_min);
    read_if(doc, "personal_lag_max", config.personal_lag_max);
    read_if(doc, "personal_lateral", config.personal_lateral);
    if (doc.contains("label_model")) {
        const std::string model = doc.at("label_model").get<std::string>();
        if (model == "behavior") {
            config.label_model = LabelModel::Behavior;
        } else if (model == "follower_lag") {
            config.label_model = LabelModel::FollowerLag;
        } else {
            throw InvalidArgument("gen config: unknown label_model: " + model);
        }
    }
    read_if(doc, "follower_lag_short", config.follower_lag_short);
    read_if(doc, "follower_lag_long", config.follower_lag_long);
    if (doc.contains("window")) {
        const json& w = doc.at("window");
        read_if(w, "horizon_seconds", config.window.horizon_seconds);
        read_if(w, "sample_hz", config.window.sample_hz);
        read_if(w, "pedestrian_radius", config.window.pedestrian_radius);
        read_if(w, "resample_tolerance", config.window.resample_tolerance);
    }
    if (doc.contains("latents")) {
        const json& l = doc.at("latents");
        if (!l.is_array() || l.size() != 3) {
            throw InvalidArgument("gen config: latents must be a 3x3 array");
        }
        for (int k = 0; k < 3; ++k) {
            for (int d = 0; d < 3; ++d) {
                config.latents.values[k][d] = l.at(k).at(d).get<double>();
            }
        }
    }
    config.validate();
    return config;
}

json gen_config_to_json(const GenConfig& config) {
    json doc;
    doc["participant_count"] = config.participant_count;
    doc["episodes_per_participant"] = config.episodes_per_participant;
    doc["behavior_mix"] = config.behavior_mix;
    doc["scene"] = {
        {"goal", {config.scene.goal.x, config.scene.goal.y}},
        {"corridor_half_width", config.scene.corridor_half_width},
        {"pedestrian_count", config.scene.pedestrian_count},
        {"pedestrian_speed_min", config.scene.pedestrian_speed_min},
        {"pedestrian_speed_max", config.scene.pedestrian_speed_max},
    };
    doc["min_duration"] = config.min_duration;
    doc["max_duration"] = config.max_duration;
    doc["master_seed"] = config.master_seed;
    doc["leniency_sd"] = config.leniency_sd;
    doc["noise_sd"] = config.noise_sd;
    doc["follower"] = {
        {"lag_seconds", config.follower.lag_seconds},
        {"jitter_sd", config.follower.jitter_sd},
        {"dropout_rate", config.follower.dropout_rate},
    };
    doc["personal_lag_min"] = config.personal_lag_min;
    doc["personal_lag_max"] = config.personal_lag_max;
    doc["personal_lateral"] = config.personal_lateral;
    doc["label_model"] =
        config.label_model == LabelModel::Behavior ? "behavior" : "follower_lag";
    doc["follower_lag_short"] = config.follower_lag_short;
    doc["follower_lag_long"] = config.follower_lag_long;
    doc["window"] = {
        {"horizon_seconds", config.window.horizon_seconds},
        {"sample_hz", config.window.sample_hz},
        {"pedestrian_radius", config.window.pedestrian_radius},
        {"resample_tolerance", config.window.resample_tolerance},
    };
    json latents = json::array();
    for (int k = 0; k < 3; ++k) latents.push_back(config.latents.values[k]);
    doc["latents"] = std::move(latents);
    return doc;
}

GenConfig load_gen_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open generator config: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& ex) {
        throw InvalidArgument("gen config: malformed JSON in " + path + ": " + ex.what());
    }
    return gen_config_from_json(doc);
}

}  // namespace percept
