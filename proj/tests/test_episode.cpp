#include <doctest.h>

#include <cmath>

#include "percept/episode.hpp"
#include "percept/rng.hpp"

using namespace percept;

namespace {

OrientedPose pose_at(double x, double y, double theta) {
    auto [c, s] = encode_heading(theta);
    return OrientedPose{x, y, c, s};
}

/// Oracle for the frame transform: compose the two rigid transforms by hand.
OrientedPose transform_oracle(const OrientedPose& world, const OrientedPose& origin) {
    const double theta0 = std::atan2(origin.sin_h, origin.cos_h);
    const double theta = std::atan2(world.sin_h, world.cos_h);
    const double dx = world.x - origin.x;
    const double dy = world.y - origin.y;
    const double c = std::cos(-theta0), s = std::sin(-theta0);
    auto [hc, hs] = encode_heading(theta - theta0);
    return OrientedPose{c * dx - s * dy, s * dx + c * dy, hc, hs};
}

}  // namespace

TEST_CASE("encode_heading basics") {
    auto [c0, s0] = encode_heading(0.0);
    CHECK(c0 == 1.0);
    CHECK(s0 == 0.0);
    auto [c1, s1] = encode_heading(M_PI / 2);
    CHECK(c1 == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(s1 == doctest::Approx(1.0).epsilon(1e-12));
    auto [c2, s2] = encode_heading(2.7);
    CHECK(c2 * c2 + s2 * s2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(encode_heading(std::nan("")), InvalidArgument);
    CHECK_THROWS_AS(encode_heading(INFINITY), InvalidArgument);
}

TEST_CASE("to_robot_frame maps the origin pose to identity") {
    const OrientedPose robot = pose_at(3.2, -1.5, 0.7);
    const TimedTrack track = to_robot_frame(std::vector<TrackPoint>{robot}, robot);
    REQUIRE(track.size() == 1);
    REQUIRE(track[0].has_value());
    CHECK(track[0]->x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(track[0]->y == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(track[0]->cos_h == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(track[0]->sin_h == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("to_robot_frame puts a point ahead of the robot on the +x axis") {
    const OrientedPose robot = pose_at(1.0, 2.0, M_PI / 3);
    const OrientedPose ahead = pose_at(1.0 + std::cos(M_PI / 3), 2.0 + std::sin(M_PI / 3),
                                       M_PI / 3);
    const TimedTrack track = to_robot_frame(std::vector<TrackPoint>{ahead}, robot);
    CHECK(track[0]->x == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(track[0]->y == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(track[0]->cos_h == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("to_robot_frame preserves absent points and rejects degenerate origins") {
    std::vector<TrackPoint> world{pose_at(0, 0, 0), std::nullopt, pose_at(1, 1, 1)};
    const TimedTrack track = to_robot_frame(world, pose_at(0, 0, 0.5));
    CHECK(track[0].has_value());
    CHECK_FALSE(track[1].has_value());
    CHECK(track[2].has_value());

    OrientedPose degenerate{0.0, 0.0, 0.0, 0.0};
    CHECK_THROWS_AS(to_robot_frame(world, degenerate), InvalidArgument);
}

TEST_CASE("frame transform is invariant under world-frame rigid motions") {
    Rng rng(101);
    for (int trial = 0; trial < 200; ++trial) {
        const OrientedPose origin =
            pose_at(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-M_PI, M_PI));
        const OrientedPose world =
            pose_at(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-M_PI, M_PI));

        const OrientedPose direct = pose_to_frame(world, origin);
        const OrientedPose oracle = transform_oracle(world, origin);
        CHECK(direct.x == doctest::Approx(oracle.x).epsilon(1e-9));
        CHECK(direct.y == doctest::Approx(oracle.y).epsilon(1e-9));
        CHECK(direct.cos_h == doctest::Approx(oracle.cos_h).epsilon(1e-9));
        CHECK(direct.sin_h == doctest::Approx(oracle.sin_h).epsilon(1e-9));

        // Applying an extra rigid transform to both inputs changes nothing.
        const double tx = rng.uniform(-10, 10), ty = rng.uniform(-10, 10);
        const double rot = rng.uniform(-M_PI, M_PI);
        auto apply = [&](const OrientedPose& p) {
            const double c = std::cos(rot), s = std::sin(rot);
            const double theta = std::atan2(p.sin_h, p.cos_h);
            return pose_at(c * p.x - s * p.y + tx, s * p.x + c * p.y + ty, theta + rot);
        };
        const OrientedPose moved = pose_to_frame(apply(world), apply(origin));
        CHECK(moved.x == doctest::Approx(direct.x).epsilon(1e-9));
        CHECK(moved.y == doctest::Approx(direct.y).epsilon(1e-9));
        CHECK(moved.cos_h == doctest::Approx(direct.cos_h).epsilon(1e-9));
        CHECK(moved.sin_h == doctest::Approx(direct.sin_h).epsilon(1e-9));
    }
}

namespace {

TimedTrack constant_track(double x, double y, int steps) {
    TimedTrack track;
    for (int i = 0; i < steps; ++i) track.push_back(pose_at(x, y, 0.0));
    return track;
}

}  // namespace

TEST_CASE("filter_pedestrians applies the inclusive 7.2 m boundary") {
    const TimedTrack robot = constant_track(0, 0, 9);

    SUBCASE("inside the radius is retained") {
        const std::vector<TimedTrack> kept =
            filter_pedestrians({constant_track(5, 0, 9)}, robot);
        REQUIRE(kept.size() == 1);
        for (const TrackPoint& p : kept[0]) CHECK(p.has_value());
    }
    SUBCASE("outside the radius is dropped") {
        CHECK(filter_pedestrians({constant_track(10, 0, 9)}, robot).empty());
    }
    SUBCASE("exactly at the boundary is retained") {
        CHECK(filter_pedestrians({constant_track(7.2, 0, 9)}, robot).size() == 1);
    }
    SUBCASE("mismatched lengths are rejected") {
        CHECK_THROWS_AS(filter_pedestrians({constant_track(1, 0, 5)}, robot),
                        InvalidArgument);
    }
}

TEST_CASE("filter_pedestrians masks per timestep, never reorders, and is idempotent") {
    Rng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        const int steps = 9;
        TimedTrack robot;
        for (int t = 0; t < steps; ++t) {
            robot.push_back(pose_at(rng.uniform(-2, 2), rng.uniform(-2, 2), 0));
        }
        std::vector<TimedTrack> tracks;
        const int n_tracks = static_cast<int>(rng.next_below(4)) + 1;
        for (int k = 0; k < n_tracks; ++k) {
            TimedTrack track;
            for (int t = 0; t < steps; ++t) {
                if (rng.bernoulli(0.2)) {
                    track.push_back(std::nullopt);
                } else {
                    track.push_back(pose_at(rng.uniform(-12, 12), rng.uniform(-12, 12), 0));
                }
            }
            tracks.push_back(std::move(track));
        }
        const std::vector<TimedTrack> once = filter_pedestrians(tracks, robot);

        // Never adds points: every surviving point existed in some input track.
        for (const TimedTrack& track : once) {
            int present = 0;
            for (int t = 0; t < steps; ++t) {
                if (!track[t].has_value()) continue;
                ++present;
                const double dx = track[t]->x - robot[t]->x;
                const double dy = track[t]->y - robot[t]->y;
                CHECK(dx * dx + dy * dy <= 7.2 * 7.2);
            }
            CHECK(present >= 1);
        }
        CHECK(once.size() <= tracks.size());

        // Idempotent.
        const std::vector<TimedTrack> twice = filter_pedestrians(once, robot);
        REQUIRE(twice.size() == once.size());
        for (std::size_t k = 0; k < once.size(); ++k) {
            for (int t = 0; t < steps; ++t) {
                CHECK(twice[k][t].has_value() == once[k][t].has_value());
                if (once[k][t].has_value()) {
                    CHECK(twice[k][t]->x == once[k][t]->x);
                    CHECK(twice[k][t]->y == once[k][t]->y);
                }
            }
        }
    }
}

TEST_CASE("binarize_rating implements the 4-or-5 positive rule") {
    CHECK(binarize_rating(4) == BinaryLabel::Positive);
    CHECK(binarize_rating(5) == BinaryLabel::Positive);
    CHECK(binarize_rating(1) == BinaryLabel::Negative);
    CHECK(binarize_rating(2) == BinaryLabel::Negative);
    CHECK_FALSE(binarize_rating(3).has_value());
    CHECK_THROWS_AS(binarize_rating(0), InvalidArgument);
    CHECK_THROWS_AS(binarize_rating(6), InvalidArgument);

    // Monotone on the labeled ratings.
    for (int r = 1; r <= 5; ++r) {
        for (int r2 = r + 1; r2 <= 5; ++r2) {
            const auto a = binarize_rating(r);
            const auto b = binarize_rating(r2);
            if (a.has_value() && b.has_value()) {
                CHECK(label_value(*a) <= label_value(*b));
            }
        }
    }
}

namespace {

/// 10 Hz world timeline of a robot driving +x at 0.5 m/s for `duration` s.
EpisodeTimeline straight_drive(double duration, double hz = 10.0) {
    EpisodeTimeline timeline;
    timeline.goal_world = Vec2{20.0, 0.0};
    const int n = static_cast<int>(duration * hz) + 1;
    for (int i = 0; i < n; ++i) {
        const double t = i / hz;
        timeline.robot.samples.push_back(TimedPose{t, pose_at(0.5 * t, 0.0, 0.0)});
        timeline.follower.samples.push_back(
            TimedPose{t, pose_at(0.5 * t - 1.0, 0.3, 0.0)});
    }
    return timeline;
}

}  // namespace

TEST_CASE("extract_window default yields nine samples anchored at the robot") {
    CHECK(WindowConfig{}.steps() == 9);
    CHECK(WindowConfig{4.0, 1.0}.steps() == 5);
    CHECK(WindowConfig{8.0, 2.0}.steps() == 17);

    EpisodeTimeline timeline;
    timeline.goal_world = Vec2{5.0, 0.0};
    for (int i = 0; i <= 120; ++i) {
        timeline.robot.samples.push_back(TimedPose{i * 0.1, pose_at(1.0, 2.0, 0.4)});
    }
    const ObservationSet obs = extract_window(timeline, 12.0);
    REQUIRE(obs.robot_track.size() == 9);
    for (const TrackPoint& p : obs.robot_track) {
        REQUIRE(p.has_value());
        CHECK(p->x == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(p->y == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(p->cos_h == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(p->sin_h == doctest::Approx(0.0).epsilon(1e-9));
    }
    CHECK(obs.follower_track.size() == 9);
}

TEST_CASE("extract_window rejects windows the timeline does not cover") {
    const EpisodeTimeline timeline = straight_drive(20.0);
    CHECK_THROWS_AS(extract_window(timeline, 5.0), InsufficientData);
    CHECK_NOTHROW(extract_window(timeline, 20.0));
    CHECK_THROWS_AS(extract_window(timeline, 30.0), InsufficientData);
}

TEST_CASE("extract_window resampling matches a nearest-timestamp oracle") {
    // Robot logged at 10 Hz with irregular jitter; oracle scans all samples.
    Rng rng(300);
    EpisodeTimeline timeline;
    timeline.goal_world = Vec2{10.0, 0.0};
    double t = 0.0;
    while (t < 21.0) {
        timeline.robot.samples.push_back(
            TimedPose{t, pose_at(0.4 * t, 0.1 * std::sin(t), 0.2)});
        t += 0.1;
    }
    const double response_time = 20.0;
    const WindowConfig config;
    const ObservationSet obs = extract_window(timeline, response_time, config);

    const OrientedPose* origin_world = nullptr;
    {
        // Oracle for the anchor: nearest sample to the window start.
        double best = 1e9;
        for (const TimedPose& s : timeline.robot.samples) {
            const double d = std::abs(s.t - (response_time - 8.0));
            if (d < best) {
                best = d;
                origin_world = &*s.pose;
            }
        }
    }
    for (int k = 0; k < 9; ++k) {
        const double grid_t = response_time - 8.0 + k;
        double best = 1e9;
        const OrientedPose* nearest = nullptr;
        for (const TimedPose& s : timeline.robot.samples) {
            const double d = std::abs(s.t - grid_t);
            if (d < best) {
                best = d;
                nearest = &*s.pose;
            }
        }
        REQUIRE(best <= config.resample_tolerance);
        const OrientedPose expected = pose_to_frame(*nearest, *origin_world);
        CHECK(obs.robot_track[k]->x == doctest::Approx(expected.x).epsilon(1e-12));
        CHECK(obs.robot_track[k]->y == doctest::Approx(expected.y).epsilon(1e-12));
    }
}

TEST_CASE("Dataset::build rejects duplicate keys and indexes participants") {
    LabeledExample a;
    a.participant_id = "p1";
    a.episode_id = "e1";
    a.dimension = PerceptionDimension::Competence;
    a.label = BinaryLabel::Positive;
    a.observations.robot_track = constant_track(0, 0, 9);
    a.observations.robot_track[0] = pose_at(0, 0, 0);
    a.observations.follower_track = constant_track(1, 0, 9);

    LabeledExample b = a;
    b.dimension = PerceptionDimension::Surprise;
    LabeledExample c = a;
    c.participant_id = "p2";

    const Dataset data = Dataset::build({a, b, c});
    CHECK(data.size() == 3);
    CHECK(data.participant_count() == 2);
    CHECK(data.indices_for("p1").size() == 2);
    CHECK(data.indices_for("p2").size() == 1);
    CHECK(data.indices_for("p3").empty());

    CHECK_THROWS_AS(Dataset::build({a, a}), InvalidArgument);
}
