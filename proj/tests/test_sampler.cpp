#include <doctest.h>

#include <set>

#include "percept/rng.hpp"
#include "percept/sampler.hpp"

using namespace percept;

namespace {

ObservationSet minimal_obs(double goal_x = 5.0) {
    ObservationSet obs;
    obs.goal = Vec2{goal_x, 0.0};
    for (int t = 0; t < 9; ++t) {
        obs.robot_track.push_back(OrientedPose{0, 0, 1, 0});
        obs.follower_track.push_back(OrientedPose{-1, 0, 1, 0});
    }
    obs.pedestrian_tracks.push_back(obs.follower_track);
    return obs;
}

LabeledExample make_example(const std::string& pid, const std::string& eid,
                            PerceptionDimension dim, BinaryLabel label) {
    LabeledExample ex;
    ex.participant_id = pid;
    ex.episode_id = eid;
    ex.observations = minimal_obs();
    ex.dimension = dim;
    ex.label = label;
    return ex;
}

/// Dataset with `participants` raters, each holding `pos` positive and `neg`
/// negative competence examples.
Dataset grid_dataset(int participants, int pos, int neg) {
    std::vector<LabeledExample> examples;
    for (int p = 0; p < participants; ++p) {
        const std::string pid = "p" + std::to_string(p);
        for (int i = 0; i < pos + neg; ++i) {
            examples.push_back(make_example(
                pid, pid + "-e" + std::to_string(i), PerceptionDimension::Competence,
                i < pos ? BinaryLabel::Positive : BinaryLabel::Negative));
        }
    }
    return Dataset::build(std::move(examples));
}

std::vector<std::size_t> all_indices(const Dataset& data) {
    std::vector<std::size_t> idx(data.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return idx;
}

}  // namespace

TEST_CASE("sample_nonpersonalized draws balanced demos without leakage") {
    const Dataset data = grid_dataset(6, 4, 4);
    const std::vector<std::size_t> pool = all_indices(data);

    SamplerSpec spec{4, 0, true, 17};
    const DemoSample sample = sample_nonpersonalized(data, pool, "p0", spec,
                                                     PerceptionDimension::Competence);
    CHECK(sample.examples.size() == 4);
    CHECK(sample.positive_count == 2);
    CHECK(sample.negative_count == 2);
    std::set<std::string> episodes;
    for (std::size_t idx : sample.examples) {
        CHECK(data.at(idx).participant_id != "p0");
        episodes.insert(data.at(idx).episode_id);
    }
    CHECK(episodes.size() == 4);
}

TEST_CASE("sample_nonpersonalized is deterministic per seed and empty at L=0") {
    const Dataset data = grid_dataset(6, 4, 4);
    const std::vector<std::size_t> pool = all_indices(data);

    SamplerSpec spec{8, 0, true, 99};
    const DemoSample a = sample_nonpersonalized(data, pool, "p1", spec,
                                                PerceptionDimension::Competence);
    const DemoSample b = sample_nonpersonalized(data, pool, "p1", spec,
                                                PerceptionDimension::Competence);
    CHECK(a.examples == b.examples);

    spec.seed = 100;
    const DemoSample c = sample_nonpersonalized(data, pool, "p1", spec,
                                                PerceptionDimension::Competence);
    CHECK(a.examples != c.examples);  // overwhelmingly likely with this pool

    spec.k_nonpersonalized = 0;
    CHECK(sample_nonpersonalized(data, pool, "p1", spec, PerceptionDimension::Competence)
              .examples.empty());
}

TEST_CASE("sample_nonpersonalized reports shortfalls and backfills strata") {
    SUBCASE("insufficient pool") {
        const Dataset data = grid_dataset(2, 1, 1);  // 2 usable examples for p0
        SamplerSpec spec{4, 0, true, 1};
        try {
            sample_nonpersonalized(data, all_indices(data), "p0", spec,
                                   PerceptionDimension::Competence);
            FAIL("expected InsufficientDemos");
        } catch (const InsufficientDemos& err) {
            CHECK(err.requested == 4);
            CHECK(err.available == 2);
        }
    }
    SUBCASE("short positive stratum backfills from negatives") {
        std::vector<LabeledExample> examples;
        examples.push_back(make_example("p1", "e-pos", PerceptionDimension::Competence,
                                        BinaryLabel::Positive));
        for (int i = 0; i < 6; ++i) {
            examples.push_back(make_example("p1", "e-neg" + std::to_string(i),
                                            PerceptionDimension::Competence,
                                            BinaryLabel::Negative));
        }
        const Dataset data = Dataset::build(std::move(examples));
        SamplerSpec spec{4, 0, true, 5};
        const DemoSample sample = sample_nonpersonalized(
            data, all_indices(data), "p9", spec, PerceptionDimension::Competence);
        CHECK(sample.examples.size() == 4);
        CHECK(sample.positive_count == 1);
        CHECK(sample.negative_count == 3);
    }
}

TEST_CASE("sample_personalized stays within the participant and skips the eval example") {
    const Dataset data = grid_dataset(3, 3, 3);
    const std::vector<std::size_t> pool = all_indices(data);
    const std::size_t eval_idx = *data.indices_for("p1").begin();

    const DemoSample sample =
        sample_personalized(data, pool, "p1", eval_idx, 4, 7);
    CHECK(sample.examples.size() == 4);
    for (std::size_t idx : sample.examples) {
        CHECK(data.at(idx).participant_id == "p1");
        CHECK(idx != eval_idx);
    }
    CHECK(sample.positive_count == 2);
    CHECK(sample.negative_count == 2);

    CHECK(sample_personalized(data, pool, "p1", eval_idx, 0, 7).examples.empty());
}

TEST_CASE("sample_personalized exhausts exactly-sized pools and reports shortfalls") {
    const Dataset data = grid_dataset(2, 3, 2);  // 5 examples; 4 spares beyond eval
    const std::vector<std::size_t> pool = all_indices(data);
    const std::size_t eval_idx = *data.indices_for("p0").begin();

    const DemoSample sample = sample_personalized(data, pool, "p0", eval_idx, 4, 3);
    CHECK(sample.examples.size() == 4);
    std::set<std::size_t> unique(sample.examples.begin(), sample.examples.end());
    CHECK(unique.size() == 4);

    CHECK_THROWS_AS(sample_personalized(data, pool, "p0", eval_idx, 5, 3),
                    InsufficientDemos);
}

TEST_CASE("no-leakage property holds across random draws") {
    const Dataset data = grid_dataset(8, 5, 5);
    const std::vector<std::size_t> pool = all_indices(data);
    for (std::uint64_t seed = 0; seed < 150; ++seed) {
        SamplerSpec spec{6, 0, true, seed};
        const DemoSample d_neq = sample_nonpersonalized(data, pool, "p3", spec,
                                                        PerceptionDimension::Competence);
        for (std::size_t idx : d_neq.examples) {
            CHECK(data.at(idx).participant_id != "p3");
        }
        const std::size_t eval_idx = data.indices_for("p3")[seed % 10];
        const DemoSample d_apx = sample_personalized(data, pool, "p3", eval_idx, 4, seed);
        for (std::size_t idx : d_apx.examples) {
            CHECK(data.at(idx).participant_id == "p3");
            CHECK(idx != eval_idx);
        }
    }
}

TEST_CASE("apply_ablation nests sections and keeps the goal") {
    ObservationSet obs = minimal_obs();
    obs.follower_track[2] = std::nullopt;

    const ObservationSet full = apply_ablation(obs, AblationLevel::Full);
    CHECK(full.pedestrian_tracks.size() == 1);
    CHECK(full.follower_track[0].has_value());

    const ObservationSet grf = apply_ablation(obs, AblationLevel::GoalRobotFollower);
    CHECK(grf.pedestrian_tracks.empty());
    CHECK(grf.follower_track[0].has_value());
    CHECK(grf.goal.x == obs.goal.x);

    const ObservationSet gr = apply_ablation(obs, AblationLevel::GoalRobot);
    CHECK(gr.pedestrian_tracks.empty());
    CHECK(gr.follower_track.size() == obs.follower_track.size());
    for (const TrackPoint& p : gr.follower_track) CHECK_FALSE(p.has_value());
    CHECK(gr.goal.x == obs.goal.x);
    CHECK(gr.robot_track.size() == obs.robot_track.size());
}

TEST_CASE("ablation level names round trip") {
    for (AblationLevel level : {AblationLevel::GoalRobot, AblationLevel::GoalRobotFollower,
                                AblationLevel::Full}) {
        CHECK(ablation_from_string(to_string(level)) == level);
    }
    CHECK_THROWS_AS(ablation_from_string("bogus"), InvalidArgument);
}
