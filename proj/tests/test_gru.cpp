#include <doctest.h>

#include <cmath>

#include "percept/gru.hpp"
#include "percept/rng.hpp"

using namespace percept;

namespace {

/// Guarded relative error, the usual gradient-check metric.
double relative_error(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-5});
    return std::abs(analytic - numeric) / denom;
}

/// Central finite differences of gru_loss over every parameter.
double max_gradient_error(const GruParams& params, const std::vector<Sequence>& sequences,
                          const std::vector<int>& labels, double eps = 1e-5) {
    const GruParams analytic = gru_gradient(params, sequences, labels);
    GruParams probe = params;
    double worst = 0.0;
    for (std::size_t i = 0; i < params.theta.size(); ++i) {
        const double saved = probe.theta[i];
        probe.theta[i] = saved + eps;
        const double up = gru_loss(probe, sequences, labels);
        probe.theta[i] = saved - eps;
        const double down = gru_loss(probe, sequences, labels);
        probe.theta[i] = saved;
        const double numeric = (up - down) / (2.0 * eps);
        worst = std::max(worst, relative_error(analytic.theta[i], numeric));
    }
    return worst;
}

std::pair<std::vector<Sequence>, std::vector<int>> random_batch(Rng& rng, int n, int steps,
                                                                int input_size) {
    std::vector<Sequence> sequences;
    std::vector<int> labels;
    for (int i = 0; i < n; ++i) {
        Sequence seq;
        for (int t = 0; t < steps; ++t) {
            std::vector<double> x;
            for (int f = 0; f < input_size; ++f) x.push_back(rng.uniform(-1, 1));
            seq.push_back(std::move(x));
        }
        sequences.push_back(std::move(seq));
        labels.push_back(static_cast<int>(rng.next_below(2)));
    }
    return {std::move(sequences), std::move(labels)};
}

}  // namespace

TEST_CASE("analytic gradients match central finite differences") {
    Rng rng(60);
    auto [sequences, labels] = random_batch(rng, 4, 3, 5);
    const GruParams params = GruClassifier::init_params(5, 4, 123);
    CHECK(max_gradient_error(params, sequences, labels) < 1e-4);
}

TEST_CASE("gradient check holds at a trained (non-random) parameter point") {
    Rng rng(61);
    auto [sequences, labels] = random_batch(rng, 4, 3, 4);
    GruConfig config;
    config.hidden_size = 3;
    config.epochs = 20;
    config.learning_rate = 0.1;
    config.seed = 7;
    const GruClassifier model = GruClassifier::fit(sequences, labels, config);
    CHECK(max_gradient_error(model.params(), sequences, labels) < 1e-4);
}

TEST_CASE("constant-zero inputs with balanced labels settle near 0.5") {
    std::vector<Sequence> sequences;
    std::vector<int> labels;
    for (int i = 0; i < 8; ++i) {
        sequences.push_back(Sequence(9, std::vector<double>(6, 0.0)));
        labels.push_back(i % 2);
    }
    GruConfig config;
    config.hidden_size = 8;
    config.epochs = 200;
    config.seed = 3;
    const GruClassifier model = GruClassifier::fit(sequences, labels, config);
    CHECK(model.probability(sequences[0]) == doctest::Approx(0.5).epsilon(0.1));
    CHECK(std::abs(model.probability(sequences[0]) - 0.5) < 0.05);
}

TEST_CASE("gru learns labels given by the sign of one coordinate") {
    Rng rng(62);
    std::vector<Sequence> sequences;
    std::vector<int> labels;
    for (int i = 0; i < 64; ++i) {
        const bool positive = i % 2 == 0;
        const double value = positive ? rng.uniform(0.5, 1.0) : rng.uniform(-1.0, -0.5);
        Sequence seq;
        for (int t = 0; t < 9; ++t) {
            std::vector<double> x(6, 0.0);
            x[2] = value;
            x[4] = rng.uniform(-0.2, 0.2);  // distractor
            seq.push_back(std::move(x));
        }
        sequences.push_back(std::move(seq));
        labels.push_back(positive ? 1 : 0);
    }
    GruConfig config;
    config.hidden_size = 8;
    config.learning_rate = 0.2;
    config.epochs = 200;
    config.seed = 5;
    const GruClassifier model = GruClassifier::fit(sequences, labels, config);
    int correct = 0;
    for (std::size_t i = 0; i < sequences.size(); ++i) {
        if (model.predict(sequences[i]) == labels[i]) ++correct;
    }
    CHECK(correct >= 58);  // >= 0.9 training accuracy
}

TEST_CASE("training is deterministic per seed") {
    Rng rng(63);
    auto [sequences, labels] = random_batch(rng, 6, 4, 5);
    GruConfig config;
    config.hidden_size = 4;
    config.epochs = 30;
    config.seed = 11;
    const GruClassifier a = GruClassifier::fit(sequences, labels, config);
    const GruClassifier b = GruClassifier::fit(sequences, labels, config);
    CHECK(a.params().theta == b.params().theta);
}

TEST_CASE("non-finite loss raises TrainingDiverged with the epoch") {
    std::vector<Sequence> sequences{Sequence(3, std::vector<double>(4, 0.0))};
    sequences[0][1][2] = std::nan("");
    std::vector<int> labels{1};
    GruConfig config;
    config.hidden_size = 2;
    config.epochs = 5;
    try {
        GruClassifier::fit(sequences, labels, config);
        FAIL("expected TrainingDiverged");
    } catch (const TrainingDiverged& err) {
        CHECK(err.epoch == 0);
    }
}

TEST_CASE("prediction thresholds at 0.5 with ties toward 0") {
    // predict() must agree with probability() > 0.5 on real inputs.
    Rng rng(64);
    auto [sequences, labels] = random_batch(rng, 4, 3, 4);
    GruConfig config;
    config.hidden_size = 3;
    config.epochs = 10;
    config.seed = 2;
    const GruClassifier model = GruClassifier::fit(sequences, labels, config);
    for (const Sequence& seq : sequences) {
        CHECK(model.predict(seq) == (model.probability(seq) > 0.5 ? 1 : 0));
    }
}

TEST_CASE("batch validation rejects malformed inputs") {
    CHECK_THROWS_AS(GruClassifier::fit({}, {}, GruConfig{}), InvalidArgument);
    std::vector<Sequence> sequences{Sequence(3, std::vector<double>(4, 0.0))};
    CHECK_THROWS_AS(GruClassifier::fit(sequences, {1, 0}, GruConfig{}), InvalidArgument);
    GruConfig bad;
    bad.hidden_size = 0;
    CHECK_THROWS_AS(GruClassifier::fit(sequences, {1}, bad), InvalidArgument);
}

TEST_CASE("trained models serialize to json for debugging") {
    Rng rng(65);
    auto [sequences, labels] = random_batch(rng, 4, 3, 4);
    GruConfig config;
    config.hidden_size = 3;
    config.epochs = 5;
    const GruClassifier model = GruClassifier::fit(sequences, labels, config);
    const nlohmann::json doc = model.to_json();
    CHECK(doc["hidden_size"] == 3);
    CHECK(doc["input_size"] == 4);
    CHECK(doc["theta"].size() == model.params().size());
}

TEST_CASE("parameter block offsets tile the flat vector exactly") {
    const GruParams p = GruParams::zeros(7, 3);
    CHECK(p.wz() == 0u);
    CHECK(p.wr() - p.wz() == 21u);
    CHECK(p.uz() - p.wc() == 21u);
    CHECK(p.ur() - p.uz() == 9u);
    CHECK(p.bz() - p.uc() == 9u);
    CHECK(p.b_out() - p.w_out() == 3u);
    CHECK(p.size() == 3u * 21 + 3u * 9 + 3u * 3 + 3 + 1);
    CHECK(p.b_out() + 1 == p.size());
}
