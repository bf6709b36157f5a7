#include "percept/predictors.hpp"

#include <algorithm>

#include "percept/features.hpp"
#include "percept/rng.hpp"

namespace percept {

std::vector<std::size_t> PredictionInput::all_demos() const {
    std::vector<std::size_t> all = demos_nonpersonalized;
    all.insert(all.end(), demos_personalized.begin(), demos_personalized.end());
    return all;
}

BinaryLabel wr_predict(std::span<const BinaryLabel> demo_labels, std::uint64_t seed) {
    if (demo_labels.empty()) {
        throw InvalidArgument("wr_predict: demonstration set is empty");
    }
    int positives = 0;
    for (BinaryLabel label : demo_labels) positives += label_value(label);
    const double p = static_cast<double>(positives) / static_cast<double>(demo_labels.size());
    Rng rng(seed);
    return rng.next_double() < p ? BinaryLabel::Positive : BinaryLabel::Negative;
}

BinaryLabel mock_llm_predict(const Dataset& dataset, std::span<const std::size_t> demos,
                             const ObservationSet& query, AblationLevel ablation) {
    if (demos.empty()) return BinaryLabel::Negative;  // documented neutral default
    const std::vector<double> query_features =
        flatten_features(apply_ablation(query, ablation));

    bool have_best = false;
    double best_distance = 0.0;
    std::string_view best_episode;
    BinaryLabel best_label = BinaryLabel::Negative;
    for (std::size_t idx : demos) {
        const LabeledExample& demo = dataset.at(idx);
        const std::vector<double> features =
            flatten_features(apply_ablation(demo.observations, ablation));
        const double distance = euclidean_distance(features, query_features);
        const bool wins = !have_best || distance < best_distance ||
                          (distance == best_distance && demo.episode_id < best_episode);
        if (wins) {
            have_best = true;
            best_distance = distance;
            best_episode = demo.episode_id;
            best_label = demo.label;
        }
    }
    return best_label;
}

PredictionOutcome WeightedRandomPredictor::predict(const PredictionInput& input) {
    std::vector<BinaryLabel> labels;
    for (std::size_t idx : input.all_demos()) {
        labels.push_back(input.dataset->at(idx).label);
    }
    PredictionOutcome out;
    out.label = wr_predict(labels, input.seed);
    return out;
}

namespace {

void collect_training_set(const PredictionInput& input,
                          std::vector<std::vector<double>>& features,
                          std::vector<int>& labels) {
    for (std::size_t idx : input.all_demos()) {
        const LabeledExample& demo = input.dataset->at(idx);
        features.push_back(flatten_features(apply_ablation(demo.observations, input.ablation)));
        labels.push_back(label_value(demo.label));
    }
}

}  // namespace

PredictionOutcome RandomForestPredictor::predict(const PredictionInput& input) {
    std::vector<std::vector<double>> features;
    std::vector<int> labels;
    collect_training_set(input, features, labels);
    // Trained from scratch on exactly the K demonstrations of this call.
    RfConfig config = config_;
    config.seed = derive_seed(config_.seed, input.seed);
    const RandomForest forest = RandomForest::fit(features, labels, config);
    PredictionOutcome out;
    out.label = label_from_int(
        forest.predict(flatten_features(apply_ablation(*input.query, input.ablation))));
    return out;
}

PredictionOutcome GruPredictor::predict(const PredictionInput& input) {
    std::vector<Sequence> sequences;
    std::vector<int> labels;
    for (std::size_t idx : input.all_demos()) {
        const LabeledExample& demo = input.dataset->at(idx);
        sequences.push_back(timestep_slices(apply_ablation(demo.observations, input.ablation)));
        labels.push_back(label_value(demo.label));
    }
    GruConfig config = config_;
    config.seed = derive_seed(config_.seed, input.seed);
    const GruClassifier model = GruClassifier::fit(sequences, labels, config);
    PredictionOutcome out;
    out.label = label_from_int(
        model.predict(timestep_slices(apply_ablation(*input.query, input.ablation))));
    return out;
}

PredictionOutcome MockLlmPredictor::predict(const PredictionInput& input) {
    PredictionOutcome out;
    out.label = mock_llm_predict(*input.dataset, input.all_demos(), *input.query,
                                 input.ablation);
    return out;
}

PredictionOutcome LlmPredictor::predict(const PredictionInput& input) {
    const InstructionTemplate instruction =
        build_instruction(input.dimension, cot_, templates_);

    std::vector<SerializedExample> nonpersonalized;
    std::vector<SerializedExample> personalized;
    if (!zero_shot_) {
        for (std::size_t idx : input.demos_nonpersonalized) {
            nonpersonalized.push_back(
                serialize_example(input.dataset->at(idx), true, input.ablation));
        }
        for (std::size_t idx : input.demos_personalized) {
            personalized.push_back(
                serialize_example(input.dataset->at(idx), true, input.ablation));
        }
    }
    SerializedExample query =
        serialize_example(*input.query, input.dimension, std::nullopt, input.ablation);
    const PromptContext context =
        build_context(instruction, std::move(nonpersonalized), std::move(personalized),
                      std::move(query));

    PredictionOutcome out;
    out.prompt = render_prompt(context);
    const CompletionResponse response = client_->complete(backend_, out.prompt);
    out.response = response.text;
    try {
        out.label = parse_response(response.text, input.dimension).label;
    } catch (const UnparseableResponse&) {
        out.unparseable = true;  // surfaced, counted incorrect by the harness
    }
    return out;
}

LocalBackend make_mock_completion_backend() {
    return [](const std::string& prompt) -> std::string {
        const ParsedPromptText parsed = parse_prompt_text(prompt);
        const std::string key(label_key(parsed.dimension));
        if (parsed.demonstrations.empty()) return key + ": 0";

        const std::vector<double> query_features = flatten_features(parsed.query);
        bool have_best = false;
        double best_distance = 0.0;
        int best_label = 0;
        for (const ParsedExampleText& demo : parsed.demonstrations) {
            const std::vector<double> features = flatten_features(demo.observations);
            const double distance = euclidean_distance(features, query_features);
            if (!have_best || distance < best_distance) {  // tie -> earliest demo
                have_best = true;
                best_distance = distance;
                best_label = label_value(*demo.label);
            }
        }
        return key + ": " + std::to_string(best_label);
    };
}

}  // namespace percept
