#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "percept/episode.hpp"
#include "percept/gru.hpp"
#include "percept/llm_client.hpp"
#include "percept/prompt.hpp"
#include "percept/random_forest.hpp"
#include "percept/sampler.hpp"

namespace percept {

/// Everything a predictor sees for one evaluation example. Demonstrations are
/// dataset indices; the query is passed as raw observations so a predictor
/// can never read the evaluation label.
struct PredictionInput {
    const Dataset* dataset{nullptr};
    std::vector<std::size_t> demos_nonpersonalized;
    std::vector<std::size_t> demos_personalized;
    const ObservationSet* query{nullptr};
    std::string query_episode_id;
    PerceptionDimension dimension{PerceptionDimension::Competence};
    AblationLevel ablation{AblationLevel::Full};
    std::uint64_t seed{0};

    std::vector<std::size_t> all_demos() const;
    int k() const {
        return static_cast<int>(demos_nonpersonalized.size() + demos_personalized.size());
    }
};

struct PredictionOutcome {
    std::optional<BinaryLabel> label;
    bool unparseable{false};
    std::string prompt;    // populated by LLM predictors
    std::string response;  // raw model response, persisted verbatim
};

/// Uniform contract: every model maps (demos, query) to a binary label or a
/// typed error; the harness treats them interchangeably.
class Predictor {
public:
    virtual ~Predictor() = default;
    virtual std::string_view name() const = 0;
    /// False for models that can answer with an empty demonstration set.
    virtual bool requires_demos() const { return true; }
    virtual PredictionOutcome predict(const PredictionInput& input) = 0;
};

// ---- Core prediction routines (exposed for direct testing) -------------------

/// Samples from the demonstrations' label distribution: returns positive with
/// probability equal to the fraction of positive demo labels.
BinaryLabel wr_predict(std::span<const BinaryLabel> demo_labels, std::uint64_t seed);

/// 1-nearest-neighbor over flattened features; distance ties resolve to the
/// lexicographically smaller episode id. Empty demos return the neutral
/// default 0. Deliberately simple so its behavior is independently checkable.
BinaryLabel mock_llm_predict(const Dataset& dataset, std::span<const std::size_t> demos,
                             const ObservationSet& query, AblationLevel ablation);

// ---- Predictor implementations ------------------------------------------------

class WeightedRandomPredictor final : public Predictor {
public:
    explicit WeightedRandomPredictor(std::string name = "wr") : name_(std::move(name)) {}
    std::string_view name() const override { return name_; }
    PredictionOutcome predict(const PredictionInput& input) override;

private:
    std::string name_;
};

class RandomForestPredictor final : public Predictor {
public:
    explicit RandomForestPredictor(RfConfig config, std::string name = "rf")
        : config_(config), name_(std::move(name)) {}
    std::string_view name() const override { return name_; }
    PredictionOutcome predict(const PredictionInput& input) override;

private:
    RfConfig config_;
    std::string name_;
};

class GruPredictor final : public Predictor {
public:
    explicit GruPredictor(GruConfig config, std::string name = "gru")
        : config_(config), name_(std::move(name)) {}
    std::string_view name() const override { return name_; }
    PredictionOutcome predict(const PredictionInput& input) override;

private:
    GruConfig config_;
    std::string name_;
};

class MockLlmPredictor final : public Predictor {
public:
    explicit MockLlmPredictor(std::string name = "mock-llm") : name_(std::move(name)) {}
    std::string_view name() const override { return name_; }
    bool requires_demos() const override { return false; }
    PredictionOutcome predict(const PredictionInput& input) override;

private:
    std::string name_;
};

/// Full prompting pipeline: instruction + serialized demos + query rendered
/// into a prompt, completed by the backend, parsed back into a label. With
/// zero_shot set, demonstrations are ignored and K = 0.
class LlmPredictor final : public Predictor {
public:
    LlmPredictor(CompletionClient* client, BackendConfig backend, bool cot,
                 bool zero_shot = false, std::string name = "llm",
                 TemplateSet templates = default_templates())
        : client_(client),
          backend_(std::move(backend)),
          cot_(cot),
          zero_shot_(zero_shot),
          name_(std::move(name)),
          templates_(std::move(templates)) {}

    std::string_view name() const override { return name_; }
    bool requires_demos() const override { return false; }
    PredictionOutcome predict(const PredictionInput& input) override;

private:
    CompletionClient* client_;
    BackendConfig backend_;
    bool cot_;
    bool zero_shot_;
    std::string name_;
    TemplateSet templates_;
};

/// Deterministic in-process completion backend: parses the rendered prompt's
/// examples back into features and answers with the 1-nearest demonstration's
/// label ("<key>: <0|1>"). Ties resolve to the earliest demonstration in
/// prompt order; an empty context answers 0. Lets the whole render ->
/// complete -> parse path run offline.
LocalBackend make_mock_completion_backend();

}  // namespace percept
