#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "percept/episode.hpp"
#include "percept/llm_client.hpp"
#include "percept/predictors.hpp"
#include "percept/sampler.hpp"

namespace percept {

// ---- Participant splits -------------------------------------------------------

struct SplitSpec {
    double test_fraction{0.4};
    double train_fraction{0.4};
    double validation_fraction{0.2};
    std::uint64_t seed{0};

    void validate() const;
};

/// Disjoint participant sets; the seed is kept so downstream selections
/// (evaluation sets) stay pinned to the split.
struct ParticipantSplit {
    std::vector<std::string> test;
    std::vector<std::string> train;
    std::vector<std::string> validation;
    std::uint64_t seed{0};
};

/// Seeded shuffle, then a floor-and-largest-remainder cut (remainder ties
/// favor training, then testing). The same split is reused by every
/// experiment in a workspace.
ParticipantSplit split_participants(const Dataset& dataset, const SplitSpec& spec);

nlohmann::json split_to_json(const ParticipantSplit& split);
ParticipantSplit split_from_json(const nlohmann::json& doc);
void save_split(const ParticipantSplit& split, const std::string& path);
ParticipantSplit load_split(const std::string& path);

// ---- Evaluation sets ----------------------------------------------------------

struct EvalEntry {
    std::string participant_id;
    std::size_t positive_example{0};
    std::size_t negative_example{0};
    std::vector<std::size_t> personalization_pool;  // >= 4 remaining examples
};

/// One positive and one negative evaluation example per qualifying test
/// participant, so chance accuracy is exactly 0.5.
struct EvalSet {
    PerceptionDimension dimension{PerceptionDimension::Competence};
    std::vector<EvalEntry> entries;

    /// Evaluation example indices, entry order, positive before negative.
    std::vector<std::size_t> eval_examples() const;
};

/// Keeps participants with at least one positive, one negative, and four
/// additional examples for this dimension; the eval pair is a seeded random
/// choice. Throws EmptyEvalSet when nobody qualifies.
EvalSet select_eval_set(std::span<const std::string> test_participants,
                        const Dataset& dataset, PerceptionDimension dimension,
                        std::uint64_t seed);

// ---- Experiment configuration ---------------------------------------------------

enum class ModelKind { MockLlm, RandomForestModel, GruModel, WeightedRandom, Llm, ZeroShotLlm };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(std::string_view name);

struct ModelSpec {
    std::string name;
    ModelKind kind{ModelKind::MockLlm};
    bool cot{false};          // LLM kinds only
    std::string backend;      // LLM kinds: backend name resolved by the factory
    RfConfig rf;
    GruConfig gru;

    bool requires_demos() const {
        return kind == ModelKind::RandomForestModel || kind == ModelKind::GruModel ||
               kind == ModelKind::WeightedRandom;
    }
};

/// One cell of an experiment grid: demonstration counts plus the ablation.
struct Condition {
    int l{0};  // non-personalized demos
    int m{0};  // personalized demos
    bool balanced{true};
    AblationLevel ablation{AblationLevel::Full};

    int k() const { return l + m; }
};

struct ExperimentConfig {
    std::string rq_id;
    std::vector<PerceptionDimension> dimensions{kAllDimensions.begin(), kAllDimensions.end()};
    std::vector<ModelSpec> roster;
    std::vector<Condition> conditions;
    int runs{25};
    std::uint64_t master_seed{0};

    void validate() const;
};

nlohmann::json experiment_to_json(const ExperimentConfig& config);
ExperimentConfig experiment_from_json(const nlohmann::json& doc);
ExperimentConfig load_experiment_config(const std::string& path);

/// Stable identifier for (model, condition) pairs, used in CSV rows.
std::string config_hash(const ModelSpec& model, const Condition& condition);

// ---- Run records ---------------------------------------------------------------

struct ExampleRecord {
    std::string eval_episode_id;
    std::string participant_id;
    std::vector<std::string> demos_nonpersonalized;  // episode ids, prompt order
    std::vector<std::string> demos_personalized;
    std::optional<int> prediction;
    bool correct{false};
    bool unparseable{false};
    std::string error;     // sampling/backend failure, counted incorrect
    std::string prompt;    // LLM models, when prompt recording is on
    std::string response;
};

struct RunRecord {
    int run_id{0};
    std::string model;
    PerceptionDimension dimension{PerceptionDimension::Competence};
    Condition condition;
    std::string config_hash;
    double accuracy{0.0};
    int unparseable_count{0};
    int error_count{0};
    std::vector<ExampleRecord> examples;
};

// ---- Running experiments --------------------------------------------------------

using PredictorFactory = std::function<std::unique_ptr<Predictor>(const ModelSpec&)>;

/// Factory for the models that need no network: mock_llm, rf, gru, wr.
/// LLM kinds throw InvalidArgument.
PredictorFactory offline_predictor_factory();

/// Extends the offline factory with LLM kinds completed through `client`
/// using the named backend configs.
PredictorFactory llm_predictor_factory(CompletionClient* client,
                                       std::map<std::string, BackendConfig> backends);

struct RunOptions {
    int jobs{1};
    bool record_prompts{true};
};

/// The full protocol: per (dimension, condition, run), demonstrations are
/// sampled once per evaluation example and every model in the roster is
/// evaluated on identical demos and queries. Supervised models are skipped at
/// K = 0. Per-example sampling and backend errors are recorded (and counted
/// incorrect); configuration errors abort. Deterministic given the master
/// seed regardless of the job count.
std::vector<RunRecord> run_experiment(const Dataset& dataset, const ParticipantSplit& split,
                                      const ExperimentConfig& config,
                                      const PredictorFactory& factory,
                                      const RunOptions& options = {});

// ---- Aggregation and reports -----------------------------------------------------

struct AggregateRow {
    std::string model;
    PerceptionDimension dimension{PerceptionDimension::Competence};
    Condition condition;
    std::string config_hash;
    int runs{0};
    double mean_accuracy{0.0};
    std::optional<double> std_error;  // absent when runs == 1
    int unparseable_total{0};
};

std::vector<AggregateRow> aggregate(std::span<const RunRecord> records);

struct PairedComparison {
    double mean_difference{0.0};        // mean(b) - mean(a), paired by run id
    std::optional<double> t_statistic;  // absent when the variance is zero
    int runs{0};
    bool zero_variance{false};
};

/// Pairs run-level accuracies of two record groups by run_id; throws
/// InvalidArgument when the run id sets differ.
PairedComparison paired_compare(std::span<const RunRecord> a, std::span<const RunRecord> b);

// ---- Persistence -----------------------------------------------------------------

/// CSV: run_id,model,dimension,config_hash,accuracy,unparseable_count
void write_run_csv(std::span<const RunRecord> records, const std::string& path);

nlohmann::json archive_to_json(const ExperimentConfig& config,
                               std::span<const RunRecord> records);
void save_archive(const ExperimentConfig& config, std::span<const RunRecord> records,
                  const std::string& path);

struct Archive {
    ExperimentConfig config;
    std::vector<RunRecord> records;
};
Archive load_archive(const std::string& path);

}  // namespace percept
