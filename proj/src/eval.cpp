#include "percept/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include "percept/rng.hpp"

namespace percept {

using nlohmann::json;

// ---- Splits ---------------------------------------------------------------------

void SplitSpec::validate() const {
    if (test_fraction < 0.0 || train_fraction < 0.0 || validation_fraction < 0.0) {
        throw InvalidArgument("split: fractions must be nonnegative");
    }
    if (std::abs(test_fraction + train_fraction + validation_fraction - 1.0) > 1e-9) {
        throw InvalidArgument("split: fractions must sum to 1");
    }
}

ParticipantSplit split_participants(const Dataset& dataset, const SplitSpec& spec) {
    spec.validate();
    std::vector<std::string> ids = dataset.participants();
    const int p = static_cast<int>(ids.size());
    if (p < 5) {
        throw InvalidArgument("split: need at least 5 participants, have " +
                              std::to_string(p));
    }
    Rng rng(spec.seed);
    rng.shuffle(ids);

    // Floor-and-largest-remainder apportionment. Remainder ties favor
    // training, then testing, then validation.
    struct Part {
        double exact;
        int count;
        int priority;  // 0 = train wins ties
    };
    std::array<Part, 3> parts = {{
        {spec.test_fraction * p, 0, 1},
        {spec.train_fraction * p, 0, 0},
        {spec.validation_fraction * p, 0, 2},
    }};
    int assigned = 0;
    for (Part& part : parts) {
        part.count = static_cast<int>(std::floor(part.exact + 1e-12));
        assigned += part.count;
    }
    std::array<int, 3> order = {0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double ra = parts[a].exact - std::floor(parts[a].exact + 1e-12);
        const double rb = parts[b].exact - std::floor(parts[b].exact + 1e-12);
        if (ra != rb) return ra > rb;
        return parts[a].priority < parts[b].priority;
    });
    for (int i = 0; assigned < p; ++i, ++assigned) {
        ++parts[order[i % 3]].count;
    }

    ParticipantSplit split;
    split.seed = spec.seed;
    auto it = ids.begin();
    split.test.assign(it, it + parts[0].count);
    it += parts[0].count;
    split.train.assign(it, it + parts[1].count);
    it += parts[1].count;
    split.validation.assign(it, ids.end());
    return split;
}

json split_to_json(const ParticipantSplit& split) {
    return json{{"schema_version", 1},
                {"seed", split.seed},
                {"test", split.test},
                {"train", split.train},
                {"validation", split.validation}};
}

ParticipantSplit split_from_json(const json& doc) {
    ParticipantSplit split;
    split.seed = doc.at("seed").get<std::uint64_t>();
    split.test = doc.at("test").get<std::vector<std::string>>();
    split.train = doc.at("train").get<std::vector<std::string>>();
    split.validation = doc.at("validation").get<std::vector<std::string>>();
    return split;
}

void save_split(const ParticipantSplit& split, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path);
    out << split_to_json(split).dump(2) << "\n";
}

ParticipantSplit load_split(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open split file: " + path);
    json doc;
    in >> doc;
    return split_from_json(doc);
}

// ---- Eval sets -------------------------------------------------------------------

std::vector<std::size_t> EvalSet::eval_examples() const {
    std::vector<std::size_t> out;
    out.reserve(entries.size() * 2);
    for (const EvalEntry& entry : entries) {
        out.push_back(entry.positive_example);
        out.push_back(entry.negative_example);
    }
    return out;
}

EvalSet select_eval_set(std::span<const std::string> test_participants,
                        const Dataset& dataset, PerceptionDimension dimension,
                        std::uint64_t seed) {
    std::vector<std::string> participants(test_participants.begin(),
                                          test_participants.end());
    std::sort(participants.begin(), participants.end());

    EvalSet eval_set;
    eval_set.dimension = dimension;
    for (const std::string& pid : participants) {
        std::vector<std::size_t> positives, negatives;
        for (std::size_t idx : dataset.indices_for(pid)) {
            const LabeledExample& ex = dataset.at(idx);
            if (ex.dimension != dimension) continue;
            (ex.label == BinaryLabel::Positive ? positives : negatives).push_back(idx);
        }
        const std::size_t total = positives.size() + negatives.size();
        // Qualifies with >= 1 positive, >= 1 negative, and >= 4 examples
        // beyond the evaluation pair.
        if (positives.empty() || negatives.empty() || total < 6) continue;

        Rng rng(derive_seed(seed, pid));
        EvalEntry entry;
        entry.participant_id = pid;
        entry.positive_example = positives[rng.next_below(positives.size())];
        entry.negative_example = negatives[rng.next_below(negatives.size())];
        for (std::size_t idx : dataset.indices_for(pid)) {
            const LabeledExample& ex = dataset.at(idx);
            if (ex.dimension != dimension) continue;
            if (idx == entry.positive_example || idx == entry.negative_example) continue;
            entry.personalization_pool.push_back(idx);
        }
        eval_set.entries.push_back(std::move(entry));
    }
    if (eval_set.entries.empty()) {
        throw EmptyEvalSet("no test participant qualifies for dimension " +
                           to_string(dimension));
    }
    return eval_set;
}

// ---- Experiment configuration ------------------------------------------------------

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::MockLlm: return "mock_llm";
        case ModelKind::RandomForestModel: return "rf";
        case ModelKind::GruModel: return "gru";
        case ModelKind::WeightedRandom: return "wr";
        case ModelKind::Llm: return "llm";
        case ModelKind::ZeroShotLlm: return "zero_shot_llm";
    }
    throw InvalidArgument("unknown model kind");
}

ModelKind model_kind_from_string(std::string_view name) {
    if (name == "mock_llm") return ModelKind::MockLlm;
    if (name == "rf") return ModelKind::RandomForestModel;
    if (name == "gru") return ModelKind::GruModel;
    if (name == "wr") return ModelKind::WeightedRandom;
    if (name == "llm") return ModelKind::Llm;
    if (name == "zero_shot_llm") return ModelKind::ZeroShotLlm;
    throw InvalidArgument("unknown model kind: " + std::string(name));
}

void ExperimentConfig::validate() const {
    if (runs < 1) throw InvalidArgument("experiment: runs must be >= 1");
    if (dimensions.empty()) throw InvalidArgument("experiment: no dimensions");
    if (roster.empty()) throw InvalidArgument("experiment: empty roster");
    if (conditions.empty()) throw InvalidArgument("experiment: no conditions");
    std::vector<std::string> names;
    for (const ModelSpec& model : roster) {
        if (model.name.empty()) throw InvalidArgument("experiment: model without a name");
        names.push_back(model.name);
    }
    std::sort(names.begin(), names.end());
    if (std::adjacent_find(names.begin(), names.end()) != names.end()) {
        throw InvalidArgument("experiment: duplicate model names");
    }
    for (const Condition& condition : conditions) {
        if (condition.l < 0 || condition.m < 0) {
            throw InvalidArgument("experiment: negative demonstration count");
        }
    }
}

json experiment_to_json(const ExperimentConfig& config) {
    json roster = json::array();
    for (const ModelSpec& model : config.roster) {
        json m;
        m["name"] = model.name;
        m["kind"] = to_string(model.kind);
        if (model.kind == ModelKind::Llm || model.kind == ModelKind::ZeroShotLlm) {
            m["cot"] = model.cot;
            m["backend"] = model.backend;
        }
        if (model.kind == ModelKind::RandomForestModel) {
            m["rf"] = {{"tree_count", model.rf.tree_count},
                       {"max_depth", model.rf.max_depth},
                       {"features_per_split", model.rf.features_per_split},
                       {"bootstrap", model.rf.bootstrap},
                       {"seed", model.rf.seed}};
        }
        if (model.kind == ModelKind::GruModel) {
            m["gru"] = {{"hidden_size", model.gru.hidden_size},
                        {"learning_rate", model.gru.learning_rate},
                        {"epochs", model.gru.epochs},
                        {"seed", model.gru.seed}};
        }
        roster.push_back(std::move(m));
    }
    json conditions = json::array();
    for (const Condition& c : config.conditions) {
        conditions.push_back({{"l", c.l},
                              {"m", c.m},
                              {"balanced", c.balanced},
                              {"ablation", to_string(c.ablation)}});
    }
    json dims = json::array();
    for (PerceptionDimension d : config.dimensions) dims.push_back(to_string(d));
    return json{{"rq_id", config.rq_id},    {"dimensions", std::move(dims)},
                {"roster", std::move(roster)}, {"conditions", std::move(conditions)},
                {"runs", config.runs},      {"master_seed", config.master_seed}};
}

ExperimentConfig experiment_from_json(const json& doc) {
    ExperimentConfig config;
    config.rq_id = doc.at("rq_id").get<std::string>();
    if (doc.contains("dimensions")) {
        config.dimensions.clear();
        for (const json& d : doc.at("dimensions")) {
            config.dimensions.push_back(dimension_from_string(d.get<std::string>()));
        }
    }
    config.roster.clear();
    for (const json& m : doc.at("roster")) {
        ModelSpec model;
        model.name = m.at("name").get<std::string>();
        model.kind = model_kind_from_string(m.at("kind").get<std::string>());
        model.cot = m.value("cot", false);
        model.backend = m.value("backend", std::string{});
        if (m.contains("rf")) {
            const json& rf = m["rf"];
            model.rf.tree_count = rf.value("tree_count", model.rf.tree_count);
            model.rf.max_depth = rf.value("max_depth", model.rf.max_depth);
            model.rf.features_per_split =
                rf.value("features_per_split", model.rf.features_per_split);
            model.rf.bootstrap = rf.value("bootstrap", model.rf.bootstrap);
            model.rf.seed = rf.value("seed", model.rf.seed);
        }
        if (m.contains("gru")) {
            const json& gru = m["gru"];
            model.gru.hidden_size = gru.value("hidden_size", model.gru.hidden_size);
            model.gru.learning_rate = gru.value("learning_rate", model.gru.learning_rate);
            model.gru.epochs = gru.value("epochs", model.gru.epochs);
            model.gru.seed = gru.value("seed", model.gru.seed);
        }
        config.roster.push_back(std::move(model));
    }
    config.conditions.clear();
    for (const json& c : doc.at("conditions")) {
        Condition condition;
        condition.l = c.value("l", 0);
        condition.m = c.value("m", 0);
        condition.balanced = c.value("balanced", true);
        if (c.contains("ablation")) {
            condition.ablation = ablation_from_string(c["ablation"].get<std::string>());
        }
        config.conditions.push_back(condition);
    }
    config.runs = doc.value("runs", config.runs);
    config.master_seed = doc.value("master_seed", config.master_seed);
    config.validate();
    return config;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open experiment config: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& ex) {
        throw InvalidArgument("experiment config: malformed JSON in " + path + ": " +
                              ex.what());
    }
    return experiment_from_json(doc);
}

std::string config_hash(const ModelSpec& model, const Condition& condition) {
    std::string material = model.name;
    material += '\x1f';
    material += to_string(model.kind);
    material += '\x1f';
    material += model.cot ? "cot" : "nocot";
    material += '\x1f';
    material += model.backend;
    if (model.kind == ModelKind::RandomForestModel) {
        material += '\x1f';
        material += std::to_string(model.rf.tree_count) + "," +
                    std::to_string(model.rf.max_depth) + "," +
                    std::to_string(model.rf.features_per_split) + "," +
                    (model.rf.bootstrap ? "b1" : "b0") + "," +
                    std::to_string(model.rf.seed);
    }
    if (model.kind == ModelKind::GruModel) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%d,%.9g,%d,%llu", model.gru.hidden_size,
                      model.gru.learning_rate, model.gru.epochs,
                      static_cast<unsigned long long>(model.gru.seed));
        material += '\x1f';
        material += buf;
    }
    material += '\x1f';
    material += "l=" + std::to_string(condition.l) + ",m=" + std::to_string(condition.m) +
                "," + (condition.balanced ? "bal" : "unbal") + "," +
                to_string(condition.ablation);
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx",
                  static_cast<unsigned long long>(hash64(material)));
    return out;
}

// ---- Running experiments -------------------------------------------------------

PredictorFactory offline_predictor_factory() {
    return [](const ModelSpec& spec) -> std::unique_ptr<Predictor> {
        switch (spec.kind) {
            case ModelKind::MockLlm:
                return std::make_unique<MockLlmPredictor>(spec.name);
            case ModelKind::RandomForestModel:
                return std::make_unique<RandomForestPredictor>(spec.rf, spec.name);
            case ModelKind::GruModel:
                return std::make_unique<GruPredictor>(spec.gru, spec.name);
            case ModelKind::WeightedRandom:
                return std::make_unique<WeightedRandomPredictor>(spec.name);
            case ModelKind::Llm:
            case ModelKind::ZeroShotLlm:
                throw InvalidArgument("model '" + spec.name +
                                      "' needs an LLM backend; configure one or use the "
                                      "mock backend");
        }
        throw InvalidArgument("unknown model kind");
    };
}

PredictorFactory llm_predictor_factory(CompletionClient* client,
                                       std::map<std::string, BackendConfig> backends) {
    PredictorFactory offline = offline_predictor_factory();
    return [client, backends = std::move(backends),
            offline = std::move(offline)](const ModelSpec& spec) -> std::unique_ptr<Predictor> {
        if (spec.kind != ModelKind::Llm && spec.kind != ModelKind::ZeroShotLlm) {
            return offline(spec);
        }
        auto it = backends.find(spec.backend);
        if (it == backends.end()) {
            throw InvalidArgument("model '" + spec.name + "' references unknown backend '" +
                                  spec.backend + "'");
        }
        return std::make_unique<LlmPredictor>(client, it->second, spec.cot,
                                              spec.kind == ModelKind::ZeroShotLlm,
                                              spec.name);
    };
}

namespace {

/// Demonstrations for one evaluation example, shared by every model.
struct SampledDemos {
    std::vector<std::size_t> nonpersonalized;
    std::vector<std::size_t> personalized;
    std::string error;  // sampling failure, recorded per example
    std::uint64_t predict_seed{0};
};

struct EvalExampleRef {
    std::size_t example_index;
    const EvalEntry* entry;
};

}  // namespace

std::vector<RunRecord> run_experiment(const Dataset& dataset, const ParticipantSplit& split,
                                      const ExperimentConfig& config,
                                      const PredictorFactory& factory,
                                      const RunOptions& options) {
    config.validate();

    // Pinned per dimension: evaluation set and training pool.
    std::map<int, EvalSet> eval_sets;
    std::map<int, std::vector<std::size_t>> train_pools;
    for (PerceptionDimension dim : config.dimensions) {
        eval_sets.emplace(dimension_index(dim),
                          select_eval_set(split.test, dataset, dim,
                                          derive_seed(split.seed, "evalset", to_string(dim))));
        std::vector<std::size_t> pool;
        for (const std::string& pid : split.train) {
            for (std::size_t idx : dataset.indices_for(pid)) {
                if (dataset.at(idx).dimension == dim) pool.push_back(idx);
            }
        }
        std::sort(pool.begin(), pool.end());
        train_pools.emplace(dimension_index(dim), std::move(pool));
    }

    struct Task {
        PerceptionDimension dimension;
        const Condition* condition;
        int run_id;
    };
    std::vector<Task> tasks;
    for (PerceptionDimension dim : config.dimensions) {
        for (const Condition& condition : config.conditions) {
            for (int run = 0; run < config.runs; ++run) {
                tasks.push_back(Task{dim, &condition, run});
            }
        }
    }

    std::vector<std::vector<RunRecord>> slots(tasks.size());
    std::atomic<std::size_t> next_task{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&]() {
        for (;;) {
            const std::size_t task_id = next_task.fetch_add(1);
            if (task_id >= tasks.size() || failed.load()) return;
            const Task& task = tasks[task_id];
            try {
                const EvalSet& eval_set = eval_sets.at(dimension_index(task.dimension));
                const std::vector<std::size_t>& train_pool =
                    train_pools.at(dimension_index(task.dimension));
                // Documented per-run stream: master seed, run index, dimension.
                const std::uint64_t run_seed =
                    derive_seed(config.master_seed, "run",
                                static_cast<std::uint64_t>(task.run_id),
                                to_string(task.dimension));
                const Condition& condition = *task.condition;

                // Sample demonstrations once per evaluation example.
                std::vector<EvalExampleRef> eval_examples;
                for (const EvalEntry& entry : eval_set.entries) {
                    eval_examples.push_back(EvalExampleRef{entry.positive_example, &entry});
                    eval_examples.push_back(EvalExampleRef{entry.negative_example, &entry});
                }
                std::vector<SampledDemos> demos(eval_examples.size());
                for (std::size_t e = 0; e < eval_examples.size(); ++e) {
                    const EvalExampleRef& ref = eval_examples[e];
                    const LabeledExample& eval_example = dataset.at(ref.example_index);
                    // Shared across models; independent of the ablation level
                    // so ablation conditions compare on identical demos.
                    const std::uint64_t demo_seed = derive_seed(
                        run_seed, "demos", eval_example.episode_id,
                        static_cast<std::uint64_t>(condition.l),
                        static_cast<std::uint64_t>(condition.m));
                    demos[e].predict_seed = derive_seed(demo_seed, "predict");
                    try {
                        if (condition.l > 0) {
                            SamplerSpec spec{condition.l, 0, condition.balanced, demo_seed};
                            demos[e].nonpersonalized =
                                sample_nonpersonalized(dataset, train_pool,
                                                       eval_example.participant_id, spec,
                                                       task.dimension)
                                    .examples;
                        }
                        if (condition.m > 0) {
                            demos[e].personalized =
                                sample_personalized(dataset, ref.entry->personalization_pool,
                                                    eval_example.participant_id,
                                                    ref.example_index, condition.m,
                                                    derive_seed(demo_seed, "personalized"))
                                    .examples;
                        }
                    } catch (const InsufficientDemos& err) {
                        demos[e].error = err.what();
                    }
                }

                for (const ModelSpec& model : config.roster) {
                    if (condition.k() == 0 && model.requires_demos()) continue;
                    const std::unique_ptr<Predictor> predictor = factory(model);
                    RunRecord record;
                    record.run_id = task.run_id;
                    record.model = model.name;
                    record.dimension = task.dimension;
                    record.condition = condition;
                    record.config_hash = config_hash(model, condition);

                    int correct = 0;
                    for (std::size_t e = 0; e < eval_examples.size(); ++e) {
                        const LabeledExample& eval_example =
                            dataset.at(eval_examples[e].example_index);
                        ExampleRecord ex;
                        ex.eval_episode_id = eval_example.episode_id;
                        ex.participant_id = eval_example.participant_id;
                        for (std::size_t idx : demos[e].nonpersonalized) {
                            ex.demos_nonpersonalized.push_back(dataset.at(idx).episode_id);
                        }
                        for (std::size_t idx : demos[e].personalized) {
                            ex.demos_personalized.push_back(dataset.at(idx).episode_id);
                        }
                        if (!demos[e].error.empty()) {
                            ex.error = demos[e].error;
                        } else {
                            PredictionInput input;
                            input.dataset = &dataset;
                            input.demos_nonpersonalized = demos[e].nonpersonalized;
                            input.demos_personalized = demos[e].personalized;
                            input.query = &eval_example.observations;
                            input.query_episode_id = eval_example.episode_id;
                            input.dimension = task.dimension;
                            input.ablation = condition.ablation;
                            input.seed = demos[e].predict_seed;
                            try {
                                PredictionOutcome outcome = predictor->predict(input);
                                ex.unparseable = outcome.unparseable;
                                if (options.record_prompts) {
                                    ex.prompt = std::move(outcome.prompt);
                                    ex.response = std::move(outcome.response);
                                }
                                if (outcome.label.has_value()) {
                                    ex.prediction = label_value(*outcome.label);
                                    ex.correct = *outcome.label == eval_example.label;
                                }
                            } catch (const LlmError& err) {
                                ex.error = err.what();
                            } catch (const CacheMiss& err) {
                                ex.error = err.what();
                            }
                        }
                        if (ex.correct) ++correct;
                        if (ex.unparseable) ++record.unparseable_count;
                        if (!ex.error.empty()) ++record.error_count;
                        record.examples.push_back(std::move(ex));
                    }
                    record.accuracy = eval_examples.empty()
                                          ? 0.0
                                          : static_cast<double>(correct) /
                                                static_cast<double>(eval_examples.size());
                    slots[task_id].push_back(std::move(record));
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };

    const int jobs = std::max(1, options.jobs);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (int j = 0; j < jobs; ++j) threads.emplace_back(worker);
        for (std::thread& t : threads) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    std::vector<RunRecord> records;
    for (std::vector<RunRecord>& slot : slots) {
        for (RunRecord& record : slot) records.push_back(std::move(record));
    }
    return records;
}

// ---- Aggregation ------------------------------------------------------------------

std::vector<AggregateRow> aggregate(std::span<const RunRecord> records) {
    if (records.empty()) throw InvalidArgument("aggregate: no records");
    struct Group {
        const RunRecord* first;
        std::vector<double> accuracies;
        int unparseable{0};
    };
    std::map<std::string, Group> groups;
    for (const RunRecord& record : records) {
        const std::string key = record.model + "\x1f" + to_string(record.dimension) +
                                "\x1f" + record.config_hash;
        auto [it, inserted] = groups.emplace(key, Group{&record, {}, 0});
        it->second.accuracies.push_back(record.accuracy);
        it->second.unparseable += record.unparseable_count;
    }
    std::vector<AggregateRow> rows;
    for (const auto& [key, group] : groups) {
        AggregateRow row;
        row.model = group.first->model;
        row.dimension = group.first->dimension;
        row.condition = group.first->condition;
        row.config_hash = group.first->config_hash;
        row.runs = static_cast<int>(group.accuracies.size());
        double sum = 0.0;
        for (double a : group.accuracies) sum += a;
        row.mean_accuracy = sum / row.runs;
        if (row.runs > 1) {
            double ss = 0.0;
            for (double a : group.accuracies) {
                ss += (a - row.mean_accuracy) * (a - row.mean_accuracy);
            }
            row.std_error = std::sqrt(ss / (row.runs - 1)) / std::sqrt(row.runs);
        }
        row.unparseable_total = group.unparseable;
        rows.push_back(std::move(row));
    }
    return rows;
}

PairedComparison paired_compare(std::span<const RunRecord> a, std::span<const RunRecord> b) {
    std::map<int, double> acc_a, acc_b;
    for (const RunRecord& record : a) {
        if (!acc_a.emplace(record.run_id, record.accuracy).second) {
            throw InvalidArgument("paired_compare: duplicate run id on side a");
        }
    }
    for (const RunRecord& record : b) {
        if (!acc_b.emplace(record.run_id, record.accuracy).second) {
            throw InvalidArgument("paired_compare: duplicate run id on side b");
        }
    }
    if (acc_a.size() != acc_b.size() || acc_a.empty()) {
        throw InvalidArgument("paired_compare: run id sets differ or are empty");
    }
    std::vector<double> diffs;
    for (const auto& [run_id, accuracy] : acc_a) {
        auto it = acc_b.find(run_id);
        if (it == acc_b.end()) {
            throw InvalidArgument("paired_compare: run " + std::to_string(run_id) +
                                  " missing on side b");
        }
        diffs.push_back(it->second - accuracy);
    }

    PairedComparison out;
    out.runs = static_cast<int>(diffs.size());
    double sum = 0.0;
    for (double d : diffs) sum += d;
    out.mean_difference = sum / out.runs;
    double ss = 0.0;
    for (double d : diffs) ss += (d - out.mean_difference) * (d - out.mean_difference);
    const double sd = out.runs > 1 ? std::sqrt(ss / (out.runs - 1)) : 0.0;
    // Accuracies live on [0, 1]; spreads at rounding-noise scale are zero.
    if (out.runs > 1 && sd > 1e-9) {
        out.t_statistic = out.mean_difference / (sd / std::sqrt(out.runs));
    } else {
        out.zero_variance = true;
    }
    return out;
}

// ---- Persistence --------------------------------------------------------------------

void write_run_csv(std::span<const RunRecord> records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path);
    out << "run_id,model,dimension,config_hash,accuracy,unparseable_count\n";
    char accuracy[32];
    for (const RunRecord& record : records) {
        std::snprintf(accuracy, sizeof(accuracy), "%.6f", record.accuracy);
        out << record.run_id << "," << record.model << "," << to_string(record.dimension)
            << "," << record.config_hash << "," << accuracy << ","
            << record.unparseable_count << "\n";
    }
}

namespace {

json example_to_json(const ExampleRecord& ex) {
    json j;
    j["eval_episode_id"] = ex.eval_episode_id;
    j["participant_id"] = ex.participant_id;
    j["demos_nonpersonalized"] = ex.demos_nonpersonalized;
    j["demos_personalized"] = ex.demos_personalized;
    if (ex.prediction.has_value()) {
        j["prediction"] = *ex.prediction;
    } else {
        j["prediction"] = nullptr;
    }
    j["correct"] = ex.correct;
    j["unparseable"] = ex.unparseable;
    if (!ex.error.empty()) j["error"] = ex.error;
    if (!ex.prompt.empty()) j["prompt"] = ex.prompt;
    if (!ex.response.empty()) j["response"] = ex.response;
    return j;
}

ExampleRecord example_from_json(const json& j) {
    ExampleRecord ex;
    ex.eval_episode_id = j.at("eval_episode_id").get<std::string>();
    ex.participant_id = j.at("participant_id").get<std::string>();
    ex.demos_nonpersonalized = j.at("demos_nonpersonalized").get<std::vector<std::string>>();
    ex.demos_personalized = j.at("demos_personalized").get<std::vector<std::string>>();
    if (!j.at("prediction").is_null()) ex.prediction = j.at("prediction").get<int>();
    ex.correct = j.at("correct").get<bool>();
    ex.unparseable = j.at("unparseable").get<bool>();
    ex.error = j.value("error", std::string{});
    ex.prompt = j.value("prompt", std::string{});
    ex.response = j.value("response", std::string{});
    return ex;
}

}  // namespace

json archive_to_json(const ExperimentConfig& config, std::span<const RunRecord> records) {
    json recs = json::array();
    for (const RunRecord& record : records) {
        json r;
        r["run_id"] = record.run_id;
        r["model"] = record.model;
        r["dimension"] = to_string(record.dimension);
        r["condition"] = {{"l", record.condition.l},
                          {"m", record.condition.m},
                          {"balanced", record.condition.balanced},
                          {"ablation", to_string(record.condition.ablation)}};
        r["config_hash"] = record.config_hash;
        r["accuracy"] = record.accuracy;
        r["unparseable_count"] = record.unparseable_count;
        r["error_count"] = record.error_count;
        json examples = json::array();
        for (const ExampleRecord& ex : record.examples) {
            examples.push_back(example_to_json(ex));
        }
        r["examples"] = std::move(examples);
        recs.push_back(std::move(r));
    }
    return json{{"schema_version", 1},
                {"config", experiment_to_json(config)},
                {"records", std::move(recs)}};
}

void save_archive(const ExperimentConfig& config, std::span<const RunRecord> records,
                  const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path);
    out << archive_to_json(config, records).dump(2) << "\n";
}

Archive load_archive(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open archive: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& ex) {
        throw InvalidArgument("archive: malformed JSON in " + path + ": " + ex.what());
    }
    Archive archive;
    archive.config = experiment_from_json(doc.at("config"));
    for (const json& r : doc.at("records")) {
        RunRecord record;
        record.run_id = r.at("run_id").get<int>();
        record.model = r.at("model").get<std::string>();
        record.dimension = dimension_from_string(r.at("dimension").get<std::string>());
        const json& c = r.at("condition");
        record.condition.l = c.at("l").get<int>();
        record.condition.m = c.at("m").get<int>();
        record.condition.balanced = c.at("balanced").get<bool>();
        record.condition.ablation = ablation_from_string(c.at("ablation").get<std::string>());
        record.config_hash = r.at("config_hash").get<std::string>();
        record.accuracy = r.at("accuracy").get<double>();
        record.unparseable_count = r.at("unparseable_count").get<int>();
        record.error_count = r.at("error_count").get<int>();
        for (const json& ex : r.at("examples")) {
            record.examples.push_back(example_from_json(ex));
        }
        archive.records.push_back(std::move(record));
    }
    return archive;
}

}  // namespace percept
