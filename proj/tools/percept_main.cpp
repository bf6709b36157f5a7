// Operator entry point: synthetic data generation, split management,
// experiment runs against mock or live backends, cache management, reports.
//
// Exit codes: 0 success, 1 usage/config error, 2 runtime error (backend/cache).

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "percept/dataset_io.hpp"
#include "percept/eval.hpp"
#include "percept/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct WorkspacePaths {
    fs::path root;
    fs::path dataset() const { return root / "dataset.json"; }
    fs::path split() const { return root / "split.json"; }
    fs::path cache() const { return root / "cache.ndjson"; }
    fs::path backends() const { return root / "backends.json"; }
    fs::path runs() const { return root / "runs"; }
    fs::path reports() const { return root / "reports"; }
};

void require_file(const std::string& path, const char* what) {
    if (!fs::exists(path)) {
        throw percept::InvalidArgument(std::string(what) + " not found: " + path);
    }
}

std::map<std::string, percept::BackendConfig> load_backends(const std::string& path) {
    require_file(path, "backends file");
    std::ifstream in(path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& ex) {
        throw percept::InvalidArgument("backends file: malformed JSON: " +
                                       std::string(ex.what()));
    }
    std::map<std::string, percept::BackendConfig> backends;
    for (const json& b : doc.at("backends")) {
        percept::BackendConfig config;
        config.name = b.at("name").get<std::string>();
        config.base_url = b.at("base_url").get<std::string>();
        config.path = b.value("path", config.path);
        config.model_id = b.at("model_id").get<std::string>();
        config.api_key_env = b.value("api_key_env", std::string{});
        config.temperature = b.value("temperature", 0.0);
        config.max_output_tokens = b.value("max_output_tokens", 512);
        config.request_timeout_seconds = b.value("request_timeout_seconds", 30.0);
        config.validate();
        backends.emplace(config.name, std::move(config));
    }
    return backends;
}

percept::BackendConfig mock_backend_config() {
    percept::BackendConfig config;
    config.name = "mock";
    config.base_url = "local://mock";
    config.model_id = "mock-1nn-v1";
    config.temperature = 0.0;
    return config;
}

int cmd_gen(const std::string& config_path, const std::string& out_path,
            std::optional<std::uint64_t> seed) {
    require_file(config_path, "generator config");
    percept::GenConfig config = percept::load_gen_config(config_path);
    if (seed.has_value()) config.master_seed = *seed;
    const percept::Dataset dataset = percept::generate_dataset(config);
    percept::save_dataset(dataset, out_path);

    std::array<int, 3> counts{0, 0, 0};
    for (const percept::LabeledExample& ex : dataset.examples()) {
        ++counts[percept::dimension_index(ex.dimension)];
    }
    std::printf("wrote %s: %zu examples from %zu participants\n", out_path.c_str(),
                dataset.size(), dataset.participant_count());
    for (percept::PerceptionDimension dim : percept::kAllDimensions) {
        std::printf("  %-11s %d examples\n", percept::to_string(dim).c_str(),
                    counts[percept::dimension_index(dim)]);
    }
    return kExitOk;
}

int cmd_split(const std::string& dataset_path, const std::string& out_path,
              std::uint64_t seed, double test, double train, double validation) {
    require_file(dataset_path, "dataset");
    const percept::Dataset dataset = percept::load_dataset(dataset_path);
    percept::SplitSpec spec{test, train, validation, seed};
    const percept::ParticipantSplit split = percept::split_participants(dataset, spec);
    percept::save_split(split, out_path);
    std::printf("wrote %s: %zu test / %zu train / %zu validation participants\n",
                out_path.c_str(), split.test.size(), split.train.size(),
                split.validation.size());
    return kExitOk;
}

int cmd_init(const std::string& workspace, const std::string& gen_config_path,
             std::optional<std::uint64_t> seed, std::uint64_t split_seed) {
    WorkspacePaths ws{fs::path(workspace)};
    fs::create_directories(ws.root);
    fs::create_directories(ws.runs());
    fs::create_directories(ws.reports());
    int rc = cmd_gen(gen_config_path, ws.dataset().string(), seed);
    if (rc != kExitOk) return rc;
    return cmd_split(ws.dataset().string(), ws.split().string(), split_seed, 0.4, 0.4, 0.2);
}

int cmd_run(const std::string& config_path, const std::string& workspace,
            const std::string& backend_flag, const std::string& backends_path,
            bool replay, std::optional<int> runs_override, int jobs, bool no_prompts,
            const std::string& out_dir) {
    require_file(config_path, "experiment config");
    WorkspacePaths ws{fs::path(workspace)};
    require_file(ws.dataset().string(), "workspace dataset (run `percept init` first)");
    require_file(ws.split().string(), "workspace split (run `percept init` first)");

    percept::ExperimentConfig config = percept::load_experiment_config(config_path);
    if (runs_override.has_value()) config.runs = *runs_override;
    config.validate();

    const percept::Dataset dataset = percept::load_dataset(ws.dataset().string());
    const percept::ParticipantSplit split = percept::load_split(ws.split().string());

    const bool has_llm_models =
        std::any_of(config.roster.begin(), config.roster.end(), [](const auto& m) {
            return m.kind == percept::ModelKind::Llm ||
                   m.kind == percept::ModelKind::ZeroShotLlm;
        });

    percept::ClientOptions client_options;
    client_options.mode = replay ? percept::ClientMode::Replay : percept::ClientMode::Live;
    percept::CompletionClient client(client_options);

    std::size_t imported = 0;
    if (fs::exists(ws.cache())) {
        imported = client.cache_import(ws.cache().string());
    }
    if (replay && has_llm_models && imported == 0) {
        throw percept::CacheMiss(
            "replay mode requires a warm cache; " + ws.cache().string() +
            (fs::exists(ws.cache()) ? " is empty" : " does not exist"));
    }

    percept::PredictorFactory factory;
    if (has_llm_models && backend_flag == "mock") {
        client.set_local_backend(percept::make_mock_completion_backend());
        std::map<std::string, percept::BackendConfig> backends;
        backends.emplace("mock", mock_backend_config());
        percept::PredictorFactory llm_factory =
            percept::llm_predictor_factory(&client, std::move(backends));
        factory = [llm_factory](const percept::ModelSpec& spec) {
            percept::ModelSpec resolved = spec;
            if (spec.kind == percept::ModelKind::Llm ||
                spec.kind == percept::ModelKind::ZeroShotLlm) {
                resolved.backend = "mock";
            }
            return llm_factory(resolved);
        };
    } else if (has_llm_models) {
        const std::string path =
            backends_path.empty() ? ws.backends().string() : backends_path;
        std::map<std::string, percept::BackendConfig> backends = load_backends(path);
        if (backends.find(backend_flag) == backends.end()) {
            throw percept::InvalidArgument("backend '" + backend_flag + "' not found in " +
                                           path);
        }
        percept::PredictorFactory llm_factory =
            percept::llm_predictor_factory(&client, std::move(backends));
        const std::string forced = backend_flag;
        factory = [llm_factory, forced](const percept::ModelSpec& spec) {
            percept::ModelSpec resolved = spec;
            if (spec.kind == percept::ModelKind::Llm ||
                spec.kind == percept::ModelKind::ZeroShotLlm) {
                resolved.backend = forced;
            }
            return llm_factory(resolved);
        };
    } else {
        factory = percept::offline_predictor_factory();
    }

    percept::RunOptions options;
    options.jobs = jobs;
    options.record_prompts = !no_prompts;
    const std::vector<percept::RunRecord> records =
        percept::run_experiment(dataset, split, config, factory, options);

    const fs::path out_base = out_dir.empty() ? ws.runs() : fs::path(out_dir);
    fs::create_directories(out_base);
    const std::string archive_path = (out_base / (config.rq_id + ".json")).string();
    const std::string csv_path = (out_base / (config.rq_id + ".csv")).string();
    percept::save_archive(config, records, archive_path);
    percept::write_run_csv(records, csv_path);

    if (client.cache_size() > imported) {
        client.cache_export(ws.cache().string());
    }

    int unparseable = 0;
    int errors = 0;
    for (const percept::RunRecord& record : records) {
        unparseable += record.unparseable_count;
        errors += record.error_count;
    }
    std::printf("wrote %s (%zu run records) and %s\n", archive_path.c_str(),
                records.size(), csv_path.c_str());
    if (unparseable > 0) std::printf("  unparseable responses: %d\n", unparseable);
    if (errors > 0) std::printf("  per-example errors: %d\n", errors);
    return kExitOk;
}

int cmd_report(const std::string& archive_path, const std::string& out_csv) {
    require_file(archive_path, "run archive");
    const percept::Archive archive = percept::load_archive(archive_path);
    if (archive.records.empty()) {
        std::printf("no records in %s\n", archive_path.c_str());
        return kExitOk;
    }
    const std::vector<percept::AggregateRow> rows = percept::aggregate(archive.records);

    std::printf("%-16s %-11s %4s %4s %-20s %5s %9s %9s %6s\n", "model", "dimension", "L",
                "M", "ablation", "runs", "mean_acc", "std_err", "unpar");
    for (const percept::AggregateRow& row : rows) {
        char se[16];
        if (row.std_error.has_value()) {
            std::snprintf(se, sizeof(se), "%.4f", *row.std_error);
        } else {
            std::snprintf(se, sizeof(se), "%s", "-");
        }
        std::printf("%-16s %-11s %4d %4d %-20s %5d %9.4f %9s %6d\n", row.model.c_str(),
                    percept::to_string(row.dimension).c_str(), row.condition.l,
                    row.condition.m, percept::to_string(row.condition.ablation).c_str(),
                    row.runs, row.mean_accuracy, se, row.unparseable_total);
    }

    // Pairwise comparisons between models evaluated under the same condition.
    struct GroupKey {
        std::string dim;
        int l;
        int m;
        std::string ablation;
        bool operator<(const GroupKey& other) const {
            return std::tie(dim, l, m, ablation) <
                   std::tie(other.dim, other.l, other.m, other.ablation);
        }
    };
    std::map<GroupKey, std::map<std::string, std::vector<percept::RunRecord>>> groups;
    for (const percept::RunRecord& record : archive.records) {
        GroupKey key{percept::to_string(record.dimension), record.condition.l,
                     record.condition.m, percept::to_string(record.condition.ablation)};
        groups[key][record.model].push_back(record);
    }
    bool header_printed = false;
    for (const auto& [key, models] : groups) {
        if (models.size() < 2) continue;
        if (!header_printed) {
            std::printf("\npaired comparisons (accuracy of B minus A, by run):\n");
            header_printed = true;
        }
        for (auto a = models.begin(); a != models.end(); ++a) {
            for (auto b = std::next(a); b != models.end(); ++b) {
                const percept::PairedComparison cmp =
                    percept::paired_compare(a->second, b->second);
                std::printf("  %s L=%d M=%d %s: A=%s B=%s diff=%+.4f", key.dim.c_str(),
                            key.l, key.m, key.ablation.c_str(), a->first.c_str(),
                            b->first.c_str(), cmp.mean_difference);
                if (cmp.t_statistic.has_value()) {
                    std::printf(" t=%.3f n=%d\n", *cmp.t_statistic, cmp.runs);
                } else {
                    std::printf(" (zero variance) n=%d\n", cmp.runs);
                }
            }
        }
    }

    if (!out_csv.empty()) {
        std::ofstream out(out_csv);
        if (!out) throw percept::Error("cannot open for writing: " + out_csv);
        out << "model,dimension,l,m,ablation,config_hash,runs,mean_accuracy,std_error,"
               "unparseable_total\n";
        char mean[32], se[32];
        for (const percept::AggregateRow& row : rows) {
            std::snprintf(mean, sizeof(mean), "%.6f", row.mean_accuracy);
            if (row.std_error.has_value()) {
                std::snprintf(se, sizeof(se), "%.6f", *row.std_error);
            } else {
                se[0] = '\0';
            }
            out << row.model << "," << percept::to_string(row.dimension) << ","
                << row.condition.l << "," << row.condition.m << ","
                << percept::to_string(row.condition.ablation) << "," << row.config_hash
                << "," << row.runs << "," << mean << "," << se << ","
                << row.unparseable_total << "\n";
        }
        std::printf("wrote %s\n", out_csv.c_str());
    }
    return kExitOk;
}

int cmd_cache(const std::string& workspace, const std::string& export_path,
              const std::string& import_path) {
    WorkspacePaths ws{fs::path(workspace)};
    percept::CompletionClient client;
    std::size_t existing = 0;
    if (fs::exists(ws.cache())) {
        existing = client.cache_import(ws.cache().string());
    }
    if (!import_path.empty()) {
        require_file(import_path, "cache file");
        const std::size_t imported = client.cache_import(import_path);
        client.cache_export(ws.cache().string());
        std::printf("imported %zu entries (%zu already present); cache now holds %zu\n",
                    imported, existing, client.cache_size());
    }
    if (!export_path.empty()) {
        const std::size_t exported = client.cache_export(export_path);
        std::printf("exported %zu entries to %s\n", exported, export_path.c_str());
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Few-shot human-perception prediction harness for robot navigation"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("gen", "Generate a synthetic labeled dataset");
    std::string gen_config, gen_out = "dataset.json";
    std::optional<std::uint64_t> gen_seed;
    gen->add_option("--config", gen_config, "Generator config JSON")->required();
    gen->add_option("--out", gen_out, "Output dataset path");
    gen->add_option("--seed", gen_seed, "Override the config master seed");

    auto* split = app.add_subcommand("split", "Create a participant split");
    std::string split_dataset, split_out = "split.json";
    std::uint64_t split_seed = 0;
    double frac_test = 0.4, frac_train = 0.4, frac_val = 0.2;
    split->add_option("--dataset", split_dataset, "Dataset JSON")->required();
    split->add_option("--out", split_out, "Output split path");
    split->add_option("--seed", split_seed, "Shuffle seed");
    split->add_option("--test", frac_test, "Test fraction");
    split->add_option("--train", frac_train, "Train fraction");
    split->add_option("--val", frac_val, "Validation fraction");

    auto* init = app.add_subcommand("init", "Initialize a workspace (dataset + split)");
    std::string init_workspace, init_gen_config;
    std::optional<std::uint64_t> init_seed;
    std::uint64_t init_split_seed = 0;
    init->add_option("--workspace", init_workspace, "Workspace directory")->required();
    init->add_option("--gen-config", init_gen_config, "Generator config JSON")->required();
    init->add_option("--seed", init_seed, "Override the generator master seed");
    init->add_option("--split-seed", init_split_seed, "Participant split seed");

    auto* run = app.add_subcommand("run", "Run an experiment preset");
    std::string run_config, run_workspace, run_backend = "mock", run_backends, run_out;
    bool run_replay = false, run_no_prompts = false;
    std::optional<int> run_runs;
    int run_jobs = 1;
    run->add_option("--config", run_config, "Experiment config JSON")->required();
    run->add_option("--workspace", run_workspace, "Workspace directory")->required();
    run->add_option("--backend", run_backend, "LLM backend name, or 'mock' (default)");
    run->add_option("--backends", run_backends, "Backends JSON (default: workspace file)");
    run->add_flag("--replay", run_replay, "Serve completions from the cache only");
    run->add_option("--runs", run_runs, "Override the run count");
    run->add_option("--jobs", run_jobs, "Parallel worker threads");
    run->add_flag("--no-prompts", run_no_prompts, "Do not store prompts in the archive");
    run->add_option("--out", run_out, "Output directory (default: workspace runs/)");

    auto* report = app.add_subcommand("report", "Aggregate a run archive");
    std::string report_archive, report_out;
    report->add_option("--archive", report_archive, "Run archive JSON")->required();
    report->add_option("--out", report_out, "Also write the aggregate table as CSV");

    auto* cache = app.add_subcommand("cache", "Export or import the response cache");
    std::string cache_workspace, cache_export, cache_import;
    cache->add_option("--workspace", cache_workspace, "Workspace directory")->required();
    cache->add_option("--export", cache_export, "Write the workspace cache to this file");
    cache->add_option("--import", cache_import, "Merge this file into the workspace cache");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen(gen_config, gen_out, gen_seed);
        if (split->parsed()) {
            return cmd_split(split_dataset, split_out, split_seed, frac_test, frac_train,
                             frac_val);
        }
        if (init->parsed()) {
            return cmd_init(init_workspace, init_gen_config, init_seed, init_split_seed);
        }
        if (run->parsed()) {
            return cmd_run(run_config, run_workspace, run_backend, run_backends,
                           run_replay, run_runs, run_jobs, run_no_prompts, run_out);
        }
        if (report->parsed()) return cmd_report(report_archive, report_out);
        if (cache->parsed()) return cmd_cache(cache_workspace, cache_export, cache_import);
    } catch (const percept::InvalidArgument& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return kExitUsage;
    } catch (const percept::EmptyEvalSet& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return kExitUsage;
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return kExitRuntime;
    }
    return kExitUsage;
}
