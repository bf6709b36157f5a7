#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct CommandResult {
    int exit_code;
    std::string output;
};

/// Runs the CLI with stdout+stderr captured.
CommandResult run_cli(const std::string& args) {
    const std::string out_path =
        (fs::temp_directory_path() / "percept_cli_out.txt").string();
    const std::string command =
        std::string(PERCEPT_CLI_PATH) + " " + args + " > " + out_path + " 2>&1";
    const int status = std::system(command.c_str());
    std::ifstream in(out_path);
    std::ostringstream buf;
    buf << in.rdbuf();
    std::remove(out_path.c_str());
    return CommandResult{WEXITSTATUS(status), buf.str()};
}

std::string repo_file(const std::string& relative) {
    return std::string(PERCEPT_REPO_DIR) + "/" + relative;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

int count_lines(const std::string& text) {
    int lines = 0;
    for (char c : text) {
        if (c == '\n') ++lines;
    }
    return lines;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name)
        : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("cli rejects missing configs with a usage error") {
    const CommandResult r = run_cli("gen --config /nonexistent.json --out /tmp/x.json");
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("not found") != std::string::npos);

    const CommandResult no_sub = run_cli("");
    CHECK(no_sub.exit_code != 0);
}

TEST_CASE("cli gen writes a dataset and prints per-dimension counts") {
    TempDir dir("percept_cli_gen");
    const std::string out = (dir.path / "data.json").string();
    const CommandResult r =
        run_cli("gen --config " + repo_file("configs/gen_small.json") + " --out " + out);
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(out));
    CHECK(r.output.find("competence") != std::string::npos);
    CHECK(r.output.find("surprise") != std::string::npos);
    CHECK(r.output.find("intention") != std::string::npos);

    // Same seed, same bytes.
    const std::string out2 = (dir.path / "data2.json").string();
    run_cli("gen --config " + repo_file("configs/gen_small.json") + " --out " + out2);
    CHECK(slurp(out) == slurp(out2));

    // Different seed, different bytes.
    const std::string out3 = (dir.path / "data3.json").string();
    run_cli("gen --config " + repo_file("configs/gen_small.json") + " --seed 123 --out " +
            out3);
    CHECK(slurp(out) != slurp(out3));
}

TEST_CASE("cli init + run + report pipeline on the mock backend") {
    TempDir dir("percept_cli_run");
    const std::string ws = (dir.path / "ws").string();
    CHECK(run_cli("init --workspace " + ws + " --gen-config " +
                  repo_file("configs/gen_small.json"))
              .exit_code == 0);

    const CommandResult run = run_cli("run --config " + repo_file("configs/rq2.json") +
                                      " --workspace " + ws + " --runs 2");
    CHECK(run.exit_code == 0);
    const fs::path csv = fs::path(ws) / "runs" / "rq2.csv";
    const fs::path archive = fs::path(ws) / "runs" / "rq2.json";
    REQUIRE(fs::exists(csv));
    REQUIRE(fs::exists(archive));
    // Header + 2 runs x 3 dimensions x 1 model x 3 ablation conditions.
    CHECK(count_lines(slurp(csv)) == 1 + 2 * 3 * 3);
    {
        // --runs 2 yields exactly the run ids 0 and 1.
        std::set<std::string> run_ids;
        std::istringstream rows(slurp(csv));
        std::string row;
        std::getline(rows, row);  // header
        while (std::getline(rows, row)) {
            run_ids.insert(row.substr(0, row.find(',')));
        }
        CHECK(run_ids == std::set<std::string>{"0", "1"});
    }

    const CommandResult report = run_cli("report --archive " + archive.string());
    CHECK(report.exit_code == 0);
    CHECK(report.output.find("mock-llm") != std::string::npos);
    CHECK(report.output.find("goal_robot") != std::string::npos);

    // Determinism across executions: rerun into a fresh directory.
    const std::string out2 = (dir.path / "again").string();
    CHECK(run_cli("run --config " + repo_file("configs/rq2.json") + " --workspace " + ws +
                  " --runs 2 --out " + out2)
              .exit_code == 0);
    CHECK(slurp(archive) == slurp(fs::path(out2) / "rq2.json"));
}

TEST_CASE("cli report prints pairwise comparisons for multi-model archives") {
    TempDir dir("percept_cli_pair");
    const std::string ws = (dir.path / "ws").string();
    run_cli("init --workspace " + ws + " --gen-config " +
            repo_file("configs/gen_small.json"));
    const CommandResult run = run_cli("run --config " + repo_file("configs/rq1.json") +
                                      " --workspace " + ws + " --runs 2");
    CHECK(run.exit_code == 0);

    const CommandResult report = run_cli(
        "report --archive " + (fs::path(ws) / "runs" / "rq1.json").string() + " --out " +
        (dir.path / "agg.csv").string());
    CHECK(report.exit_code == 0);
    CHECK(report.output.find("paired comparisons") != std::string::npos);
    CHECK(fs::exists(dir.path / "agg.csv"));
}

TEST_CASE("cli replay fails fast on a cold cache") {
    TempDir dir("percept_cli_replay");
    const std::string ws = (dir.path / "ws").string();
    run_cli("init --workspace " + ws + " --gen-config " +
            repo_file("configs/gen_small.json"));

    // live_smoke uses llm-kind models; replay demands a warm cache.
    const CommandResult r = run_cli("run --config " + repo_file("configs/live_smoke.json") +
                                    " --workspace " + ws + " --replay");
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("cache") != std::string::npos);
}

TEST_CASE("cli llm-kind roster works offline via the mock backend and replays") {
    TempDir dir("percept_cli_mockllm");
    const std::string ws = (dir.path / "ws").string();
    run_cli("init --workspace " + ws + " --gen-config " +
            repo_file("configs/gen_small.json"));

    const CommandResult first = run_cli("run --config " +
                                        repo_file("configs/live_smoke.json") +
                                        " --workspace " + ws + " --backend mock");
    CHECK(first.exit_code == 0);
    REQUIRE(fs::exists(fs::path(ws) / "cache.ndjson"));

    // The mock run warmed the cache; replay now succeeds and reproduces the
    // archive byte for byte.
    const std::string out2 = (dir.path / "replayed").string();
    const CommandResult second =
        run_cli("run --config " + repo_file("configs/live_smoke.json") + " --workspace " +
                ws + " --replay --out " + out2);
    CHECK(second.exit_code == 0);
    CHECK(slurp(fs::path(ws) / "runs" / "live_smoke.json") ==
          slurp(fs::path(out2) / "live_smoke.json"));
}

TEST_CASE("cli report handles an empty archive politely") {
    TempDir dir("percept_cli_empty");
    const fs::path archive = dir.path / "empty.json";
    {
        std::ofstream out(archive);
        out << R"({"schema_version": 1, "config": {"rq_id": "none", "roster": )"
            << R"([{"name": "m", "kind": "wr"}], "conditions": [{"l": 4}], "runs": 1, )"
            << R"("master_seed": 0}, "records": []})" << "\n";
    }
    const CommandResult r = run_cli("report --archive " + archive.string());
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("no records") != std::string::npos);
}

TEST_CASE("cli cache export and import round trip") {
    TempDir dir("percept_cli_cache");
    const std::string ws = (dir.path / "ws").string();
    run_cli("init --workspace " + ws + " --gen-config " +
            repo_file("configs/gen_small.json"));
    run_cli("run --config " + repo_file("configs/live_smoke.json") + " --workspace " + ws +
            " --backend mock");

    const std::string exported = (dir.path / "cache_copy.ndjson").string();
    const CommandResult exp =
        run_cli("cache --workspace " + ws + " --export " + exported);
    CHECK(exp.exit_code == 0);
    CHECK(fs::exists(exported));

    const std::string ws2 = (dir.path / "ws2").string();
    fs::create_directories(ws2);
    const CommandResult imp = run_cli("cache --workspace " + ws2 + " --import " + exported);
    CHECK(imp.exit_code == 0);
    CHECK(slurp(fs::path(ws) / "cache.ndjson") == slurp(fs::path(ws2) / "cache.ndjson"));
}
