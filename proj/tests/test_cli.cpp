#include <doctest.h>

#include <cstdlib>
#include <sys/wait.h>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <string>

namespace {

namespace fs = std::filesystem;

struct CliRun {
    int exit_code;
};

CliRun run_cli(const std::string& args) {
    const std::string command = std::string(SIP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(command.c_str());
    return {WEXITSTATUS(status)};
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

class TempDir {
public:
    TempDir() {
        dir_ = fs::temp_directory_path() / ("sip_cli_" + std::to_string(::getpid()));
        fs::create_directories(dir_);
    }
    ~TempDir() { fs::remove_all(dir_); }
    const fs::path& path() const { return dir_; }

private:
    fs::path dir_;
};

}  // namespace

TEST_CASE("cli pipeline end to end on a small simulated dataset") {
    TempDir dir;
    const std::string base = " --data-dir " + dir.path().string() + " ";

    CHECK(run_cli(base + "simulate -n 80 -r 3 -m 12 -s 7 -o data.jsonl").exit_code == 0);
    CHECK(fs::exists(dir.path() / "data.jsonl"));
    CHECK(fs::exists(dir.path() / "data.jsonl.gen.json"));

    CHECK(run_cli(base +
                  "train -i data.jsonl --min-length 2 -k 6 -e 3 -s 1 -o model.json")
              .exit_code == 0);
    CHECK(fs::exists(dir.path() / "model.json"));
    CHECK(fs::exists(dir.path() / "model.json.split.json"));
    CHECK(fs::exists(dir.path() / "model.json.log.json"));

    CHECK(run_cli(base +
                  "segment -i data.jsonl --min-length 2 --model model.json -l 0.3 -o seg.jsonl")
              .exit_code == 0);
    CHECK(fs::exists(dir.path() / "seg.jsonl"));

    SUBCASE("segment rejects lambda outside [0,1]") {
        CHECK(run_cli(base +
                      "segment -i data.jsonl --min-length 2 --model model.json -l 1.5 -o bad.jsonl")
                  .exit_code != 0);
    }

    SUBCASE("segment emits one output per lambda in a grid") {
        CHECK(run_cli(base + "segment -i data.jsonl --min-length 2 --model model.json "
                             "-l 0.1:0.9:0.1 -o grid.jsonl")
                  .exit_code == 0);
        int produced = 0;
        for (const auto& entry : fs::directory_iterator(dir.path())) {
            const auto name = entry.path().filename().string();
            if (name.rfind("grid-lambda", 0) == 0) ++produced;
        }
        CHECK(produced == 9);
    }

    SUBCASE("rerunning a command gives byte-identical output") {
        const std::string first = slurp(dir.path() / "seg.jsonl");
        CHECK(run_cli(base +
                      "segment -i data.jsonl --min-length 2 --model model.json -l 0.3 -o seg.jsonl")
                  .exit_code == 0);
        CHECK(slurp(dir.path() / "seg.jsonl") == first);
    }

    SUBCASE("global flags are accepted after the subcommand and do not change output") {
        const std::string first = slurp(dir.path() / "seg.jsonl");
        CHECK(run_cli(base + "segment -i data.jsonl --min-length 2 --model model.json -l 0.3 "
                             "-o seg2.jsonl -j 1")
                  .exit_code == 0);
        CHECK(slurp(dir.path() / "seg2.jsonl") == first);
    }

    CHECK(run_cli(base + "cluster -i data.jsonl --min-length 2 --segments seg.jsonl -c 3 -s 2 "
                         "--split model.json.split.json -o clusters.json")
              .exit_code == 0);
    CHECK(fs::exists(dir.path() / "clusters.json"));
    CHECK(fs::exists(dir.path() / "clusters.json.summary.json"));

    {
        std::ofstream map(dir.path() / "labels.json");
        map << R"({"0":"ALPHA","1":"BETA","2":"ALPHA"})";
    }
    CHECK(run_cli(base + "label --model clusters.json --map labels.json -o labeled.json")
              .exit_code == 0);

    CHECK(run_cli(base + "sequences -i data.jsonl --min-length 2 --segments seg.jsonl "
                         "--cluster-model clusters.json -o sequences.jsonl")
              .exit_code == 0);
    CHECK(fs::exists(dir.path() / "sequences.jsonl"));

    CHECK(run_cli(base + "evaluate -i data.jsonl --min-length 2 --sequences sequences.jsonl "
                         "--subset test --split model.json.split.json --align -o report.json")
              .exit_code == 0);
    const std::string report = slurp(dir.path() / "report.json");
    CHECK(report.find("precision") != std::string::npos);
    CHECK(report.find("overlap") != std::string::npos);
    // With aligned labels every measure has a nonzero denominator here.
    CHECK(report.find("null") == std::string::npos);

    CHECK(run_cli(base + "hmm-fit -i data.jsonl --min-length 2 -r 3 -s 3 --restarts 2 "
                         "--max-iter 20 -o hmm.json")
              .exit_code == 0);
    CHECK(fs::exists(dir.path() / "hmm.json"));
    CHECK(run_cli(base + "hmm-eval -i data.jsonl --min-length 2 --model hmm.json "
                         "--subset test --split model.json.split.json -o hmm_report.json")
              .exit_code == 0);
    CHECK(fs::exists(dir.path() / "hmm_report.json"));

    // Nonexistent target metadata is skipped with a warning, not an error.
    CHECK(run_cli(base + "decompose -i data.jsonl --min-length 2 --sequences sequences.jsonl "
                         "--split model.json.split.json --targets no_such_key "
                         "--specs transitions --grid 0.1,10 -o decomp.csv")
              .exit_code == 0);
    CHECK(slurp(dir.path() / "decomp.csv").rfind("target,", 0) == 0);

    CHECK(run_cli(base + "export-viz --sequences sequences.jsonl -o viz.csv --svg viz.svg")
              .exit_code == 0);
    CHECK(fs::exists(dir.path() / "viz.csv"));
    CHECK(fs::exists(dir.path() / "viz.svg"));
    CHECK(slurp(dir.path() / "viz.csv").rfind("id,q1", 0) == 0);

    // Missing model file fails loudly.
    CHECK(run_cli(base + "segment -i data.jsonl --min-length 2 --model nope.json -o x.jsonl")
              .exit_code != 0);
}
