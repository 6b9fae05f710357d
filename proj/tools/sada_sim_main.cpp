// sada-sim: batch driver for the adaptive-vs-oblivious streaming testbed.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sada/experiment.hpp"

namespace {

sada::ExperimentSpec load_spec(const std::string& path, std::uint64_t seed_override,
                               std::uint64_t trials_override, const std::string& out_override) {
    auto spec = sada::ExperimentSpec::parse_file(path);
    if (seed_override != 0) spec.kv["seed"] = std::to_string(seed_override);
    if (trials_override != ~0ull) spec.kv["trials"] = std::to_string(trials_override);
    if (!out_override.empty()) spec.kv["out"] = out_override;
    return spec;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw sada::Error("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulation testbed for adaptive vs oblivious streaming"};
    app.require_subcommand(1);

    std::string spec_path;
    std::string out_path;
    std::uint64_t seed = 0;
    std::uint64_t trials = ~0ull;
    unsigned jobs = 1;

    auto add_common = [&](CLI::App* cmd, bool needs_out) {
        cmd->add_option("--spec", spec_path, "experiment spec file")->required();
        cmd->add_option("--seed", seed, "override the spec seed");
        cmd->add_option("--trials", trials, "override the trial count");
        if (needs_out) cmd->add_option("--out", out_path, "result file path");
        cmd->add_option("--jobs", jobs, "worker threads (results independent of this)");
    };

    auto* validate = app.add_subcommand("validate", "check a spec against all parameter invariants");
    add_common(validate, false);

    auto* run = app.add_subcommand("run", "run the experiment and write result records");
    add_common(run, true);

    auto* replay = app.add_subcommand("replay", "re-run a spec and compare against an existing result file");
    add_common(replay, true);

    auto* report = app.add_subcommand("report", "summarize a result file");
    report->add_option("--out", out_path, "result file to summarize")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) {
            const auto spec = load_spec(spec_path, seed, trials, out_path);
            const auto violations = spec.validate();
            if (violations.empty()) {
                std::cout << "ok: spec is valid (kind " << spec.kind() << ")\n";
                return 0;
            }
            for (const auto& v : violations) std::cout << "violation: " << v << "\n";
            return 1;
        }
        if (run->parsed()) {
            const auto spec = load_spec(spec_path, seed, trials, out_path);
            const auto outcome = sada::run_experiment(spec, jobs);
            std::cout << outcome.summary << "\n";
            std::cout << "results: " << outcome.result_path << "\n";
            std::cout << "csv:     " << outcome.csv_path << "\n";
            return 0;
        }
        if (replay->parsed()) {
            auto spec = load_spec(spec_path, seed, trials, out_path);
            const std::string reference = spec.out().empty() ? "result.jsonl" : spec.out();
            const std::string old = slurp(reference);
            spec.kv["out"] = reference + ".replay";
            const auto outcome = sada::run_experiment(spec, jobs);
            const std::string fresh = slurp(outcome.result_path);
            if (old == fresh) {
                std::cout << "replay ok: byte-identical to " << reference << "\n";
                return 0;
            }
            std::cout << "replay mismatch: " << outcome.result_path
                      << " differs from " << reference << "\n";
            return 1;
        }
        if (report->parsed()) {
            std::ifstream f(out_path);
            if (!f) throw sada::Error("cannot open " + out_path);
            std::string line;
            std::size_t trial_count = 0;
            while (std::getline(f, line)) {
                if (line.empty()) continue;
                const auto rec = nlohmann::json::parse(line);
                const std::string kind = rec.value("record", "");
                if (kind == "trial") {
                    ++trial_count;
                } else if (kind == "spec") {
                    std::cout << "spec: kind=" << rec.value("kind", "?") << " seed="
                              << rec.value("seed", "?") << "\n";
                } else if (kind == "summary") {
                    std::cout << "summary:";
                    for (auto it = rec.begin(); it != rec.end(); ++it)
                        if (it.key() != "record")
                            std::cout << " " << it.key() << "=" << it.value().dump();
                    std::cout << "\n";
                }
            }
            std::cout << "trials: " << trial_count << "\n";
            return 0;
        }
    } catch (const sada::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
