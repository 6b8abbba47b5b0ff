// Regenerates the shipped demo dataset and replay fixtures from the scripted
// world used by the tests. Run from the repository root:
//
//   gen_fixtures [--data data] [--scratch fixture-scratch]
//
// The record-mode run drives every pipeline end to end, so the emitted
// chat.jsonl / wiki.json replay exactly what the real harness asks for.

#include "analogist/harness.hpp"

#include "planted.hpp"
#include "world.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace analogist;

namespace {

std::size_t line_count(const fs::path& path) {
    std::ifstream in(path);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) ++n;
    return n;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"regenerate the shipped demo data and replay fixtures"};
    std::string data_dir = "data";
    std::string scratch_dir = "fixture-scratch";
    app.add_option("--data", data_dir, "dataset directory to (re)write");
    app.add_option("--scratch", scratch_dir, "throwaway output directory for the record run");
    CLI11_PARSE(app, argc, argv);

    try {
        const fs::path data(data_dir);
        const fs::path fixtures = data / "fixtures" / "demo";
        fs::create_directories(fixtures);

        testing::World world = testing::make_world();

        // Dataset files -----------------------------------------------------
        std::vector<Event> inputs;
        for (const testing::WorldInput& wi : world.inputs) inputs.push_back(wi.event);
        save_events_jsonl((data / "popular_inputs.jsonl").string(), inputs);
        save_events_jsonl((data / "pool.sample.jsonl").string(), world.pool);

        {
            std::ofstream out(data / "popular_gold.jsonl");
            for (const testing::WorldInput& wi : world.inputs) {
                nlohmann::json answer{{"canonical", wi.gold.canonical}};
                if (!wi.gold.aliases.empty()) answer["aliases"] = wi.gold.aliases;
                nlohmann::json record{{"input", to_json(wi.event)},
                                      {"answers", nlohmann::json::array({answer})}};
                out << record.dump() << '\n';
            }
        }

        // Synthetic grader study: scores plus the ranking a grader using the
        // published metric configuration would produce.
        std::vector<CalibrationSample> planted =
            testing::make_planted_calibration(32, 5, /*seed=*/11);
        {
            std::ofstream scored(data / "calibration_scored.jsonl");
            std::ofstream rankings(data / "calibration_rankings.jsonl");
            for (const CalibrationSample& sample : planted) {
                nlohmann::json alts = nlohmann::json::array();
                for (const RawScores& raw : sample.alternatives)
                    alts.push_back({{"abs", raw.abs}, {"lit", raw.lit}});
                scored << nlohmann::json{{"input_id", sample.input_id}, {"alternatives", alts}}
                              .dump()
                       << '\n';
                rankings << nlohmann::json{{"input_id", sample.input_id},
                                           {"ranking", sample.human_ranking}}
                                .dump()
                         << '\n';
            }
        }

        {
            PromptRegistry registry;
            nlohmann::json j = nlohmann::json::object();
            for (const std::string& name : registry.names())
                j[name] = {{"system", registry.system(name).body},
                           {"user", registry.user(name).body}};
            std::ofstream out(data / "prompts.json");
            out << j.dump(2) << '\n';
        }

        // Stale artifacts would poison the record run: the gateway appends to
        // an existing chat.jsonl, and a leftover .idx would satisfy the
        // embedding lookups before they reach (and get recorded by) the
        // gateway.
        fs::remove_all(scratch_dir);
        fs::remove(fixtures / "chat.jsonl");
        fs::remove(fixtures / "wiki.json");
        fs::remove(data / "pool.sample.jsonl.idx");

        // Record run over every method --------------------------------------
        std::vector<Method> methods{Method::DirectRetrieve, Method::TwoStageRetrieve,
                                    Method::DirectGen,      Method::TwoStageGen,
                                    Method::SummarizeGen,   Method::SelfReflect,
                                    Method::RandomPool,     Method::RandomTheme,
                                    Method::RandomCandidate};
        EvaluateOutcome outcome;
        {
            RunConfig config;
            config.dataset_path = (data / "popular_inputs.jsonl").string();
            config.pool_path = (data / "pool.sample.jsonl").string();
            config.gold_path = (data / "popular_gold.jsonl").string();
            config.out_dir = (fs::path(scratch_dir) / "out").string();
            config.fixtures_dir = fixtures.string();
            config.mode = RunMode::Record;
            config.jobs = 1;  // deterministic fixture append order
            config.seed = 7;
            Harness harness(config, testing::make_world_backend(world), world.wiki);
            outcome = harness.evaluate(methods);
        }
        if (!outcome.failures.empty()) {
            for (const SampleFailure& f : outcome.failures)
                std::cerr << "failed: " << to_string(f.method) << "/" << f.input_id << " ["
                          << to_string(f.family) << "] " << f.message << "\n";
            return static_cast<int>(outcome.failures.front().family);
        }

        // The record run captured only the pages it touched; ship the full
        // world so ad-hoc replay queries resolve too.
        world.wiki->save((fixtures / "wiki.json").string());

        std::size_t completed = 0;
        for (const MethodReport& row : outcome.rows) completed += row.completed;
        std::cout << "inputs: " << inputs.size() << "\n"
                  << "pool events: " << world.pool.size() << "\n"
                  << "gold records: " << world.inputs.size() << "\n"
                  << "samples completed: " << completed << " across " << outcome.rows.size()
                  << " methods\n"
                  << "chat fixture records: " << line_count(fixtures / "chat.jsonl") << "\n"
                  << "wiki pages: " << world.wiki->page_count() << "\n"
                  << "calibration samples: " << planted.size() << "\n";
        fs::remove_all(scratch_dir);
        return 0;
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.family()) << "]: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
