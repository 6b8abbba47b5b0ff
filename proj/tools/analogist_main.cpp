#include "analogist/harness.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace analogist;

// Every subcommand shares the same configuration surface. CLI flags override
// the config file, which overrides built-in defaults.
struct ConfigFlags {
    std::string config_file;
    std::string method_name, mode_name;
    std::string dataset, pool, gold, out, fixtures, cache, prompts;
    std::vector<double> weights;
    double alpha = 0.0, rpm = 0.0, temperature = 0.0;
    int candidates = 0, warmup = 0, max_rounds = 0, jobs = 0;
    std::uint64_t seed = 0;
    std::string chat_model, judge_model, embedding, api_base, api_key_env, wiki_base, user_agent;

    CLI::Option *o_method = nullptr, *o_mode = nullptr, *o_dataset = nullptr, *o_pool = nullptr,
                *o_gold = nullptr, *o_out = nullptr, *o_fixtures = nullptr, *o_cache = nullptr,
                *o_prompts = nullptr, *o_weights = nullptr, *o_alpha = nullptr,
                *o_candidates = nullptr, *o_warmup = nullptr, *o_max_rounds = nullptr,
                *o_jobs = nullptr, *o_seed = nullptr, *o_rpm = nullptr, *o_temperature = nullptr,
                *o_chat_model = nullptr, *o_judge_model = nullptr, *o_embedding = nullptr,
                *o_api_base = nullptr, *o_api_key_env = nullptr, *o_wiki_base = nullptr,
                *o_user_agent = nullptr;

    void attach(CLI::App& cmd) {
        cmd.add_option("--config", config_file, "JSON config file (flags override it)");
        o_method = cmd.add_option(
            "--method", method_name,
            "pipeline: direct-retrieve | two-stage-retrieve | direct-gen | two-stage-gen | "
            "summarize-gen | self-reflect | random-pool | random-theme | random-candidate");
        o_mode = cmd.add_option("--mode", mode_name, "backend mode: live | record | replay");
        o_dataset = cmd.add_option("--dataset", dataset, "input events (JSONL)");
        o_pool = cmd.add_option("--pool", pool, "historical event pool (JSONL)");
        o_gold = cmd.add_option("--gold", gold, "gold analogies (JSONL)");
        o_out = cmd.add_option("--out", out, "output directory");
        o_fixtures = cmd.add_option("--fixtures", fixtures,
                                    "fixture directory (chat.jsonl + wiki.json)");
        o_cache = cmd.add_option("--cache", cache, "response cache directory");
        o_prompts = cmd.add_option("--prompts", prompts, "prompt registry overlay (JSON)");
        o_weights = cmd.add_option("--mds-weights", weights, "four dimension weights")
                        ->delimiter(',')
                        ->expected(4);
        o_alpha = cmd.add_option("--alpha", alpha, "literal-similarity threshold");
        o_candidates = cmd.add_option("--candidates", candidates, "candidates per round (C)");
        o_warmup = cmd.add_option("--warmup", warmup, "warmup rounds (W)");
        o_max_rounds = cmd.add_option("--max-rounds", max_rounds, "reflection round cap");
        o_jobs = cmd.add_option("--jobs", jobs, "concurrent samples (default 4)");
        o_seed = cmd.add_option("--seed", seed, "seed for the random baselines");
        o_rpm = cmd.add_option("--rpm", rpm, "requests per minute (0 = unlimited)");
        o_temperature = cmd.add_option("--temperature", temperature, "sampling temperature");
        o_chat_model = cmd.add_option("--chat-model", chat_model, "generation model tag");
        o_judge_model = cmd.add_option("--judge-model", judge_model, "judge model tag");
        o_embedding = cmd.add_option("--embedding", embedding,
                                     "'hash' (local, deterministic) or a provider model");
        o_api_base = cmd.add_option("--api-base", api_base, "provider base URL");
        o_api_key_env = cmd.add_option("--api-key-env", api_key_env,
                                       "environment variable holding the API key");
        o_wiki_base = cmd.add_option("--wiki-base", wiki_base, "encyclopedia base URL");
        o_user_agent = cmd.add_option("--user-agent", user_agent, "HTTP user agent");
    }

    RunConfig resolve() const {
        RunConfig config;
        if (!config_file.empty()) apply_config_file(config, config_file);
        if (*o_method) {
            auto m = method_from_string(method_name);
            if (!m) throw ConfigError("unknown method '" + method_name + "'");
            config.method = *m;
        }
        if (*o_mode) {
            auto m = run_mode_from_string(mode_name);
            if (!m) throw ConfigError("unknown mode '" + mode_name + "'");
            config.mode = *m;
        }
        if (*o_dataset) config.dataset_path = dataset;
        if (*o_pool) config.pool_path = pool;
        if (*o_gold) config.gold_path = gold;
        if (*o_out) config.out_dir = out;
        if (*o_fixtures) config.fixtures_dir = fixtures;
        if (*o_cache) config.cache_dir = cache;
        if (*o_prompts) config.prompts_path = prompts;
        if (*o_weights)
            for (std::size_t d = 0; d < 4; ++d) config.mds.weights[d] = weights[d];
        if (*o_alpha) config.mds.alpha = alpha;
        if (*o_candidates) config.reflection.candidates_per_round = candidates;
        if (*o_warmup) config.reflection.warmup_rounds = warmup;
        if (*o_max_rounds) config.reflection.max_rounds = max_rounds;
        if (*o_jobs) config.jobs = jobs;
        if (*o_seed) config.seed = seed;
        if (*o_rpm) config.requests_per_minute = rpm;
        if (*o_temperature) config.temperature = temperature;
        if (*o_chat_model) config.chat_model = chat_model;
        if (*o_judge_model) config.judge_model = judge_model;
        if (*o_embedding) config.embedding = embedding;
        if (*o_api_base) config.api_base = api_base;
        if (*o_api_key_env) config.api_key_env = api_key_env;
        if (*o_wiki_base) config.wiki_base = wiki_base;
        if (*o_user_agent) config.user_agent = user_agent;
        return config;
    }
};

Event load_single_event(const std::string& file, const std::string& id, const std::string& title,
                        const std::string& description, const std::string& theme) {
    if (!file.empty()) {
        std::vector<Event> events = load_events_jsonl(file);
        if (events.empty()) throw ConfigError(file + " holds no events");
        return events.front();
    }
    if (title.empty() || description.empty())
        throw ConfigError("provide --title and --description, or --file");
    Event event;
    event.id = id.empty() ? sample_file_name(title) : id;
    event.title = title;
    event.description = description;
    if (!theme.empty()) {
        auto t = theme_from_string(theme);
        if (!t) throw ConfigError("unknown theme '" + theme + "'");
        event.theme = *t;
    }
    return event;
}

int cmd_analogize(const ConfigFlags& flags, const std::string& file, const std::string& id,
                  const std::string& title, const std::string& description,
                  const std::string& theme) {
    RunConfig config = flags.resolve();
    Event input = load_single_event(file, id, title, description, theme);
    Harness harness(config);
    AnalogyResult result = harness.analogize(input);

    std::string via, page = "-";
    if (!result.trace.empty()) via = result.trace.back().payload.value("via", "");
    if (result.analog.page_id) page = *result.analog.page_id;
    std::string trace_path = config.out_dir + "/traces/" + to_string(config.method) + "-" +
                             sample_file_name(input.id) + ".json";
    std::cout << result.analog.title << "\n"
              << "method=" << to_string(config.method) << " via=" << via << " page=" << page
              << " trace=" << trace_path << "\n";
    return 0;
}

int cmd_evaluate(const ConfigFlags& flags, const std::vector<std::string>& method_names) {
    RunConfig config = flags.resolve();
    std::vector<Method> methods;
    if (method_names.empty()) {
        methods.push_back(config.method);
    } else {
        for (const std::string& name : method_names) {
            auto m = method_from_string(name);
            if (!m) throw ConfigError("unknown method '" + name + "'");
            methods.push_back(*m);
        }
    }
    Harness harness(config);
    EvaluateOutcome outcome = harness.evaluate(methods);

    std::cout << report_to_csv(outcome);
    std::cout << "report: " << config.out_dir << "/report.json, " << config.out_dir
              << "/report.csv\n";
    if (outcome.failures.empty()) return 0;
    for (const SampleFailure& f : outcome.failures)
        std::cerr << "failed: " << to_string(f.method) << "/" << f.input_id << " ["
                  << to_string(f.family) << "] " << f.message << "\n";
    // Every requested sample must complete for a zero exit.
    return static_cast<int>(outcome.failures.front().family);
}

int cmd_calibrate(const ConfigFlags& flags, const std::string& scored,
                  const std::string& rankings) {
    RunConfig config = flags.resolve();
    std::vector<CalibrationSample> samples = load_calibration_files(scored, rankings);
    CalibrationResult result = calibrate(samples);

    namespace fs = std::filesystem;
    fs::create_directories(config.out_dir);
    std::ofstream out(fs::path(config.out_dir) / "calibration.json");
    out << calibration_report(result).dump(2) << '\n';

    std::cout << "best weights = (" << result.best.weights[0] << ", " << result.best.weights[1]
              << ", " << result.best.weights[2] << ", " << result.best.weights[3] << ")"
              << " alpha = " << result.best.alpha << "\n"
              << "mean spearman = " << result.mean_spearman
              << "  mean pearson = " << result.mean_pearson << "\n"
              << "grid cells searched = " << result.grid.size() << "\n"
              << "report: " << config.out_dir << "/calibration.json\n";
    return 0;
}

int cmd_ingest(const ConfigFlags& flags) {
    RunConfig config = flags.resolve();
    Harness harness(config);
    auto [pool_size, index_size] = harness.ingest();
    std::cout << "pool events: " << pool_size << "\n"
              << "index entries: " << index_size << "\n"
              << "index file: " << config.pool_path << ".idx\n";
    return 0;
}

int cmd_score(const ConfigFlags& flags, const std::string& file, const std::string& a_title,
              const std::string& a_description, const std::string& b_title,
              const std::string& b_description) {
    RunConfig config = flags.resolve();
    Event a, b;
    if (!file.empty()) {
        std::vector<Event> events = load_events_jsonl(file);
        if (events.size() < 2) throw ConfigError(file + " must hold at least two events");
        a = events[0];
        b = events[1];
    } else {
        if (a_title.empty() || a_description.empty() || b_title.empty() || b_description.empty())
            throw ConfigError(
                "provide --a-title/--a-description/--b-title/--b-description, or --file");
        a = Event{"a", a_title, a_description};
        b = Event{"b", b_title, b_description};
    }
    Harness harness(config);
    std::cout << harness.score_events(a, b).dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"historical analogy acquisition engine"};
    app.require_subcommand(1);

    // analogize ------------------------------------------------------------
    CLI::App* analogize = app.add_subcommand("analogize", "find one historical analogy");
    ConfigFlags an_flags;
    an_flags.attach(*analogize);
    std::string an_file, an_id, an_title, an_description, an_theme;
    analogize->add_option("--file", an_file, "read the input event from a JSONL file");
    analogize->add_option("--id", an_id, "input event id");
    analogize->add_option("--title", an_title, "input event title");
    analogize->add_option("--description", an_description, "input event description");
    analogize->add_option("--theme", an_theme, "War | Politics | CultureAndSociety | Economy");

    // evaluate ---------------------------------------------------------------
    CLI::App* evaluate = app.add_subcommand("evaluate", "batch-run methods and report");
    ConfigFlags ev_flags;
    ev_flags.attach(*evaluate);
    std::vector<std::string> ev_methods;
    evaluate->add_option("--methods", ev_methods, "comma-separated method list")->delimiter(',');

    // calibrate --------------------------------------------------------------
    CLI::App* calibrate_cmd =
        app.add_subcommand("calibrate", "grid-search metric weights against human rankings");
    ConfigFlags ca_flags;
    ca_flags.attach(*calibrate_cmd);
    std::string ca_scored, ca_rankings;
    calibrate_cmd->add_option("--scored", ca_scored, "scored alternatives (JSONL)")->required();
    calibrate_cmd->add_option("--rankings", ca_rankings, "human rankings (JSONL)")->required();

    // ingest -----------------------------------------------------------------
    CLI::App* ingest = app.add_subcommand("ingest", "validate a pool and build its index");
    ConfigFlags in_flags;
    in_flags.attach(*ingest);

    // score ------------------------------------------------------------------
    CLI::App* score = app.add_subcommand("score", "score one event pair");
    ConfigFlags sc_flags;
    sc_flags.attach(*score);
    std::string sc_file, sc_a_title, sc_a_desc, sc_b_title, sc_b_desc;
    score->add_option("--file", sc_file, "JSONL file holding the two events");
    score->add_option("--a-title", sc_a_title, "first event title");
    score->add_option("--a-description", sc_a_desc, "first event description");
    score->add_option("--b-title", sc_b_title, "second event title");
    score->add_option("--b-description", sc_b_desc, "second event description");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;  // bad flags are configuration errors
    }

    try {
        if (*analogize)
            return cmd_analogize(an_flags, an_file, an_id, an_title, an_description, an_theme);
        if (*evaluate) return cmd_evaluate(ev_flags, ev_methods);
        if (*calibrate_cmd) return cmd_calibrate(ca_flags, ca_scored, ca_rankings);
        if (*ingest) return cmd_ingest(in_flags);
        if (*score)
            return cmd_score(sc_flags, sc_file, sc_a_title, sc_a_desc, sc_b_title, sc_b_desc);
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.family()) << "]: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
