#include "analogist/harness.hpp"

#include "analogist/http_backends.hpp"
#include "analogist/text.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <thread>
#include <unordered_map>
#include <unordered_set>

namespace analogist {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

static bool needs_pool(Method method) {
    return is_retrieval_method(method) || method == Method::RandomPool ||
           method == Method::RandomTheme;
}

static bool is_random_method(Method method) {
    return method == Method::RandomPool || method == Method::RandomTheme ||
           method == Method::RandomCandidate;
}

void validate(const RunConfig& config, Method method) {
    if (config.jobs < 1) throw ConfigError("jobs must be >= 1");
    validate(config.mds);
    validate(config.reflection);
    if (config.out_dir.empty()) throw ConfigError("output directory must be set");
    if (needs_pool(method) && config.pool_path.empty())
        throw ConfigError(to_string(method) + " requires an event pool (--pool)");
    if (is_random_method(method) && !config.seed)
        throw ConfigError(to_string(method) + " requires --seed");
    if (config.mode != RunMode::Live && config.fixtures_dir.empty())
        throw ConfigError(to_string(config.mode) + " mode requires --fixtures");
}

std::string chat_fixture_path(const RunConfig& config) {
    return (fs::path(config.fixtures_dir) / "chat.jsonl").string();
}

std::string wiki_fixture_path(const RunConfig& config) {
    return (fs::path(config.fixtures_dir) / "wiki.json").string();
}

void apply_config_file(RunConfig& config, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config file not found: " + path);
    json j = json::parse(in, nullptr, false);
    if (!j.is_object()) throw ConfigError(path + ": config file must hold a JSON object");

    auto str = [&](const json& v, const char* key) {
        if (!v.is_string()) throw ConfigError(path + ": '" + key + "' must be a string");
        return v.get<std::string>();
    };
    for (const auto& [key, value] : j.items()) {
        if (key == "method") {
            auto m = method_from_string(str(value, "method"));
            if (!m) throw ConfigError(path + ": unknown method '" + value.get<std::string>() + "'");
            config.method = *m;
        } else if (key == "dataset") config.dataset_path = str(value, "dataset");
        else if (key == "pool") config.pool_path = str(value, "pool");
        else if (key == "gold") config.gold_path = str(value, "gold");
        else if (key == "out") config.out_dir = str(value, "out");
        else if (key == "fixtures") config.fixtures_dir = str(value, "fixtures");
        else if (key == "cache") config.cache_dir = str(value, "cache");
        else if (key == "prompts") config.prompts_path = str(value, "prompts");
        else if (key == "mode") {
            auto m = run_mode_from_string(str(value, "mode"));
            if (!m) throw ConfigError(path + ": unknown mode '" + value.get<std::string>() + "'");
            config.mode = *m;
        } else if (key == "mds_weights") {
            if (!value.is_array() || value.size() != 4)
                throw ConfigError(path + ": 'mds_weights' must be an array of 4 numbers");
            for (std::size_t d = 0; d < 4; ++d) config.mds.weights[d] = value[d].get<double>();
        } else if (key == "alpha") config.mds.alpha = value.get<double>();
        else if (key == "candidates") config.reflection.candidates_per_round = value.get<int>();
        else if (key == "warmup") config.reflection.warmup_rounds = value.get<int>();
        else if (key == "max_rounds") config.reflection.max_rounds = value.get<int>();
        else if (key == "seed") config.seed = value.get<std::uint64_t>();
        else if (key == "jobs") config.jobs = value.get<int>();
        else if (key == "requests_per_minute") config.requests_per_minute = value.get<double>();
        else if (key == "temperature") config.temperature = value.get<double>();
        else if (key == "chat_model") config.chat_model = str(value, "chat_model");
        else if (key == "judge_model") config.judge_model = str(value, "judge_model");
        else if (key == "embedding") config.embedding = str(value, "embedding");
        else if (key == "api_base") config.api_base = str(value, "api_base");
        else if (key == "api_key_env") config.api_key_env = str(value, "api_key_env");
        else if (key == "wiki_base") config.wiki_base = str(value, "wiki_base");
        else if (key == "user_agent") config.user_agent = str(value, "user_agent");
        else throw ConfigError(path + ": unknown config key '" + key + "'");
    }
}

// ---------------------------------------------------------------------------
// Services

Services make_services(const RunConfig& config, std::unique_ptr<ChatBackend> chat_override,
                       std::shared_ptr<WikiSource> wiki_override) {
    Services services;

    if (!config.fixtures_dir.empty()) fs::create_directories(config.fixtures_dir);

    GatewayConfig gc;
    gc.mode = config.mode;
    gc.cache_dir = config.cache_dir;
    gc.fixture_path = config.fixtures_dir.empty() ? "" : chat_fixture_path(config);
    gc.requests_per_minute = config.requests_per_minute;
    gc.chat_model = config.chat_model;
    gc.judge_model = config.judge_model;
    gc.temperature = config.temperature;
    gc.embedding_model = config.embedding == "hash" ? "hash-embed-v1" : config.embedding;

    std::unique_ptr<ChatBackend> chat = std::move(chat_override);
    std::unique_ptr<EmbeddingBackend> embedder;
    if (config.mode != RunMode::Replay) {
        if (!chat)
            chat = make_openai_chat_backend(config.api_base, api_key_from_env(config.api_key_env),
                                            config.user_agent);
        if (config.embedding == "hash") {
            embedder = std::make_unique<HashEmbeddingBackend>();
        } else {
            embedder = make_openai_embedding_backend(config.api_base,
                                                     api_key_from_env(config.api_key_env),
                                                     config.embedding, config.user_agent);
        }
    }
    services.gateway = std::make_unique<Gateway>(gc, std::move(chat), std::move(embedder));

    std::shared_ptr<WikiSource> wiki = std::move(wiki_override);
    if (!wiki) {
        if (config.mode == RunMode::Replay)
            wiki = std::make_shared<FixtureWikiSource>(wiki_fixture_path(config));
        else
            wiki = make_http_wiki_source(config.wiki_base, config.user_agent);
    }
    if (config.mode == RunMode::Record)
        wiki = std::make_shared<RecordingWikiSource>(std::move(wiki), wiki_fixture_path(config));
    services.wiki = wiki;

    VerifierConfig vc;
    if (config.mode != RunMode::Replay) vc.requests_per_minute = config.requests_per_minute;
    services.verifier = std::make_unique<Verifier>(services.wiki, vc);

    if (!config.prompts_path.empty())
        services.prompts = PromptRegistry::from_file(config.prompts_path);
    return services;
}

// ---------------------------------------------------------------------------
// Report shaping

MethodReport aggregate(Method method, const std::vector<EvaluationRecord>& records,
                       std::size_t excluded) {
    MethodReport row;
    row.method = method;
    row.completed = records.size();
    row.excluded = excluded;
    if (records.empty()) return row;

    std::size_t with_gold = 0, passed = 0;
    for (const EvaluationRecord& record : records) {
        for (std::size_t d = 0; d < 4; ++d) {
            row.mean_abs[d] += record.scores.abs[d];
            row.mean_lit[d] += record.scores.lit[d];
            row.mean_all[d] += record.scores.all[d];
        }
        row.mean_mds += record.mds;
        if (record.passed) {
            ++with_gold;
            if (*record.passed) ++passed;
        }
    }
    double n = static_cast<double>(records.size());
    for (std::size_t d = 0; d < 4; ++d) {
        row.mean_abs[d] /= n;
        row.mean_lit[d] /= n;
        row.mean_all[d] /= n;
    }
    row.mean_mds /= n;
    if (with_gold > 0)
        row.pass_rate = static_cast<double>(passed) / static_cast<double>(with_gold);
    return row;
}

static json row_to_json(const MethodReport& row) {
    json abs = json::array(), lit = json::array(), all = json::array();
    for (std::size_t d = 0; d < 4; ++d) {
        abs.push_back(row.mean_abs[d]);
        lit.push_back(row.mean_lit[d]);
        all.push_back(row.mean_all[d]);
    }
    json j{{"method", to_string(row.method)},
           {"completed", row.completed},
           {"excluded", row.excluded},
           {"abs", abs},
           {"lit", lit},
           {"all", all},
           {"mds", row.mean_mds}};
    j["pass_at_1"] = row.pass_rate ? json(*row.pass_rate) : json(nullptr);
    return j;
}

json report_to_json(const EvaluateOutcome& outcome, const MdsConfig& config) {
    json rows = json::array();
    for (const MethodReport& row : outcome.rows) rows.push_back(row_to_json(row));
    json failures = json::array();
    for (const SampleFailure& f : outcome.failures)
        failures.push_back(json{{"input_id", f.input_id},
                                {"method", to_string(f.method)},
                                {"family", to_string(f.family)},
                                {"code", static_cast<int>(f.family)},
                                {"message", f.message}});
    json weights = json::array();
    for (double w : config.weights) weights.push_back(w);
    return json{{"mds_config", {{"weights", weights}, {"alpha", config.alpha}}},
                {"total", outcome.total},
                {"rows", rows},
                {"failures", failures}};
}

static std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::string report_to_csv(const EvaluateOutcome& outcome) {
    std::string out =
        "method,completed,excluded,"
        "topic_abs,topic_lit,topic_all,"
        "background_abs,background_lit,background_all,"
        "process_abs,process_lit,process_all,"
        "result_abs,result_lit,result_all,"
        "mds,pass_at_1\n";
    for (const MethodReport& row : outcome.rows) {
        out += to_string(row.method);
        out += ',' + std::to_string(row.completed);
        out += ',' + std::to_string(row.excluded);
        for (std::size_t d = 0; d < 4; ++d) {
            out += ',' + fmt6(row.mean_abs[d]);
            out += ',' + fmt6(row.mean_lit[d]);
            out += ',' + fmt6(row.mean_all[d]);
        }
        out += ',' + fmt6(row.mean_mds);
        out += ',';
        if (row.pass_rate) out += fmt6(*row.pass_rate);
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Calibration file I/O

static void for_each_line(const std::string& path, const std::function<void(const json&)>& fn) {
    std::ifstream in(path);
    if (!in) throw ConfigError("file not found: " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw SchemaError(path + ":" + std::to_string(lineno) + ": invalid JSON");
        try {
            fn(j);
        } catch (const Error& e) {
            throw SchemaError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

static RawScores raw_scores_from_json(const json& j) {
    if (!j.is_object() || !j.contains("abs") || !j.contains("lit"))
        throw SchemaError("alternative needs 'abs' and 'lit' arrays");
    RawScores raw;
    const json& abs = j.at("abs");
    const json& lit = j.at("lit");
    if (!abs.is_array() || abs.size() != 4 || !lit.is_array() || lit.size() != 4)
        throw SchemaError("'abs' and 'lit' must hold 4 entries each");
    for (std::size_t d = 0; d < 4; ++d) {
        raw.abs[d] = abs[d].get<int>();
        raw.lit[d] = lit[d].get<double>();
    }
    validate(raw);
    return raw;
}

std::vector<CalibrationSample> load_calibration_files(const std::string& scored_path,
                                                      const std::string& rankings_path) {
    std::vector<CalibrationSample> samples;
    std::unordered_map<std::string, std::size_t> position;
    for_each_line(scored_path, [&](const json& j) {
        if (!j.is_object() || !j.contains("input_id") || !j.contains("alternatives"))
            throw SchemaError("scored record needs 'input_id' and 'alternatives'");
        CalibrationSample sample;
        sample.input_id = j.at("input_id").get<std::string>();
        for (const json& alt : j.at("alternatives"))
            sample.alternatives.push_back(raw_scores_from_json(alt));
        if (!position.emplace(sample.input_id, samples.size()).second)
            throw SchemaError("duplicate input_id '" + sample.input_id + "'");
        samples.push_back(std::move(sample));
    });

    std::unordered_set<std::string> ranked;
    for_each_line(rankings_path, [&](const json& j) {
        if (!j.is_object() || !j.contains("input_id") || !j.contains("ranking"))
            throw SchemaError("ranking record needs 'input_id' and 'ranking'");
        std::string id = j.at("input_id").get<std::string>();
        auto it = position.find(id);
        if (it == position.end())
            throw ConfigError("ranking for unknown input_id '" + id + "'");
        if (!ranked.insert(id).second)
            throw SchemaError("duplicate ranking for input_id '" + id + "'");
        CalibrationSample& sample = samples[it->second];
        for (const json& r : j.at("ranking")) sample.human_ranking.push_back(r.get<double>());
        if (sample.human_ranking.size() != sample.alternatives.size())
            throw ConfigError("ranking length " + std::to_string(sample.human_ranking.size()) +
                              " != " + std::to_string(sample.alternatives.size()) +
                              " alternatives for input_id '" + id + "'");
    });
    for (const CalibrationSample& sample : samples)
        if (!ranked.count(sample.input_id))
            throw ConfigError("no human ranking for input_id '" + sample.input_id + "'");
    return samples;
}

json calibration_report(const CalibrationResult& result) {
    auto config_json = [](const MdsConfig& c) {
        json weights = json::array();
        for (double w : c.weights) weights.push_back(w);
        return json{{"weights", weights}, {"alpha", c.alpha}};
    };
    json grid = json::array();
    for (const CalibrationCell& cell : result.grid)
        grid.push_back(json{{"config", config_json(cell.config)},
                            {"mean_spearman", cell.mean_spearman},
                            {"mean_pearson", cell.mean_pearson}});
    return json{{"best", config_json(result.best)},
                {"mean_spearman", result.mean_spearman},
                {"mean_pearson", result.mean_pearson},
                {"grid", grid}};
}

// ---------------------------------------------------------------------------
// Harness

std::string sample_file_name(const std::string& input_id) {
    std::string safe;
    bool replaced = input_id.empty();
    for (char c : input_id) {
        bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-';
        safe += ok ? c : '_';
        replaced |= !ok;
    }
    if (!replaced && safe.size() <= 64) return safe;
    // Replaced characters can collide; pin the original id with a digest.
    return safe.substr(0, 40) + "-" + sha256_hex(input_id).substr(0, 8);
}

Harness::Harness(RunConfig config, std::unique_ptr<ChatBackend> chat_override,
                 std::shared_ptr<WikiSource> wiki_override)
    : config_(std::move(config)),
      services_(make_services(config_, std::move(chat_override), std::move(wiki_override))) {}

const EventPool& Harness::pool_locked() {
    if (!pool_) {
        if (config_.pool_path.empty()) throw ConfigError("this method requires an event pool");
        pool_ = ingest_pool(config_.pool_path);
    }
    return *pool_;
}

const EventPool& Harness::pool() {
    std::lock_guard lock(mutex_);
    return pool_locked();
}

const EmbeddingIndex& Harness::index() {
    std::lock_guard lock(mutex_);
    if (!index_) {
        const EventPool& p = pool_locked();
        index_ = build_index(p, *services_.gateway, config_.pool_path + ".idx", config_.jobs);
    }
    return *index_;
}

void Harness::prepare(const std::vector<Method>& methods) {
    bool want_pool = false, want_index = false;
    for (Method m : methods) {
        want_pool |= needs_pool(m);
        want_index |= is_retrieval_method(m);
    }
    if (want_pool) pool();
    if (want_index) index();
}

std::uint64_t Harness::sample_seed(const std::string& input_id) const {
    // Mix the run seed with the input id so each sample draws its own
    // deterministic stream.
    std::string digest = sha256_hex(input_id);
    std::uint64_t h = 0;
    for (int i = 0; i < 16; ++i) {
        char c = digest[static_cast<std::size_t>(i)];
        h = (h << 4) | static_cast<std::uint64_t>(c <= '9' ? c - '0' : c - 'a' + 10);
    }
    return config_.seed.value_or(0) ^ h;
}

AnalogyResult Harness::dispatch(const Event& input, Method method) {
    GenerationContext ctx{*services_.gateway, *services_.verifier, services_.prompts};
    switch (method) {
        case Method::DirectRetrieve:
            return direct_retrieve(input, pool(), index(), *services_.gateway);
        case Method::TwoStageRetrieve:
            return two_stage_retrieve(input, pool(), index(), *services_.gateway,
                                      services_.prompts);
        case Method::DirectGen: return direct_generate(input, ctx);
        case Method::TwoStageGen: return two_stage_generate(input, ctx);
        case Method::SummarizeGen: return summarize_then_generate(input, ctx);
        case Method::SelfReflect: return self_reflect_generate(input, config_.reflection, ctx);
        case Method::RandomPool:
        case Method::RandomTheme:
            return random_baseline(input, method, &pool(), sample_seed(input.id), &ctx);
        case Method::RandomCandidate:
            return random_baseline(input, method, nullptr, sample_seed(input.id), &ctx);
    }
    throw ConfigError("unknown method");
}

AnalogyResult Harness::analogize(const Event& input) { return analogize(input, config_.method); }

AnalogyResult Harness::analogize(const Event& input, Method method) {
    validate(config_, method);
    validate(input);
    AnalogyResult result = dispatch(input, method);

    fs::path dir = fs::path(config_.out_dir) / "traces";
    fs::create_directories(dir);
    fs::path target = dir / (to_string(method) + "-" + sample_file_name(input.id) + ".json");
    std::ofstream out(target);
    out << json{{"input", to_json(input)}, {"result", to_json(result)}}.dump(2) << '\n';
    return result;
}

static void write_atomically(const fs::path& target, const std::string& content) {
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp);
        out << content;
    }
    fs::rename(tmp, target);
}

EvaluateOutcome Harness::evaluate(const std::vector<Method>& methods) {
    if (methods.empty()) throw ConfigError("no methods requested");
    if (config_.dataset_path.empty()) throw ConfigError("evaluate requires a dataset");
    for (Method m : methods) validate(config_, m);
    {
        std::unordered_set<std::string> seen;
        for (Method m : methods)
            if (!seen.insert(to_string(m)).second)
                throw ConfigError("method " + to_string(m) + " requested twice");
    }

    std::vector<Event> dataset = load_events_jsonl(config_.dataset_path);
    if (dataset.empty()) throw ConfigError("dataset is empty: " + config_.dataset_path);
    for (const Event& e : dataset) validate(e);

    std::unordered_map<std::string, GoldAnalogy> gold;
    if (!config_.gold_path.empty())
        for (GoldAnalogy& g : load_gold_jsonl(config_.gold_path))
            gold.emplace(g.input.id, std::move(g));

    prepare(methods);
    for (Method m : methods)
        fs::create_directories(fs::path(config_.out_dir) / "samples" / to_string(m));

    Judge judge(*services_.gateway, services_.prompts);

    struct Task {
        std::size_t method_index;
        std::size_t event_index;
    };
    std::vector<Task> tasks;
    tasks.reserve(methods.size() * dataset.size());
    for (std::size_t mi = 0; mi < methods.size(); ++mi)
        for (std::size_t ei = 0; ei < dataset.size(); ++ei) tasks.push_back({mi, ei});

    std::vector<std::vector<EvaluationRecord>> records(methods.size());
    std::vector<std::size_t> excluded(methods.size(), 0);
    std::vector<SampleFailure> failures;
    std::mutex collect;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr fatal;

    auto sample_path = [&](Method method, const std::string& id) {
        return fs::path(config_.out_dir) / "samples" / to_string(method) /
               (sample_file_name(id) + ".json");
    };

    auto run_task = [&](const Task& task) {
        Method method = methods[task.method_index];
        const Event& input = dataset[task.event_index];
        fs::path path = sample_path(method, input.id);

        // Resume: a persisted outcome stands; nothing is recomputed.
        if (fs::exists(path)) {
            std::ifstream in(path);
            json j = json::parse(in, nullptr, false);
            if (j.is_object() && j.contains("record")) {
                EvaluationRecord record = evaluation_record_from_json(j.at("record"));
                std::lock_guard lock(collect);
                records[task.method_index].push_back(std::move(record));
                return;
            }
            if (j.is_object() && j.contains("error")) {
                SampleFailure f;
                f.input_id = input.id;
                f.method = method;
                f.family = error_family_from_string(j.at("error").value("family", ""))
                               .value_or(ErrorFamily::Config);
                f.message = j.at("error").value("message", "");
                std::lock_guard lock(collect);
                ++excluded[task.method_index];
                failures.push_back(std::move(f));
                return;
            }
            // Unreadable sample files fall through and are recomputed.
        }

        try {
            AnalogyResult result = dispatch(input, method);
            auto git = gold.find(input.id);
            const GoldAnalogy* g = git == gold.end() ? nullptr : &git->second;
            EvaluationRecord record =
                evaluate_result(input, result, judge, config_.mds, g, services_.verifier.get());
            json j{{"input_id", input.id},
                   {"method", to_string(method)},
                   {"record", to_json(record)},
                   {"result", to_json(result)}};
            write_atomically(path, j.dump(2) + "\n");
            std::lock_guard lock(collect);
            records[task.method_index].push_back(std::move(record));
        } catch (const Error& e) {
            json j{{"input_id", input.id},
                   {"method", to_string(method)},
                   {"error",
                    {{"family", to_string(e.family())},
                     {"code", e.exit_code()},
                     {"message", e.what()}}}};
            write_atomically(path, j.dump(2) + "\n");
            SampleFailure f{input.id, method, e.family(), e.what()};
            std::lock_guard lock(collect);
            ++excluded[task.method_index];
            failures.push_back(std::move(f));
        }
    };

    auto worker = [&] {
        for (;;) {
            if (stop.load()) return;
            std::size_t t = next.fetch_add(1);
            if (t >= tasks.size()) return;
            try {
                run_task(tasks[t]);
            } catch (...) {
                std::lock_guard lock(collect);
                if (!fatal) fatal = std::current_exception();
                stop.store(true);
                return;
            }
        }
    };

    std::size_t n_workers = std::min<std::size_t>(static_cast<std::size_t>(config_.jobs),
                                                  std::max<std::size_t>(tasks.size(), 1));
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(n_workers);
        for (std::size_t i = 0; i < n_workers; ++i) threads.emplace_back(worker);
        for (std::thread& t : threads) t.join();
    }
    if (fatal) std::rethrow_exception(fatal);

    // Aggregation is order-independent; sort records by input id so the
    // report does not depend on worker interleaving.
    EvaluateOutcome outcome;
    outcome.total = tasks.size();
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        std::stable_sort(records[mi].begin(), records[mi].end(),
                         [](const EvaluationRecord& a, const EvaluationRecord& b) {
                             return a.input_id < b.input_id;
                         });
        outcome.rows.push_back(aggregate(methods[mi], records[mi], excluded[mi]));
    }
    std::stable_sort(failures.begin(), failures.end(),
                     [](const SampleFailure& a, const SampleFailure& b) {
                         if (a.method != b.method) return to_string(a.method) < to_string(b.method);
                         return a.input_id < b.input_id;
                     });
    outcome.failures = std::move(failures);

    // Self-consistency: the report must equal a fresh aggregation of the
    // per-sample files on disk.
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        std::vector<EvaluationRecord> reread;
        std::size_t reread_excluded = 0;
        for (const Event& input : dataset) {
            fs::path path = sample_path(methods[mi], input.id);
            if (!fs::exists(path)) continue;
            std::ifstream in(path);
            json j = json::parse(in, nullptr, false);
            if (j.is_object() && j.contains("record"))
                reread.push_back(evaluation_record_from_json(j.at("record")));
            else if (j.is_object() && j.contains("error"))
                ++reread_excluded;
        }
        MethodReport check = aggregate(methods[mi], reread, reread_excluded);
        const MethodReport& row = outcome.rows[mi];
        bool same = check.completed == row.completed && check.excluded == row.excluded &&
                    std::abs(check.mean_mds - row.mean_mds) <= 1e-12 &&
                    check.pass_rate.has_value() == row.pass_rate.has_value();
        for (std::size_t d = 0; d < 4 && same; ++d)
            same = std::abs(check.mean_abs[d] - row.mean_abs[d]) <= 1e-12 &&
                   std::abs(check.mean_lit[d] - row.mean_lit[d]) <= 1e-12 &&
                   std::abs(check.mean_all[d] - row.mean_all[d]) <= 1e-12;
        if (same && row.pass_rate)
            same = std::abs(*check.pass_rate - *row.pass_rate) <= 1e-12;
        if (!same)
            throw SchemaError("persisted samples for " + to_string(methods[mi]) +
                              " disagree with the aggregated report; clear " + config_.out_dir +
                              "/samples of stale runs");
    }

    fs::create_directories(config_.out_dir);
    write_atomically(fs::path(config_.out_dir) / "report.json",
                     report_to_json(outcome, config_.mds).dump(2) + "\n");
    write_atomically(fs::path(config_.out_dir) / "report.csv", report_to_csv(outcome));
    return outcome;
}

std::pair<std::size_t, std::size_t> Harness::ingest() {
    if (config_.pool_path.empty()) throw ConfigError("ingest requires --pool");
    const EventPool& p = pool();
    const EmbeddingIndex& ix = index();
    return {p.size(), ix.size()};
}

json Harness::score_events(const Event& a, const Event& b) {
    validate(a);
    validate(b);
    Judge judge(*services_.gateway, services_.prompts);
    DimensionalSummary sa = judge.summarize(a);
    DimensionalSummary sb = judge.summarize(b);
    DimensionScores scores = score_pair(sa, sb, judge, config_.mds);
    json abs = json::array(), lit = json::array(), all = json::array();
    for (std::size_t d = 0; d < 4; ++d) {
        abs.push_back(scores.abs[d]);
        lit.push_back(scores.lit[d]);
        all.push_back(scores.all[d]);
    }
    return json{{"a", {{"title", a.title}, {"summary", to_json(sa)}}},
                {"b", {{"title", b.title}, {"summary", to_json(sb)}}},
                {"abs", abs},
                {"lit", lit},
                {"all", all},
                {"mds", mds(scores, config_.mds)}};
}

}  // namespace analogist
