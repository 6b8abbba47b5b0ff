#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "analogist/errors.hpp"
#include "analogist/retrieval.hpp"

#include "scripted.hpp"
#include "tempdir.hpp"

#include <algorithm>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

using namespace analogist;
using analogist::testing::ScriptedBackend;
using analogist::testing::TempDir;

namespace {

Event pool_event(const std::string& id, const std::string& title, const std::string& description,
                 Theme theme = Theme::War) {
    Event e;
    e.id = id;
    e.title = title;
    e.description = description;
    e.theme = theme;
    return e;
}

std::vector<Event> small_events() {
    return {
        pool_event("p1", "Winter War", "A small nation resisted a larger invader.", Theme::War),
        pool_event("p2", "Tulip mania", "A speculative bubble inflated and burst.",
                   Theme::Economy),
        pool_event("p3", "Space Race", "Two powers competed to reach orbit and the Moon.",
                   Theme::Politics),
    };
}

Gateway hash_gateway() {
    GatewayConfig config;
    config.mode = RunMode::Live;
    return Gateway(config, nullptr, std::make_unique<HashEmbeddingBackend>());
}

Gateway scripted_gateway(std::unique_ptr<ScriptedBackend> backend) {
    GatewayConfig config;
    config.mode = RunMode::Live;
    return Gateway(config, std::move(backend), std::make_unique<HashEmbeddingBackend>());
}

}  // namespace

TEST_CASE("make_pool validates, indexes, and normalizes sources") {
    EventPool pool = make_pool(small_events());
    CHECK(pool.size() == 3);
    CHECK(pool.events[0].source == EventSource::Pool);
    CHECK(pool.find("p2")->title == "Tulip mania");
    CHECK(pool.find("p9") == nullptr);
    REQUIRE(pool.by_theme.count(Theme::War) == 1);
    CHECK(pool.by_theme.at(Theme::War) == std::vector<std::size_t>{0});

    std::vector<Event> dup = small_events();
    dup.push_back(pool_event("p1", "Another", "Duplicate id."));
    CHECK_THROWS_AS(make_pool(dup), DuplicateIdError);

    std::vector<Event> themeless = small_events();
    themeless[1].theme.reset();
    CHECK_THROWS_AS(make_pool(themeless), SchemaError);
}

TEST_CASE("ingest_pool reads JSONL and reports bad lines") {
    TempDir dir("pool");
    save_events_jsonl(dir.file("pool.jsonl"), small_events());
    EventPool pool = ingest_pool(dir.file("pool.jsonl"));
    CHECK(pool.size() == 3);

    {
        std::ofstream out(dir.file("bad.jsonl"));
        out << R"({"id": "x", "title": "t"})" << "\n";
    }
    CHECK_THROWS_AS(ingest_pool(dir.file("bad.jsonl")), SchemaError);
}

TEST_CASE("pool digest tracks content") {
    EventPool a = make_pool(small_events());
    EventPool b = make_pool(small_events());
    CHECK(pool_digest(a) == pool_digest(b));

    std::vector<Event> changed = small_events();
    changed[0].description += " More text.";
    CHECK(pool_digest(make_pool(changed)) != pool_digest(a));
}

TEST_CASE("index save/load round-trip is byte-stable") {
    TempDir dir("index");
    EmbeddingIndex index;
    index.model_tag = "hash-embed-v1";
    index.pool_digest = "digest";
    index.dimension = 3;
    index.ids = {"p1", "p2"};
    index.vectors = {{0.1f, 0.2f, 0.3f}, {-1.0f, 0.0f, 1.0f}};

    save_index(index, dir.file("a.idx"));
    save_index(index, dir.file("b.idx"));
    std::ifstream fa(dir.file("a.idx"), std::ios::binary);
    std::ifstream fb(dir.file("b.idx"), std::ios::binary);
    std::string bytes_a((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    std::string bytes_b((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    CHECK(bytes_a == bytes_b);
    CHECK(bytes_a.substr(0, 8) == "ANLGIDX1");

    EmbeddingIndex back = load_index(dir.file("a.idx"));
    CHECK(back.model_tag == index.model_tag);
    CHECK(back.pool_digest == index.pool_digest);
    CHECK(back.dimension == 3);
    CHECK(back.ids == index.ids);
    CHECK(back.vectors == index.vectors);
}

TEST_CASE("index loader rejects corrupt files") {
    TempDir dir("index");
    CHECK_THROWS_AS(load_index(dir.file("absent.idx")), ConfigError);

    {
        std::ofstream out(dir.file("magic.idx"), std::ios::binary);
        out << "NOTANIDX and more bytes";
    }
    CHECK_THROWS_AS(load_index(dir.file("magic.idx")), SchemaError);

    EmbeddingIndex index;
    index.model_tag = "hash-embed-v1";
    index.pool_digest = "digest";
    index.dimension = 2;
    index.ids = {"p1"};
    index.vectors = {{0.5f, 0.5f}};
    save_index(index, dir.file("good.idx"));

    std::ifstream in(dir.file("good.idx"), std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    {
        std::ofstream out(dir.file("truncated.idx"), std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 3));
    }
    CHECK_THROWS_AS(load_index(dir.file("truncated.idx")), SchemaError);

    {
        std::ofstream out(dir.file("trailing.idx"), std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out << "junk";
    }
    CHECK_THROWS_AS(load_index(dir.file("trailing.idx")), SchemaError);
}

TEST_CASE("build_index embeds the pool and reuses fresh files") {
    TempDir dir("index");
    EventPool pool = make_pool(small_events());
    Gateway gateway = hash_gateway();
    std::string path = dir.file("pool.idx");

    EmbeddingIndex index = build_index(pool, gateway, path);
    CHECK(index.size() == 3);
    CHECK(index.dimension == 64);
    CHECK(index.ids == std::vector<std::string>{"p1", "p2", "p3"});
    CHECK(index.model_tag == "hash-embed-v1");
    CHECK(index.pool_digest == pool_digest(pool));
    CHECK(std::filesystem::exists(path));

    // A fresh index short-circuits re-embedding entirely.
    auto embeds_before = gateway.counters().embeddings.load();
    EmbeddingIndex again = build_index(pool, gateway, path);
    CHECK(gateway.counters().embeddings.load() == embeds_before);
    CHECK(again.ids == index.ids);
    CHECK(again.vectors == index.vectors);

    // A changed pool invalidates the digest and rebuilds.
    std::vector<Event> changed = small_events();
    changed[2].description = "A totally different description.";
    EventPool changed_pool = make_pool(changed);
    EmbeddingIndex rebuilt = build_index(changed_pool, gateway, path);
    CHECK(gateway.counters().embeddings.load() > embeds_before);
    CHECK(rebuilt.pool_digest == pool_digest(changed_pool));
    CHECK(rebuilt.vectors[2] != index.vectors[2]);
    CHECK(rebuilt.vectors[0] == index.vectors[0]);  // unchanged text, same vector

    // Parallel build produces the identical index.
    EmbeddingIndex parallel = build_index(changed_pool, gateway, "", 4);
    CHECK(parallel.ids == rebuilt.ids);
    CHECK(parallel.vectors == rebuilt.vectors);
}

TEST_CASE("top_k ranks by cosine with insertion-order ties") {
    EmbeddingIndex index;
    index.model_tag = "hash-embed-v1";
    index.dimension = 2;
    index.ids = {"a", "b", "c", "d"};
    index.vectors = {{1.f, 0.f}, {0.f, 1.f}, {1.f, 0.f}, {0.7071f, 0.7071f}};

    EmbeddingVector query{{1.f, 0.f}, "hash-embed-v1"};
    std::vector<ScoredEntry> top = top_k(index, query, 3);
    REQUIRE(top.size() == 3);
    // a and c tie at 1.0; insertion order keeps a first.
    CHECK(top[0].id == "a");
    CHECK(top[1].id == "c");
    CHECK(top[2].id == "d");
    CHECK(top[0].score == doctest::Approx(1.0));

    // k larger than the index truncates.
    CHECK(top_k(index, query, 99).size() == 4);

    CHECK_THROWS_AS(top_k(index, query, 0), ConfigError);
    EmbeddingVector wrong_tag{{1.f, 0.f}, "other-model"};
    CHECK_THROWS_AS(top_k(index, wrong_tag, 1), ModelTagMismatch);
    EmbeddingIndex empty;
    empty.model_tag = "hash-embed-v1";
    CHECK_THROWS_AS(top_k(empty, query, 1), EmptyIndex);
}

TEST_CASE("direct_retrieve returns the nearest pool event with a full trace") {
    std::vector<Event> events = small_events();
    EventPool pool = make_pool(events);
    Gateway gateway = hash_gateway();
    EmbeddingIndex index = build_index(pool, gateway);

    // An input sharing p2's exact description embeds onto the same vector.
    Event input;
    input.id = "in-1";
    input.title = "Crypto crash";
    input.description = events[1].description;

    AnalogyResult result = direct_retrieve(input, pool, index, gateway);
    CHECK(result.method == Method::DirectRetrieve);
    CHECK(result.input_id == "in-1");
    CHECK(result.analog.id == "p2");
    REQUIRE(result.trace.size() == 2);
    CHECK(result.trace[0].kind == TraceKind::Retrieval);
    CHECK(result.trace[0].payload.contains("ranking"));
    CHECK(result.trace[1].kind == TraceKind::Selection);
    CHECK(result.trace[1].payload["via"] == "cosine-top1");
    CHECK(result.trace[1].payload["chosen"] == "Tulip mania");
}

TEST_CASE("direct_retrieve excludes the input's own title") {
    std::vector<Event> events = small_events();
    EventPool pool = make_pool(events);
    Gateway gateway = hash_gateway();
    EmbeddingIndex index = build_index(pool, gateway);

    Event input;
    input.id = "in-2";
    input.title = "The Tulip Mania";  // normalizes onto p2's title
    input.description = events[1].description;

    AnalogyResult result = direct_retrieve(input, pool, index, gateway);
    CHECK(result.analog.id != "p2");
    const auto& excluded = result.trace[0].payload["excluded"];
    CHECK(std::find(excluded.begin(), excluded.end(), "p2") != excluded.end());

    // Pool with nothing but the input itself -> exhausted domain.
    EventPool self_only = make_pool({pool_event("s1", "Tulip mania", events[1].description,
                                                Theme::Economy)});
    EmbeddingIndex self_index = build_index(self_only, gateway);
    CHECK_THROWS_AS(direct_retrieve(input, self_only, self_index, gateway), EmptyDomain);
}

TEST_CASE("direct_retrieve rejects an index that does not match the pool") {
    EventPool pool = make_pool(small_events());
    Gateway gateway = hash_gateway();
    EventPool bigger =
        make_pool({pool_event("q1", "A", "First."), pool_event("q2", "B", "Second."),
                   pool_event("q3", "C", "Third."), pool_event("q4", "D", "Fourth.")});
    EmbeddingIndex wrong = build_index(bigger, gateway);
    Event input = pool_event("in", "Input", "Some input description.");
    CHECK_THROWS_AS(direct_retrieve(input, pool, wrong, gateway), ConfigError);
}

TEST_CASE("run_selection resolves a model choice") {
    auto backend = std::make_unique<ScriptedBackend>();
    backend->on_contains("", "", "The most fitting option is Tulip mania.");
    Gateway gateway = scripted_gateway(std::move(backend));
    PromptRegistry prompts;

    std::vector<Event> candidates = small_events();
    std::vector<std::string> descriptions;
    for (const Event& e : candidates) descriptions.push_back(e.description);

    Event input = pool_event("in", "Crypto crash", "A speculative digital asset collapse.");
    SelectionOutcome outcome =
        run_selection(input, input.description, candidates, descriptions, gateway, prompts);
    CHECK(outcome.index == 1);
    CHECK(!outcome.fallback);

    CHECK_THROWS_AS(run_selection(input, input.description, {}, {}, gateway, prompts),
                    ConfigError);
    CHECK_THROWS_AS(
        run_selection(input, input.description, candidates, {"only one"}, gateway, prompts),
        ConfigError);
}

TEST_CASE("run_selection retries off-list answers, then falls back") {
    auto backend = std::make_unique<ScriptedBackend>();
    // Second attempt carries the attempt tag; answer on-list then.
    backend->on_contains("", "(Attempt 2)", "Winter War");
    backend->on_contains("", "", "The Battle of Nowhere");  // off-list first answer
    ScriptedBackend* raw = backend.get();
    Gateway gateway = scripted_gateway(std::move(backend));
    PromptRegistry prompts;

    std::vector<Event> candidates = small_events();
    std::vector<std::string> descriptions;
    for (const Event& e : candidates) descriptions.push_back(e.description);
    Event input = pool_event("in", "Border conflict", "A border conflict between neighbors.");

    SelectionOutcome outcome =
        run_selection(input, input.description, candidates, descriptions, gateway, prompts);
    CHECK(outcome.index == 0);
    CHECK(!outcome.fallback);
    CHECK(raw->calls() == 2);

    // Never on-list: the retry budget is spent, then the first candidate wins.
    auto stubborn = std::make_unique<ScriptedBackend>();
    stubborn->on_contains("", "", "No candidate pleases me.");
    ScriptedBackend* stubborn_raw = stubborn.get();
    Gateway gateway2 = scripted_gateway(std::move(stubborn));
    SelectionOutcome fallback =
        run_selection(input, input.description, candidates, descriptions, gateway2, prompts);
    CHECK(fallback.fallback);
    CHECK(fallback.index == 0);
    CHECK(stubborn_raw->calls() == kSelectionRetryBudget);
}

TEST_CASE("two_stage_retrieve picks among the cosine top candidates") {
    std::vector<Event> events = small_events();
    EventPool pool = make_pool(events);

    auto backend = std::make_unique<ScriptedBackend>();
    backend->on_contains("analogy robot", "", "I choose Space Race because of the rivalry.");
    Gateway gateway = scripted_gateway(std::move(backend));
    EmbeddingIndex index = build_index(pool, gateway);
    PromptRegistry prompts;

    Event input = pool_event("in", "AI rivalry", "Two blocs compete for technological primacy.");
    AnalogyResult result = two_stage_retrieve(input, pool, index, gateway, prompts);
    CHECK(result.method == Method::TwoStageRetrieve);
    CHECK(result.analog.id == "p3");
    CHECK(result.trace.back().payload["via"] == "model-choice");
    CHECK(result.trace.back().payload["fallback"] == false);
    CHECK(result.trace.front().kind == TraceKind::Retrieval);
}

TEST_CASE("two_stage_retrieve short-circuits a single candidate") {
    // Two events, one of which is the input itself: stage 2 has one option.
    std::vector<Event> events = {
        pool_event("p1", "Tulip mania", "A speculative bubble inflated and burst.",
                   Theme::Economy),
        pool_event("p2", "Winter War", "A small nation resisted a larger invader.", Theme::War),
    };
    EventPool pool = make_pool(events);
    auto backend = std::make_unique<ScriptedBackend>();  // no rules: any call would throw
    ScriptedBackend* raw = backend.get();
    Gateway gateway = scripted_gateway(std::move(backend));
    EmbeddingIndex index = build_index(pool, gateway);
    PromptRegistry prompts;

    Event input = pool_event("in", "The Tulip Mania", "Digital assets collapsed.");
    AnalogyResult result = two_stage_retrieve(input, pool, index, gateway, prompts);
    CHECK(result.analog.id == "p2");
    CHECK(result.trace.back().payload["via"] == "single-candidate");
    CHECK(raw->calls() == 0);
}
