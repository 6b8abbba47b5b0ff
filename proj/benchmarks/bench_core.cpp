#include "analogist/evaluation.hpp"
#include "analogist/gateway.hpp"
#include "analogist/retrieval.hpp"
#include "analogist/text.hpp"

#include <benchmark/benchmark.h>

#include <memory>
#include <random>
#include <string>
#include <vector>

namespace {

using namespace analogist;

const std::string kMessyTitle = "  The  GREAT   Depression — of 1929!  ";
const std::string kSentenceA =
    "A worldwide financial panic wiped out banks, trade, and employment for a decade.";
const std::string kSentenceB =
    "A global pandemic froze travel and trade while governments raced to respond.";

void BM_NormalizeTitle(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(text::normalize_title(kMessyTitle));
}
BENCHMARK(BM_NormalizeTitle);

void BM_WordTokenSet(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(text::word_token_set(kSentenceA));
}
BENCHMARK(BM_WordTokenSet);

void BM_LiteralSimilarity(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(literal_similarity(kSentenceA, kSentenceB));
}
BENCHMARK(BM_LiteralSimilarity);

void BM_LevenshteinSimilarity(benchmark::State& state) {
    for (auto _ : state)
        benchmark::DoNotOptimize(
            text::levenshtein_similarity("Spanish flu", "The 1918 influenza pandemic"));
}
BENCHMARK(BM_LevenshteinSimilarity);

void BM_MdsScore(benchmark::State& state) {
    MdsConfig config;
    RawScores raw;
    raw.abs = {4, 3, 3, 3};
    raw.lit = {0.15, 0.10, 0.10, 0.10};
    for (auto _ : state)
        benchmark::DoNotOptimize(mds(make_dimension_scores(raw, config), config));
}
BENCHMARK(BM_MdsScore);

void BM_HashEmbed(benchmark::State& state) {
    Gateway gateway(GatewayConfig{}, nullptr, std::make_unique<HashEmbeddingBackend>());
    for (auto _ : state) benchmark::DoNotOptimize(gateway.embed(kSentenceA));
}
BENCHMARK(BM_HashEmbed);

void BM_TopK(benchmark::State& state) {
    Gateway gateway(GatewayConfig{}, nullptr, std::make_unique<HashEmbeddingBackend>());
    std::mt19937_64 rng(7);
    static const char* words[] = {"war",    "reform", "panic", "treaty", "plague",
                                  "bubble", "siege",  "vote",  "crash",  "flight"};
    const Theme themes[] = {Theme::War, Theme::Politics, Theme::CultureAndSociety,
                            Theme::Economy};
    std::vector<Event> events;
    for (int i = 0; i < static_cast<int>(state.range(0)); ++i) {
        Event e;
        e.id = "e" + std::to_string(i);
        e.title = "Event " + std::to_string(i);
        for (int w = 0; w < 8; ++w) e.description += std::string(words[rng() % 10]) + " ";
        e.theme = themes[i % 4];
        e.source = EventSource::Pool;
        events.push_back(std::move(e));
    }
    EventPool pool = make_pool(events);
    EmbeddingIndex index = build_index(pool, gateway);
    EmbeddingVector query = gateway.embed(kSentenceB);
    for (auto _ : state) benchmark::DoNotOptimize(top_k(index, query, 10));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_TopK)->Arg(100)->Arg(1000)->Arg(5000)->Complexity(benchmark::oN);

}  // namespace

BENCHMARK_MAIN();
