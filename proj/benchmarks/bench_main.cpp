#include "civicrank/cluster.hpp"
#include "civicrank/enrich.hpp"
#include "civicrank/extrapolate.hpp"
#include "civicrank/rerank.hpp"
#include "civicrank/rng.hpp"

#include <benchmark/benchmark.h>

using namespace civicrank;

namespace {

Matrix random_points(std::size_t n, std::size_t d, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(n, d);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) m(r, c) = rng.normal() + static_cast<double>(r % 4) * 3.0;
    }
    return m;
}

void BM_Kmeans(benchmark::State& state) {
    const auto pts = random_points(static_cast<std::size_t>(state.range(0)), 12, 1);
    for (auto _ : state) benchmark::DoNotOptimize(kmeans(pts, 4, 2).inertia);
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Kmeans)->Arg(200)->Arg(2000);

void BM_SelectK(benchmark::State& state) {
    const auto pts = random_points(200, 12, 3);
    for (auto _ : state) benchmark::DoNotOptimize(select_k(pts, 2, 8, 4).k);
}
BENCHMARK(BM_SelectK);

void BM_HeadlineFeatures(benchmark::State& state) {
    const std::string dir = CIVICRANK_BENCH_DATA_DIR;
    const auto stops = StopwordSet::load(dir + "/stopwords.txt");
    const auto lex = Lexicon::load(dir + "/lexicon.tsv");
    const auto bait = ClickbaitLexicon::load(dir + "/clickbait");
    const auto bg = BackgroundModel::count({{"council", "approves", "budget"}, {"storm", "hits", "coast"}});
    const std::string headline = "You Won't Believe How The Council Approves These 10 Budget Cuts!";
    for (auto _ : state) {
        benchmark::DoNotOptimize(compute_sentiment(headline, lex, stops).polarity);
        benchmark::DoNotOptimize(compute_surprise(headline, bg, stops, -10.0).value);
        benchmark::DoNotOptimize(compute_clickbait(headline, bait).score);
    }
}
BENCHMARK(BM_HeadlineFeatures);

void BM_Ridge(benchmark::State& state) {
    const auto X = random_points(static_cast<std::size_t>(state.range(0)), 12, 5);
    Rng rng(6);
    std::vector<double> y(X.rows());
    for (auto& v : y) v = rng.uniform();
    for (auto _ : state) benchmark::DoNotOptimize(fit_ridge(X, y, 1.0, true).intercept);
}
BENCHMARK(BM_Ridge)->Arg(120)->Arg(5000);

void BM_Rerank(benchmark::State& state) {
    Rng rng(7);
    std::vector<Candidate> cs;
    for (int i = 0; i < state.range(0); ++i) cs.push_back({"a" + std::to_string(i), rng.normal(), rng.uniform(), {}});
    const ProfileWeights w{"engaged", 0.6, {}};
    for (auto _ : state) benchmark::DoNotOptimize(rerank(cs, w).items.size());
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Rerank)->Arg(100)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
