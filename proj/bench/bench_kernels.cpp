#include <benchmark/benchmark.h>

#include "qtriage/eval.hpp"
#include "qtriage/features.hpp"
#include "qtriage/hierarchy.hpp"
#include "qtriage/learners.hpp"

using namespace qtriage;

namespace {

struct Fixture {
    Corpus corpus;
    std::vector<std::string> texts;
    TokenizerConfig tok;
    Vocabulary vocab;
    std::vector<SparseVector> X;
    std::vector<std::size_t> y;
    std::vector<std::string> labels;
    TrainedLearner svm;
    StrategyModel single_path;

    Fixture() {
        SyntheticSpec spec;
        spec.irrelevant = 2400;
        spec.effective = 3660;
        spec.ineffective = 3770;
        spec.separation = 0.6;
        corpus = gen_synthetic(spec, 1);
        std::vector<std::vector<std::string>> docs;
        for (const auto& q : corpus.questions()) {
            texts.push_back(q.text);
            docs.push_back(tokenize(q.text, tok));
            labels.emplace_back(to_string(q.gold->leaf()));
        }
        vocab = build_vocab(docs, 2);
        X = reference::vectorize_batch(texts, tok, vocab, Weighting::L2NormalizedCount);
        y = index_labels(labels).y;
        svm = train_svm(X, labels, {});
        StrategySpec sp;
        sp.mode = StrategyMode::SinglePath;
        single_path = train_strategy(sp, corpus.questions());
    }
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

void BM_vectorize_batch_serial(benchmark::State& s) {
    const auto& f = fixture();
    for (auto _ : s) benchmark::DoNotOptimize(reference::vectorize_batch(f.texts, f.tok, f.vocab, Weighting::RawCount));
    s.SetItemsProcessed(s.iterations() * static_cast<std::int64_t>(f.texts.size()));
}

void BM_vectorize_batch_omp(benchmark::State& s) {
    const auto& f = fixture();
    for (auto _ : s) benchmark::DoNotOptimize(vectorize_batch(f.texts, f.tok, f.vocab, Weighting::RawCount));
    s.SetItemsProcessed(s.iterations() * static_cast<std::int64_t>(f.texts.size()));
}

void BM_chi2_scores_serial(benchmark::State& s) {
    const auto& f = fixture();
    for (auto _ : s) benchmark::DoNotOptimize(reference::chi2_scores(f.X, f.y, 3));
}

void BM_chi2_scores_omp(benchmark::State& s) {
    const auto& f = fixture();
    for (auto _ : s) benchmark::DoNotOptimize(chi2_scores(f.X, f.y, 3));
}

void BM_predict_batch_serial(benchmark::State& s) {
    const auto& f = fixture();
    for (auto _ : s) benchmark::DoNotOptimize(reference::predict_batch(f.svm, f.X));
    s.SetItemsProcessed(s.iterations() * static_cast<std::int64_t>(f.X.size()));
}

void BM_predict_batch_omp(benchmark::State& s) {
    const auto& f = fixture();
    for (auto _ : s) benchmark::DoNotOptimize(predict_batch(f.svm, f.X));
    s.SetItemsProcessed(s.iterations() * static_cast<std::int64_t>(f.X.size()));
}

void BM_predict_strategy_batch_serial(benchmark::State& s) {
    const auto& f = fixture();
    for (auto _ : s) benchmark::DoNotOptimize(reference::predict_strategy_batch(f.single_path, f.texts));
}

void BM_predict_strategy_batch_omp(benchmark::State& s) {
    const auto& f = fixture();
    for (auto _ : s) benchmark::DoNotOptimize(predict_strategy_batch(f.single_path, f.texts));
}

void BM_cross_validate(benchmark::State& s) {
    SyntheticSpec spec;
    spec.irrelevant = 240;
    spec.effective = 366;
    spec.ineffective = 377;
    const auto c = gen_synthetic(spec, 2);
    StrategySpec sp;
    sp.mode = StrategyMode::SinglePath;
    CvOptions opts;
    opts.parallel = s.range(0) != 0;
    for (auto _ : s) benchmark::DoNotOptimize(cross_validate(c, sp, 10, 3, opts));
}

}  // namespace

BENCHMARK(BM_vectorize_batch_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_vectorize_batch_omp)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_chi2_scores_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_chi2_scores_omp)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_predict_batch_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_predict_batch_omp)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_predict_strategy_batch_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_predict_strategy_batch_omp)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_cross_validate)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
