// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "qtriage/eval.hpp"
#include "qtriage/hierarchy.hpp"
#include "qtriage/learners.hpp"
#include "qtriage/serialize.hpp"
#include "test_util.hpp"

using namespace qtriage;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) detail = what;
        ok = ok && cond;
    }
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

StrategySpec flat(LearnerKind k) {
    StrategySpec s;
    s.flat_kind = k;
    return s;
}

StrategySpec single_path(LearnerKind k1, LearnerKind k2) {
    StrategySpec s;
    s.mode = StrategyMode::SinglePath;
    s.level1_kind = k1;
    s.level2_kind = k2;
    return s;
}

std::string random_text(Rng& rng) {
    static const char* prefixes[] = {"irr", "eff", "ineff", "com", "unseen"};
    std::string s;
    for (auto n = rng.below(30); n > 0; --n) {
        if (!s.empty()) s += ' ';
        s += prefixes[rng.below(5)] + std::to_string(rng.below(60));
    }
    return s;
}

Outcome f_measure_consistency() {
    Outcome o;
    const std::array<std::array<double, 3>, 3> cases{{{.460, .864, .601}, {.923, .950, .936}, {.547, .847, .664}}};
    for (const auto& [p, r, want] : cases) {
        // Build a confusion whose precision and recall are exactly p and r.
        const auto tp = static_cast<std::size_t>(std::lround(p * r * 1e6));
        const auto fp = static_cast<std::size_t>(std::lround(r * (1 - p) * 1e6));
        const auto fn = static_cast<std::size_t>(std::lround(p * (1 - r) * 1e6));
        ConfusionMatrix cm({"neg", "pos"});
        cm.add("pos", "pos", tp);
        cm.add("neg", "pos", fp);
        cm.add("pos", "neg", fn);
        const auto m = class_metrics(cm, "pos");
        o.require(m.f1 && std::abs(*m.f1 - want) <= 0.001, "confusion f1 " + fmt("%.4f", m.f1.value_or(-1)));
        const auto f = f1_score(p, r);
        o.require(f && std::abs(*f - want) <= 0.001, "f1(p,r) " + fmt("%.4f", f.value_or(-1)));
    }
    o.detail = o.ok ? ".601 / .936 / .664 reproduced" : o.detail;
    return o;
}

Outcome corpus_arithmetic() {
    Outcome o;
    SyntheticSpec spec;
    spec.irrelevant = 240;
    spec.effective = 366;
    spec.ineffective = 377;
    const auto c = gen_synthetic(spec, 1);
    const auto s = corpus_stats(c);
    o.require(s.total == 983, "total");
    o.require(s.relevant == 743, "relevant");
    o.require(s.effective == 366, "effective");
    o.require(s.ineffective == 377, "ineffective");
    o.require(s.irrelevant == 240, "irrelevant");
    o.require(s.unlabeled == 0, "unlabeled");
    if (o.ok) o.detail = "983 = 240 irrelevant + 743 relevant (366 effective + 377 ineffective)";
    return o;
}

Outcome oracle_equivalence() {
    Outcome o;
    const std::vector<std::array<std::size_t, 3>> sizes{{10, 10, 10}, {30, 35, 35}, {80, 110, 110}, {240, 366, 377}};
    std::vector<StrategySpec> specs;
    for (auto k : kAllLearners) {
        specs.push_back(flat(k));
        specs.push_back(single_path(k, k));
    }
    specs.push_back(single_path(LearnerKind::NBM, LearnerKind::SVM));

    std::size_t runs = 0;
    double worst_recall = 1.0;
    for (const auto& [irr, eff, ineff] : sizes)
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const auto c = qtest::synthetic(irr, eff, ineff, seed);
            for (auto spec : specs) {
                spec.hyper.seed = seed;
                const std::string tag = std::string(to_string(spec.mode)) + "/" + spec.learner_name() + " n=" +
                                        std::to_string(c.size()) + " seed=" + std::to_string(seed);
                const auto m = train_strategy(spec, c.questions());
                std::size_t ok = 0;
                for (const auto& q : c.questions()) ok += predict_strategy(m, q.text).leaf == q.gold->leaf();
                o.require(ok == c.size(), tag + ": training accuracy " + std::to_string(ok) + "/" +
                                              std::to_string(c.size()));
                const auto r = cross_validate(c, spec, 10, seed);
                const auto rec = class_metrics(r.section(kSectionLeaf)->pooled, "ineffective").recall.value_or(0.0);
                worst_recall = std::min(worst_recall, rec);
                o.require(rec >= 0.95, tag + ": ineffective recall " + fmt("%.3f", rec));
                ++runs;
            }
        }
    if (o.ok)
        o.detail = std::to_string(runs) + " corpus/strategy runs; min pooled ineffective recall " +
                   fmt("%.3f", worst_recall);
    return o;
}

Outcome nbm_hand_oracle() {
    Outcome o;
    using E = SparseVector::Entry;
    std::vector<SparseVector> X{SparseVector(2, {E{0, 2.0}}), SparseVector(2, {E{1, 1.0}})};
    const std::vector<std::string> y{"P", "N"};
    const auto m = train_nbm(X, y, {});
    const auto pred = predict(m, SparseVector(2, {E{0, 1.0}}));
    const double dp = std::abs(pred.scores[1] - std::log(3.0 / 8.0));
    const double dn = std::abs(pred.scores[0] - std::log(1.0 / 6.0));
    o.require(m.labels == std::vector<std::string>{"N", "P"}, "label order");
    o.require(dp <= 1e-9 && dn <= 1e-9, "log-space error " + fmt("%.3g", std::max(dp, dn)));
    o.require(pred.label == "P", "argmax");
    if (o.ok) o.detail = "log posteriors within " + fmt("%.1e", std::max(dp, dn)) + " of ln(3/8), ln(1/6)";
    return o;
}

Outcome logreg_gradient() {
    Outcome o;
    Rng rng(2024);
    double worst = 0.0;
    const double eps = 1e-5;
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8}); };
    for (int inst = 0; inst < 20; ++inst) {
        const std::size_t L = 2 + rng.below(3), dim = 2 + rng.below(6), n = 3 + rng.below(10);
        auto X = qtest::random_vectors(rng, n, dim, 0.6, true);
        std::vector<std::size_t> y;
        for (std::size_t i = 0; i < n; ++i) y.push_back(rng.below(L));
        LinearParams p{Matrix(L, dim), std::vector<double>(L)};
        for (double& v : p.weights.data) v = rng.uniform() * 2 - 1;
        for (double& v : p.bias) v = rng.uniform() * 2 - 1;
        const double lambda = 0.01 + rng.uniform();
        const auto g = logreg::gradient(p, X, y, lambda);
        auto fd = [&](auto&& perturb) {
            auto hi = p, lo = p;
            perturb(hi, eps);
            perturb(lo, -eps);
            return (logreg::objective(hi, X, y, lambda) - logreg::objective(lo, X, y, lambda)) / (2 * eps);
        };
        for (std::size_t i = 0; i < p.weights.data.size(); ++i)
            worst = std::max(worst, rel(g.weights.data[i], fd([i](LinearParams& q, double d) { q.weights.data[i] += d; })));
        for (std::size_t l = 0; l < L; ++l)
            worst = std::max(worst, rel(g.bias[l], fd([l](LinearParams& q, double d) { q.bias[l] += d; })));
    }
    o.require(worst <= 1e-4, "max relative error " + fmt("%.3g", worst));
    if (o.ok) o.detail = "20 instances, max relative error " + fmt("%.2e", worst);
    return o;
}

Outcome svm_objective() {
    Outcome o;
    Rng rng(7);
    double worst_rise = 0.0;
    for (int ds = 0; ds < 10; ++ds) {
        auto X = qtest::random_vectors(rng, 30 + rng.below(150), 3 + rng.below(40), 0.3, true);
        auto y = qtest::random_labels(rng, X.size(), 2 + rng.below(3));
        Hyperparams h;
        h.seed = rng.next();
        SvmTrace trace;
        train_svm(X, y, h, &trace);
        for (const auto& obj : trace.objective)
            for (std::size_t e = 1; e < obj.size(); ++e) worst_rise = std::max(worst_rise, obj[e] - obj[e - 1]);
    }
    o.require(worst_rise <= 1e-6, "objective rose by " + fmt("%.3g", worst_rise));

    // Separable toys: two or three labels over disjoint, L2-normalized feature blocks.
    for (std::size_t labels : {2u, 3u})
        for (int t = 0; t < 5; ++t) {
            const std::size_t block = 5, dim = labels * block;
            std::vector<SparseVector> X;
            std::vector<std::string> y;
            for (std::size_t i = 0; i < 60; ++i) {
                const std::size_t l = i % labels;
                std::vector<SparseVector::Entry> e;
                for (std::size_t f = 0; f < block; ++f)
                    if (f == i % block || rng.uniform() < 0.3) e.emplace_back(l * block + f, 1.0 + rng.below(3));
                double norm = 0.0;
                for (const auto& [i2, v] : e) norm += v * v;
                for (auto& [i2, v] : e) v /= std::sqrt(norm);
                X.emplace_back(dim, std::move(e));
                y.push_back(std::string(1, static_cast<char>('A' + l)));
            }
            Hyperparams h;
            h.seed = rng.next();
            const auto m = train_svm(X, y, h);
            std::size_t ok = 0;
            for (std::size_t i = 0; i < X.size(); ++i) ok += predict(m, X[i]).label == y[i];
            o.require(ok == X.size(), "separable toy accuracy " + std::to_string(ok) + "/60");
        }
    if (o.ok) o.detail = "10 datasets, max epoch-to-epoch rise " + fmt("%.2e", worst_rise) + "; 10 toys fit exactly";
    return o;
}

Outcome boosting_contract() {
    Outcome o;
    Rng rng(11);
    std::size_t rounds = 0;
    double worst_sum = 0.0;
    for (int ds = 0; ds < 40; ++ds) {
        const std::size_t L = 2 + rng.below(4);
        auto X = qtest::random_vectors(rng, 20 + rng.below(120), 3 + rng.below(20), 0.3);
        auto y = qtest::random_labels(rng, X.size(), L);
        Hyperparams h;
        h.bdt_rounds = 40;
        h.bdt_depth = 1 + static_cast<int>(rng.below(3));
        BoostTrace trace;
        const auto m = train_bdt(X, y, h, &trace);
        const double Lm = static_cast<double>(m.labels.size());
        std::size_t accepted = 0;
        for (std::size_t r = 0; r < trace.round_error.size(); ++r) {
            if (!trace.accepted[r]) continue;
            o.require(trace.round_error[r] < 1.0 - 1.0 / Lm, "accepted round error " + fmt("%.4f", trace.round_error[r]));
            const double dev = std::abs(trace.weight_sum_after[accepted] - 1.0);
            worst_sum = std::max(worst_sum, dev);
            o.require(dev <= 1e-12, "weight sum deviation " + fmt("%.3g", dev));
            ++accepted;
            ++rounds;
        }
        o.require(accepted == std::get<BoostParams>(m.params).trees.size(), "accepted rounds vs trees");
    }
    if (o.ok)
        o.detail = std::to_string(rounds) + " accepted rounds; max |sum w - 1| = " + fmt("%.1e", worst_sum);
    return o;
}

Outcome single_path_invariant() {
    Outcome o;
    Rng rng(31337);
    std::size_t predictions = 0, relevant = 0, invoked = 0;
    for (auto k1 : kAllLearners)
        for (std::uint64_t seed : {1u, 2u}) {
            const auto c = qtest::synthetic(40, 40, 40, seed, 0.5);
            auto spec = single_path(k1, kAllLearners[rng.below(std::size(kAllLearners))]);
            spec.hyper.seed = seed;
            const auto m = train_strategy(spec, c.questions());
            std::vector<std::string> texts;
            for (int i = 0; i < 1300; ++i) texts.push_back(random_text(rng));
            for (const auto& p : predict_strategy_batch(m, texts)) {
                const bool rel = p.path.at(0).prediction.label == "relevant";
                relevant += rel;
                invoked += p.efficacy_invoked();
                if (!rel) o.require(p.leaf == Leaf::Irrelevant && p.path.size() == 1, "efficacy label after irrelevant");
                ++predictions;
            }
        }
    o.require(predictions >= 10000, "too few predictions");
    o.require(relevant == invoked, "level-2 invocations " + std::to_string(invoked) + " != level-1 relevant " +
                                       std::to_string(relevant));
    if (o.ok)
        o.detail = std::to_string(predictions) + " predictions; level 2 invoked " + std::to_string(invoked) +
                   " times = level-1 relevant count";
    return o;
}

Outcome cv_hygiene() {
    Outcome o;
    // Folds partition labeled questions with per-label imbalance <= 1.
    Rng rng(5);
    for (int t = 0; t < 50; ++t) {
        const std::size_t k = 2 + rng.below(9);
        const auto c = qtest::label_corpus(k + rng.below(60), k + rng.below(60), k + rng.below(60), rng.below(5));
        const auto plan = stratified_kfold(c, k, rng.next());
        std::map<Leaf, std::vector<std::size_t>> per_label;
        std::vector<int> seen(c.size(), 0);
        for (std::size_t f = 0; f < k; ++f)
            for (auto i : plan.test_indices(f)) {
                ++seen[i];
                auto& v = per_label[c[i].gold->leaf()];
                v.resize(k);
                ++v[f];
            }
        for (std::size_t i = 0; i < c.size(); ++i) o.require(seen[i] == (c[i].gold ? 1 : 0), "not a partition");
        for (const auto& [leaf, v] : per_label) {
            const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
            o.require(*hi - *lo <= 1, "per-label imbalance > 1");
        }
    }

    // Pooled confusion equals the fold sum in every section.
    const auto c = qtest::synthetic(30, 30, 30, 9, 0.4);
    for (const auto& spec : {flat(LearnerKind::LG), single_path(LearnerKind::NBM, LearnerKind::SVM)}) {
        const auto r = cross_validate(c, spec, 5, 3);
        for (const auto& s : r.sections) {
            ConfusionMatrix sum(s.pooled.labels());
            for (const auto& f : s.folds) sum += f;
            o.require(sum == s.pooled, "pooled != fold sum in " + s.name);
        }
    }

    // Rewriting every test-fold document leaves the trained model unchanged.
    const auto plan = stratified_kfold(c, 5, 3);
    std::size_t checks = 0;
    for (auto spec : {flat(LearnerKind::NBM), flat(LearnerKind::LG), flat(LearnerKind::SVM), flat(LearnerKind::BDT),
                      single_path(LearnerKind::NBM, LearnerKind::SVM)}) {
        spec.hyper.bdt_rounds = 15;
        for (std::size_t fold = 0; fold < plan.k; ++fold) {
            const auto base = train_fold(c, plan, fold, spec, 3);
            std::vector<Question> qs(c.questions().begin(), c.questions().end());
            for (auto i : plan.test_indices(fold)) qs[i].text = random_text(rng) + " injected ineff1 irr1";
            o.require(train_fold(Corpus(qs), plan, fold, spec, 3) == base, "test-fold mutation changed the model");
            ++checks;
        }
    }
    if (o.ok)
        o.detail = "50 random plans partition with imbalance <= 1; pooled == sum; " + std::to_string(checks) +
                   " fold models unchanged by test-fold rewrites";
    return o;
}

Outcome determinism() {
    Outcome o;
    qtest::TempDir dir;
    save_corpus(qtest::synthetic(30, 40, 40, 8, 0.5), dir / "corpus.jsonl");
    qtest::write_file(dir / "config.json", R"({"corpus":"corpus.jsonl","strategy":"single-path","algo_level1":"lg",)"
                                           R"("algo_level2":["svm","bdt"],"seed":21,"folds":5})");
    const auto cfg = (dir / "config.json").string();
    const auto a = qtest::run_cli({"crossval", "--config", cfg, "--format", "json", "--out", (dir / "a.json").string()});
    const auto b = qtest::run_cli({"crossval", "--config", cfg, "--format", "json", "--out", (dir / "b.json").string()});
    o.require(a.code == 0 && b.code == 0, "crossval exit codes " + std::to_string(a.code) + "/" + std::to_string(b.code));
    const auto ja = qtest::read_file(dir / "a.json"), jb = qtest::read_file(dir / "b.json");
    o.require(!ja.empty() && ja == jb, "reports differ");

    Rng rng(1000);
    std::vector<std::string> texts;
    for (int i = 0; i < 1000; ++i) texts.push_back(random_text(rng));
    const auto c = qtest::synthetic(25, 25, 25, 4, 0.6);
    std::size_t compared = 0;
    for (const auto& spec : {flat(LearnerKind::NBM), flat(LearnerKind::LG), flat(LearnerKind::SVM),
                             flat(LearnerKind::BDT), single_path(LearnerKind::LG, LearnerKind::BDT)}) {
        ModelFile f;
        f.model = train_strategy(spec, c.questions());
        f.seed = 1;
        save_model(f, dir / "model.json");
        const auto back = load_model(dir / "model.json");
        const auto pa = predict_strategy_batch(f.model, texts), pb = predict_strategy_batch(back.model, texts);
        for (std::size_t i = 0; i < texts.size(); ++i) {
            bool same = pa[i].leaf == pb[i].leaf && pa[i].path.size() == pb[i].path.size();
            for (std::size_t l = 0; same && l < pa[i].path.size(); ++l)
                same = pa[i].path[l].prediction == pb[i].path[l].prediction;
            o.require(same, spec.learner_name() + ": prediction differs after reload");
            ++compared;
        }
    }
    if (o.ok)
        o.detail = "crossval reports byte-identical (" + std::to_string(ja.size()) + " bytes); " +
                   std::to_string(compared) + " reloaded predictions bit-identical";
    return o;
}

Outcome metric_brute_force() {
    Outcome o;
    Rng rng(100);
    for (int t = 0; t < 100; ++t) {
        const std::size_t L = 2 + rng.below(4);
        std::vector<std::string> labels;
        for (std::size_t l = 0; l < L; ++l) labels.push_back("c" + std::to_string(l));
        const std::size_t n = 1 + rng.below(300);
        std::vector<std::string> gold, pred;
        for (std::size_t i = 0; i < n; ++i) {
            gold.push_back(labels[rng.below(L)]);
            pred.push_back(labels[rng.below(L)]);
        }
        const auto cm = confusion(gold, pred, labels);
        std::size_t agree = 0;
        for (std::size_t i = 0; i < n; ++i) agree += gold[i] == pred[i];
        o.require(std::abs(overall_accuracy(cm) - static_cast<double>(agree) / n) <= 1e-12, "accuracy");
        for (const auto& pos : labels) {
            double tp = 0, fp = 0, fn = 0;
            for (std::size_t i = 0; i < n; ++i) {
                tp += gold[i] == pos && pred[i] == pos;
                fp += gold[i] != pos && pred[i] == pos;
                fn += gold[i] == pos && pred[i] != pos;
            }
            const auto m = class_metrics(cm, pos);
            o.require(m.precision.has_value() == (tp + fp > 0) && m.recall.has_value() == (tp + fn > 0),
                      "undefined markers");
            if (m.precision) o.require(std::abs(*m.precision - tp / (tp + fp)) <= 1e-12, "precision");
            if (m.recall) o.require(std::abs(*m.recall - tp / (tp + fn)) <= 1e-12, "recall");
            if (tp > 0) o.require(m.f1 && std::abs(*m.f1 - 2 * tp / (2 * tp + fp + fn)) <= 1e-12, "f1");
            else o.require(!m.f1.has_value(), "f1 defined with tp = 0");
        }
    }
    if (o.ok) o.detail = "100 random (gold, pred) lists match an independent recount";
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"f-measure consistency", f_measure_consistency},
        {"corpus arithmetic", corpus_arithmetic},
        {"oracle equivalence at small scale", oracle_equivalence},
        {"NBM hand oracle", nbm_hand_oracle},
        {"logistic-regression gradient check", logreg_gradient},
        {"SVM objective and separable toys", svm_objective},
        {"boosting contract", boosting_contract},
        {"single-path structural invariant", single_path_invariant},
        {"cross-validation hygiene", cv_hygiene},
        {"determinism", determinism},
        {"metric brute-force equivalence", metric_brute_force},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s [%2zu] %s (%.2fs): %s\n", o.ok ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), secs,
                    o.detail.c_str());
        std::fflush(stdout);
        failed += !o.ok;
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
    return failed ? 1 : 0;
}
