#include <doctest.h>

#include "qtriage/error.hpp"
#include "qtriage/hierarchy.hpp"
#include "test_util.hpp"

using namespace qtriage;
using qtest::labeled;

namespace {

std::size_t correct(const StrategyModel& m, const Corpus& c) {
    std::size_t ok = 0;
    for (const auto& q : c.questions()) ok += predict_strategy(m, q.text).leaf == q.gold->leaf();
    return ok;
}

std::string random_text(Rng& rng) {
    static const char* prefixes[] = {"irr", "eff", "ineff", "com", "zzz"};
    std::string s;
    for (auto n = rng.below(25); n > 0; --n) {
        if (!s.empty()) s += ' ';
        s += prefixes[rng.below(5)] + std::to_string(rng.below(60));
    }
    return s;
}

}  // namespace

TEST_SUITE("hierarchy") {

TEST_CASE("strategy names") {
    CHECK(parse_strategy("flat") == StrategyMode::Flat);
    CHECK(parse_strategy("single-path") == StrategyMode::SinglePath);
    CHECK_FALSE(parse_strategy("top-down").has_value());
    StrategySpec s;
    CHECK(s.learner_name() == "svm");
    s.mode = StrategyMode::SinglePath;
    CHECK(s.learner_name() == "nbm+svm");
}

TEST_CASE("flat and single-path reach perfect training accuracy on separable corpora") {
    auto c = qtest::synthetic(40, 60, 60, 12);
    for (auto k : kAllLearners) {
        CAPTURE(to_string(k));
        auto flat = train_flat(c, k, {}, {});
        CHECK(flat.flat->labels == std::vector<std::string>{"effective", "ineffective", "irrelevant"});
        CHECK(correct(flat, c) == c.size());
        auto sp = train_single_path(c, k, k, {}, {});
        CHECK(correct(sp, c) == c.size());
    }
    auto best = train_single_path(c, LearnerKind::NBM, LearnerKind::SVM, {}, {});
    CHECK(correct(best, c) == c.size());
    CHECK(best.level1->kind == LearnerKind::NBM);
    CHECK(best.level2->kind == LearnerKind::SVM);
    CHECK(best.level1->labels == std::vector<std::string>{"irrelevant", "relevant"});
    CHECK(best.level2->labels == std::vector<std::string>{"effective", "ineffective"});
    CHECK_FALSE(best.flat.has_value());
}

TEST_CASE("flat on a single-leaf corpus") {
    std::vector<Question> qs;
    for (int i = 0; i < 6; ++i) qs.push_back(labeled("e" + std::to_string(i), "loop help please", Leaf::Effective));
    Corpus c(std::move(qs));
    CHECK_THROWS_AS(train_flat(c, LearnerKind::LG, {}, {}), TrainingError);
    CHECK_THROWS_AS(train_flat(c, LearnerKind::SVM, {}, {}), TrainingError);
    for (auto k : {LearnerKind::NBM, LearnerKind::BDT}) {
        auto m = train_flat(c, k, {}, {});
        CHECK(predict_strategy(m, "anything at all").leaf == Leaf::Effective);
        CHECK(predict_strategy(m, "").leaf == Leaf::Effective);
    }
}

TEST_CASE("training errors") {
    Corpus none({qtest::unlabeled("a", "x y")});
    CHECK_THROWS_AS(train_flat(none, LearnerKind::NBM, {}, {}), TrainingError);
    CHECK_THROWS_AS(train_single_path(none, LearnerKind::NBM, LearnerKind::NBM, {}, {}), TrainingError);

    Corpus no_ineffective({labeled("a", "x", Leaf::Irrelevant), labeled("b", "y", Leaf::Effective),
                           labeled("c", "x", Leaf::Irrelevant), labeled("d", "y", Leaf::Effective)});
    CHECK_THROWS_AS(train_single_path(no_ineffective, LearnerKind::NBM, LearnerKind::NBM, {}, {}), TrainingError);

    Corpus no_irrelevant({labeled("a", "x", Leaf::Ineffective), labeled("b", "y", Leaf::Effective)});
    CHECK_THROWS_AS(train_single_path(no_irrelevant, LearnerKind::NBM, LearnerKind::NBM, {}, {}), TrainingError);
}

TEST_CASE("unlabeled questions do not enter the vocabulary") {
    std::vector<Question> qs{labeled("a", "alpha beta", Leaf::Irrelevant), labeled("b", "alpha gamma", Leaf::Effective),
                             labeled("c", "beta gamma", Leaf::Ineffective), qtest::unlabeled("u", "delta delta")};
    qs.push_back(qtest::unlabeled("v", "delta"));
    PipelineConfig p;
    p.min_df = 1;
    auto m = train_flat(Corpus(std::move(qs)), LearnerKind::NBM, p, {});
    CHECK(m.vocab.size() == 3);
    CHECK_FALSE(m.vocab.index("delta").has_value());
}

TEST_CASE("chi-square selection restricts the shared vocabulary") {
    auto c = qtest::synthetic(30, 30, 30, 2);
    PipelineConfig p;
    p.top_k = 12;
    auto m = train_single_path(c, LearnerKind::NBM, LearnerKind::SVM, p, {});
    CHECK(m.vocab.size() == 12);
    CHECK(m.level1->dim == 12);
    CHECK(m.level2->dim == 12);
}

TEST_CASE("determinism: identical inputs give identical models") {
    auto c = qtest::synthetic(20, 25, 25, 4);
    Hyperparams h;
    h.seed = 17;
    for (auto k : kAllLearners) {
        CHECK(train_flat(c, k, {}, h) == train_flat(qtest::synthetic(20, 25, 25, 4), k, {}, h));
        CHECK(train_single_path(c, k, k, {}, h) == train_single_path(c, k, k, {}, h));
    }
}

TEST_CASE("single-path trace shape") {
    auto c = qtest::synthetic(30, 30, 30, 6);
    auto m = train_single_path(c, LearnerKind::NBM, LearnerKind::SVM, {}, {});
    for (const auto& q : c.questions()) {
        auto p = predict_strategy(m, q.text);
        REQUIRE_FALSE(p.path.empty());
        CHECK(p.path[0].level == "relevance");
        if (p.path[0].prediction.label == "irrelevant") {
            CHECK(p.leaf == Leaf::Irrelevant);
            CHECK_FALSE(p.efficacy_invoked());
        } else {
            REQUIRE(p.efficacy_invoked());
            CHECK(p.path[1].level == "efficacy");
            CHECK(to_string(p.leaf) == p.path[1].prediction.label);
        }
    }
    auto flat = train_flat(c, LearnerKind::SVM, {}, {});
    auto fp = predict_strategy(flat, "eff1 eff2");
    REQUIRE(fp.path.size() == 1);
    CHECK(fp.path[0].level == "flat");
    CHECK(fp.path[0].labels.size() == 3);
}

TEST_CASE("property: single-path never labels efficacy after an irrelevant level-1 decision") {
    Rng rng(404);
    auto c = qtest::synthetic(40, 40, 40, 9, 0.6);
    for (auto k1 : kAllLearners) {
        auto m = train_single_path(c, k1, LearnerKind::NBM, {}, {});
        std::size_t relevant = 0, invoked = 0;
        for (int i = 0; i < 500; ++i) {
            auto p = predict_strategy(m, random_text(rng));
            const bool rel = p.path[0].prediction.label == "relevant";
            relevant += rel;
            invoked += p.efficacy_invoked();
            if (!rel) CHECK(p.leaf == Leaf::Irrelevant);
            else CHECK(p.leaf != Leaf::Irrelevant);
        }
        CHECK(relevant == invoked);
    }
}

TEST_CASE("property: predictions are pure and batch equals single") {
    Rng rng(405);
    auto c = qtest::synthetic(25, 25, 25, 10, 0.7);
    std::vector<std::string> texts;
    for (int i = 0; i < 150; ++i) texts.push_back(random_text(rng));
    texts.push_back("");
    for (auto mode : {StrategyMode::Flat, StrategyMode::SinglePath}) {
        StrategySpec spec;
        spec.mode = mode;
        auto m = train_strategy(spec, c.questions());
        auto batch = predict_strategy_batch(m, texts);
        auto ref = reference::predict_strategy_batch(m, texts);
        REQUIRE(batch.size() == texts.size());
        for (std::size_t i = 0; i < texts.size(); ++i) {
            auto once = predict_strategy(m, texts[i]);
            auto again = predict_strategy(m, texts[i]);
            CHECK(once.leaf == again.leaf);
            CHECK(once.path.size() == again.path.size());
            CHECK(batch[i].leaf == once.leaf);
            CHECK(ref[i].leaf == once.leaf);
            for (std::size_t l = 0; l < once.path.size(); ++l) {
                CHECK(batch[i].path[l].prediction == once.path[l].prediction);
                CHECK(again.path[l].prediction == once.path[l].prediction);
            }
        }
    }
}

TEST_CASE("emitted leaves cover exactly the three categories") {
    auto c = qtest::synthetic(20, 20, 20, 11);
    for (auto mode : {StrategyMode::Flat, StrategyMode::SinglePath}) {
        StrategySpec spec;
        spec.mode = mode;
        auto m = train_strategy(spec, c.questions());
        std::set<Leaf> seen;
        for (const auto& q : c.questions()) seen.insert(predict_strategy(m, q.text).leaf);
        CHECK(seen.size() == 3);
    }
}

}  // TEST_SUITE
