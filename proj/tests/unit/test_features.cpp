#include <doctest.h>

#include <cmath>
#include <numeric>

#include "qtriage/error.hpp"
#include "qtriage/features.hpp"
#include "test_util.hpp"

using namespace qtriage;
using Tokens = std::vector<std::string>;

namespace {

std::string join(const Tokens& t) {
    std::string s;
    for (const auto& x : t) s += (s.empty() ? "" : " ") + x;
    return s;
}

std::string random_text(Rng& rng) {
    static const char* pieces[] = {"Java", "loop", "x", "(a)", "--", "it's", "\"quoted\"", "end.", "\xc3\xa9t\xc3\xa9",
                                   "a-b", "...", "HW3", "null;", "?", "{", "x=1", "_"};
    static const char* spaces[] = {" ", "  ", "\t", "\n", "\xc2\xa0", "\xe3\x80\x80"};
    std::string s;
    const auto n = rng.below(12);
    for (std::uint64_t i = 0; i < n; ++i) {
        s += pieces[rng.below(std::size(pieces))];
        s += spaces[rng.below(std::size(spaces))];
    }
    return s;
}

Vocabulary ab_vocab() { return Vocabulary({"a", "b"}, {1, 1}); }

}  // namespace

TEST_SUITE("features") {

TEST_CASE("tokenize: examples") {
    TokenizerConfig d;
    CHECK(tokenize("I am having trouble", d) == Tokens{"i", "am", "having", "trouble"});
    CHECK(tokenize("", d).empty());
    CHECK(tokenize("   \t\n", d).empty());
    TokenizerConfig bi;
    bi.ngram_max = 2;
    CHECK(tokenize("red lines", bi) == Tokens{"red", "lines", "red_lines"});
    CHECK(tokenize("red", bi) == Tokens{"red"});
}

TEST_CASE("tokenize: trimming, case, unicode whitespace") {
    TokenizerConfig d;
    CHECK(tokenize("Hello, (world)! -- ...", d) == Tokens{"hello", "world"});
    CHECK(tokenize("RandomWord.newWord()", d) == Tokens{"randomword.newword"});
    CHECK(tokenize("caf\xc3\xa9\xe3\x80\x80" "na\xc3\xafve\xc2\xa0x", d) == Tokens{"caf\xc3\xa9", "na\xc3\xafve", "x"});
    CHECK(tokenize("\xc3\x89T\xc3\x89", d) == Tokens{"\xc3\x89t\xc3\x89"});
    TokenizerConfig keep;
    keep.lowercase = false;
    CHECK(tokenize("Hello World", keep) == Tokens{"Hello", "World"});
}

TEST_CASE("tokenize: stopwords are dropped before bigrams") {
    TokenizerConfig cfg;
    cfg.stopwords = {"the", "a"};
    cfg.ngram_max = 2;
    CHECK(tokenize("The loop is a problem", cfg) == Tokens{"loop", "is", "problem", "loop_is", "is_problem"});
}

TEST_CASE("tokenize: code stripping") {
    TokenizerConfig cfg;
    cfg.strip_code_blocks = true;
    CHECK(tokenize("why does ```int x = 1;\nfoo();``` fail `bar()` here", cfg) == Tokens{"why", "does", "fail", "here"});
    CHECK(tokenize("call foo(x); then stop", cfg) == Tokens{"call", "then", "stop"});
    CHECK(tokenize("unclosed `tick stays", cfg) == Tokens{"unclosed", "tick", "stays"});
    TokenizerConfig keep;
    CHECK(tokenize("call foo(x);", keep) == Tokens{"call", "foo(x"});
}

TEST_CASE("tokenize: ngram_max outside {1,2} is rejected") {
    TokenizerConfig cfg;
    cfg.ngram_max = 3;
    CHECK_THROWS_AS(tokenize("a b", cfg), ArgumentError);
}

TEST_CASE("property: tokenize is idempotent on its own output") {
    Rng rng(5);
    TokenizerConfig cfg;
    for (int t = 0; t < 2000; ++t) {
        const std::string text = random_text(rng);
        const auto once = tokenize(text, cfg);
        CHECK(tokenize(join(once), cfg) == once);
        CHECK(tokenize(text, cfg) == once);
    }
}

TEST_CASE("load_stopwords") {
    qtest::TempDir dir;
    qtest::write_file(dir / "sw.txt", "# comment\nthe\n\n  a  \r\nan\n");
    CHECK(load_stopwords(dir / "sw.txt") == std::set<std::string>{"the", "a", "an"});
    CHECK_THROWS_AS(load_stopwords(dir / "missing.txt"), IoError);
}

TEST_CASE("build_vocab: examples") {
    std::vector<Tokens> docs{{"a", "b"}, {"a"}};
    auto v1 = build_vocab(docs, 1);
    CHECK(v1.size() == 2);
    CHECK(v1.index("a") == 0u);
    CHECK(v1.index("b") == 1u);
    CHECK(v1.document_frequency(0) == 2);
    auto v2 = build_vocab(docs, 2);
    CHECK(v2.size() == 1);
    CHECK(v2.index("a") == 0u);
    CHECK_FALSE(v2.index("b").has_value());
    CHECK(build_vocab(std::vector<Tokens>{}, 1).empty());
    CHECK(build_vocab(std::vector<Tokens>{{"a", "a", "a"}}, 2).empty());
}

TEST_CASE("property: build_vocab ignores document order") {
    Rng rng(8);
    for (int t = 0; t < 100; ++t) {
        std::vector<Tokens> docs(1 + rng.below(15));
        for (auto& d : docs)
            for (auto n = rng.below(8); n > 0; --n) d.push_back("w" + std::to_string(rng.below(20)));
        const auto min_df = 1 + rng.below(3);
        auto v = build_vocab(docs, min_df);
        for (std::size_t i = 1; i < v.size(); ++i) CHECK(v.token(i - 1) < v.token(i));
        rng.shuffle(std::span(docs));
        CHECK(build_vocab(docs, min_df) == v);
    }
}

TEST_CASE("Vocabulary: validation and restriction") {
    CHECK_THROWS_AS(Vocabulary({"b", "a"}, {1, 1}), ArgumentError);
    CHECK_THROWS_AS(Vocabulary({"a", "a"}, {1, 1}), ArgumentError);
    CHECK_THROWS_AS(Vocabulary({"a"}, {1, 2}), ArgumentError);
    Vocabulary v({"a", "b", "c"}, {3, 2, 1});
    std::vector<std::size_t> keep{0, 2};
    auto r = v.restrict_to(keep);
    CHECK(r.size() == 2);
    CHECK(r.index("c") == 1u);
    CHECK(r.document_frequency(1) == 1);
}

TEST_CASE("SparseVector: validation") {
    using E = SparseVector::Entry;
    CHECK_THROWS_AS(SparseVector(2, {E{1, 1.0}, E{0, 1.0}}), ArgumentError);
    CHECK_THROWS_AS(SparseVector(2, {E{0, 1.0}, E{0, 1.0}}), ArgumentError);
    CHECK_THROWS_AS(SparseVector(2, {E{2, 1.0}}), ArgumentError);
    CHECK_THROWS_AS(SparseVector(2, {E{0, 0.0}}), ArgumentError);
    SparseVector v(3, {E{0, 3.0}, E{2, 4.0}});
    CHECK(v.sum() == 7.0);
    CHECK(v.norm() == 5.0);
}

TEST_CASE("vectorize: examples") {
    using E = SparseVector::Entry;
    const auto v = ab_vocab();
    const Tokens aab{"a", "a", "b"};
    CHECK(vectorize(aab, v, Weighting::RawCount).entries().size() == 2);
    CHECK(vectorize(aab, v, Weighting::RawCount) == SparseVector(2, {E{0, 2.0}, E{1, 1.0}}));
    CHECK(vectorize(aab, v, Weighting::BinaryPresence) == SparseVector(2, {E{0, 1.0}, E{1, 1.0}}));
    auto l2 = vectorize(aab, v, Weighting::L2NormalizedCount);
    REQUIRE(l2.nnz() == 2);
    CHECK(l2.entries()[0].second == doctest::Approx(2.0 / std::sqrt(5.0)).epsilon(1e-15));
    CHECK(l2.entries()[1].second == doctest::Approx(1.0 / std::sqrt(5.0)).epsilon(1e-15));
    for (auto w : {Weighting::RawCount, Weighting::BinaryPresence, Weighting::L2NormalizedCount}) {
        auto z = vectorize(Tokens{"z"}, v, w);
        CHECK(z.empty());
        CHECK(z.dim() == 2);
    }
}

TEST_CASE("property: raw counts sum to in-vocabulary tokens; L2 norm is 1 or 0") {
    Rng rng(13);
    Vocabulary v({"w0", "w1", "w2", "w3", "w4"}, {1, 1, 1, 1, 1});
    for (int t = 0; t < 300; ++t) {
        Tokens toks;
        std::size_t in_vocab = 0;
        for (auto n = rng.below(20); n > 0; --n) {
            auto id = rng.below(8);
            in_vocab += id < 5;
            toks.push_back("w" + std::to_string(id));
        }
        CHECK(vectorize(toks, v, Weighting::RawCount).sum() == static_cast<double>(in_vocab));
        auto l2 = vectorize(toks, v, Weighting::L2NormalizedCount);
        if (in_vocab) CHECK(l2.norm() == doctest::Approx(1.0).epsilon(1e-12));
        else CHECK(l2.empty());
    }
}

TEST_CASE("weighting names") {
    for (auto w : {Weighting::RawCount, Weighting::BinaryPresence, Weighting::L2NormalizedCount})
        CHECK(parse_weighting(to_string(w)) == w);
    CHECK_FALSE(parse_weighting("tfidf").has_value());
}

TEST_CASE("chi2: hand table and examples") {
    using E = SparseVector::Entry;
    CHECK(chi2_statistic(2, 0, 0, 2) == doctest::Approx(4.0));
    CHECK(chi2_statistic(1, 1, 1, 1) == 0.0);
    CHECK(chi2_statistic(0, 0, 2, 2) == 0.0);

    // Feature 0: present exactly in the two label-0 docs. Feature 1: present in
    // one doc of each label. Feature 2: present everywhere.
    std::vector<SparseVector> X{
        SparseVector(3, {E{0, 1}, E{1, 1}, E{2, 1}}),
        SparseVector(3, {E{0, 1}, E{2, 1}}),
        SparseVector(3, {E{1, 1}, E{2, 1}}),
        SparseVector(3, {E{2, 1}}),
    };
    std::vector<std::size_t> y{0, 0, 1, 1};
    auto s = chi2_scores(X, y, 2);
    CHECK(s[0] == doctest::Approx(4.0));
    CHECK(s[1] == 0.0);
    CHECK(s[2] == 0.0);
    CHECK(chi2_select(X, y, 2, 1) == std::vector<std::size_t>{0});
    CHECK(chi2_select(X, y, 2, 2) == std::vector<std::size_t>{0, 1});
    CHECK(chi2_select(X, y, 2, 10) == std::vector<std::size_t>{0, 1, 2});
    CHECK_THROWS_AS(chi2_select(X, y, 2, 0), ArgumentError);
}

TEST_CASE("property: chi2 selection is invariant to scaling counts") {
    Rng rng(21);
    for (int t = 0; t < 100; ++t) {
        const std::size_t dim = 5 + rng.below(20);
        auto X = qtest::random_vectors(rng, 10 + rng.below(30), dim, 0.3);
        std::vector<std::size_t> y;
        for (std::size_t i = 0; i < X.size(); ++i) y.push_back(rng.below(3));
        const double c = 1 + rng.below(9);
        std::vector<SparseVector> scaled;
        for (const auto& x : X) {
            std::vector<SparseVector::Entry> e(x.entries().begin(), x.entries().end());
            for (auto& [i, v] : e) v *= c;
            scaled.emplace_back(x.dim(), std::move(e));
        }
        const auto k = 1 + rng.below(dim);
        CHECK(chi2_select(X, y, 3, k) == chi2_select(scaled, y, 3, k));
        CHECK(chi2_scores(X, y, 3) == chi2_scores(scaled, y, 3));
    }
}

}  // TEST_SUITE
