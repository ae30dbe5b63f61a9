#include "qtriage/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include <omp.h>

#include "qtriage/error.hpp"

namespace qtriage {

namespace {

// Decodes one UTF-8 code point starting at s[i]; advances i. Invalid bytes decode as themselves.
char32_t next_code_point(std::string_view s, std::size_t& i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    auto cont = [&](std::size_t k) { return static_cast<unsigned char>(s[i + k]) & 0x3Fu; };
    auto is_cont = [&](std::size_t k) {
        return i + k < s.size() && (static_cast<unsigned char>(s[i + k]) & 0xC0u) == 0x80u;
    };
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    if ((b0 & 0xE0) == 0xC0 && is_cont(1)) {
        char32_t cp = ((b0 & 0x1Fu) << 6) | cont(1);
        i += 2;
        return cp;
    }
    if ((b0 & 0xF0) == 0xE0 && is_cont(1) && is_cont(2)) {
        char32_t cp = ((b0 & 0x0Fu) << 12) | (cont(1) << 6) | cont(2);
        i += 3;
        return cp;
    }
    if ((b0 & 0xF8) == 0xF0 && is_cont(1) && is_cont(2) && is_cont(3)) {
        char32_t cp = ((b0 & 0x07u) << 18) | (cont(1) << 12) | (cont(2) << 6) | cont(3);
        i += 4;
        return cp;
    }
    ++i;
    return b0;
}

bool is_unicode_space(char32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
        case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
        case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

bool is_ascii_alnum(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

// Leading/trailing bytes that are ASCII but not alphanumeric get trimmed;
// any byte >= 0x80 belongs to a non-ASCII code point and is kept.
std::string_view trim_token(std::string_view tok) {
    auto keep = [](char c) {
        auto u = static_cast<unsigned char>(c);
        return u >= 0x80 || is_ascii_alnum(u);
    };
    std::size_t b = 0, e = tok.size();
    while (b < e && !keep(tok[b])) ++b;
    while (e > b && !keep(tok[e - 1])) --e;
    return tok.substr(b, e - b);
}

std::string remove_code_spans(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (text.compare(i, 3, "```") == 0) {
            auto close = text.find("```", i + 3);
            i = close == std::string_view::npos ? text.size() : close + 3;
            out += ' ';
        } else if (text[i] == '`') {
            auto close = text.find('`', i + 1);
            if (close == std::string_view::npos) {
                out += text[i++];
            } else {
                i = close + 1;
                out += ' ';
            }
        } else {
            out += text[i++];
        }
    }
    return out;
}

bool looks_like_code(std::string_view tok) { return tok.find_first_of("(){};=") != std::string_view::npos; }

}  // namespace

std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& cfg) {
    if (cfg.ngram_max != 1 && cfg.ngram_max != 2)
        throw ArgumentError("ngram_max must be 1 or 2, got " + std::to_string(cfg.ngram_max));

    std::string stripped;
    if (cfg.strip_code_blocks) {
        stripped = remove_code_spans(text);
        text = stripped;
    }

    std::vector<std::string> out;
    std::size_t i = 0, start = 0;
    auto flush = [&](std::size_t end) {
        if (end <= start) return;
        std::string_view raw = text.substr(start, end - start);
        if (cfg.strip_code_blocks && looks_like_code(raw)) return;
        std::string_view tok = trim_token(raw);
        if (tok.empty()) return;
        std::string t(tok);
        if (cfg.lowercase)
            for (char& c : t)
                if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        if (cfg.stopwords.count(t)) return;
        out.push_back(std::move(t));
    };
    while (i < text.size()) {
        const std::size_t at = i;
        if (is_unicode_space(next_code_point(text, i))) {
            flush(at);
            start = i;
        }
    }
    flush(text.size());

    if (cfg.ngram_max == 2 && out.size() > 1) {
        const std::size_t n = out.size();
        for (std::size_t k = 0; k + 1 < n; ++k) out.push_back(out[k] + "_" + out[k + 1]);
    }
    return out;
}

std::set<std::string> load_stopwords(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open stopword list '" + path.string() + "'");
    std::set<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        auto tok = trim_token(line);
        if (tok.empty() || line.front() == '#') continue;
        out.emplace(tok);
    }
    return out;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens, std::vector<std::size_t> df)
    : tokens_(std::move(tokens)), df_(std::move(df)) {
    if (df_.size() != tokens_.size()) throw ArgumentError("vocabulary: df length mismatch");
    index_.reserve(tokens_.size());
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        if (i && !(tokens_[i - 1] < tokens_[i])) throw ArgumentError("vocabulary tokens must be strictly increasing");
        index_.emplace(tokens_[i], i);
    }
}

std::optional<std::size_t> Vocabulary::index(std::string_view token) const {
    auto it = index_.find(token);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

Vocabulary Vocabulary::restrict_to(std::span<const std::size_t> keep) const {
    std::vector<std::size_t> sorted(keep.begin(), keep.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<std::string> toks;
    std::vector<std::size_t> df;
    for (std::size_t i : sorted) {
        if (i >= size()) throw ArgumentError("restrict_to: index out of range");
        toks.push_back(tokens_[i]);
        df.push_back(df_[i]);
    }
    return Vocabulary(std::move(toks), std::move(df));
}

Vocabulary build_vocab(std::span<const std::vector<std::string>> docs, std::size_t min_df) {
    if (min_df < 1) throw ArgumentError("min_df must be >= 1");
    std::map<std::string, std::size_t, std::less<>> df;
    std::vector<std::string_view> uniq;
    for (const auto& doc : docs) {
        uniq.assign(doc.begin(), doc.end());
        std::sort(uniq.begin(), uniq.end());
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        for (auto t : uniq) {
            auto it = df.find(t);
            if (it == df.end()) df.emplace(std::string(t), 1);
            else ++it->second;
        }
    }
    std::vector<std::string> toks;
    std::vector<std::size_t> counts;
    for (auto& [tok, n] : df) {
        if (n < min_df) continue;
        toks.push_back(tok);
        counts.push_back(n);
    }
    return Vocabulary(std::move(toks), std::move(counts));
}

SparseVector::SparseVector(std::size_t dim, std::vector<Entry> entries) : dim_(dim), entries_(std::move(entries)) {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto [idx, val] = entries_[i];
        if (idx >= dim_) throw ArgumentError("sparse index " + std::to_string(idx) + " out of dimension");
        if (i && entries_[i - 1].first >= idx) throw ArgumentError("sparse indices must strictly increase");
        if (val == 0.0 || std::isnan(val)) throw ArgumentError("sparse values must be nonzero numbers");
    }
}

double SparseVector::sum() const {
    double s = 0.0;
    for (const auto& e : entries_) s += e.second;
    return s;
}

double SparseVector::norm() const {
    double s = 0.0;
    for (const auto& e : entries_) s += e.second * e.second;
    return std::sqrt(s);
}

std::string_view to_string(Weighting w) {
    switch (w) {
        case Weighting::RawCount: return "raw";
        case Weighting::BinaryPresence: return "binary";
        case Weighting::L2NormalizedCount: return "l2";
    }
    return "?";
}

std::optional<Weighting> parse_weighting(std::string_view s) {
    for (auto w : {Weighting::RawCount, Weighting::BinaryPresence, Weighting::L2NormalizedCount})
        if (to_string(w) == s) return w;
    return std::nullopt;
}

SparseVector vectorize(std::span<const std::string> tokens, const Vocabulary& v, Weighting w) {
    std::vector<std::size_t> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens)
        if (auto i = v.index(t)) ids.push_back(*i);
    std::sort(ids.begin(), ids.end());

    std::vector<SparseVector::Entry> entries;
    for (std::size_t i = 0; i < ids.size();) {
        std::size_t j = i;
        while (j < ids.size() && ids[j] == ids[i]) ++j;
        entries.emplace_back(ids[i], w == Weighting::BinaryPresence ? 1.0 : static_cast<double>(j - i));
        i = j;
    }
    if (w == Weighting::L2NormalizedCount && !entries.empty()) {
        double ss = 0.0;
        for (const auto& e : entries) ss += e.second * e.second;
        const double norm = std::sqrt(ss);
        for (auto& e : entries) e.second /= norm;
    }
    return SparseVector(v.size(), std::move(entries));
}

std::vector<SparseVector> vectorize_batch(std::span<const std::string> texts, const TokenizerConfig& cfg,
                                          const Vocabulary& v, Weighting w) {
    std::vector<SparseVector> out(texts.size());
    const auto n = static_cast<std::ptrdiff_t>(texts.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = vectorize(tokenize(texts[i], cfg), v, w);
    return out;
}

double chi2_statistic(double a, double b, double c, double d) {
    const double n = a + b + c + d;
    const double denom = (a + c) * (b + d) * (a + b) * (c + d);
    if (denom == 0.0) return 0.0;
    const double diff = a * d - c * b;
    return n * diff * diff / denom;
}

namespace {

std::vector<double> scores_from_presence(const std::vector<std::size_t>& present, std::span<const std::size_t> label_totals,
                                         std::size_t dim, std::size_t num_labels, std::size_t n_docs, bool parallel) {
    std::vector<double> score(dim, 0.0);
    const auto d = static_cast<std::ptrdiff_t>(dim);
#pragma omp parallel for schedule(static) if (parallel)
    for (std::ptrdiff_t f = 0; f < d; ++f) {
        std::size_t df = 0;
        for (std::size_t l = 0; l < num_labels; ++l) df += present[f * num_labels + l];
        double best = 0.0;
        for (std::size_t l = 0; l < num_labels; ++l) {
            const double a = static_cast<double>(present[f * num_labels + l]);
            const double b = static_cast<double>(df) - a;
            const double c = static_cast<double>(label_totals[l]) - a;
            const double dd = static_cast<double>(n_docs - label_totals[l]) - b;
            best = std::max(best, chi2_statistic(a, b, c, dd));
        }
        score[f] = best;
    }
    return score;
}

void check_chi2_inputs(std::span<const SparseVector> vectors, std::span<const std::size_t> labels, std::size_t num_labels) {
    if (vectors.size() != labels.size()) throw ArgumentError("chi2: vectors and labels differ in length");
    for (auto l : labels)
        if (l >= num_labels) throw ArgumentError("chi2: label index out of range");
}

}  // namespace

std::vector<double> chi2_scores(std::span<const SparseVector> vectors, std::span<const std::size_t> labels,
                                std::size_t num_labels) {
    check_chi2_inputs(vectors, labels, num_labels);
    if (vectors.empty()) return {};
    const std::size_t dim = vectors.front().dim();
    std::vector<std::size_t> totals(num_labels, 0);
    for (auto l : labels) ++totals[l];

    std::vector<std::size_t> present(dim * num_labels, 0);
    const auto n = static_cast<std::ptrdiff_t>(vectors.size());
#pragma omp parallel
    {
        std::vector<std::size_t> local(dim * num_labels, 0);
#pragma omp for schedule(static) nowait
        for (std::ptrdiff_t i = 0; i < n; ++i)
            for (const auto& [f, v] : vectors[i].entries()) ++local[f * num_labels + labels[i]];
#pragma omp critical
        for (std::size_t j = 0; j < local.size(); ++j) present[j] += local[j];
    }
    return scores_from_presence(present, totals, dim, num_labels, vectors.size(), true);
}

std::vector<std::size_t> chi2_select(std::span<const SparseVector> vectors, std::span<const std::size_t> labels,
                                     std::size_t num_labels, std::size_t top_k) {
    if (top_k < 1) throw ArgumentError("chi2_select: top_k must be >= 1");
    auto score = chi2_scores(vectors, labels, num_labels);
    std::vector<std::size_t> order(score.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t k = std::min(top_k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t a, std::size_t b) { return score[a] != score[b] ? score[a] > score[b] : a < b; });
    order.resize(k);
    std::sort(order.begin(), order.end());
    return order;
}

namespace reference {

std::vector<SparseVector> vectorize_batch(std::span<const std::string> texts, const TokenizerConfig& cfg,
                                          const Vocabulary& v, Weighting w) {
    std::vector<SparseVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(vectorize(tokenize(t, cfg), v, w));
    return out;
}

std::vector<double> chi2_scores(std::span<const SparseVector> vectors, std::span<const std::size_t> labels,
                                std::size_t num_labels) {
    check_chi2_inputs(vectors, labels, num_labels);
    if (vectors.empty()) return {};
    const std::size_t dim = vectors.front().dim();
    std::vector<std::size_t> totals(num_labels, 0);
    std::vector<std::size_t> present(dim * num_labels, 0);
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        ++totals[labels[i]];
        for (const auto& [f, v] : vectors[i].entries()) ++present[f * num_labels + labels[i]];
    }
    return scores_from_presence(present, totals, dim, num_labels, vectors.size(), false);
}

}  // namespace reference

}  // namespace qtriage
