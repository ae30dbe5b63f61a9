#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace qtriage {

struct TokenizerConfig {
    bool lowercase = true;
    int ngram_max = 1;  // 1 or 2
    bool strip_code_blocks = false;
    std::set<std::string> stopwords;

    friend bool operator==(const TokenizerConfig&, const TokenizerConfig&) = default;
};

/// Splits on Unicode whitespace, trims non-alphanumeric characters from both
/// ends of each token, lowercases (ASCII), drops stopwords, then appends
/// adjacent bigrams joined by '_' when ngram_max == 2.
///
/// Non-ASCII code points count as alphanumeric. With strip_code_blocks set,
/// ``` fenced regions and `inline` spans are removed first, and tokens
/// containing any of ( ) { } ; = are dropped.
std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& cfg);

/// One token per line; blank lines and lines starting with '#' are skipped.
std::set<std::string> load_stopwords(const std::filesystem::path& path);

/// Frozen token -> index map. Indices follow lexicographic token order.
class Vocabulary {
public:
    Vocabulary() = default;
    /// `tokens` must be strictly increasing; `df` is aligned with it.
    Vocabulary(std::vector<std::string> tokens, std::vector<std::size_t> df);

    std::size_t size() const { return tokens_.size(); }
    bool empty() const { return tokens_.empty(); }
    std::optional<std::size_t> index(std::string_view token) const;
    const std::string& token(std::size_t i) const { return tokens_[i]; }
    std::size_t document_frequency(std::size_t i) const { return df_[i]; }
    std::span<const std::string> tokens() const { return tokens_; }
    std::span<const std::size_t> document_frequencies() const { return df_; }

    /// Keeps only the given feature indices, reindexed in token order.
    Vocabulary restrict_to(std::span<const std::size_t> keep) const;

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
        return a.tokens_ == b.tokens_ && a.df_ == b.df_;
    }

private:
    struct Hash {
        using is_transparent = void;
        std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
    };
    std::vector<std::string> tokens_;
    std::vector<std::size_t> df_;
    std::unordered_map<std::string, std::size_t, Hash, std::equal_to<>> index_;
};

Vocabulary build_vocab(std::span<const std::vector<std::string>> docs, std::size_t min_df);

/// Sorted (index, value) pairs over a fixed dimension. Indices strictly
/// increase and values are nonzero; absent indices are zero.
class SparseVector {
public:
    using Entry = std::pair<std::size_t, double>;

    SparseVector() = default;
    explicit SparseVector(std::size_t dim) : dim_(dim) {}
    /// Validates ordering, bounds and nonzero values; throws ArgumentError.
    SparseVector(std::size_t dim, std::vector<Entry> entries);

    std::size_t dim() const { return dim_; }
    std::size_t nnz() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    std::span<const Entry> entries() const { return entries_; }
    double sum() const;
    double norm() const;

    friend bool operator==(const SparseVector&, const SparseVector&) = default;

private:
    std::size_t dim_ = 0;
    std::vector<Entry> entries_;
};

enum class Weighting { RawCount, BinaryPresence, L2NormalizedCount };

std::string_view to_string(Weighting w);
std::optional<Weighting> parse_weighting(std::string_view s);

/// Out-of-vocabulary tokens are dropped.
SparseVector vectorize(std::span<const std::string> tokens, const Vocabulary& v, Weighting w);

/// Document-parallel (OpenMP) tokenize + vectorize.
std::vector<SparseVector> vectorize_batch(std::span<const std::string> texts, const TokenizerConfig& cfg,
                                          const Vocabulary& v, Weighting w);

/// Per-feature max-over-labels chi-square score of (term presence x label).
/// `labels` holds a class index per vector; `num_labels` bounds them.
std::vector<double> chi2_scores(std::span<const SparseVector> vectors, std::span<const std::size_t> labels,
                                std::size_t num_labels);

/// Indices of the top_k features by chi2 score, ties to the lower index,
/// returned in increasing index order. top_k >= 1; clipped to the dimension.
std::vector<std::size_t> chi2_select(std::span<const SparseVector> vectors, std::span<const std::size_t> labels,
                                     std::size_t num_labels, std::size_t top_k);

/// Chi-square statistic of one 2x2 table (present&in, present&out, absent&in, absent&out).
double chi2_statistic(double a, double b, double c, double d);

namespace reference {

std::vector<SparseVector> vectorize_batch(std::span<const std::string> texts, const TokenizerConfig& cfg,
                                          const Vocabulary& v, Weighting w);
std::vector<double> chi2_scores(std::span<const SparseVector> vectors, std::span<const std::size_t> labels,
                                std::size_t num_labels);

}  // namespace reference

}  // namespace qtriage
