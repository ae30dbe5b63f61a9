#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qtriage {

enum class Relevance { Irrelevant, Relevant };
enum class Efficacy { Effective, Ineffective };

/// The three terminal categories of the question hierarchy.
enum class Leaf { Irrelevant, Effective, Ineffective };

inline constexpr std::array<Leaf, 3> kAllLeaves{Leaf::Irrelevant, Leaf::Effective, Leaf::Ineffective};

std::string_view to_string(Leaf leaf);
std::string_view to_string(Relevance r);
std::string_view to_string(Efficacy e);
std::optional<Leaf> parse_leaf(std::string_view s);

/// Two-level label: efficacy is present exactly when the question is relevant.
class HierLabel {
public:
    static HierLabel irrelevant() { return HierLabel(Relevance::Irrelevant, std::nullopt); }
    static HierLabel relevant(Efficacy e) { return HierLabel(Relevance::Relevant, e); }
    static HierLabel from_leaf(Leaf leaf);
    /// Throws ValidationError when the pair violates the efficacy/relevance invariant.
    static HierLabel make(Relevance r, std::optional<Efficacy> e);

    Relevance relevance() const { return relevance_; }
    std::optional<Efficacy> efficacy() const { return efficacy_; }
    Leaf leaf() const;

    friend bool operator==(const HierLabel&, const HierLabel&) = default;

private:
    HierLabel(Relevance r, std::optional<Efficacy> e) : relevance_(r), efficacy_(e) {}
    Relevance relevance_;
    std::optional<Efficacy> efficacy_;
};

struct RubricFlags {
    bool has_prior_effort = false;
    bool asks_direct_answer = false;
    bool is_specific = false;

    friend bool operator==(const RubricFlags&, const RubricFlags&) = default;
};

struct Question {
    std::string id;
    std::string text;
    std::optional<HierLabel> gold;
    std::optional<RubricFlags> rubrics;
    std::optional<std::string> source_tag;

    friend bool operator==(const Question&, const Question&) = default;
};

struct LabelCounts {
    std::size_t total = 0;
    std::size_t irrelevant = 0;
    std::size_t relevant = 0;
    std::size_t effective = 0;
    std::size_t ineffective = 0;
    std::size_t unlabeled = 0;

    std::size_t of(Leaf leaf) const;
    std::size_t labeled() const { return irrelevant + relevant; }

    friend bool operator==(const LabelCounts&, const LabelCounts&) = default;
};

/// Ordered, immutable question collection with unique ids and cached counts.
class Corpus {
public:
    Corpus() = default;
    /// Validates id uniqueness and non-emptiness; throws ValidationError.
    explicit Corpus(std::vector<Question> questions);

    std::span<const Question> questions() const { return questions_; }
    const Question& operator[](std::size_t i) const { return questions_[i]; }
    std::size_t size() const { return questions_.size(); }
    bool empty() const { return questions_.empty(); }
    const LabelCounts& counts() const { return counts_; }

    /// Indices of questions that carry a gold label, in corpus order.
    std::vector<std::size_t> labeled_indices() const;

    /// 64-bit FNV-1a over the canonical JSONL serialization.
    std::uint64_t digest() const;

private:
    std::vector<Question> questions_;
    LabelCounts counts_;
};

/// Reads JSONL. Unknown keys are ignored; a warning per key name goes to `warnings`
/// when non-null. Throws ParseError (with line number), ValidationError, IoError.
Corpus load_corpus(const std::filesystem::path& path, std::ostream* warnings = nullptr);
Corpus parse_corpus(std::istream& in, std::ostream* warnings = nullptr);

/// Parses one JSONL record. `line` is used only for error messages.
Question parse_question(std::string_view json_line, std::size_t line, std::ostream* warnings = nullptr);
std::string question_to_json(const Question& q);

void write_corpus(const Corpus& c, std::ostream& out);
void save_corpus(const Corpus& c, const std::filesystem::path& path);

LabelCounts corpus_stats(const Corpus& c);

/// Per-question fold index; unlabeled questions carry kUnassigned.
struct FoldPlan {
    static constexpr int kUnassigned = -1;

    std::size_t k = 0;
    std::vector<int> assignments;

    std::vector<std::size_t> test_indices(std::size_t fold) const;
    std::vector<std::size_t> train_indices(std::size_t fold) const;

    friend bool operator==(const FoldPlan&, const FoldPlan&) = default;
};

/// Stratified by leaf label. Each label's members are shuffled with the seeded
/// generator and dealt round-robin, continuing the deal across labels so total
/// fold sizes also differ by at most one.
FoldPlan stratified_kfold(const Corpus& c, std::size_t k, std::uint64_t seed, bool allow_sparse = false);

/// Cohen's kappa over leaf labels. Returns 1 when observed agreement is perfect.
double cohen_kappa(std::span<const Leaf> a, std::span<const Leaf> b);

struct SyntheticSpec {
    std::size_t irrelevant = 0;
    std::size_t effective = 0;
    std::size_t ineffective = 0;
    /// Tokens per pool. Each label owns a private pool and all labels share one.
    std::size_t vocab_size = 50;
    /// Probability that a token is drawn from the label's private pool.
    double separation = 1.0;
    std::size_t min_length = 20;
    std::size_t max_length = 60;
};

/// Label-conditional multinomial text generator; deterministic given (spec, seed).
Corpus gen_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

/// Token pool prefix used by gen_synthetic for a label's private tokens.
std::string_view synthetic_pool_prefix(Leaf leaf);

}  // namespace qtriage
