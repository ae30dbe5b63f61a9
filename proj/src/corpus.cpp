#include "qtriage/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "qtriage/error.hpp"
#include "qtriage/hash.hpp"
#include "qtriage/rng.hpp"

namespace qtriage {

using nlohmann::json;

std::string_view to_string(Leaf leaf) {
    switch (leaf) {
        case Leaf::Irrelevant: return "irrelevant";
        case Leaf::Effective: return "effective";
        case Leaf::Ineffective: return "ineffective";
    }
    return "?";
}

std::string_view to_string(Relevance r) { return r == Relevance::Irrelevant ? "irrelevant" : "relevant"; }
std::string_view to_string(Efficacy e) { return e == Efficacy::Effective ? "effective" : "ineffective"; }

std::optional<Leaf> parse_leaf(std::string_view s) {
    for (Leaf l : kAllLeaves)
        if (to_string(l) == s) return l;
    return std::nullopt;
}

HierLabel HierLabel::from_leaf(Leaf leaf) {
    switch (leaf) {
        case Leaf::Irrelevant: return irrelevant();
        case Leaf::Effective: return relevant(Efficacy::Effective);
        case Leaf::Ineffective: return relevant(Efficacy::Ineffective);
    }
    return irrelevant();
}

HierLabel HierLabel::make(Relevance r, std::optional<Efficacy> e) {
    if (r == Relevance::Irrelevant && e)
        throw ValidationError("efficacy given for an irrelevant question");
    if (r == Relevance::Relevant && !e)
        throw ValidationError("relevant question lacks an efficacy label");
    return HierLabel(r, e);
}

Leaf HierLabel::leaf() const {
    if (relevance_ == Relevance::Irrelevant) return Leaf::Irrelevant;
    return *efficacy_ == Efficacy::Effective ? Leaf::Effective : Leaf::Ineffective;
}

std::size_t LabelCounts::of(Leaf leaf) const {
    switch (leaf) {
        case Leaf::Irrelevant: return irrelevant;
        case Leaf::Effective: return effective;
        case Leaf::Ineffective: return ineffective;
    }
    return 0;
}

Corpus::Corpus(std::vector<Question> questions) : questions_(std::move(questions)) {
    std::unordered_set<std::string_view> seen;
    seen.reserve(questions_.size());
    for (const auto& q : questions_) {
        if (q.id.empty()) throw ValidationError("question with empty id");
        if (!seen.insert(q.id).second) throw ValidationError("duplicate question id '" + q.id + "'");
        ++counts_.total;
        if (!q.gold) {
            ++counts_.unlabeled;
            continue;
        }
        switch (q.gold->leaf()) {
            case Leaf::Irrelevant: ++counts_.irrelevant; break;
            case Leaf::Effective: ++counts_.effective; ++counts_.relevant; break;
            case Leaf::Ineffective: ++counts_.ineffective; ++counts_.relevant; break;
        }
    }
}

std::vector<std::size_t> Corpus::labeled_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < questions_.size(); ++i)
        if (questions_[i].gold) out.push_back(i);
    return out;
}

std::uint64_t Corpus::digest() const {
    std::uint64_t h = kFnvOffset;
    for (const auto& q : questions_) {
        h = fnv1a64(question_to_json(q), h);
        h = fnv1a64("\n", h);
    }
    return h;
}

namespace {

bool expect_bool(const json& j, const char* key, std::size_t line) {
    if (!j.is_boolean()) throw ParseError(line, std::string("'") + key + "' must be a boolean");
    return j.get<bool>();
}

const std::set<std::string>& known_record_keys() {
    static const std::set<std::string> keys{"id", "text", "label", "rubrics", "source"};
    return keys;
}

}  // namespace

Question parse_question(std::string_view json_line, std::size_t line, std::ostream* warnings) {
    json j;
    try {
        j = json::parse(json_line);
    } catch (const json::parse_error& e) {
        throw ParseError(line, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError(line, "record is not a JSON object");

    Question q;
    auto id = j.find("id");
    if (id == j.end() || !id->is_string()) throw ParseError(line, "missing string field 'id'");
    q.id = id->get<std::string>();
    if (q.id.empty()) throw ValidationError("line " + std::to_string(line) + ": empty id");

    auto text = j.find("text");
    if (text == j.end() || !text->is_string()) throw ParseError(line, "missing string field 'text'");
    q.text = text->get<std::string>();

    if (auto lab = j.find("label"); lab != j.end() && !lab->is_null()) {
        if (!lab->is_object()) throw ParseError(line, "'label' must be an object");
        auto rel = lab->find("relevance");
        if (rel == lab->end() || !rel->is_string()) throw ParseError(line, "label lacks 'relevance'");
        Relevance r;
        if (*rel == "irrelevant") r = Relevance::Irrelevant;
        else if (*rel == "relevant") r = Relevance::Relevant;
        else throw ParseError(line, "unknown relevance '" + rel->get<std::string>() + "'");
        std::optional<Efficacy> e;
        if (auto eff = lab->find("efficacy"); eff != lab->end() && !eff->is_null()) {
            if (*eff == "effective") e = Efficacy::Effective;
            else if (*eff == "ineffective") e = Efficacy::Ineffective;
            else throw ParseError(line, "unknown efficacy '" + eff->dump() + "'");
        }
        try {
            q.gold = HierLabel::make(r, e);
        } catch (const ValidationError& err) {
            throw ValidationError("line " + std::to_string(line) + ": " + err.what());
        }
    }

    if (auto rub = j.find("rubrics"); rub != j.end() && !rub->is_null()) {
        if (!rub->is_object()) throw ParseError(line, "'rubrics' must be an object");
        RubricFlags f;
        if (auto it = rub->find("prior_effort"); it != rub->end()) f.has_prior_effort = expect_bool(*it, "prior_effort", line);
        if (auto it = rub->find("direct_answer"); it != rub->end()) f.asks_direct_answer = expect_bool(*it, "direct_answer", line);
        if (auto it = rub->find("specific"); it != rub->end()) f.is_specific = expect_bool(*it, "specific", line);
        q.rubrics = f;
    }

    if (auto src = j.find("source"); src != j.end() && !src->is_null()) {
        if (!src->is_string()) throw ParseError(line, "'source' must be a string");
        q.source_tag = src->get<std::string>();
    }

    if (warnings) {
        for (const auto& [key, _] : j.items())
            if (!known_record_keys().count(key))
                *warnings << "warning: line " << line << ": ignoring unknown key '" << key << "'\n";
    }
    return q;
}

std::string question_to_json(const Question& q) {
    json j = json::object();
    j["id"] = q.id;
    j["text"] = q.text;
    if (q.gold) {
        json lab{{"relevance", to_string(q.gold->relevance())}};
        if (auto e = q.gold->efficacy()) lab["efficacy"] = to_string(*e);
        j["label"] = std::move(lab);
    }
    if (q.rubrics)
        j["rubrics"] = {{"prior_effort", q.rubrics->has_prior_effort},
                        {"direct_answer", q.rubrics->asks_direct_answer},
                        {"specific", q.rubrics->is_specific}};
    if (q.source_tag) j["source"] = *q.source_tag;
    return j.dump();
}

Corpus parse_corpus(std::istream& in, std::ostream* warnings) {
    std::vector<Question> qs;
    std::unordered_set<std::string> ids;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        Question q = parse_question(line, lineno, warnings);
        if (!ids.insert(q.id).second)
            throw ValidationError("line " + std::to_string(lineno) + ": duplicate id '" + q.id + "'");
        qs.push_back(std::move(q));
    }
    return Corpus(std::move(qs));
}

Corpus load_corpus(const std::filesystem::path& path, std::ostream* warnings) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open corpus '" + path.string() + "'");
    return parse_corpus(in, warnings);
}

void write_corpus(const Corpus& c, std::ostream& out) {
    for (const auto& q : c.questions()) out << question_to_json(q) << '\n';
}

void save_corpus(const Corpus& c, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    write_corpus(c, out);
}

LabelCounts corpus_stats(const Corpus& c) { return c.counts(); }

std::vector<std::size_t> FoldPlan::test_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] == static_cast<int>(fold)) out.push_back(i);
    return out;
}

std::vector<std::size_t> FoldPlan::train_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] != kUnassigned && assignments[i] != static_cast<int>(fold)) out.push_back(i);
    return out;
}

FoldPlan stratified_kfold(const Corpus& c, std::size_t k, std::uint64_t seed, bool allow_sparse) {
    if (k < 2) throw ArgumentError("fold count must be at least 2, got " + std::to_string(k));

    FoldPlan plan;
    plan.k = k;
    plan.assignments.assign(c.size(), FoldPlan::kUnassigned);

    Rng rng(seed);
    std::size_t deal = 0;
    for (Leaf leaf : kAllLeaves) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < c.size(); ++i)
            if (c[i].gold && c[i].gold->leaf() == leaf) members.push_back(i);
        if (members.empty()) continue;
        if (members.size() < k && !allow_sparse)
            throw StratificationError("label '" + std::string(to_string(leaf)) + "' has " +
                                      std::to_string(members.size()) + " members, fewer than k=" +
                                      std::to_string(k));
        rng.shuffle(std::span(members));
        for (std::size_t idx : members) plan.assignments[idx] = static_cast<int>(deal++ % k);
    }
    return plan;
}

double cohen_kappa(std::span<const Leaf> a, std::span<const Leaf> b) {
    if (a.size() != b.size())
        throw ArgumentError("kappa: rating lists differ in length (" + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()) + ")");
    if (a.empty()) throw ArgumentError("kappa: rating lists are empty");

    constexpr std::size_t L = kAllLeaves.size();
    std::array<std::size_t, L> ma{}, mb{};
    std::size_t agree = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ++ma[static_cast<std::size_t>(a[i])];
        ++mb[static_cast<std::size_t>(b[i])];
        agree += a[i] == b[i];
    }
    const double n = static_cast<double>(a.size());
    if (agree == a.size()) return 1.0;
    const double po = agree / n;
    double pe = 0.0;
    for (std::size_t l = 0; l < L; ++l) pe += (ma[l] / n) * (mb[l] / n);
    if (pe >= 1.0) throw ArgumentError("kappa: degenerate marginals (chance agreement is 1)");
    return (po - pe) / (1.0 - pe);
}

std::string_view synthetic_pool_prefix(Leaf leaf) {
    switch (leaf) {
        case Leaf::Irrelevant: return "irr";
        case Leaf::Effective: return "eff";
        case Leaf::Ineffective: return "ineff";
    }
    return "?";
}

namespace {

// Zipf(1) cumulative weights over a pool of n tokens.
std::vector<double> zipf_cdf(std::size_t n) {
    std::vector<double> cdf(n);
    double acc = 0.0;
    for (std::size_t r = 0; r < n; ++r) cdf[r] = acc += 1.0 / static_cast<double>(r + 1);
    for (double& v : cdf) v /= acc;
    return cdf;
}

std::size_t draw(const std::vector<double>& cdf, Rng& rng) {
    const double u = rng.uniform();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

}  // namespace

Corpus gen_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    if (spec.separation < 0.0 || spec.separation > 1.0 || std::isnan(spec.separation))
        throw ArgumentError("separation must lie in [0, 1]");
    if (spec.vocab_size == 0) throw ArgumentError("vocab_size must be positive");
    if (spec.min_length == 0 || spec.min_length > spec.max_length)
        throw ArgumentError("need 1 <= min_length <= max_length");

    std::vector<Leaf> labels;
    labels.insert(labels.end(), spec.irrelevant, Leaf::Irrelevant);
    labels.insert(labels.end(), spec.effective, Leaf::Effective);
    labels.insert(labels.end(), spec.ineffective, Leaf::Ineffective);

    Rng rng(seed);
    rng.shuffle(std::span(labels));

    const auto cdf = zipf_cdf(spec.vocab_size);
    const std::size_t width = std::to_string(labels.size()).size();
    std::vector<Question> qs;
    qs.reserve(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const Leaf leaf = labels[i];
        const std::size_t len = spec.min_length + rng.below(spec.max_length - spec.min_length + 1);
        std::string text;
        for (std::size_t t = 0; t < len; ++t) {
            const bool private_pool = rng.uniform() < spec.separation;
            const std::size_t tok = draw(cdf, rng);
            if (t) text += ' ';
            text += private_pool ? synthetic_pool_prefix(leaf) : std::string_view("com");
            text += std::to_string(tok);
        }

        Question q;
        std::string num = std::to_string(i);
        q.id = "q" + std::string(width - num.size(), '0') + num;
        q.text = std::move(text);
        q.gold = HierLabel::from_leaf(leaf);
        if (leaf == Leaf::Effective) {
            q.rubrics = RubricFlags{true, false, true};
        } else if (leaf == Leaf::Ineffective) {
            // bits == 0 would be the all-effective combination.
            std::uint64_t bits = 1 + rng.below(7);
            q.rubrics = RubricFlags{(bits & 1) == 0, (bits & 2) != 0, (bits & 4) == 0};
        }
        q.source_tag = "synthetic";
        qs.push_back(std::move(q));
    }
    return Corpus(std::move(qs));
}

}  // namespace qtriage
