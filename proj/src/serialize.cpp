#include "qtriage/serialize.hpp"

#include <fstream>

#include "qtriage/error.hpp"
#include "qtriage/hash.hpp"

namespace qtriage {

using nlohmann::json;

namespace {

template <typename T>
T field(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(0, std::string("missing field '") + key + "'");
    try {
        return it->get<T>();
    } catch (const json::exception& e) {
        throw ParseError(0, std::string("field '") + key + "': " + e.what());
    }
}

json matrix_json(const Matrix& m) { return {{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}}; }

Matrix matrix_from(const json& j) {
    Matrix m;
    m.rows = field<std::size_t>(j, "rows");
    m.cols = field<std::size_t>(j, "cols");
    m.data = field<std::vector<double>>(j, "data");
    if (m.data.size() != m.rows * m.cols) throw ParseError(0, "matrix data has the wrong length");
    return m;
}

LearnerKind kind_from(const std::string& s) {
    auto k = parse_learner(s);
    if (!k) throw ParseError(0, "unknown learner kind '" + s + "'");
    return *k;
}

}  // namespace

json to_json(const TokenizerConfig& c) {
    return {{"lowercase", c.lowercase},
            {"ngram_max", c.ngram_max},
            {"strip_code_blocks", c.strip_code_blocks},
            {"stopwords", std::vector<std::string>(c.stopwords.begin(), c.stopwords.end())}};
}

TokenizerConfig tokenizer_from_json(const json& j) {
    TokenizerConfig c;
    c.lowercase = j.value("lowercase", c.lowercase);
    c.ngram_max = j.value("ngram_max", c.ngram_max);
    c.strip_code_blocks = j.value("strip_code_blocks", c.strip_code_blocks);
    if (auto it = j.find("stopwords"); it != j.end() && it->is_array())
        for (const auto& s : *it) c.stopwords.insert(s.get<std::string>());
    return c;
}

json to_json(const PipelineConfig& c) {
    json w = json::object();
    for (auto k : kAllLearners) w[std::string(to_string(k))] = to_string(c.weighting_for(k));
    json j{{"tokenizer", to_json(c.tokenizer)}, {"min_df", c.min_df}, {"weighting", w}};
    j["top_k"] = c.top_k ? json(*c.top_k) : json(nullptr);
    return j;
}

PipelineConfig pipeline_from_json(const json& j) {
    PipelineConfig c;
    if (auto it = j.find("tokenizer"); it != j.end()) c.tokenizer = tokenizer_from_json(*it);
    c.min_df = j.value("min_df", c.min_df);
    if (auto it = j.find("top_k"); it != j.end() && !it->is_null()) c.top_k = it->get<std::size_t>();
    if (auto it = j.find("weighting"); it != j.end())
        for (auto k : kAllLearners)
            if (auto w = it->find(std::string(to_string(k))); w != it->end()) {
                auto parsed = parse_weighting(w->get<std::string>());
                if (!parsed) throw ParseError(0, "unknown weighting '" + w->get<std::string>() + "'");
                c.weighting[static_cast<std::size_t>(k)] = *parsed;
            }
    return c;
}

json to_json(const Hyperparams& h) {
    return {{"nbm", {{"alpha", h.nbm_alpha}}},
            {"lg", {{"lambda", h.lg_lambda}, {"eta0", h.lg_eta0}, {"epochs", h.lg_epochs}, {"batch", h.lg_batch}}},
            {"svm", {{"lambda", h.svm_lambda}, {"epochs", h.svm_epochs}}},
            {"bdt", {{"rounds", h.bdt_rounds}, {"depth", h.bdt_depth}}},
            {"seed", h.seed}};
}

Hyperparams hyperparams_from_json(const json& j) {
    Hyperparams h;
    const json empty = json::object();
    auto sub = [&](const char* k) -> const json& {
        auto it = j.find(k);
        return it == j.end() ? empty : *it;
    };
    h.nbm_alpha = sub("nbm").value("alpha", h.nbm_alpha);
    h.lg_lambda = sub("lg").value("lambda", h.lg_lambda);
    h.lg_eta0 = sub("lg").value("eta0", h.lg_eta0);
    h.lg_epochs = sub("lg").value("epochs", h.lg_epochs);
    h.lg_batch = sub("lg").value("batch", h.lg_batch);
    h.svm_lambda = sub("svm").value("lambda", h.svm_lambda);
    h.svm_epochs = sub("svm").value("epochs", h.svm_epochs);
    h.bdt_rounds = sub("bdt").value("rounds", h.bdt_rounds);
    h.bdt_depth = sub("bdt").value("depth", h.bdt_depth);
    h.seed = j.value("seed", h.seed);
    return h;
}

json to_json(const StrategySpec& s) {
    json j{{"strategy", to_string(s.mode)}};
    if (s.mode == StrategyMode::Flat) {
        j["algo"] = to_string(s.flat_kind);
    } else {
        j["algo_level1"] = to_string(s.level1_kind);
        j["algo_level2"] = to_string(s.level2_kind);
    }
    j["pipeline"] = to_json(s.pipeline);
    j["hyperparams"] = to_json(s.hyper);
    return j;
}

json to_json(const TrainedLearner& m) {
    json j{{"kind", to_string(m.kind)}, {"labels", m.labels}, {"dim", m.dim}, {"hyperparams", to_json(m.hyper)}};
    if (const auto* nb = std::get_if<NbmParams>(&m.params)) {
        j["params"] = {{"log_prior", nb->log_prior}, {"log_prob", matrix_json(nb->log_prob)}};
    } else if (const auto* lin = std::get_if<LinearParams>(&m.params)) {
        j["params"] = {{"weights", matrix_json(lin->weights)}, {"bias", lin->bias}};
    } else {
        const auto& bp = std::get<BoostParams>(m.params);
        json trees = json::array();
        for (const auto& t : bp.trees) {
            json nodes = json::array();
            for (const auto& n : t.nodes)
                nodes.push_back({n.feature, n.threshold, n.left, n.right, n.label});
            trees.push_back(std::move(nodes));
        }
        j["params"] = {{"trees", trees}, {"stage_weights", bp.stage_weights}, {"fallback_label", bp.fallback_label}};
    }
    return j;
}

TrainedLearner learner_from_json(const json& j) {
    TrainedLearner m;
    m.kind = kind_from(field<std::string>(j, "kind"));
    m.labels = field<std::vector<std::string>>(j, "labels");
    m.dim = field<std::size_t>(j, "dim");
    m.hyper = hyperparams_from_json(field<json>(j, "hyperparams"));
    const json p = field<json>(j, "params");
    const std::size_t L = m.labels.size();
    switch (m.kind) {
        case LearnerKind::NBM: {
            NbmParams nb{field<std::vector<double>>(p, "log_prior"), matrix_from(field<json>(p, "log_prob"))};
            if (nb.log_prior.size() != L || nb.log_prob.rows != L || nb.log_prob.cols != m.dim)
                throw ParseError(0, "nbm parameter shapes do not match labels/dim");
            m.params = std::move(nb);
            break;
        }
        case LearnerKind::LG:
        case LearnerKind::SVM: {
            LinearParams lin{matrix_from(field<json>(p, "weights")), field<std::vector<double>>(p, "bias")};
            if (lin.bias.size() != L || lin.weights.rows != L || lin.weights.cols != m.dim)
                throw ParseError(0, "linear parameter shapes do not match labels/dim");
            m.params = std::move(lin);
            break;
        }
        case LearnerKind::BDT: {
            BoostParams bp;
            for (const auto& t : field<json>(p, "trees")) {
                DecisionTree tree;
                for (const auto& n : t) {
                    TreeNode node{n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(), n.at(3).get<int>(),
                                  n.at(4).get<std::size_t>()};
                    tree.nodes.push_back(node);
                }
                const int count = static_cast<int>(tree.nodes.size());
                for (const auto& node : tree.nodes) {
                    if (node.label >= L) throw ParseError(0, "tree leaf label out of range");
                    if (!node.is_leaf() && (node.left <= 0 || node.right <= 0 || node.left >= count ||
                                            node.right >= count || static_cast<std::size_t>(node.feature) >= m.dim))
                        throw ParseError(0, "malformed tree node");
                }
                if (tree.nodes.empty()) throw ParseError(0, "empty tree");
                bp.trees.push_back(std::move(tree));
            }
            bp.stage_weights = field<std::vector<double>>(p, "stage_weights");
            bp.fallback_label = field<std::size_t>(p, "fallback_label");
            if (bp.stage_weights.size() != bp.trees.size() || (L && bp.fallback_label >= L))
                throw ParseError(0, "boosting parameter shapes are inconsistent");
            m.params = std::move(bp);
            break;
        }
    }
    return m;
}

json to_json(const StrategyModel& m) {
    json j{{"strategy", to_string(m.mode)},
           {"pipeline", to_json(m.pipeline)},
           {"vocabulary",
            {{"tokens", std::vector<std::string>(m.vocab.tokens().begin(), m.vocab.tokens().end())},
             {"df", std::vector<std::size_t>(m.vocab.document_frequencies().begin(),
                                             m.vocab.document_frequencies().end())}}}};
    json learners = json::object();
    if (m.flat) learners["flat"] = to_json(*m.flat);
    if (m.level1) learners["level1"] = to_json(*m.level1);
    if (m.level2) learners["level2"] = to_json(*m.level2);
    j["learners"] = std::move(learners);
    return j;
}

StrategyModel strategy_model_from_json(const json& j) {
    StrategyModel m;
    auto mode = parse_strategy(field<std::string>(j, "strategy"));
    if (!mode) throw ParseError(0, "unknown strategy in model");
    m.mode = *mode;
    m.pipeline = pipeline_from_json(field<json>(j, "pipeline"));
    const json v = field<json>(j, "vocabulary");
    try {
        m.vocab = Vocabulary(field<std::vector<std::string>>(v, "tokens"), field<std::vector<std::size_t>>(v, "df"));
    } catch (const ArgumentError& e) {
        throw ParseError(0, std::string("vocabulary: ") + e.what());
    }
    const json l = field<json>(j, "learners");
    auto load = [&](const char* key) -> std::optional<TrainedLearner> {
        auto it = l.find(key);
        if (it == l.end()) return std::nullopt;
        auto learner = learner_from_json(*it);
        if (learner.dim != m.vocab.size()) throw ParseError(0, std::string(key) + ": dimension differs from vocabulary");
        return learner;
    };
    m.flat = load("flat");
    m.level1 = load("level1");
    m.level2 = load("level2");
    const bool ok = m.mode == StrategyMode::Flat ? (m.flat && !m.level1 && !m.level2)
                                                 : (!m.flat && m.level1 && m.level2);
    if (!ok) throw ParseError(0, "learner set does not match the strategy");
    return m;
}

json to_json(const ModelFile& f) {
    return {{"format_version", ModelFile::kFormatVersion},
            {"model", to_json(f.model)},
            {"metadata", {{"corpus_digest", f.corpus_digest}, {"seed", f.seed}, {"timestamp", f.timestamp}}}};
}

ModelFile model_file_from_json(const json& j) {
    const int version = field<int>(j, "format_version");
    if (version != ModelFile::kFormatVersion)
        throw ParseError(0, "unsupported model format_version " + std::to_string(version));
    ModelFile f;
    f.model = strategy_model_from_json(field<json>(j, "model"));
    const json meta = field<json>(j, "metadata");
    f.corpus_digest = meta.value("corpus_digest", std::string());
    f.seed = meta.value("seed", std::uint64_t{0});
    f.timestamp = meta.value("timestamp", std::string());
    return f;
}

void save_model(const ModelFile& f, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write model '" + path.string() + "'");
    out << to_json(f).dump(1) << '\n';
}

ModelFile load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open model '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(0, std::string("model file is not valid JSON: ") + e.what());
    }
    try {
        return model_file_from_json(j);
    } catch (const json::exception& e) {
        throw ParseError(0, std::string("malformed model file: ") + e.what());
    }
}

std::string model_content_digest(const json& model_doc) {
    json copy = model_doc;
    if (auto it = copy.find("metadata"); it != copy.end()) it->erase("timestamp");
    return hex_digest(fnv1a64(copy.dump()));
}

}  // namespace qtriage
