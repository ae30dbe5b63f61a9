#include <fstream>
#include <set>

#include "qtriage/cli.hpp"
#include "qtriage/error.hpp"
#include "qtriage/serialize.hpp"

namespace qtriage::cli {

using nlohmann::json;

namespace {

const std::set<std::string> kTopLevelKeys{"corpus",  "strategy",    "algo",         "algo_level1", "algo_level2",
                                          "tokenizer", "min_df",    "top_k",        "weighting",   "hyperparams",
                                          "folds",   "seed",        "level2_eval",  "allow_sparse", "model",
                                          "report"};

LearnerKind learner_or_throw(const std::string& name) {
    if (auto k = parse_learner(name)) return *k;
    throw ConfigError("unknown algorithm '" + name + "'; expected one of {nbm, lg, svm, bdt}");
}

std::vector<LearnerKind> learner_list(const json& j, const char* key) {
    std::vector<LearnerKind> out;
    if (j.is_string()) {
        out.push_back(learner_or_throw(j.get<std::string>()));
    } else if (j.is_array() && !j.empty()) {
        for (const auto& e : j) {
            if (!e.is_string()) throw ConfigError(std::string("'") + key + "' entries must be strings");
            out.push_back(learner_or_throw(e.get<std::string>()));
        }
    } else {
        throw ConfigError(std::string("'") + key + "' must be an algorithm name or a non-empty list of names");
    }
    return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        out.push_back(s.substr(start, pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

RunConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (!kTopLevelKeys.count(key)) throw ConfigError("unknown config key '" + key + "'");

    RunConfig cfg;
    try {
        if (auto it = j.find("corpus"); it != j.end()) cfg.corpus = resolve(base_dir, it->get<std::string>());
        if (auto it = j.find("strategy"); it != j.end()) {
            auto m = parse_strategy(it->get<std::string>());
            if (!m) throw ConfigError("strategy must be 'flat' or 'single-path'");
            cfg.mode = *m;
        }
        if (auto it = j.find("algo"); it != j.end()) cfg.algos = learner_list(*it, "algo");
        if (auto it = j.find("algo_level1"); it != j.end()) cfg.algos_level1 = learner_list(*it, "algo_level1");
        if (auto it = j.find("algo_level2"); it != j.end()) cfg.algos_level2 = learner_list(*it, "algo_level2");

        json pipeline = json::object();
        for (const char* key : {"tokenizer", "min_df", "top_k", "weighting"})
            if (auto it = j.find(key); it != j.end()) pipeline[key] = *it;
        if (auto t = pipeline.find("tokenizer"); t != pipeline.end()) {
            if (auto sw = t->find("stopwords"); sw != t->end() && sw->is_string()) {
                auto words = load_stopwords(resolve(base_dir, sw->get<std::string>()));
                *sw = std::vector<std::string>(words.begin(), words.end());
            }
        }
        try {
            cfg.pipeline = pipeline_from_json(pipeline);
        } catch (const ParseError& e) {
            throw ConfigError(e.what());
        }
        if (cfg.pipeline.tokenizer.ngram_max != 1 && cfg.pipeline.tokenizer.ngram_max != 2)
            throw ConfigError("tokenizer.ngram_max must be 1 or 2");
        if (cfg.pipeline.min_df < 1) throw ConfigError("min_df must be >= 1");
        if (cfg.pipeline.top_k && *cfg.pipeline.top_k < 1) throw ConfigError("top_k must be >= 1");

        if (auto it = j.find("hyperparams"); it != j.end()) cfg.hyper = hyperparams_from_json(*it);
        if (auto it = j.find("folds"); it != j.end()) cfg.folds = it->get<std::size_t>();
        if (auto it = j.find("seed"); it != j.end()) cfg.seed = it->get<std::uint64_t>();
        if (auto it = j.find("level2_eval"); it != j.end()) {
            auto e = parse_level2_eval(it->get<std::string>());
            if (!e) throw ConfigError("level2_eval must be 'gold_relevant' or 'predicted_relevant'");
            cfg.level2_eval = *e;
        }
        cfg.allow_sparse = j.value("allow_sparse", false);
        if (auto it = j.find("model"); it != j.end()) cfg.model_path = resolve(base_dir, it->get<std::string>());
        if (auto it = j.find("report"); it != j.end()) cfg.report_path = resolve(base_dir, it->get<std::string>());
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config type error: ") + e.what());
    } catch (const IoError& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j, path.parent_path());
}

void apply_overrides(RunConfig& cfg, const Overrides& o) {
    if (o.seed) cfg.seed = o.seed;
    if (o.folds) cfg.folds = *o.folds;
    if (o.strategy) {
        auto m = parse_strategy(*o.strategy);
        if (!m) throw ConfigError("strategy must be 'flat' or 'single-path'");
        if (*m != cfg.mode) {
            cfg.mode = *m;
            cfg.algos.clear();
            cfg.algos_level1.clear();
            cfg.algos_level2.clear();
        }
    }
    if (o.algo) {
        if (cfg.mode == StrategyMode::Flat) {
            cfg.algos.clear();
            for (const auto& name : split(*o.algo, ',')) cfg.algos.push_back(learner_or_throw(name));
        } else {
            auto levels = split(*o.algo, ':');
            if (levels.size() != 2) throw ConfigError("single-path --algo takes LEVEL1:LEVEL2, e.g. nbm:svm");
            cfg.algos_level1.clear();
            cfg.algos_level2.clear();
            for (const auto& name : split(levels[0], ',')) cfg.algos_level1.push_back(learner_or_throw(name));
            for (const auto& name : split(levels[1], ',')) cfg.algos_level2.push_back(learner_or_throw(name));
        }
    }
}

void validate(const RunConfig& cfg) {
    if (cfg.corpus.empty()) throw ConfigError("no corpus path configured");
    if (cfg.mode == StrategyMode::Flat) {
        if (!cfg.algos_level1.empty() || !cfg.algos_level2.empty())
            throw ConfigError("flat strategy does not take algo_level1/algo_level2");
        if (cfg.algos.empty()) throw ConfigError("flat strategy requires 'algo'");
    } else {
        if (!cfg.algos.empty()) throw ConfigError("single-path strategy takes algo_level1/algo_level2, not 'algo'");
        if (cfg.algos_level1.empty()) throw ConfigError("single-path strategy requires 'algo_level1'");
        if (cfg.algos_level2.empty()) throw ConfigError("single-path strategy requires 'algo_level2'");
    }
    if (cfg.folds < 2) throw ConfigError("folds must be >= 2");
    if (!cfg.seed) throw ConfigError("a seed is required (config 'seed' or --seed)");
}

std::vector<StrategySpec> expand_specs(const RunConfig& cfg) {
    std::vector<StrategySpec> out;
    StrategySpec base;
    base.mode = cfg.mode;
    base.pipeline = cfg.pipeline;
    base.hyper = cfg.hyper;
    base.hyper.seed = cfg.seed.value_or(0);
    if (cfg.mode == StrategyMode::Flat) {
        for (auto k : cfg.algos) {
            base.flat_kind = k;
            out.push_back(base);
        }
    } else {
        for (auto k1 : cfg.algos_level1)
            for (auto k2 : cfg.algos_level2) {
                base.level1_kind = k1;
                base.level2_kind = k2;
                out.push_back(base);
            }
    }
    return out;
}

}  // namespace qtriage::cli
