#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "qtriage/cli.hpp"
#include "qtriage/error.hpp"
#include "qtriage/hash.hpp"
#include "qtriage/serialize.hpp"

namespace qtriage::cli {

using nlohmann::json;

namespace {

int exit_code_for(ErrorKind k) {
    switch (k) {
        case ErrorKind::Config: return kConfigError;
        case ErrorKind::Training: return kTrainingError;
        default: return kDataError;
    }
}

const char* category(ErrorKind k) {
    switch (k) {
        case ErrorKind::Config: return "config";
        case ErrorKind::Training: return "training";
        default: return "data";
    }
}

void report_error(std::ostream& err, const char* cat, const std::string& message) {
    err << json{{"error", cat}, {"message", message}}.dump() << '\n';
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << content;
}

RunConfig resolved_config(const std::string& config_path, const Overrides& o) {
    if (config_path.empty()) throw ConfigError("--config is required");
    RunConfig cfg = load_config(config_path);
    apply_overrides(cfg, o);
    validate(cfg);
    return cfg;
}

void print_counts(std::ostream& out, const LabelCounts& c) {
    out << "total: " << c.total << '\n'
        << "irrelevant: " << c.irrelevant << '\n'
        << "relevant: " << c.relevant << '\n'
        << "  effective: " << c.effective << '\n'
        << "  ineffective: " << c.ineffective << '\n'
        << "unlabeled: " << c.unlabeled << '\n';
}

int cmd_train(const std::string& config_path, const Overrides& o, const std::string& out_path, std::ostream& out,
              std::ostream& err) {
    RunConfig cfg = resolved_config(config_path, o);
    auto specs = expand_specs(cfg);
    if (specs.size() != 1) throw ConfigError("train needs exactly one algorithm per level");
    std::filesystem::path model_path = out_path.empty() ? cfg.model_path.value_or("") : std::filesystem::path(out_path);
    if (model_path.empty()) throw ConfigError("no model output path (config 'model' or --out)");

    const Corpus corpus = load_corpus(cfg.corpus, &err);
    ModelFile file;
    file.model = train_strategy(specs.front(), corpus.questions());
    file.corpus_digest = hex_digest(corpus.digest());
    file.seed = *cfg.seed;
    file.timestamp = utc_timestamp();
    save_model(file, model_path);

    std::size_t correct = 0, labeled = 0;
    for (const auto& q : corpus.questions()) {
        if (!q.gold) continue;
        ++labeled;
        correct += predict_strategy(file.model, q.text).leaf == q.gold->leaf();
    }
    print_counts(out, corpus.counts());
    out << "strategy: " << to_string(cfg.mode) << " (" << specs.front().learner_name() << ")\n"
        << "vocabulary size: " << file.model.vocab.size() << '\n';
    char acc[32];
    std::snprintf(acc, sizeof acc, "%.3f", labeled ? static_cast<double>(correct) / labeled : 0.0);
    out << "self-test accuracy: " << acc << '\n' << "model: " << model_path.string() << '\n';
    return kOk;
}

int cmd_crossval(const std::string& config_path, const Overrides& o, const std::string& out_path,
                 const std::string& format, std::ostream& out, std::ostream& err) {
    RunConfig cfg = resolved_config(config_path, o);
    auto fmt = parse_report_format(format);
    if (!fmt) throw ConfigError("--format must be text, json or csv");
    const Corpus corpus = load_corpus(cfg.corpus, &err);

    CvOptions opts;
    opts.level2_eval = cfg.level2_eval;
    opts.allow_sparse = cfg.allow_sparse;
    std::vector<EvalReport> reports;
    for (const auto& spec : expand_specs(cfg)) reports.push_back(cross_validate(corpus, spec, cfg.folds, *cfg.seed, opts));

    std::filesystem::path json_path = out_path.empty() ? cfg.report_path.value_or("") : std::filesystem::path(out_path);
    if (!json_path.empty()) write_text(json_path, render_reports(reports, ReportFormat::Json));
    out << render_reports(reports, *fmt);
    return kOk;
}

json prediction_scores(const LevelTrace& t) {
    json s = json::object();
    for (std::size_t i = 0; i < t.labels.size(); ++i) s[t.labels[i]] = t.prediction.scores[i];
    return s;
}

int cmd_classify(const std::string& model_path, const std::string& input_path, const std::string& out_path,
                 std::ostream& out) {
    if (model_path.empty()) throw ConfigError("--model is required");
    if (input_path.empty()) throw ConfigError("--input is required");
    const ModelFile file = load_model(model_path);

    std::ifstream in(input_path);
    if (!in) throw IoError("cannot open input '" + input_path + "'");
    std::ofstream file_out;
    if (!out_path.empty()) {
        file_out.open(out_path, std::ios::binary);
        if (!file_out) throw IoError("cannot write '" + out_path + "'");
    }
    std::ostream& sink = out_path.empty() ? out : file_out;

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        json rec;
        try {
            rec = json::parse(line);
            if (!rec.is_object()) throw std::runtime_error("record is not a JSON object");
            if (!rec.contains("id") || !rec["id"].is_string()) throw std::runtime_error("missing string field 'id'");
            if (!rec.contains("text") || !rec["text"].is_string())
                throw std::runtime_error("missing string field 'text'");
        } catch (const std::exception& e) {
            json error_rec{{"line", lineno}, {"error", e.what()}};
            if (rec.is_object() && rec.contains("id")) error_rec["id"] = rec["id"];
            sink << error_rec.dump() << '\n';
            continue;
        }
        const auto sp = predict_strategy(file.model, rec["text"].get<std::string>());
        json trace = json::array();
        for (const auto& t : sp.path)
            trace.push_back({{"level", t.level}, {"label", t.prediction.label}, {"scores", prediction_scores(t)}});
        rec["leaf"] = to_string(sp.leaf);
        rec["path_trace"] = std::move(trace);
        rec["scores"] = prediction_scores(sp.path.back());
        rec["alert"] = sp.leaf == Leaf::Ineffective;
        sink << rec.dump() << '\n';
    }
    return kOk;
}

int cmd_stats(const std::string& corpus_path, const std::string& config_path, const std::string& format,
              std::ostream& out, std::ostream& err) {
    std::filesystem::path path = corpus_path;
    if (path.empty() && !config_path.empty()) path = load_config(config_path).corpus;
    if (path.empty()) throw ConfigError("stats needs a corpus path (positional or via --config)");
    const auto c = corpus_stats(load_corpus(path, &err));
    if (format == "json") {
        out << json{{"total", c.total},         {"irrelevant", c.irrelevant}, {"relevant", c.relevant},
                    {"effective", c.effective}, {"ineffective", c.ineffective}, {"unlabeled", c.unlabeled}}
                   .dump()
            << '\n';
    } else if (format == "text") {
        print_counts(out, c);
    } else {
        throw ConfigError("--format must be text or json for stats");
    }
    return kOk;
}

std::vector<std::string> csv_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    for (auto& f : out) {
        auto b = f.find_first_not_of(" \t\r");
        auto e = f.find_last_not_of(" \t\r");
        f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
    }
    return out;
}

int cmd_kappa(const std::string& csv_path, std::ostream& out) {
    if (csv_path.empty()) throw ConfigError("kappa needs a CSV path");
    std::ifstream in(csv_path);
    if (!in) throw IoError("cannot open '" + csv_path + "'");
    std::vector<Leaf> a, b;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto f = csv_fields(line);
        if (f.size() != 3) throw ParseError(lineno, "expected 3 columns (id, label_a, label_b)");
        auto la = parse_leaf(f[1]), lb = parse_leaf(f[2]);
        if (!la || !lb) {
            if (lineno == 1) continue;  // header row
            throw ParseError(lineno, "labels must be irrelevant, effective or ineffective");
        }
        a.push_back(*la);
        b.push_back(*lb);
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", cohen_kappa(a, b));
    out << buf << '\n';
    return kOk;
}

struct GenOptions {
    std::string counts = "240,366,377";
    std::size_t vocab = SyntheticSpec{}.vocab_size;
    double separation = SyntheticSpec{}.separation;
    std::size_t min_length = SyntheticSpec{}.min_length;
    std::size_t max_length = SyntheticSpec{}.max_length;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string out;
};

int cmd_gen_synthetic(const GenOptions& g, std::ostream& out) {
    if (!g.seed_given) throw ConfigError("gen-synthetic requires --seed");
    std::vector<std::size_t> counts;
    std::stringstream ss(g.counts);
    std::string part;
    try {
        while (std::getline(ss, part, ',')) counts.push_back(std::stoull(part));
    } catch (const std::exception&) {
        throw ConfigError("--counts takes IRRELEVANT,EFFECTIVE,INEFFECTIVE");
    }
    if (counts.size() != 3) throw ConfigError("--counts takes IRRELEVANT,EFFECTIVE,INEFFECTIVE");
    SyntheticSpec spec{counts[0], counts[1], counts[2], g.vocab, g.separation, g.min_length, g.max_length};
    Corpus c;
    try {
        c = gen_synthetic(spec, g.seed);
    } catch (const ArgumentError& e) {
        throw ConfigError(e.what());
    }
    if (g.out.empty()) write_corpus(c, out);
    else save_corpus(c, g.out);
    return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"qtriage: student forum question triage"};
    app.require_subcommand(1);

    std::string config, out_path, format = "text", model, input, positional;
    Overrides o;
    std::uint64_t seed = 0;
    std::size_t folds = 0;
    std::string strategy, algo;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config, "Run configuration (JSON)");
        sub->add_option("--seed", seed, "Master seed");
        sub->add_option("--folds", folds, "Cross-validation fold count");
        sub->add_option("--strategy", strategy, "flat | single-path");
        sub->add_option("--algo", algo, "nbm|lg|svm|bdt; comma list for flat, L1:L2 for single-path");
    };

    auto* train = app.add_subcommand("train", "Train a model on the full labeled corpus");
    add_common(train);
    train->add_option("--out", out_path, "Model output path");

    auto* crossval = app.add_subcommand("crossval", "Stratified k-fold cross-validation");
    add_common(crossval);
    crossval->add_option("--out", out_path, "JSON report output path");
    crossval->add_option("--format", format, "Console format: text | json | csv");

    auto* classify = app.add_subcommand("classify", "Label fresh questions (JSONL in, JSONL out)");
    classify->add_option("--model", model, "Model file");
    classify->add_option("--input", input, "Input JSONL");
    classify->add_option("--out", out_path, "Output JSONL (default stdout)");

    auto* stats = app.add_subcommand("stats", "Label counts of a corpus");
    stats->add_option("corpus", positional, "Corpus JSONL");
    stats->add_option("--config", config, "Take the corpus path from a config");
    stats->add_option("--format", format, "text | json");

    auto* kappa = app.add_subcommand("kappa", "Cohen's kappa from a CSV of (id, label_a, label_b)");
    kappa->add_option("csv", positional, "CSV file");

    GenOptions gen;
    auto* synth = app.add_subcommand("gen-synthetic", "Write a seeded synthetic corpus");
    synth->add_option("--seed", gen.seed, "Generator seed");
    synth->add_option("--counts", gen.counts, "IRRELEVANT,EFFECTIVE,INEFFECTIVE");
    synth->add_option("--vocab", gen.vocab, "Tokens per pool");
    synth->add_option("--separation", gen.separation, "Private-pool probability in [0, 1]");
    synth->add_option("--min-length", gen.min_length, "Minimum tokens per question");
    synth->add_option("--max-length", gen.max_length, "Maximum tokens per question");
    synth->add_option("--out", gen.out, "Output JSONL (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return kOk;
        }
        report_error(err, "config", e.what());
        return kConfigError;
    }

    auto capture_overrides = [&](CLI::App* sub) {
        if (sub->count("--seed")) o.seed = seed;
        if (sub->count("--folds")) o.folds = folds;
        if (sub->count("--strategy")) o.strategy = strategy;
        if (sub->count("--algo")) o.algo = algo;
    };

    try {
        if (train->parsed()) {
            capture_overrides(train);
            return cmd_train(config, o, out_path, out, err);
        }
        if (crossval->parsed()) {
            capture_overrides(crossval);
            return cmd_crossval(config, o, out_path, format, out, err);
        }
        if (classify->parsed()) return cmd_classify(model, input, out_path, out);
        if (stats->parsed()) return cmd_stats(positional, config, format, out, err);
        if (kappa->parsed()) return cmd_kappa(positional, out);
        if (synth->parsed()) {
            gen.seed_given = synth->count("--seed") > 0;
            return cmd_gen_synthetic(gen, out);
        }
    } catch (const Error& e) {
        report_error(err, category(e.kind()), e.what());
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        report_error(err, "data", e.what());
        return kDataError;
    }
    return kConfigError;
}

}  // namespace qtriage::cli
