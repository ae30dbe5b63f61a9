#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "qtriage/error.hpp"
#include "qtriage/eval.hpp"

namespace qtriage {

using nlohmann::json;

std::optional<ReportFormat> parse_report_format(std::string_view s) {
    if (s == "text" || s == "text_table") return ReportFormat::TextTable;
    if (s == "json") return ReportFormat::Json;
    if (s == "csv") return ReportFormat::Csv;
    return std::nullopt;
}

namespace {

json opt(std::optional<double> v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<double>();
}

std::optional<double> accuracy_or_null(const ConfusionMatrix& cm) {
    if (!cm.total()) return std::nullopt;
    return overall_accuracy(cm);
}

json matrix_json(const ConfusionMatrix& cm) {
    json rows = json::array();
    for (std::size_t i = 0; i < cm.size(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < cm.size(); ++j) row.push_back(cm(i, j));
        rows.push_back(std::move(row));
    }
    json metrics = json::object();
    for (const auto& l : cm.labels()) {
        const auto m = class_metrics(cm, l);
        metrics[l] = {{"precision", opt(m.precision)}, {"recall", opt(m.recall)}, {"f1", opt(m.f1)}, {"support", m.support}};
    }
    return {{"counts", rows}, {"total", cm.total()}, {"accuracy", opt(accuracy_or_null(cm))}, {"metrics", metrics}};
}

ConfusionMatrix matrix_from(const json& j, const std::vector<std::string>& labels) {
    ConfusionMatrix cm(labels);
    const auto& rows = j.at("counts");
    if (rows.size() != labels.size()) throw ParseError(0, "confusion counts have the wrong shape");
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (rows[i].size() != labels.size()) throw ParseError(0, "confusion counts have the wrong shape");
        for (std::size_t k = 0; k < labels.size(); ++k) cm.add_index(i, k, rows[i][k].get<std::size_t>());
    }
    return cm;
}

struct Summary {
    std::optional<double> mean, std;
    std::size_t n = 0;
};

Summary summarize(const std::vector<double>& v) {
    Summary s;
    s.n = v.size();
    if (v.empty()) return s;
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - *s.mean) * (x - *s.mean);
        s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return s;
}

json fold_summary(const ReportSection& s) {
    std::vector<double> acc, prec, rec, f1;
    for (const auto& f : s.folds) {
        if (auto a = accuracy_or_null(f)) acc.push_back(*a);
        const auto m = class_metrics(f, s.positive);
        if (m.precision) prec.push_back(*m.precision);
        if (m.recall) rec.push_back(*m.recall);
        if (m.f1) f1.push_back(*m.f1);
    }
    auto entry = [](const std::vector<double>& v) {
        auto s = summarize(v);
        return json{{"mean", opt(s.mean)}, {"std", opt(s.std)}, {"folds_defined", s.n}};
    };
    return {{"accuracy", entry(acc)}, {"precision", entry(prec)}, {"recall", entry(rec)}, {"f1", entry(f1)}};
}

}  // namespace

json report_to_json(const EvalReport& r) {
    json sections = json::array();
    for (const auto& s : r.sections) {
        json folds = json::array();
        for (const auto& f : s.folds) folds.push_back(matrix_json(f));
        json js{{"name", s.name},        {"algorithm", s.algorithm}, {"positive", s.positive},
                {"labels", s.pooled.labels()}, {"pooled", matrix_json(s.pooled)}, {"folds", folds},
                {"fold_summary", fold_summary(s)}};
        if (s.name == kSectionEfficacyPredicted) {
            js["intruders"] = s.intruders;
            js["fold_intruders"] = s.fold_intruders;
        }
        sections.push_back(std::move(js));
    }
    return {{"report_version", EvalReport::kVersion},
            {"strategy", r.strategy},
            {"learner", r.learner},
            {"seed", r.seed},
            {"k", r.k},
            {"level2_eval", to_string(r.level2_eval)},
            {"corpus_digest", r.corpus_digest},
            {"config_digest", r.config_digest},
            {"config", r.config},
            {"baselines", {{"leaf", opt(r.baseline_leaf)}, {"relevance", opt(r.baseline_relevance)},
                           {"efficacy", opt(r.baseline_efficacy)}}},
            {"fold_sizes", r.fold_sizes},
            {"sections", sections}};
}

EvalReport report_from_json(const json& j) {
    try {
        if (j.at("report_version").get<int>() != EvalReport::kVersion)
            throw ParseError(0, "unsupported report_version");
        EvalReport r;
        r.strategy = j.at("strategy").get<std::string>();
        r.learner = j.at("learner").get<std::string>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.k = j.at("k").get<std::size_t>();
        auto l2 = parse_level2_eval(j.at("level2_eval").get<std::string>());
        if (!l2) throw ParseError(0, "unknown level2_eval");
        r.level2_eval = *l2;
        r.corpus_digest = j.at("corpus_digest").get<std::string>();
        r.config_digest = j.at("config_digest").get<std::string>();
        r.config = j.at("config");
        const auto& b = j.at("baselines");
        r.baseline_leaf = opt_from(b, "leaf");
        r.baseline_relevance = opt_from(b, "relevance");
        r.baseline_efficacy = opt_from(b, "efficacy");
        r.fold_sizes = j.at("fold_sizes").get<std::vector<std::size_t>>();
        for (const auto& js : j.at("sections")) {
            ReportSection s;
            s.name = js.at("name").get<std::string>();
            s.algorithm = js.at("algorithm").get<std::string>();
            s.positive = js.at("positive").get<std::string>();
            const auto labels = js.at("labels").get<std::vector<std::string>>();
            s.pooled = matrix_from(js.at("pooled"), labels);
            for (const auto& f : js.at("folds")) s.folds.push_back(matrix_from(f, labels));
            s.intruders = js.value("intruders", std::size_t{0});
            s.fold_intruders = js.value("fold_intruders", std::vector<std::size_t>{});
            r.sections.push_back(std::move(s));
        }
        return r;
    } catch (const json::exception& e) {
        throw ParseError(0, std::string("malformed report: ") + e.what());
    }
}

std::vector<EvalReport> reports_from_json(const json& j) {
    std::vector<EvalReport> out;
    if (j.is_array())
        for (const auto& r : j) out.push_back(report_from_json(r));
    else
        out.push_back(report_from_json(j));
    return out;
}

namespace {

std::string fmt3(std::optional<double> v) {
    if (!v) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", *v);
    std::string s = buf;
    if (s.rfind("0.", 0) == 0) s.erase(0, 1);
    return s;
}

std::string upper(std::string s) {
    for (char& c : s)
        if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
    return s;
}

std::string title_for(const std::string& strategy, const std::string& section) {
    if (strategy == "flat") return "Flat strategy: identification of ineffective learning-relevant questions";
    if (section == kSectionRelevance) return "Single-path level 1: identification of learning-relevant questions";
    if (section == kSectionEfficacyGold)
        return "Single-path level 2 (gold-relevant questions): identification of ineffective learning-relevant questions";
    if (section == kSectionEfficacyPredicted)
        return "Single-path level 2 (predicted-relevant questions): identification of ineffective learning-relevant "
               "questions";
    return "Single-path end to end: identification of ineffective learning-relevant questions";
}

std::size_t gold_count(const ConfusionMatrix& cm, std::string_view label) {
    auto i = cm.index_of(label);
    return i ? cm.row_sum(*i) : 0;
}

std::string footnote(const EvalReport& r, const ReportSection& s) {
    std::ostringstream out;
    const auto& cm = s.pooled;
    if (s.name == kSectionLeaf) {
        out << "Number of all questions: " << cm.total()
            << ", Number of learning-irrelevant questions: " << gold_count(cm, "irrelevant")
            << ", Number of effective learning-relevant questions: " << gold_count(cm, "effective")
            << ", Number of ineffective learning-relevant questions: " << gold_count(cm, "ineffective")
            << ". Majority baseline: " << fmt3(r.baseline_leaf) << '.';
    } else if (s.name == kSectionRelevance) {
        out << "Number of all questions: " << cm.total()
            << ", Number of learning-irrelevant questions: " << gold_count(cm, "irrelevant")
            << ", Number of learning-relevant questions: " << gold_count(cm, "relevant")
            << ". Majority baseline: " << fmt3(r.baseline_relevance) << '.';
    } else {
        out << "Gold-relevant questions scored: " << cm.total() << " (effective " << gold_count(cm, "effective")
            << ", ineffective " << gold_count(cm, "ineffective")
            << "). Majority baseline: " << fmt3(r.baseline_efficacy) << '.';
    }
    return out.str();
}

std::string render_text(std::span<const EvalReport> reports) {
    struct Row {
        const EvalReport* report;
        const ReportSection* section;
    };
    std::vector<std::string> order;
    std::map<std::string, std::vector<Row>> groups;
    for (const auto& r : reports)
        for (const auto* s : r.designated_sections()) {
            std::string key = r.strategy + "/" + s->name;
            if (!groups.count(key)) order.push_back(key);
            groups[key].push_back({&r, s});
        }

    std::ostringstream out;
    bool first = true;
    for (const auto& key : order) {
        auto rows = groups[key];
        std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
            auto fa = class_metrics(a.section->pooled, a.section->positive).f1;
            auto fb = class_metrics(b.section->pooled, b.section->positive).f1;
            if (fa.has_value() != fb.has_value()) return fa.has_value();
            if (fa && *fa != *fb) return *fa > *fb;
            return a.report->learner < b.report->learner;
        });
        const auto& head = rows.front();
        if (!first) out << '\n';
        first = false;
        out << title_for(head.report->strategy, head.section->name) << '\n';
        const bool flat = head.report->strategy == "flat";
        const bool leaf_of_path = !flat && head.section->name == kSectionLeaf;
        const char* acc_header = flat ? "Base-rate Accuracy" : "Accuracy";

        char line[256];
        std::snprintf(line, sizeof line, "%-12s %18s %8s %10s %10s\n", "Algorithm", acc_header, "Recall", "Precision",
                      "F-Measure");
        out << line;
        for (const auto& row : rows) {
            const auto m = class_metrics(row.section->pooled, row.section->positive);
            const std::string name = upper(leaf_of_path ? row.report->learner : row.section->algorithm);
            std::snprintf(line, sizeof line, "%-12s %18s %8s %10s %10s\n", name.c_str(),
                          fmt3(accuracy_or_null(row.section->pooled)).c_str(), fmt3(m.recall).c_str(),
                          fmt3(m.precision).c_str(), fmt3(m.f1).c_str());
            out << line;
        }
        out << footnote(*head.report, *head.section) << '\n';
        if (head.section->name == kSectionEfficacyPredicted)
            for (const auto& row : rows)
                out << upper(row.report->learner) << ": " << row.section->pooled.total() + row.section->intruders
                    << " questions routed to the efficacy level, including " << row.section->intruders
                    << " actually irrelevant.\n";
    }
    return out.str();
}

std::string render_csv(std::span<const EvalReport> reports) {
    std::ostringstream out;
    out << "strategy,learner,section,fold,gold,predicted,count\n";
    for (const auto& r : reports)
        for (const auto& s : r.sections) {
            auto emit = [&](const std::string& fold, const ConfusionMatrix& cm, std::size_t intruders) {
                for (std::size_t i = 0; i < cm.size(); ++i)
                    for (std::size_t j = 0; j < cm.size(); ++j)
                        out << r.strategy << ',' << r.learner << ',' << s.name << ',' << fold << ','
                            << cm.labels()[i] << ',' << cm.labels()[j] << ',' << cm(i, j) << '\n';
                if (s.name == kSectionEfficacyPredicted)
                    out << r.strategy << ',' << r.learner << ',' << s.name << ',' << fold << ",irrelevant,routed,"
                        << intruders << '\n';
            };
            emit("pooled", s.pooled, s.intruders);
            for (std::size_t f = 0; f < s.folds.size(); ++f)
                emit(std::to_string(f), s.folds[f], f < s.fold_intruders.size() ? s.fold_intruders[f] : 0);
        }
    return out.str();
}

}  // namespace

std::string render_reports(std::span<const EvalReport> reports, ReportFormat format) {
    switch (format) {
        case ReportFormat::TextTable: return render_text(reports);
        case ReportFormat::Csv: return render_csv(reports);
        case ReportFormat::Json: {
            json arr = json::array();
            for (const auto& r : reports) arr.push_back(report_to_json(r));
            return arr.dump(2) + "\n";
        }
    }
    return {};
}

std::string render_report(const EvalReport& r, ReportFormat format) {
    if (format == ReportFormat::Json) return report_to_json(r).dump(2) + "\n";
    return render_reports(std::span(&r, 1), format);
}

}  // namespace qtriage
