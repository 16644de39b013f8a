#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "physrl/boxparse.hpp"
#include "physrl/evalkit.hpp"

namespace physrl::evalkit {

const char* medal_name(Medal m) {
    switch (m) {
        case Medal::Gold: return "Gold";
        case Medal::Silver: return "Silver";
        case Medal::Bronze: return "Bronze";
        case Medal::None: return "None";
    }
    return "?";
}

Medal assign_medal(double score, const MedalThresholds& th) {
    if (!(th.gold > th.silver && th.silver > th.bronze && th.bronze > 0))
        throw DomainError("thresholds for '" + th.exam_id + "' are not ordered");
    if (score >= th.gold) return Medal::Gold;
    if (score >= th.silver) return Medal::Silver;
    if (score >= th.bronze) return Medal::Bronze;
    return Medal::None;
}

double exam_score(const std::map<std::string, std::vector<double>>& per_run_scores) {
    std::size_t runs = 0;
    bool first = true;
    double total = 0.0;
    for (const auto& [problem, scores] : per_run_scores) {
        if (first) {
            runs = scores.size();
            first = false;
        } else if (scores.size() != runs) {
            throw RaggedRuns("problem '" + problem + "' has " +
                             std::to_string(scores.size()) + " runs, expected " +
                             std::to_string(runs));
        }
        if (scores.empty()) throw RaggedRuns("problem '" + problem + "' has no runs");
        double mean = 0.0;
        for (double s : scores) mean += s;
        total += mean / static_cast<double>(scores.size());
    }
    return total;
}

MedalCounts medal_table(const std::map<std::string, double>& per_exam_scores,
                        const std::vector<MedalThresholds>& thresholds) {
    MedalCounts counts;
    for (const auto& [exam, score] : per_exam_scores) {
        auto it = std::find_if(thresholds.begin(), thresholds.end(),
                               [&](const MedalThresholds& t) { return t.exam_id == exam; });
        if (it == thresholds.end())
            throw MissingThreshold("no thresholds for exam '" + exam + "'");
        switch (assign_medal(score, *it)) {
            case Medal::Gold: counts.gold += 1; break;
            case Medal::Silver: counts.silver += 1; break;
            case Medal::Bronze: counts.bronze += 1; break;
            case Medal::None: break;
        }
    }
    return counts;
}

ProblemScore combine_scores(const std::string& problem_id, double answer_level,
                            double step_level) {
    if (answer_level < 0 || step_level < 0)
        throw DomainError("scores must be nonnegative");
    return ProblemScore{problem_id, answer_level, step_level,
                        std::max(answer_level, step_level)};
}

PseudoLabel majority_label(const std::vector<std::string>& samples,
                           const corpus::ProblemRecord& record,
                           const sym::EquivConfig& cfg) {
    if (samples.empty()) throw AllUnparseable("no samples given");
    for (const auto& a : record.answers)
        if (a.answer_type == corpus::AnswerType::MultipleChoice)
            throw DomainError("record '" + record.id +
                              "' is multiple-choice; filter before labeling");

    struct Cluster {
        std::string representative;  // raw first-box text
        std::string canonical;       // deterministic rendering
        int votes = 0;
    };
    std::vector<Cluster> clusters;

    for (const auto& sample : samples) {
        auto boxes = boxparse::extract_boxes(sample).boxes;
        if (boxes.empty()) continue;
        std::string raw = boxparse::strip_assignment(boxes.front());
        sym::ExprPtr parsed;
        try {
            parsed = sym::parse_expr(raw);
        } catch (const ExprSyntaxError&) {
            continue;
        }
        std::string canonical;
        try {
            canonical = sym::render(sym::canonicalize(parsed, cfg.max_canonical_nodes));
        } catch (const CanonicalBlowup&) {
            canonical = sym::render(parsed);
        }

        corpus::GoldAnswer as_gold;
        as_gold.answer_type = corpus::AnswerType::Expression;
        bool merged = false;
        for (auto& c : clusters) {
            as_gold.value = c.representative;
            if (sym::equivalent(raw, as_gold, cfg)) {
                c.votes += 1;
                merged = true;
                break;
            }
        }
        if (!merged) clusters.push_back(Cluster{raw, canonical, 1});
    }

    if (clusters.empty())
        throw AllUnparseable("record '" + record.id + "': no sample yields a usable box");

    int best_votes = 0;
    for (const auto& c : clusters) best_votes = std::max(best_votes, c.votes);
    std::vector<const Cluster*> winners;
    for (const auto& c : clusters)
        if (c.votes == best_votes) winners.push_back(&c);
    const Cluster* pick = *std::min_element(
        winners.begin(), winners.end(),
        [](const Cluster* a, const Cluster* b) { return a->canonical < b->canonical; });

    PseudoLabel label;
    label.question_id = record.id;
    label.label = pick->canonical;
    label.votes = best_votes;
    label.total = static_cast<int>(samples.size());
    label.tie = winners.size() > 1;
    return label;
}

bool is_mcq_question(const std::string& question) {
    // two or more lines shaped like option markers: A) ... / (B) ...
    int option_lines = 0;
    std::istringstream in(question);
    std::string line;
    while (std::getline(in, line)) {
        std::size_t i = line.find_first_not_of(" \t");
        if (i == std::string::npos) continue;
        std::size_t j = i;
        if (line[j] == '(') ++j;
        if (j < line.size() && line[j] >= 'A' && line[j] <= 'E') {
            ++j;
            if (j < line.size() && line[j] == ')') {
                ++j;
                if (j >= line.size() || line[j] == ' ' || line[j] == '\t') ++option_lines;
            }
        }
    }
    return option_lines >= 2;
}

std::vector<corpus::ProblemRecord> filter_mcq(const std::vector<corpus::ProblemRecord>& records) {
    std::vector<corpus::ProblemRecord> out;
    for (const auto& r : records) {
        bool mcq = is_mcq_question(r.question);
        for (const auto& a : r.answers)
            if (a.answer_type == corpus::AnswerType::MultipleChoice) mcq = true;
        if (!mcq) out.push_back(r);
    }
    return out;
}

std::vector<MedalThresholds> load_thresholds(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(0, "cannot open thresholds '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(0, std::string("thresholds JSON: ") + e.what());
    }
    std::vector<MedalThresholds> out;
    for (auto it = j.begin(); it != j.end(); ++it) {
        MedalThresholds t;
        t.exam_id = it.key();
        t.gold = it.value().at("gold").get<double>();
        t.silver = it.value().at("silver").get<double>();
        t.bronze = it.value().at("bronze").get<double>();
        t.full_mark_model = it.value().value("full_mark_model", 0.0);
        if (!(t.gold > t.silver && t.silver > t.bronze && t.bronze > 0))
            throw SchemaError("thresholds for '" + t.exam_id + "' are not ordered");
        if (t.full_mark_model > 0 && t.gold > t.full_mark_model)
            throw SchemaError("thresholds for '" + t.exam_id + "' exceed the full mark");
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<ScoreRow> load_scores_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(0, "cannot open scores '" + path + "'");
    std::vector<ScoreRow> out;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (!header_seen) {
            header_seen = true;
            if (line.rfind("exam,", 0) == 0) continue;  // header row
        }
        std::istringstream row(line);
        std::string field;
        ScoreRow r;
        try {
            if (!std::getline(row, r.exam, ',')) throw std::runtime_error("missing exam");
            if (!std::getline(row, r.problem, ',')) throw std::runtime_error("missing problem");
            if (!std::getline(row, field, ',')) throw std::runtime_error("missing run");
            r.run = std::stoi(field);
            if (!std::getline(row, field, ',')) throw std::runtime_error("missing answer_level");
            r.answer_level = std::stod(field);
            if (!std::getline(row, field, ',')) throw std::runtime_error("missing step_level");
            r.step_level = std::stod(field);
        } catch (const std::exception& e) {
            throw ParseError(line_no, e.what());
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::map<std::string, double> exam_scores_from_rows(const std::vector<ScoreRow>& rows) {
    // exam → problem → per-run combined scores
    std::map<std::string, std::map<std::string, std::vector<double>>> grouped;
    for (const auto& r : rows)
        grouped[r.exam][r.problem].push_back(
            combine_scores(r.problem, r.answer_level, r.step_level).combined);
    std::map<std::string, double> out;
    for (const auto& [exam, problems] : grouped) out[exam] = exam_score(problems);
    return out;
}

}  // namespace physrl::evalkit
