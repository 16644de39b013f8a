#pragma once

#include <map>
#include <string>
#include <vector>

#include "physrl/corpus.hpp"
#include "physrl/symcheck.hpp"

namespace physrl::evalkit {

struct MedalThresholds {
    std::string exam_id;
    double gold = 0.0;
    double silver = 0.0;
    double bronze = 0.0;
    double full_mark_model = 0.0;
};

enum class Medal { None = 0, Bronze = 1, Silver = 2, Gold = 3 };
const char* medal_name(Medal m);

/// Boundaries are inclusive: a score equal to a threshold earns that medal.
Medal assign_medal(double score, const MedalThresholds& th);

/// Sum over problems of the per-problem mean across independent runs.
/// Throws RaggedRuns when problems carry different run counts.
double exam_score(const std::map<std::string, std::vector<double>>& per_run_scores);

struct MedalCounts {
    int gold = 0;
    int silver = 0;
    int bronze = 0;
};

/// Throws MissingThreshold for an exam without a threshold entry.
MedalCounts medal_table(const std::map<std::string, double>& per_exam_scores,
                        const std::vector<MedalThresholds>& thresholds);

struct ProblemScore {
    std::string problem_id;
    double answer_level = 0.0;
    double step_level = 0.0;
    double combined = 0.0;  // max of the two
};

ProblemScore combine_scores(const std::string& problem_id, double answer_level,
                            double step_level);

struct PseudoLabel {
    std::string question_id;
    std::string label;  // canonical rendering of the winning class
    int votes = 0;
    int total = 0;
    bool tie = false;
};

/// cons@k pseudo-labeling: each sample's first box is graded into equivalence
/// classes; the largest class wins, ties break to the lexicographically
/// smallest canonical rendering. Classes merge in sample order so the result
/// is permutation-checkable and deterministic.
/// Throws AllUnparseable when no sample yields a usable box, DomainError for
/// multiple-choice records (filter them first).
PseudoLabel majority_label(const std::vector<std::string>& samples,
                           const corpus::ProblemRecord& record,
                           const sym::EquivConfig& cfg);

/// Drop multiple-choice records: answer_type MultipleChoice, or a question
/// with at least two option lines matching  (^|\n)[ \t]*\(?[A-E]\)[ \t)] .
std::vector<corpus::ProblemRecord> filter_mcq(const std::vector<corpus::ProblemRecord>& records);
bool is_mcq_question(const std::string& question);

// --- file formats -----------------------------------------------------------

/// Threshold file: JSON object exam_id → {gold, silver, bronze, full_mark_model}.
std::vector<MedalThresholds> load_thresholds(const std::string& path);

/// Scores file: CSV with header exam,problem,run,answer_level,step_level.
struct ScoreRow {
    std::string exam;
    std::string problem;
    int run = 0;
    double answer_level = 0.0;
    double step_level = 0.0;
};
std::vector<ScoreRow> load_scores_csv(const std::string& path);

/// Aggregate rows → per-exam exam scores (combined = max(answer, step)).
std::map<std::string, double> exam_scores_from_rows(const std::vector<ScoreRow>& rows);

}  // namespace physrl::evalkit
