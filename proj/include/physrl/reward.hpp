#pragma once

#include <memory>
#include <string>
#include <vector>

#include "physrl/corpus.hpp"
#include "physrl/symcheck.hpp"

namespace physrl::reward {

/// Per-generation reward: one binary indicator per required sub-answer,
/// aggregate = mean of indicators.
struct RewardVector {
    std::vector<int> per_sub;    // length n_required, entries 0/1
    double aggregate = 0.0;
    std::size_t n_required = 0;
    std::size_t n_predicted = 0; // boxes found in the generation
};

struct JudgeVerdict {
    bool correct = false;
    std::string judge_id;
};

/// Model-based answer judge (validation only; the trainer cannot accept one).
class Judge {
  public:
    virtual ~Judge() = default;
    /// Throws JudgeUnavailable on transport failure/timeout.
    virtual JudgeVerdict judge(const std::string& question, const std::string& prediction,
                               const std::string& gold) = 0;
};

/// Rule-based scoring: boxes extracted and aligned positionally (box i vs
/// gold i), missing boxes score 0, surplus boxes are ignored.
/// Throws GoldCorruptError when a gold value does not parse.
RewardVector score_generation(const std::string& gen, const corpus::ProblemRecord& record,
                              const sym::EquivConfig& cfg);

struct JudgedRewardVector {
    RewardVector base;
    std::string judge_id;
    bool judge_unavailable = false;  // fell back to pure rule-based
};

/// Hybrid scoring for validation: r_i = rule OR judge. On JudgeUnavailable
/// the result falls back to the rule verdicts with the warning flag set.
JudgedRewardVector score_with_judge(const std::string& gen,
                                    const corpus::ProblemRecord& record, Judge& judge,
                                    const sym::EquivConfig& cfg);

/// The only scorer type the trainer accepts. Deliberately not constructible
/// from a Judge: model-based verdicts stay out of the training loop.
class RuleScorer {
  public:
    explicit RuleScorer(sym::EquivConfig cfg) : cfg_(cfg) {}
    RewardVector operator()(const std::string& gen,
                            const corpus::ProblemRecord& record) const {
        return score_generation(gen, record, cfg_);
    }
    double reward(const std::string& gen, const corpus::ProblemRecord& record) const {
        return (*this)(gen, record).aggregate;
    }
    const sym::EquivConfig& config() const { return cfg_; }

  private:
    sym::EquivConfig cfg_;
};

/// Judge speaking JSON over HTTP: POST {question, prediction, gold} →
/// {correct, judge_id}. Bearer token read from PHYSRL_JUDGE_TOKEN.
std::unique_ptr<Judge> make_http_judge(const std::string& base_url,
                                       int timeout_seconds = 30);

}  // namespace physrl::reward
