#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "physrl/common.hpp"

namespace physrl::corpus {

enum class Field { Mechanics, Electromagnetism, Thermodynamics, Optics, ModernPhysics };

enum class AnswerType { Expression, Numeric, Interval, Tuple, Boolean, MultipleChoice };

const char* field_name(Field f);
const char* answer_type_name(AnswerType t);
std::optional<Field> field_from_name(const std::string& s);
std::optional<AnswerType> answer_type_from_name(const std::string& s);

/// One required sub-answer. `value` is the bare expression text; the unit
/// lives outside it (boxes carry no units).
struct GoldAnswer {
    std::string value;
    AnswerType answer_type = AnswerType::Expression;
    std::string unit;
    std::optional<double> tolerance;  // relative; absent → verifier default
};

/// One Question–Solution–Answer item. `answers.size()` is the N used by the
/// reward aggregation.
struct ProblemRecord {
    std::string id;
    std::string question;
    std::string solution;  // optional expert trace; empty when absent
    std::vector<GoldAnswer> answers;
    Field field = Field::Mechanics;
    std::string source;
};

struct PassStats {
    std::string question_id;
    std::uint64_t attempts = 0;
    std::uint64_t passes = 0;

    double pass_rate() const {
        return static_cast<double>(passes) / static_cast<double>(attempts);
    }
};

/// Validate a single record against the schema invariants. Throws SchemaError.
void validate_record(const ProblemRecord& rec);

/// Load a JSON-lines dataset. One record per line; order preserved.
/// Throws ParseError (malformed JSON, with line number), SchemaError,
/// DuplicateId.
std::vector<ProblemRecord> load_dataset(const std::string& path);
std::vector<ProblemRecord> parse_dataset(const std::string& text);

std::string serialize_record(const ProblemRecord& rec);
void save_dataset(const std::vector<ProblemRecord>& records, const std::string& path);

/// Load pass statistics from JSONL ({question_id, attempts, passes} per line).
std::vector<PassStats> load_stats(const std::string& path);
void save_stats(const std::vector<PassStats>& stats, const std::string& path);

/// Keep exactly the records with 0 < pass_rate <= hi, in input order.
/// Throws MissingStats when a record has no stats entry.
std::vector<ProblemRecord> filter_by_pass_rate(const std::vector<ProblemRecord>& records,
                                               const std::vector<PassStats>& stats,
                                               double hi = 0.7);

/// Deterministic response sampler: (record, attempt index) → generation text.
/// Implementations derive their randomness from an owned seed so attempt i is
/// reproducible and order-independent.
class Sampler {
  public:
    virtual ~Sampler() = default;
    virtual std::string sample(const ProblemRecord& record, std::uint64_t attempt) = 0;
};

using RewardFn = std::function<double(const std::string& gen, const ProblemRecord& rec)>;

/// pass@k estimate: k attempts, a pass is full credit (aggregate reward 1).
/// Fans attempts across the worker pool; the pass count is an
/// order-independent integer sum.
PassStats estimate_pass_rate(const ProblemRecord& record, Sampler& sampler,
                             std::uint64_t k, const RewardFn& reward_fn);

}  // namespace physrl::corpus
