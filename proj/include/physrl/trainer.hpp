#pragma once

#include <span>
#include <string>
#include <vector>

#include "physrl/corpus.hpp"
#include "physrl/gspo.hpp"
#include "physrl/reward.hpp"
#include "physrl/symcheck.hpp"

namespace physrl::trainer {

/// One stage of the multi-stage RL schedule.
struct StageConfig {
    int stage_index = 1;
    int group_size = 16;
    long generation_window = 49152;
    double learning_rate = 1e-6;
    int rollout_batch_size = 2048;
    int update_batch_size = 512;
    int steps = 200;
};

enum class ModelScale { Small, Large };

/// Production-scale schedules: small = 3 stages (G 16/32/32, window
/// 48k/48k/64k), large = 4 stages adding (32, 80k); learning rate 1e-6,
/// rollout/update batch 2048/512 and 1024/256.
std::vector<StageConfig> builtin_schedule(ModelScale scale);

/// The same schedule scaled to desk size: windows divided by 4096
/// (12/16/20 tokens), batches by 32, and a learning rate sized for the
/// tabular policy. Stage count, group sizes, and all ratios are preserved.
std::vector<StageConfig> toy_schedule(ModelScale scale);

/// Enforce expansion-only stage transitions and batch-size sanity.
void check_schedule(const std::vector<StageConfig>& schedule);

struct TrainTelemetry {
    int step = 0;  // global, monotone across stages
    int stage_index = 1;
    double mean_response_length = 0.0;
    double mean_reward = 0.0;
    double validation_score = 0.0;  // greedy solve rate on the eval set
    double truncated_frac = 0.0;
    double mean_entropy = 0.0;  // mean sampled-token surprisal (nats)
};

void write_telemetry_csv(const std::vector<TrainTelemetry>& rows, const std::string& path);

// ---------------------------------------------------------------------------
// Toy environment: emit the prompted digits, one per \boxed{}.
// ---------------------------------------------------------------------------

struct ToyVocab {
    // 0..9 decode to "\boxed{<digit>}"; the junk tokens exercise the
    // unparseable-box and trailing-text paths of the scorer.
    static constexpr int kBoxDigit0 = 0;   // ..kBoxDigit0+9
    static constexpr int kBoxJunk = 10;    // "\boxed{x}"
    static constexpr int kSpace = 11;
    static constexpr int kVarX = 12;
    static constexpr int kPlus = 13;
    static constexpr int kEnd = 14;
    static constexpr int size() { return 15; }

    static std::string decode(std::span<const int> tokens);
};

/// A task is a ProblemRecord plus its prompt encoding; tier = number of
/// required boxes. Every task is solvable within the smallest generation
/// window (3 tokens per box).
struct ToyTask {
    corpus::ProblemRecord record;
    std::vector<int> prompt;
    int tier = 1;
};

std::vector<ToyTask> make_toy_tasks(int tier1, int tier2, int tier3, std::uint64_t seed);

/// Fresh policy with a structural prior standing in for base-model
/// competence: box syntax likely, digits undifferentiated, end token rare.
gspo::TabularPolicy make_toy_base_policy();

struct TrainerConfig {
    gspo::GspoConfig gspo;
    sym::EquivConfig equiv;
    std::uint64_t seed = 0;
    std::uint64_t initial_filter_k = 88;  // preliminary pass@k
    std::uint64_t refilter_k = 16;        // between-stage pass@k
    double filter_hi = 0.7;
    double rollout_shift = 0.0;  // mismatch injection: logp_rollout = logp_old + shift
    std::string dump_dir;        // when set, per-update JSON dumps land here
};

/// One stage: per step, sample rollout_batch groups of group_size inside the
/// generation window, score with the rule-based scorer only, then apply
/// rollout/update sequential gradient updates. Telemetry is appended every
/// step. Aborts wrap NonFiniteGradient with step context.
std::vector<TrainTelemetry> run_stage(gspo::TabularPolicy& policy,
                                      const std::vector<ToyTask>& tasks,
                                      const std::vector<ToyTask>& eval_tasks,
                                      const StageConfig& stage,
                                      const reward::RuleScorer& scorer,
                                      const TrainerConfig& tc, int step_offset = 0);

struct ScheduleResult {
    std::vector<TrainTelemetry> telemetry;
    std::vector<std::size_t> retained_per_stage;
};

/// Chain stages, carrying the policy; pass rates are re-estimated against
/// the upcoming stage's window before each stage and the task set re-filtered
/// to 0 < pass <= hi.
ScheduleResult run_schedule(gspo::TabularPolicy& policy, const std::vector<ToyTask>& tasks,
                            const std::vector<StageConfig>& schedule,
                            const reward::RuleScorer& scorer, const TrainerConfig& tc);

/// Fraction of tasks whose greedy decode earns full reward.
double greedy_solve_rate(const gspo::TabularPolicy& policy,
                         const std::vector<ToyTask>& tasks, int window,
                         const reward::RuleScorer& scorer);

/// Mean policy entropy (nats) over contexts visited by seeded sampling.
double policy_mean_entropy(const gspo::TabularPolicy& policy,
                           const std::vector<ToyTask>& tasks, int window,
                           std::uint64_t seed, int samples_per_task = 4);

/// Estimate pass rates for every task under the current policy.
std::vector<corpus::PassStats> estimate_task_pass_rates(const gspo::TabularPolicy& policy,
                                                        const std::vector<ToyTask>& tasks,
                                                        int window, std::uint64_t k,
                                                        std::uint64_t seed,
                                                        const reward::RuleScorer& scorer);

}  // namespace physrl::trainer
