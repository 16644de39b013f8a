#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "physrl/common.hpp"

namespace physrl::gspo {

/// One sampled response. Log-probabilities are per token under three views
/// of the policy: the snapshot that sampled it (old), the inference engine
/// that produced it (rollout), and the current training weights (train,
/// recomputed before every gradient step).
struct SequenceSample {
    std::string question_id;
    std::vector<int> prompt;
    std::vector<int> tokens;
    std::vector<double> logp_rollout;
    std::vector<double> logp_train;
    std::vector<double> logp_old;
    double reward = 0.0;
    bool truncated = false;  // hit the generation window before the end token
};

struct RolloutGroup {
    std::string question_id;
    std::vector<SequenceSample> samples;
    std::vector<double> advantages;
};

struct GspoConfig {
    double clip_eps = 3e-4;
    double tis_cap = 2.0;
    bool tis_enabled = true;
    double learning_rate = 1e-6;
    /// Averaging granularity of the surrogate: per-group then per-batch
    /// (default) or flat per-sample.
    bool per_sample_mean = false;
};

/// Log-linear policy over token histories. A context is the hash of
/// (prompt ++ generated prefix); unseen contexts score with `init_logits`,
/// which doubles as the desk-scale stand-in for base-model priors.
struct TabularPolicy {
    int vocab_size = 0;
    double temperature = 1.0;
    std::vector<double> init_logits;                       // length vocab_size
    std::unordered_map<std::uint64_t, std::vector<double>> rows;

    static TabularPolicy uniform(int vocab);

    static std::uint64_t context_key(std::span<const int> prompt,
                                     std::span<const int> prefix);
    static std::uint64_t extend_key(std::uint64_t key, int token);

    const std::vector<double>& logits_at(std::uint64_t ctx) const;
    std::vector<double>& logits_mut(std::uint64_t ctx);

    /// Numerically stable log softmax of logits/temperature.
    std::vector<double> log_probs(std::uint64_t ctx) const;
    std::vector<double> probs(std::uint64_t ctx) const;
    /// Allocation-free variants for hot loops.
    void log_probs_into(std::uint64_t ctx, std::vector<double>& out) const;
    void probs_into(std::uint64_t ctx, std::vector<double>& out) const;
    double row_entropy(std::uint64_t ctx) const;  // nats
};

/// Sparse gradient w.r.t. the logits table: ascending context keys over a
/// flat row matrix. Kept flat so accumulation is allocation-free and
/// deterministic under any thread count.
struct GradientTable {
    int vocab = 0;
    std::vector<std::uint64_t> keys;  // ascending
    std::vector<double> values;       // keys.size() x vocab, row-major

    std::size_t size() const { return keys.size(); }
    const double* row(std::size_t i) const {
        return values.data() + i * static_cast<std::size_t>(vocab);
    }
    /// Binary search; nullptr when the context carries no gradient.
    const double* find_row(std::uint64_t ctx) const;

    friend bool operator==(const GradientTable& a, const GradientTable& b) {
        return a.vocab == b.vocab && a.keys == b.keys && a.values == b.values;
    }
};

double grad_norm(const GradientTable& g);
void apply_gradient(TabularPolicy& policy, const GradientTable& g, double learning_rate);

/// Length-normalized sequence likelihood ratio
///   exp( mean_t (logp_train[t] - logp_old[t]) ).
/// Throws NonFiniteRatio on NaN/inf inputs.
double sequence_ratio(const SequenceSample& sample);

/// Mean-centered rewards. Uniform rewards give exact (bitwise) zeros.
/// Throws GroupTooSmall for fewer than two rewards.
std::vector<double> group_advantages(const std::vector<double>& rewards);

/// Populate `advantages` from the samples' rewards.
void compute_advantages(RolloutGroup& group);

/// Clipped sequence-level surrogate: mean over groups of
///   (1/G) sum_i min(s_i A_i, clip(s_i, 1-eps, 1+eps) A_i).
double gspo_objective(const std::vector<RolloutGroup>& groups, const GspoConfig& cfg);

/// Per-token truncated importance weights min(exp(train - rollout), cap).
std::vector<double> tis_weights(const SequenceSample& sample, double cap);

/// Analytic gradient of the surrogate w.r.t. the logits, flowing through
/// logp_train only; samples where the clip binds contribute nothing.
/// `*_tis` scales each token's score term by its truncated importance weight
/// (identical reduction order, so train == rollout reproduces the plain
/// gradient bit for bit). The parallel entry points fan per-sample
/// contributions across the worker pool and merge them in a fixed order, so
/// all four agree bitwise.
GradientTable policy_gradient(const TabularPolicy& policy,
                              const std::vector<RolloutGroup>& groups,
                              const GspoConfig& cfg);
GradientTable policy_gradient_tis(const TabularPolicy& policy,
                                  const std::vector<RolloutGroup>& groups,
                                  const GspoConfig& cfg);
GradientTable policy_gradient_serial(const TabularPolicy& policy,
                                     const std::vector<RolloutGroup>& groups,
                                     const GspoConfig& cfg);
GradientTable policy_gradient_tis_serial(const TabularPolicy& policy,
                                         const std::vector<RolloutGroup>& groups,
                                         const GspoConfig& cfg);

/// Autoregressive categorical sampling; logp_old and logp_rollout recorded
/// at sample time. Generation stops at `end_token` (included) or at max_len
/// with the truncated flag set. Per-sample seeds derive from (seed, index).
std::vector<SequenceSample> sample_sequences(const TabularPolicy& policy,
                                             const std::vector<int>& prompt, int group_size,
                                             int max_len, std::uint64_t seed, int end_token);

std::vector<int> greedy_decode(const TabularPolicy& policy, const std::vector<int>& prompt,
                               int max_len, int end_token);

/// Refresh logp_train by replaying contexts under `policy`.
void recompute_logp_train(const TabularPolicy& policy, SequenceSample& sample);
void recompute_logp_train(const TabularPolicy& policy, std::vector<RolloutGroup>& groups);

/// Train/inference mismatch injection hook: logp_rollout = logp_old + delta.
void apply_rollout_shift(SequenceSample& sample, double delta);
void apply_rollout_shift(std::vector<RolloutGroup>& groups, double delta);

/// Versioned binary checkpoint with an embedded schema hash; logits
/// round-trip bit-identically.
void save_policy(const TabularPolicy& policy, const std::string& path);
TabularPolicy load_policy(const std::string& path);

/// Debug dump of groups plus gradient summary (the train --dump-step sink).
void dump_step_json(const std::vector<RolloutGroup>& groups, const GradientTable& grad,
                    const std::string& path);

}  // namespace physrl::gspo
