#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "physrl/gspo.hpp"

namespace physrl::gspo {

namespace {

// Per-sample contributions live in one preallocated arena (the allocator on
// small boxes serializes threads badly, so the hot loop performs no
// allocation at all). Rows sit in first-visit order per sample; token
// contributions accumulate in token order and partials merge in
// (group, sample) order, so the serial and parallel paths produce
// bit-identical tables.
struct SampleGrad {
    std::uint64_t* keys = nullptr;  // first-visit order
    double* rows = nullptr;         // count x vocab, row-major
    int count = 0;
    int vocab = 0;

    double* row_for(std::uint64_t ctx) {
        for (int i = 0; i < count; ++i)
            if (keys[i] == ctx) return rows + static_cast<std::size_t>(i) * vocab;
        keys[count] = ctx;
        double* row = rows + static_cast<std::size_t>(count) * vocab;
        for (int k = 0; k < vocab; ++k) row[k] = 0.0;
        ++count;
        return row;
    }
};

struct GradArena {
    std::vector<std::uint64_t> keys;
    std::vector<double> rows;
    std::size_t max_len = 0;
    int vocab = 0;

    GradArena(std::size_t samples, std::size_t len, int v) : max_len(len), vocab(v) {
        keys.resize(samples * len);
        rows.resize(samples * len * static_cast<std::size_t>(v));
    }

    SampleGrad slot(std::size_t i) {
        SampleGrad g;
        g.keys = keys.data() + i * max_len;
        g.rows = rows.data() + i * max_len * static_cast<std::size_t>(vocab);
        g.vocab = vocab;
        return g;
    }
};

struct SampleRef {
    std::size_t group;
    std::size_t index;
    double weight;  // batch-averaging factor for this sample
};

std::vector<SampleRef> flatten(const std::vector<RolloutGroup>& groups,
                               const GspoConfig& cfg) {
    std::size_t total_samples = 0;
    for (const auto& g : groups) total_samples += g.samples.size();
    std::vector<SampleRef> refs;
    refs.reserve(total_samples);
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const auto& g = groups[gi];
        double w = cfg.per_sample_mean
                       ? 1.0 / static_cast<double>(total_samples)
                       : 1.0 / (static_cast<double>(groups.size()) *
                                static_cast<double>(g.samples.size()));
        for (std::size_t si = 0; si < g.samples.size(); ++si)
            refs.push_back(SampleRef{gi, si, w});
    }
    return refs;
}

/// Gradient of min(s*A, clip(s)*A) through s: zero when the clip branch is
/// selected and binds; ties go to the unclipped branch.
bool clip_blocks_gradient(double ratio, double advantage, double eps) {
    return (advantage > 0.0 && ratio > 1.0 + eps) ||
           (advantage < 0.0 && ratio < 1.0 - eps);
}

void sample_contribution(const TabularPolicy& policy, const SequenceSample& sample,
                         double advantage, double weight, const GspoConfig& cfg,
                         bool use_tis, SampleGrad& grad, std::vector<double>& pi_scratch,
                         std::vector<double>& tis_scratch) {
    grad.count = 0;
    if (advantage == 0.0) return;  // zero-signal sample, exactly nothing

    double ratio = sequence_ratio(sample);
    if (clip_blocks_gradient(ratio, advantage, cfg.clip_eps)) return;

    const std::size_t len = sample.tokens.size();
    // d/dtheta [s * A] = A * s * (1/L) * sum_t dlogp_train[t]
    double coeff = weight * advantage * ratio / static_cast<double>(len);
    if (!std::isfinite(coeff))
        throw NonFiniteGradient("sample '" + sample.question_id +
                                "': non-finite gradient coefficient");

    if (use_tis) {
        tis_scratch.resize(len);
        for (std::size_t t = 0; t < len; ++t) {
            double d = sample.logp_train[t] - sample.logp_rollout[t];
            if (!std::isfinite(d))
                throw NonFiniteRatio("sample '" + sample.question_id +
                                     "': non-finite log-probability at token " +
                                     std::to_string(t));
            tis_scratch[t] = std::min(std::exp(d), cfg.tis_cap);
        }
    }

    std::uint64_t ctx = TabularPolicy::context_key(sample.prompt, {});
    const double inv_temp = 1.0 / policy.temperature;
    for (std::size_t t = 0; t < len; ++t) {
        double scale = coeff * (use_tis ? tis_scratch[t] : 1.0);
        policy.probs_into(ctx, pi_scratch);
        double* row = grad.row_for(ctx);
        int a = sample.tokens[t];
        for (int k = 0; k < policy.vocab_size; ++k) {
            double indicator = (k == a) ? 1.0 : 0.0;
            row[k] += scale * (indicator - pi_scratch[k]) * inv_temp;
        }
        ctx = TabularPolicy::extend_key(ctx, a);
    }
}

void check_finite(const GradientTable& g) {
    for (double v : g.values)
        if (!std::isfinite(v))
            throw NonFiniteGradient("gradient table contains a non-finite entry");
}

std::size_t longest_sample(const std::vector<RolloutGroup>& groups) {
    std::size_t len = 1;
    for (const auto& g : groups)
        for (const auto& s : g.samples) len = std::max(len, s.tokens.size());
    return len;
}

/// Reduce per-sample partials into one flat table. Entries are resolved to
/// slots in the sorted unique-key list, then accumulated strictly in sample
/// order per key; threads partition the key space, never the sample order,
/// so the result is bit-identical at any thread count.
GradientTable merge_parts(const GradArena& arena, const std::vector<int>& counts,
                          int vocab, bool parallel) {
    GradientTable total;
    total.vocab = vocab;

    std::size_t total_entries = 0;
    for (int c : counts) total_entries += static_cast<std::size_t>(c);
    if (total_entries == 0) return total;

    std::vector<std::uint64_t> all_keys;
    all_keys.reserve(total_entries);
    for (std::size_t p = 0; p < counts.size(); ++p) {
        const std::uint64_t* keys = arena.keys.data() + p * arena.max_len;
        all_keys.insert(all_keys.end(), keys, keys + counts[p]);
    }
    total.keys = all_keys;
    std::sort(total.keys.begin(), total.keys.end());
    total.keys.erase(std::unique(total.keys.begin(), total.keys.end()), total.keys.end());
    total.values.assign(total.keys.size() * static_cast<std::size_t>(vocab), 0.0);

    // slot index of every entry, in gather order
    std::vector<std::size_t> slot(total_entries);
#pragma omp parallel for schedule(static) if (parallel)
    for (std::size_t e = 0; e < total_entries; ++e)
        slot[e] = static_cast<std::size_t>(
            std::lower_bound(total.keys.begin(), total.keys.end(), all_keys[e]) -
            total.keys.begin());

#pragma omp parallel if (parallel)
    {
        std::size_t lo = 0, hi = total.keys.size();
#ifdef _OPENMP
        if (parallel) {
            std::size_t nt = static_cast<std::size_t>(omp_get_num_threads());
            std::size_t tid = static_cast<std::size_t>(omp_get_thread_num());
            std::size_t chunk = (total.keys.size() + nt - 1) / nt;
            lo = std::min(tid * chunk, total.keys.size());
            hi = std::min(lo + chunk, total.keys.size());
        }
#endif
        std::size_t e = 0;
        for (std::size_t p = 0; p < counts.size(); ++p) {  // sample order
            const double* rows = arena.rows.data() + p * arena.max_len * vocab;
            for (int i = 0; i < counts[p]; ++i, ++e) {
                std::size_t s = slot[e];
                if (s < lo || s >= hi) continue;
                double* dst = total.values.data() + s * vocab;
                const double* src = rows + static_cast<std::size_t>(i) * vocab;
                for (int k = 0; k < vocab; ++k) dst[k] += src[k];
            }
        }
    }
    return total;
}

GradientTable gradient_impl(const TabularPolicy& policy,
                            const std::vector<RolloutGroup>& groups, const GspoConfig& cfg,
                            bool use_tis, bool parallel) {
    auto refs = flatten(groups, cfg);
    GradArena arena(refs.size(), longest_sample(groups), policy.vocab_size);
    std::vector<int> counts(refs.size(), 0);
    std::exception_ptr fail;

    if (parallel) {
#pragma omp parallel
        {
            std::vector<double> pi_scratch, tis_scratch;
#pragma omp for schedule(static)
            for (std::size_t i = 0; i < refs.size(); ++i) {
                try {
                    const auto& ref = refs[i];
                    const auto& g = groups[ref.group];
                    SampleGrad part = arena.slot(i);
                    sample_contribution(policy, g.samples[ref.index],
                                        g.advantages.at(ref.index), ref.weight, cfg,
                                        use_tis, part, pi_scratch, tis_scratch);
                    counts[i] = part.count;
                } catch (...) {
#pragma omp critical
                    if (!fail) fail = std::current_exception();
                }
            }
        }
        if (fail) std::rethrow_exception(fail);
    } else {
        std::vector<double> pi_scratch, tis_scratch;
        for (std::size_t i = 0; i < refs.size(); ++i) {
            const auto& ref = refs[i];
            const auto& g = groups[ref.group];
            SampleGrad part = arena.slot(i);
            sample_contribution(policy, g.samples[ref.index], g.advantages.at(ref.index),
                                ref.weight, cfg, use_tis, part, pi_scratch, tis_scratch);
            counts[i] = part.count;
        }
    }

    GradientTable total = merge_parts(arena, counts, policy.vocab_size, parallel);
    check_finite(total);
    return total;
}

}  // namespace

GradientTable policy_gradient_serial(const TabularPolicy& policy,
                                     const std::vector<RolloutGroup>& groups,
                                     const GspoConfig& cfg) {
    return gradient_impl(policy, groups, cfg, false, false);
}

GradientTable policy_gradient_tis_serial(const TabularPolicy& policy,
                                         const std::vector<RolloutGroup>& groups,
                                         const GspoConfig& cfg) {
    return gradient_impl(policy, groups, cfg, true, false);
}

GradientTable policy_gradient(const TabularPolicy& policy,
                              const std::vector<RolloutGroup>& groups,
                              const GspoConfig& cfg) {
    return gradient_impl(policy, groups, cfg, false, true);
}

GradientTable policy_gradient_tis(const TabularPolicy& policy,
                                  const std::vector<RolloutGroup>& groups,
                                  const GspoConfig& cfg) {
    return gradient_impl(policy, groups, cfg, true, true);
}

}  // namespace physrl::gspo
