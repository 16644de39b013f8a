#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <unordered_map>

#include "physrl/trainer.hpp"

namespace physrl::trainer {

std::vector<StageConfig> builtin_schedule(ModelScale scale) {
    // windows are binary k: 48k = 49152, 64k = 65536, 80k = 81920
    std::vector<StageConfig> out;
    if (scale == ModelScale::Small) {
        out = {
            {1, 16, 49152, 1e-6, 2048, 512, 200},
            {2, 32, 49152, 1e-6, 2048, 512, 200},
            {3, 32, 65536, 1e-6, 2048, 512, 100},
        };
    } else {
        out = {
            {1, 16, 49152, 1e-6, 1024, 256, 200},
            {2, 32, 49152, 1e-6, 1024, 256, 200},
            {3, 32, 65536, 1e-6, 1024, 256, 100},
            {4, 32, 81920, 1e-6, 1024, 256, 100},
        };
    }
    check_schedule(out);
    return out;
}

std::vector<StageConfig> toy_schedule(ModelScale scale) {
    std::vector<StageConfig> out = builtin_schedule(scale);
    for (auto& s : out) {
        s.generation_window /= 4096;  // 12 / 16 / 20 tokens
        s.rollout_batch_size /= 32;
        s.update_batch_size /= 32;
        s.learning_rate = 40.0;  // sized for tabular logits; ratio across stages kept
    }
    check_schedule(out);
    return out;
}

void check_schedule(const std::vector<StageConfig>& schedule) {
    if (schedule.empty()) throw DomainError("schedule has no stages");
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        const auto& s = schedule[i];
        if (s.group_size < 2) throw DomainError("stage group_size must be >= 2");
        if (s.update_batch_size > s.rollout_batch_size)
            throw DomainError("update_batch_size must be <= rollout_batch_size");
        if (i > 0) {
            if (s.group_size < schedule[i - 1].group_size)
                throw DomainError("group size must not contract across stages");
            if (s.generation_window < schedule[i - 1].generation_window)
                throw DomainError("generation window must not contract across stages");
        }
    }
}

void write_telemetry_csv(const std::vector<TrainTelemetry>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write telemetry '" + path + "'");
    out << "step,stage,mean_response_length,mean_reward,validation_score,"
           "truncated_frac,mean_entropy\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.step,
                      r.stage_index, r.mean_response_length, r.mean_reward,
                      r.validation_score, r.truncated_frac, r.mean_entropy);
        out << buf;
    }
}

// ---------------------------------------------------------------------------
// Toy environment
// ---------------------------------------------------------------------------

std::string ToyVocab::decode(std::span<const int> tokens) {
    std::string out;
    for (int t : tokens) {
        if (t >= kBoxDigit0 && t < kBoxDigit0 + 10) {
            out += "\\boxed{";
            out += static_cast<char>('0' + (t - kBoxDigit0));
            out += "}";
        } else if (t == kBoxJunk) {
            out += "\\boxed{x}";
        } else if (t == kSpace) {
            out += " ";
        } else if (t == kVarX) {
            out += "x";
        } else if (t == kPlus) {
            out += "+";
        }
        // kEnd decodes to nothing
    }
    return out;
}

namespace {

ToyTask make_task(const std::string& id, int index, const std::vector<int>& digits) {
    ToyTask task;
    task.tier = static_cast<int>(digits.size());
    task.record.id = id;
    task.record.question = "Return the target values in order, one per \\boxed{}.";
    task.record.field = corpus::Field::Mechanics;
    task.record.source = "toy";
    task.prompt = {ToyVocab::kBoxDigit0 + (index / 10) % 10,
                   ToyVocab::kBoxDigit0 + index % 10, ToyVocab::kPlus};
    for (int d : digits) {
        task.prompt.push_back(ToyVocab::kBoxDigit0 + d);
        corpus::GoldAnswer a;
        a.value = std::string(1, static_cast<char>('0' + d));
        a.answer_type = corpus::AnswerType::Numeric;
        task.record.answers.push_back(std::move(a));
    }
    return task;
}

}  // namespace

std::vector<ToyTask> make_toy_tasks(int tier1, int tier2, int tier3, std::uint64_t seed) {
    std::vector<ToyTask> out;
    Rng rng(derive_seed(seed, fnv1a("toy-tasks")));
    char id[32];
    for (int i = 0; i < tier1; ++i) {
        std::snprintf(id, sizeof(id), "t1-%03d", i);
        out.push_back(make_task(id, i, {static_cast<int>(rng.next_u64() % 10)}));
    }
    for (int i = 0; i < tier2; ++i) {
        std::snprintf(id, sizeof(id), "t2-%03d", i);
        out.push_back(make_task(id, i,
                                {static_cast<int>(rng.next_u64() % 10),
                                 static_cast<int>(rng.next_u64() % 10)}));
    }
    for (int i = 0; i < tier3; ++i) {
        std::snprintf(id, sizeof(id), "t3-%03d", i);
        out.push_back(make_task(id, i,
                                {static_cast<int>(rng.next_u64() % 10),
                                 static_cast<int>(rng.next_u64() % 10),
                                 static_cast<int>(rng.next_u64() % 10)}));
    }
    return out;
}

gspo::TabularPolicy make_toy_base_policy() {
    auto policy = gspo::TabularPolicy::uniform(ToyVocab::size());
    auto& z = policy.init_logits;
    for (int d = 0; d < 10; ++d) z[ToyVocab::kBoxDigit0 + d] = 1.5;
    z[ToyVocab::kBoxJunk] = 1.5;
    z[ToyVocab::kSpace] = 0.0;
    z[ToyVocab::kVarX] = 0.0;
    z[ToyVocab::kPlus] = 0.0;
    z[ToyVocab::kEnd] = -0.5;
    return policy;
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

namespace {

std::vector<std::size_t> stage_permutation(std::size_t n, std::uint64_t seed, int stage) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    Rng rng(derive_seed(seed, fnv1a("stage-perm") ^ static_cast<std::uint64_t>(stage)));
    for (std::size_t i = n; i > 1; --i) {
        std::size_t j = rng.next_u64() % i;
        std::swap(perm[i - 1], perm[j]);
    }
    return perm;
}

std::uint64_t wave_seed(const TrainerConfig& tc, int stage, int global_step, int group) {
    std::uint64_t key = (static_cast<std::uint64_t>(stage) << 48) ^
                        (static_cast<std::uint64_t>(global_step) << 20) ^
                        static_cast<std::uint64_t>(group);
    return derive_seed(tc.seed ^ fnv1a("rollout"), key);
}

}  // namespace

double greedy_solve_rate(const gspo::TabularPolicy& policy,
                         const std::vector<ToyTask>& tasks, int window,
                         const reward::RuleScorer& scorer) {
    if (tasks.empty()) return 0.0;
    long solved = 0;
#pragma omp parallel for schedule(static) reduction(+ : solved)
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        auto tokens = gspo::greedy_decode(policy, tasks[i].prompt, window, ToyVocab::kEnd);
        std::string text = ToyVocab::decode(tokens);
        if (scorer.reward(text, tasks[i].record) >= 1.0) solved += 1;
    }
    return static_cast<double>(solved) / static_cast<double>(tasks.size());
}

double policy_mean_entropy(const gspo::TabularPolicy& policy,
                           const std::vector<ToyTask>& tasks, int window,
                           std::uint64_t seed, int samples_per_task) {
    if (tasks.empty()) return 0.0;
    std::vector<double> partial(tasks.size(), 0.0);
    std::vector<long> counts(tasks.size(), 0);
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        auto seqs = gspo::sample_sequences(policy, tasks[i].prompt, samples_per_task, window,
                                           derive_seed(seed, fnv1a(tasks[i].record.id)),
                                           ToyVocab::kEnd);
        for (const auto& s : seqs) {
            std::uint64_t ctx = gspo::TabularPolicy::context_key(s.prompt, {});
            for (int tok : s.tokens) {
                partial[i] += policy.row_entropy(ctx);
                counts[i] += 1;
                ctx = gspo::TabularPolicy::extend_key(ctx, tok);
            }
        }
    }
    double total = 0.0;
    long n = 0;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        total += partial[i];
        n += counts[i];
    }
    return n == 0 ? 0.0 : total / static_cast<double>(n);
}

namespace {

class ToyPolicySampler final : public corpus::Sampler {
  public:
    ToyPolicySampler(const gspo::TabularPolicy& policy, const std::vector<int>& prompt,
                     int window, std::uint64_t seed)
        : policy_(policy), prompt_(prompt), window_(window), seed_(seed) {}

    std::string sample(const corpus::ProblemRecord& record, std::uint64_t attempt) override {
        auto seqs = gspo::sample_sequences(policy_, prompt_, 1, window_,
                                           derive_seed(seed_ ^ fnv1a(record.id), attempt),
                                           ToyVocab::kEnd);
        return ToyVocab::decode(seqs[0].tokens);
    }

  private:
    const gspo::TabularPolicy& policy_;
    const std::vector<int>& prompt_;
    int window_;
    std::uint64_t seed_;
};

}  // namespace

std::vector<corpus::PassStats> estimate_task_pass_rates(const gspo::TabularPolicy& policy,
                                                        const std::vector<ToyTask>& tasks,
                                                        int window, std::uint64_t k,
                                                        std::uint64_t seed,
                                                        const reward::RuleScorer& scorer) {
    std::vector<corpus::PassStats> stats;
    stats.reserve(tasks.size());
    corpus::RewardFn fn = [&scorer](const std::string& gen,
                                    const corpus::ProblemRecord& rec) {
        return scorer.reward(gen, rec);
    };
    for (const auto& task : tasks) {
        ToyPolicySampler sampler(policy, task.prompt, window, seed);
        stats.push_back(corpus::estimate_pass_rate(task.record, sampler, k, fn));
    }
    return stats;
}

std::vector<TrainTelemetry> run_stage(gspo::TabularPolicy& policy,
                                      const std::vector<ToyTask>& tasks,
                                      const std::vector<ToyTask>& eval_tasks,
                                      const StageConfig& stage,
                                      const reward::RuleScorer& scorer,
                                      const TrainerConfig& tc, int step_offset) {
    std::vector<TrainTelemetry> telemetry;
    if (stage.steps <= 0 || tasks.empty()) return telemetry;

    auto perm = stage_permutation(tasks.size(), tc.seed, stage.stage_index);
    std::size_t cursor = 0;
    const int window = static_cast<int>(stage.generation_window);

    for (int step = 0; step < stage.steps; ++step) {
        const int global_step = step_offset + step;
        std::vector<gspo::RolloutGroup> groups(stage.rollout_batch_size);
        const std::size_t base = cursor;
        cursor += static_cast<std::size_t>(stage.rollout_batch_size);

#pragma omp parallel for schedule(static)
        for (int j = 0; j < stage.rollout_batch_size; ++j) {
            const ToyTask& task = tasks[perm[(base + j) % tasks.size()]];
            auto samples =
                gspo::sample_sequences(policy, task.prompt, stage.group_size, window,
                                       wave_seed(tc, stage.stage_index, global_step, j),
                                       ToyVocab::kEnd);
            for (auto& s : samples) {
                s.question_id = task.record.id;
                s.reward = scorer.reward(ToyVocab::decode(s.tokens), task.record);
            }
            groups[j].question_id = task.record.id;
            groups[j].samples = std::move(samples);
        }

        if (tc.rollout_shift != 0.0) gspo::apply_rollout_shift(groups, tc.rollout_shift);
        for (auto& g : groups) gspo::compute_advantages(g);

        // rollout-wave telemetry (pre-update policy)
        double len_sum = 0.0, reward_sum = 0.0, surprisal_sum = 0.0;
        long token_count = 0, truncated = 0, sample_count = 0;
        for (const auto& g : groups) {
            for (const auto& s : g.samples) {
                len_sum += static_cast<double>(s.tokens.size());
                reward_sum += s.reward;
                truncated += s.truncated ? 1 : 0;
                for (double lp : s.logp_old) surprisal_sum -= lp;
                token_count += static_cast<long>(s.tokens.size());
                ++sample_count;
            }
        }

        const int n_updates = std::max(1, stage.rollout_batch_size / stage.update_batch_size);
        for (int u = 0; u < n_updates; ++u) {
            const std::size_t lo = static_cast<std::size_t>(u) * stage.update_batch_size;
            const std::size_t hi =
                std::min(groups.size(), lo + static_cast<std::size_t>(stage.update_batch_size));
            if (lo >= hi) break;
            std::vector<gspo::RolloutGroup> batch(groups.begin() + lo, groups.begin() + hi);
            gspo::recompute_logp_train(policy, batch);
            gspo::GradientTable grad;
            try {
                grad = tc.gspo.tis_enabled ? gspo::policy_gradient_tis(policy, batch, tc.gspo)
                                           : gspo::policy_gradient(policy, batch, tc.gspo);
            } catch (const NonFiniteGradient& e) {
                std::string ids;
                for (const auto& g : batch) ids += g.question_id + " ";
                throw NonFiniteGradient("stage " + std::to_string(stage.stage_index) +
                                        " step " + std::to_string(global_step) +
                                        " (questions: " + ids + "): " + e.what());
            }
            gspo::apply_gradient(policy, grad, stage.learning_rate);
            if (!tc.dump_dir.empty()) {
                char name[64];
                std::snprintf(name, sizeof(name), "/step_%05d_u%d.json", global_step, u);
                gspo::dump_step_json(batch, grad, tc.dump_dir + name);
            }
        }

        TrainTelemetry row;
        row.step = global_step;
        row.stage_index = stage.stage_index;
        row.mean_response_length = len_sum / static_cast<double>(sample_count);
        row.mean_reward = reward_sum / static_cast<double>(sample_count);
        row.validation_score = greedy_solve_rate(policy, eval_tasks, window, scorer);
        row.truncated_frac = static_cast<double>(truncated) / static_cast<double>(sample_count);
        row.mean_entropy = surprisal_sum / static_cast<double>(token_count);
        telemetry.push_back(row);
    }
    return telemetry;
}

ScheduleResult run_schedule(gspo::TabularPolicy& policy, const std::vector<ToyTask>& tasks,
                            const std::vector<StageConfig>& schedule,
                            const reward::RuleScorer& scorer, const TrainerConfig& tc) {
    check_schedule(schedule);
    ScheduleResult result;
    int step_offset = 0;

    for (std::size_t si = 0; si < schedule.size(); ++si) {
        const StageConfig& stage = schedule[si];
        // adaptive learnability: re-estimate against the upcoming window
        const std::uint64_t k = si == 0 ? tc.initial_filter_k : tc.refilter_k;
        auto stats = estimate_task_pass_rates(
            policy, tasks, static_cast<int>(stage.generation_window), k,
            derive_seed(tc.seed, fnv1a("filter") ^ si), scorer);

        std::vector<corpus::ProblemRecord> records;
        records.reserve(tasks.size());
        for (const auto& t : tasks) records.push_back(t.record);
        auto kept = corpus::filter_by_pass_rate(records, stats, tc.filter_hi);
        std::unordered_map<std::string, const ToyTask*> by_id;
        for (const auto& t : tasks) by_id[t.record.id] = &t;
        std::vector<ToyTask> retained;
        retained.reserve(kept.size());
        for (const auto& r : kept) retained.push_back(*by_id.at(r.id));

        result.retained_per_stage.push_back(retained.size());
        auto tele = run_stage(policy, retained, tasks, stage, scorer, tc, step_offset);
        result.telemetry.insert(result.telemetry.end(), tele.begin(), tele.end());
        step_offset += stage.steps;
    }
    return result;
}

}  // namespace physrl::trainer
