// Times the parallel kernels against their serial references on synthetic
// workloads: gradient accumulation, batch scoring, pass-rate estimation.

#include <chrono>
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "physrl/corpus.hpp"
#include "physrl/gspo.hpp"
#include "physrl/reward.hpp"
#include "physrl/trainer.hpp"

using namespace physrl;
namespace chrono = std::chrono;

namespace {

double ms_since(chrono::steady_clock::time_point t0) {
    return chrono::duration<double, std::milli>(chrono::steady_clock::now() - t0).count();
}

std::vector<gspo::RolloutGroup> make_workload(const gspo::TabularPolicy& policy,
                                              const std::vector<trainer::ToyTask>& tasks,
                                              int groups_n, int group_size, int window,
                                              std::uint64_t seed,
                                              const reward::RuleScorer& scorer) {
    std::vector<gspo::RolloutGroup> groups(groups_n);
    for (int j = 0; j < groups_n; ++j) {
        const auto& task = tasks[j % tasks.size()];
        auto samples = gspo::sample_sequences(policy, task.prompt, group_size, window,
                                              derive_seed(seed, j), trainer::ToyVocab::kEnd);
        for (auto& s : samples) {
            s.question_id = task.record.id;
            s.reward = scorer.reward(trainer::ToyVocab::decode(s.tokens), task.record);
        }
        groups[j].question_id = task.record.id;
        groups[j].samples = std::move(samples);
        gspo::compute_advantages(groups[j]);
    }
    return groups;
}

}  // namespace

int main(int argc, char** argv) {
    int groups_n = argc > 1 ? std::atoi(argv[1]) : 256;
    int group_size = argc > 2 ? std::atoi(argv[2]) : 32;
    const int window = 16;

#ifdef _OPENMP
    std::printf("openmp: %d threads\n", omp_get_max_threads());
#else
    std::printf("openmp: disabled at build time\n");
#endif
    std::printf("workload: %d groups x %d samples, window %d\n\n", groups_n, group_size,
                window);

    auto tasks = trainer::make_toy_tasks(40, 20, 10, 7);
    auto policy = trainer::make_toy_base_policy();
    sym::EquivConfig equiv;
    reward::RuleScorer scorer(equiv);

    auto t0 = chrono::steady_clock::now();
    auto groups = make_workload(policy, tasks, groups_n, group_size, window, 99, scorer);
    std::printf("%-28s %10.2f ms\n", "rollout+score (parallel)", ms_since(t0));

    gspo::recompute_logp_train(policy, groups);
    gspo::GspoConfig cfg;
    cfg.clip_eps = 0.2;

    t0 = chrono::steady_clock::now();
    auto g_serial = gspo::policy_gradient_tis_serial(policy, groups, cfg);
    double serial_ms = ms_since(t0);
    std::printf("%-28s %10.2f ms\n", "gradient (serial ref)", serial_ms);

    t0 = chrono::steady_clock::now();
    auto g_parallel = gspo::policy_gradient_tis(policy, groups, cfg);
    double parallel_ms = ms_since(t0);
    std::printf("%-28s %10.2f ms   speedup %.2fx\n", "gradient (openmp)", parallel_ms,
                serial_ms / parallel_ms);

    bool identical = g_serial == g_parallel;
    std::printf("%-28s %s\n", "serial == parallel", identical ? "bitwise" : "MISMATCH");

    // pass-rate estimation: fan-out over k attempts
    t0 = chrono::steady_clock::now();
    auto stats = trainer::estimate_task_pass_rates(policy, tasks, window, 88, 3, scorer);
    double passes = 0;
    for (const auto& s : stats) passes += s.pass_rate();
    std::printf("%-28s %10.2f ms   (mean pass rate %.3f)\n", "pass@88 over tasks",
                ms_since(t0), passes / stats.size());

    return identical ? 0 : 1;
}
