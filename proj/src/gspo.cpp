#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "physrl/gspo.hpp"

namespace physrl::gspo {

TabularPolicy TabularPolicy::uniform(int vocab) {
    TabularPolicy p;
    p.vocab_size = vocab;
    p.init_logits.assign(vocab, 0.0);
    return p;
}

std::uint64_t TabularPolicy::context_key(std::span<const int> prompt,
                                         std::span<const int> prefix) {
    std::uint64_t h = fnv1a_u64(0x9e3779b9ull);
    for (int t : prompt) h = fnv1a_u64(static_cast<std::uint64_t>(t) + 1, h);
    h = fnv1a_u64(0xfeedfaceull, h);  // prompt/prefix boundary
    for (int t : prefix) h = fnv1a_u64(static_cast<std::uint64_t>(t) + 1, h);
    return h;
}

std::uint64_t TabularPolicy::extend_key(std::uint64_t key, int token) {
    return fnv1a_u64(static_cast<std::uint64_t>(token) + 1, key);
}

const std::vector<double>& TabularPolicy::logits_at(std::uint64_t ctx) const {
    auto it = rows.find(ctx);
    return it == rows.end() ? init_logits : it->second;
}

std::vector<double>& TabularPolicy::logits_mut(std::uint64_t ctx) {
    auto it = rows.find(ctx);
    if (it == rows.end()) it = rows.emplace(ctx, init_logits).first;
    return it->second;
}

void TabularPolicy::log_probs_into(std::uint64_t ctx, std::vector<double>& lp) const {
    const auto& z = logits_at(ctx);
    lp.resize(z.size());
    double mx = -HUGE_VAL;
    for (std::size_t i = 0; i < z.size(); ++i) {
        lp[i] = z[i] / temperature;
        mx = std::max(mx, lp[i]);
    }
    double sum = 0.0;
    for (double& v : lp) sum += std::exp(v - mx);
    double lse = mx + std::log(sum);
    for (double& v : lp) v -= lse;
}

void TabularPolicy::probs_into(std::uint64_t ctx, std::vector<double>& p) const {
    log_probs_into(ctx, p);
    for (double& v : p) v = std::exp(v);
}

std::vector<double> TabularPolicy::log_probs(std::uint64_t ctx) const {
    std::vector<double> lp;
    log_probs_into(ctx, lp);
    return lp;
}

std::vector<double> TabularPolicy::probs(std::uint64_t ctx) const {
    std::vector<double> p;
    probs_into(ctx, p);
    return p;
}

double TabularPolicy::row_entropy(std::uint64_t ctx) const {
    auto lp = log_probs(ctx);
    double h = 0.0;
    for (double v : lp) h -= std::exp(v) * v;
    return h;
}

const double* GradientTable::find_row(std::uint64_t ctx) const {
    auto it = std::lower_bound(keys.begin(), keys.end(), ctx);
    if (it == keys.end() || *it != ctx) return nullptr;
    return row(static_cast<std::size_t>(it - keys.begin()));
}

double grad_norm(const GradientTable& g) {
    double s = 0.0;
    for (double v : g.values) s += v * v;
    return std::sqrt(s);
}

void apply_gradient(TabularPolicy& policy, const GradientTable& g, double learning_rate) {
    for (std::size_t i = 0; i < g.size(); ++i) {
        auto& z = policy.logits_mut(g.keys[i]);
        const double* row = g.row(i);
        for (std::size_t k = 0; k < z.size(); ++k) z[k] += learning_rate * row[k];
    }
}

double sequence_ratio(const SequenceSample& sample) {
    const std::size_t n = sample.tokens.size();
    if (n == 0 || sample.logp_train.size() != n || sample.logp_old.size() != n)
        throw NonFiniteRatio("sample '" + sample.question_id +
                             "': log-prob lists must match token count >= 1");
    double sum = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        double d = sample.logp_train[t] - sample.logp_old[t];
        if (!std::isfinite(d))
            throw NonFiniteRatio("sample '" + sample.question_id +
                                 "': non-finite log-probability at token " +
                                 std::to_string(t));
        sum += d;
    }
    return std::exp(sum / static_cast<double>(n));
}

std::vector<double> group_advantages(const std::vector<double>& rewards) {
    if (rewards.size() < 2)
        throw GroupTooSmall("advantage baseline needs a group of at least 2, got " +
                            std::to_string(rewards.size()));
    bool all_equal = true;
    for (double r : rewards)
        if (r != rewards[0]) {
            all_equal = false;
            break;
        }
    if (all_equal) return std::vector<double>(rewards.size(), 0.0);

    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= static_cast<double>(rewards.size());
    std::vector<double> adv(rewards.size());
    for (std::size_t i = 0; i < rewards.size(); ++i) adv[i] = rewards[i] - mean;
    return adv;
}

void compute_advantages(RolloutGroup& group) {
    std::vector<double> rewards;
    rewards.reserve(group.samples.size());
    for (const auto& s : group.samples) rewards.push_back(s.reward);
    group.advantages = group_advantages(rewards);
}

namespace {

double clip(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

}  // namespace

double gspo_objective(const std::vector<RolloutGroup>& groups, const GspoConfig& cfg) {
    if (groups.empty()) return 0.0;
    double total = 0.0;
    std::size_t total_samples = 0;
    for (const auto& g : groups) {
        double group_sum = 0.0;
        for (std::size_t i = 0; i < g.samples.size(); ++i) {
            double s = sequence_ratio(g.samples[i]);
            double a = g.advantages.at(i);
            double term =
                std::min(s * a, clip(s, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * a);
            group_sum += term;
        }
        if (cfg.per_sample_mean) {
            total += group_sum;
            total_samples += g.samples.size();
        } else {
            total += group_sum / static_cast<double>(g.samples.size());
        }
    }
    return cfg.per_sample_mean ? total / static_cast<double>(total_samples)
                               : total / static_cast<double>(groups.size());
}

std::vector<double> tis_weights(const SequenceSample& sample, double cap) {
    if (cap < 1.0) throw DomainError("tis cap must be >= 1");
    const std::size_t n = sample.tokens.size();
    if (sample.logp_rollout.size() != n || sample.logp_train.size() != n)
        throw NonFiniteRatio("sample '" + sample.question_id +
                             "': rollout/train log-prob lists must match token count");
    std::vector<double> w(n);
    for (std::size_t t = 0; t < n; ++t) {
        double d = sample.logp_train[t] - sample.logp_rollout[t];
        if (!std::isfinite(d))
            throw NonFiniteRatio("sample '" + sample.question_id +
                                 "': non-finite log-probability at token " +
                                 std::to_string(t));
        w[t] = std::min(std::exp(d), cap);
    }
    return w;
}

std::vector<SequenceSample> sample_sequences(const TabularPolicy& policy,
                                             const std::vector<int>& prompt, int group_size,
                                             int max_len, std::uint64_t seed, int end_token) {
    if (group_size < 1 || max_len < 1)
        throw DomainError("sample_sequences needs group_size >= 1 and max_len >= 1");
    std::vector<SequenceSample> out(group_size);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < group_size; ++i) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
        SequenceSample s;
        s.prompt = prompt;
        s.tokens.reserve(max_len);
        s.logp_old.reserve(max_len);
        std::uint64_t ctx = TabularPolicy::context_key(prompt, {});
        s.truncated = true;
        std::vector<double> lp, probs;
        for (int t = 0; t < max_len; ++t) {
            policy.log_probs_into(ctx, lp);
            probs.resize(lp.size());
            for (std::size_t k = 0; k < lp.size(); ++k) probs[k] = std::exp(lp[k]);
            int tok = static_cast<int>(rng.categorical(probs));
            s.tokens.push_back(tok);
            s.logp_old.push_back(lp[tok]);
            ctx = TabularPolicy::extend_key(ctx, tok);
            if (tok == end_token) {
                s.truncated = false;
                break;
            }
        }
        s.logp_rollout = s.logp_old;
        s.logp_train = s.logp_old;
        out[i] = std::move(s);
    }
    return out;
}

std::vector<int> greedy_decode(const TabularPolicy& policy, const std::vector<int>& prompt,
                               int max_len, int end_token) {
    std::vector<int> tokens;
    std::uint64_t ctx = TabularPolicy::context_key(prompt, {});
    for (int t = 0; t < max_len; ++t) {
        const auto lp = policy.log_probs(ctx);
        int best = 0;
        for (std::size_t k = 1; k < lp.size(); ++k)
            if (lp[k] > lp[best]) best = static_cast<int>(k);
        tokens.push_back(best);
        ctx = TabularPolicy::extend_key(ctx, best);
        if (best == end_token) break;
    }
    return tokens;
}

void recompute_logp_train(const TabularPolicy& policy, SequenceSample& sample) {
    std::uint64_t ctx = TabularPolicy::context_key(sample.prompt, {});
    sample.logp_train.resize(sample.tokens.size());
    std::vector<double> lp;
    for (std::size_t t = 0; t < sample.tokens.size(); ++t) {
        policy.log_probs_into(ctx, lp);
        sample.logp_train[t] = lp[sample.tokens[t]];
        ctx = TabularPolicy::extend_key(ctx, sample.tokens[t]);
    }
}

void recompute_logp_train(const TabularPolicy& policy, std::vector<RolloutGroup>& groups) {
#pragma omp parallel for schedule(static)
    for (std::size_t g = 0; g < groups.size(); ++g)
        for (auto& s : groups[g].samples) recompute_logp_train(policy, s);
}

void apply_rollout_shift(SequenceSample& sample, double delta) {
    sample.logp_rollout = sample.logp_old;
    for (double& v : sample.logp_rollout) v += delta;
}

void apply_rollout_shift(std::vector<RolloutGroup>& groups, double delta) {
    for (auto& g : groups)
        for (auto& s : g.samples) apply_rollout_shift(s, delta);
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

constexpr std::uint32_t kMagic = 0x50524c50;  // "PRLP"
constexpr std::uint32_t kVersion = 1;
constexpr const char* kSchemaDesc =
    "tabular-policy:v1:i32-vocab,f64-temperature,f64-init[],sorted-map<u64,f64[]>";

template <typename T>
void put(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

}  // namespace

void save_policy(const TabularPolicy& policy, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write checkpoint '" + path + "'");
    put(out, kMagic);
    put(out, kVersion);
    put(out, fnv1a(kSchemaDesc));
    put(out, static_cast<std::int32_t>(policy.vocab_size));
    put(out, policy.temperature);
    for (double v : policy.init_logits) put(out, v);
    std::vector<std::uint64_t> keys;
    keys.reserve(policy.rows.size());
    for (const auto& [k, _] : policy.rows) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    put(out, static_cast<std::uint64_t>(keys.size()));
    for (std::uint64_t k : keys) {
        put(out, k);
        for (double v : policy.rows.at(k)) put(out, v);
    }
}

TabularPolicy load_policy(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open checkpoint '" + path + "'");
    if (get<std::uint32_t>(in) != kMagic) throw Error("'" + path + "': not a checkpoint");
    if (get<std::uint32_t>(in) != kVersion)
        throw Error("'" + path + "': unsupported checkpoint version");
    if (get<std::uint64_t>(in) != fnv1a(kSchemaDesc))
        throw Error("'" + path + "': checkpoint schema hash mismatch");
    TabularPolicy p;
    p.vocab_size = get<std::int32_t>(in);
    p.temperature = get<double>(in);
    p.init_logits.resize(p.vocab_size);
    for (auto& v : p.init_logits) v = get<double>(in);
    std::uint64_t rows = get<std::uint64_t>(in);
    for (std::uint64_t r = 0; r < rows; ++r) {
        std::uint64_t key = get<std::uint64_t>(in);
        std::vector<double> row(p.vocab_size);
        for (auto& v : row) v = get<double>(in);
        p.rows.emplace(key, std::move(row));
    }
    if (!in) throw Error("'" + path + "': truncated checkpoint");
    return p;
}

void dump_step_json(const std::vector<RolloutGroup>& groups, const GradientTable& grad,
                    const std::string& path) {
    nlohmann::json j;
    j["groups"] = nlohmann::json::array();
    for (const auto& g : groups) {
        nlohmann::json jg;
        jg["question_id"] = g.question_id;
        jg["advantages"] = g.advantages;
        std::vector<double> rewards, ratios;
        for (const auto& s : g.samples) {
            rewards.push_back(s.reward);
            ratios.push_back(sequence_ratio(s));
        }
        jg["rewards"] = rewards;
        jg["ratios"] = ratios;
        j["groups"].push_back(std::move(jg));
    }
    j["grad_rows"] = grad.size();
    j["grad_norm"] = grad_norm(grad);
    j["vocab"] = grad.vocab;
    std::ofstream out(path);
    out << j.dump(2) << "\n";
}

}  // namespace physrl::gspo
