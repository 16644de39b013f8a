#include <cctype>
#include <cmath>

#include "physrl/boxparse.hpp"
#include "physrl/symcheck.hpp"

namespace physrl::sym {

namespace {

std::uint64_t probe_seed_for(const EquivConfig& cfg, const std::string& pred,
                             const std::string& gold) {
    return fnv1a(gold, fnv1a(pred, fnv1a_u64(cfg.seed)));
}

double rel_error(double v1, double v2) {
    double denom = std::max({std::fabs(v1), std::fabs(v2), 1.0});
    return std::fabs(v1 - v2) / denom;
}

std::string fold_token(const std::string& s) {
    std::string t = normalize_unit(s);  // drops whitespace and \text wrappers
    for (char& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return t;
}

struct Core {
    const EquivConfig& cfg;

    EquivResult run(const std::string& pred_raw, const std::string& gold_raw,
                    corpus::AnswerType type, std::optional<double> tolerance) {
        std::string pred = boxparse::strip_assignment(pred_raw);
        std::string gold = boxparse::strip_assignment(gold_raw);

        ExprPtr ge;
        try {
            ge = parse_expr(gold);
        } catch (const ExprSyntaxError& e) {
            throw GoldCorruptError("gold answer '" + gold_raw + "' unparseable: " + e.what());
        }
        ExprPtr pe;
        try {
            pe = parse_expr(pred);
        } catch (const ExprSyntaxError&) {
            return {false, EquivStage::Unparseable};
        }

        bool canon_ok = true;
        ExprPtr pc, gc;
        try {
            pc = canonicalize(pe, cfg.max_canonical_nodes);
            gc = canonicalize(ge, cfg.max_canonical_nodes);
        } catch (const CanonicalBlowup&) {
            canon_ok = false;  // fall back to probing only
        }
        if (canon_ok && equal(pc, gc)) return {true, EquivStage::Canonical};

        if (type == corpus::AnswerType::Numeric) {
            static const std::map<std::string, double> no_vars;
            double v1 = eval(pe, no_vars);
            double v2 = eval(ge, no_vars);
            if (std::isfinite(v1) && std::isfinite(v2)) {
                // scalar grading uses true relative error; the probe's
                // max(...,1) floor would wave through any sub-unity magnitude
                double tol = tolerance.value_or(cfg.rel_tol);
                double denom = std::max(std::fabs(v1), std::fabs(v2));
                bool eq = denom == 0.0 ? true : std::fabs(v1 - v2) / denom <= tol;
                return {eq, EquivStage::Numeric};
            }
            if (!free_vars(pe).empty() && free_vars(ge).empty())
                return {false, EquivStage::Numeric};
        }

        try {
            bool ok = numeric_probe_equal(pe, ge, cfg, probe_seed_for(cfg, pred, gold));
            return {ok, EquivStage::Probe};
        } catch (const ProbeDomainError&) {
            // differing canonical forms with no probeable point: reject
            return {false, EquivStage::Probe};
        }
    }
};

}  // namespace

const char* stage_name(EquivStage s) {
    switch (s) {
        case EquivStage::Canonical: return "canonical";
        case EquivStage::Probe: return "probe";
        case EquivStage::Numeric: return "numeric";
        case EquivStage::Token: return "token";
        case EquivStage::Unparseable: return "unparseable";
    }
    return "?";
}

bool numeric_probe_equal(const ExprPtr& e1, const ExprPtr& e2, const EquivConfig& cfg,
                         std::optional<std::uint64_t> seed_override) {
    auto vars1 = free_vars(e1);
    auto vars2 = free_vars(e2);
    if (vars1 != vars2) return false;

    std::uint64_t seed = seed_override
                             ? *seed_override
                             : fnv1a(render(e2), fnv1a(render(e1), fnv1a_u64(cfg.seed)));
    Rng rng(seed);
    std::vector<std::string> names(vars1.begin(), vars1.end());

    for (int p = 0; p < cfg.num_probe_points; ++p) {
        bool placed = false;
        for (int attempt = 0; attempt < 32 && !placed; ++attempt) {
            std::map<std::string, double> vals;
            for (const auto& n : names) vals[n] = rng.uniform(cfg.probe_lo, cfg.probe_hi);
            double v1 = eval(e1, vals);
            double v2 = eval(e2, vals);
            if (!std::isfinite(v1) || !std::isfinite(v2)) continue;
            if (rel_error(v1, v2) > cfg.rel_tol) return false;
            placed = true;
        }
        if (!placed)
            throw ProbeDomainError("no finite probe point found in [" +
                                   std::to_string(cfg.probe_lo) + ", " +
                                   std::to_string(cfg.probe_hi) + "] after 32 retries");
    }
    return true;
}

EquivResult equivalent_detail(const std::string& pred, const corpus::GoldAnswer& gold,
                              const EquivConfig& cfg) {
    using corpus::AnswerType;
    Core core{cfg};

    switch (gold.answer_type) {
        case AnswerType::Boolean:
        case AnswerType::MultipleChoice:
            return {fold_token(pred) == fold_token(gold.value), EquivStage::Token};

        case AnswerType::Interval:
        case AnswerType::Tuple: {
            auto pe = split_elements(boxparse::strip_assignment(pred));
            auto ge = split_elements(boxparse::strip_assignment(gold.value));
            if (pe.size() != ge.size()) return {false, EquivStage::Token};
            EquivStage worst = EquivStage::Canonical;
            for (std::size_t i = 0; i < pe.size(); ++i) {
                EquivResult r = core.run(pe[i], ge[i], AnswerType::Numeric, gold.tolerance);
                if (!r.equal) return {false, r.stage};
                if (r.stage != EquivStage::Canonical) worst = r.stage;
            }
            return {true, worst};
        }

        case AnswerType::Expression:
        case AnswerType::Numeric:
            return core.run(pred, gold.value, gold.answer_type, gold.tolerance);
    }
    return {false, EquivStage::Unparseable};
}

bool equivalent(const std::string& pred, const corpus::GoldAnswer& gold,
                const EquivConfig& cfg) {
    return equivalent_detail(pred, gold, cfg).equal;
}

}  // namespace physrl::sym
