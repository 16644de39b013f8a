#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "physrl/corpus.hpp"
#include "physrl/expr.hpp"

namespace physrl::sym {

struct EquivConfig {
    double rel_tol = 1e-3;
    int num_probe_points = 8;
    double probe_lo = 0.25;
    double probe_hi = 4.0;
    std::size_t max_canonical_nodes = 10000;
    std::uint64_t seed = 0;
};

/// Parse the LaTeX-lite answer grammar into an AST.
///
/// Recognized: integers/decimals/scientific notation, \frac & friends,
/// \sqrt (optional index), ^ with braced or atomic exponents, implicit
/// multiplication by juxtaposition, \pi / pi / e, greek commands, subscripted
/// identifiers (S_c, S_{tot}), parentheses/brackets/braces, unary minus,
/// \cdot/\times, and the function set sqrt/sin/cos/tan/exp/ln/log/abs in both
/// \cmd and name( forms. \text{...} and spacing commands are skipped, so
/// "19.8\text{ mJ}" parses as 19.8.
///
/// Maximal letter runs form one identifier ("rho" ≡ \rho); juxtaposed
/// single-letter products need a separator ("S_c A", "2 a b").
/// Throws ExprSyntaxError with byte offset + expected-token hint.
ExprPtr parse_expr(const std::string& text);

/// Deterministic normal form: commutative children flattened and sorted,
/// rational constants folded, Neg/Div rewritten to Mul/Pow, products of sums
/// and integer powers of sums (degree ≤ 4) expanded, like terms collected.
/// Throws CanonicalBlowup when the node budget is exceeded (callers fall back
/// to numeric probing).
ExprPtr canonicalize(const ExprPtr& e, std::size_t max_nodes = 10000);

/// Seeded random-point comparison over the shared free-variable set. False
/// immediately when the variable sets differ. Relative error uses
/// max(|v1|,|v2|,1). Throws ProbeDomainError when a point cannot be sampled
/// inside both domains after 32 retries.
bool numeric_probe_equal(const ExprPtr& e1, const ExprPtr& e2, const EquivConfig& cfg,
                         std::optional<std::uint64_t> seed_override = std::nullopt);

/// Which stage of the pipeline decided a verdict (CLI `verify` reports it).
enum class EquivStage { Canonical, Probe, Numeric, Token, Unparseable };
const char* stage_name(EquivStage s);

struct EquivResult {
    bool equal = false;
    EquivStage stage = EquivStage::Unparseable;
};

/// Full verifier pipeline for one predicted box against one gold answer:
/// strip assignment prefixes → parse → canonical equality → (Numeric) scalar
/// tolerance → numeric probing. An unparseable prediction is simply wrong;
/// an unparseable gold value throws GoldCorruptError.
EquivResult equivalent_detail(const std::string& pred, const corpus::GoldAnswer& gold,
                              const EquivConfig& cfg);
bool equivalent(const std::string& pred, const corpus::GoldAnswer& gold,
                const EquivConfig& cfg);

/// Unit audit (not part of the reward path): GoldAnswer.unit strings compared
/// after whitespace/\text{} normalization.
bool units_match(const std::string& a, const std::string& b);
std::string normalize_unit(const std::string& u);

/// Split "1, 2; 3" on top-level commas/semicolons (Interval/Tuple grading).
/// One enclosing (...) or [...] pair is removed first.
std::vector<std::string> split_elements(const std::string& text);

}  // namespace physrl::sym
