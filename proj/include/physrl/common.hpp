#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace physrl {

// ---------------------------------------------------------------------------
// Error taxonomy. Names are part of the CLI error surface: the `--json` error
// payload carries the class name verbatim.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "Error"; }
};

#define PHYSRL_ERROR(Name)                                                     \
    struct Name : Error {                                                      \
        using Error::Error;                                                    \
        const char* kind() const noexcept override { return #Name; }          \
    }

PHYSRL_ERROR(SchemaError);
PHYSRL_ERROR(DuplicateId);
PHYSRL_ERROR(MissingStats);
PHYSRL_ERROR(CanonicalBlowup);
PHYSRL_ERROR(ProbeDomainError);
PHYSRL_ERROR(GoldCorruptError);
PHYSRL_ERROR(JudgeUnavailable);
PHYSRL_ERROR(NonFiniteRatio);
PHYSRL_ERROR(NonFiniteGradient);
PHYSRL_ERROR(GroupTooSmall);
PHYSRL_ERROR(IllegalTransition);
PHYSRL_ERROR(VerifierUnavailable);
PHYSRL_ERROR(DomainError);
PHYSRL_ERROR(RaggedRuns);
PHYSRL_ERROR(MissingThreshold);
PHYSRL_ERROR(AllUnparseable);

#undef PHYSRL_ERROR

/// Malformed input line (JSONL datasets, stats files). Carries the 1-based
/// line number the reader was on.
struct ParseError : Error {
    std::size_t line_no;
    ParseError(std::size_t line, const std::string& why)
        : Error("line " + std::to_string(line) + ": " + why), line_no(line) {}
    const char* kind() const noexcept override { return "ParseError"; }
};

/// Expression-level syntax failure: byte offset into the input plus a short
/// expected-token hint.
struct ExprSyntaxError : Error {
    std::size_t offset;
    std::string expected;
    ExprSyntaxError(std::size_t off, const std::string& hint)
        : Error("offset " + std::to_string(off) + ": expected " + hint),
          offset(off), expected(hint) {}
    const char* kind() const noexcept override { return "ExprSyntaxError"; }
};

// ---------------------------------------------------------------------------
// Hashing & deterministic RNG. All seeded randomness in the toolkit flows
// through these so results are reproducible across platforms and thread
// counts.
// ---------------------------------------------------------------------------

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

constexpr std::uint64_t fnv1a(std::string_view s, std::uint64_t h = kFnvOffset) {
    for (unsigned char c : s) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

constexpr std::uint64_t fnv1a_u64(std::uint64_t v, std::uint64_t h = kFnvOffset) {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xff;
        h *= kFnvPrime;
    }
    return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Derive an independent stream seed from a root seed and an index. Used to
/// fan work out across samples/threads without order dependence.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) {
    std::uint64_t s = root ^ 0x6a09e667f3bcc909ull;
    std::uint64_t a = splitmix64(s);
    s ^= fnv1a_u64(index, a);
    return splitmix64(s);
}

/// Small deterministic generator (splitmix64 stream). Fully specified here so
/// verdicts and samples do not depend on library internals.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform double in [0, 1).
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    /// Draw an index from an (unnormalized, nonnegative) weight vector by
    /// cumulative scan. Deterministic given the stream position.
    std::size_t categorical(std::span<const double> probs) {
        double total = 0.0;
        for (double p : probs) total += p;
        double u = next_unit() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
            acc += probs[i];
            if (u < acc) return i;
        }
        return probs.empty() ? 0 : probs.size() - 1;
    }

  private:
    std::uint64_t state_;
};

// ---------------------------------------------------------------------------
// Worker-pool control. Maps onto OpenMP when compiled with it; a single
// global cap set once by the CLI. All parallel reductions in the toolkit are
// fixed-order, so the cap affects speed only, never results.
// ---------------------------------------------------------------------------

namespace detail {
inline int& thread_cap_ref() {
    static int cap = 0;  // 0 = runtime default
    return cap;
}
}  // namespace detail

void set_threads(int n);

inline int thread_cap() { return detail::thread_cap_ref(); }

}  // namespace physrl
