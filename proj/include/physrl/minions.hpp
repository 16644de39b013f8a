#pragma once

#include <functional>
#include <string>
#include <vector>

#include "physrl/common.hpp"

namespace physrl::minions {

enum class Phase { Solving, Introspecting, PhysicsReview, GeneralReview, Accepted, Regenerating };
const char* phase_name(Phase p);

enum class EventType { SolverDone, IntrospectDone, PhysicsPass, PhysicsFail, GeneralPass, GeneralFail };
const char* event_name(EventType t);

/// Event with optional payload: candidate text for SolverDone/IntrospectDone,
/// bug report for the Fail events.
struct Event {
    EventType type;
    std::string payload;

    static Event solver_done(std::string candidate) {
        return {EventType::SolverDone, std::move(candidate)};
    }
    static Event introspect_done(std::string candidate) {
        return {EventType::IntrospectDone, std::move(candidate)};
    }
    static Event physics_pass() { return {EventType::PhysicsPass, {}}; }
    static Event physics_fail(std::string report) {
        return {EventType::PhysicsFail, std::move(report)};
    }
    static Event general_pass() { return {EventType::GeneralPass, {}}; }
    static Event general_fail(std::string report) {
        return {EventType::GeneralFail, std::move(report)};
    }
};

struct MinionsConfig {
    int cv = 2;                   // consecutive verifications to accept
    int max_regenerations = 8;    // termination bound
    bool visual_studio_enabled = false;  // fixed off: text-only pipeline
};

struct MinionsState {
    Phase phase = Phase::Solving;
    int consecutive_passes = 0;
    int consecutive_fails = 0;
    std::string candidate;
    std::vector<std::string> bug_reports;  // reset with each fresh candidate
    int solver_calls = 0;
    int verifier_calls = 0;       // completed verification rounds (pass or fail)
    int candidate_passes = 0;     // rounds this candidate has passed in total
};

/// One transition. A verification round = Physics stage then General stage;
/// it concludes on GeneralPass (round passed) or any Fail (round failed,
/// report routed back to introspection). cv consecutive passes accept; cv
/// consecutive fails send the solver back for a fresh candidate.
/// Throws IllegalTransition for events the phase does not admit.
MinionsState step(const MinionsState& state, const Event& event, const MinionsConfig& cfg);

struct TraceEntry {
    Phase from;
    EventType event;
    Phase to;
    int consecutive_passes;
    int consecutive_fails;
};

struct RunResult {
    std::string solution;
    bool converged = false;       // false = NotConverged (bound hit)
    MinionsState final_state;
    std::vector<TraceEntry> trace;
};

/// Candidate provider: attempt index (0 = initial solve, then one per
/// regeneration) → solution text.
using SolverFn = std::function<std::string(int attempt)>;
/// Refinement provider: (candidate, bug reports so far) → revised candidate.
using IntrospectorFn =
    std::function<std::string(const std::string& candidate,
                              const std::vector<std::string>& bug_reports)>;
/// Verifier: candidate → (pass, bug report when failing).
using VerifierFn = std::function<std::pair<bool, std::string>(const std::string& candidate)>;

/// Identity introspector (stub used when no refinement model is wired in).
IntrospectorFn identity_introspector();

/// Drive the state machine until Accepted or the regeneration bound is hit;
/// on NotConverged the candidate with the most passed rounds is returned.
/// Provider exceptions wrap to VerifierUnavailable.
RunResult run(const std::string& problem, const SolverFn& solver,
              const IntrospectorFn& introspector, const VerifierFn& physics_verifier,
              const VerifierFn& general_verifier, const MinionsConfig& cfg,
              std::uint64_t seed);

/// Expected verification rounds until cv consecutive passes when each round
/// passes independently with probability p:
///   E = (1 - p^cv) / (p^cv (1 - p)),
/// with documented limits E(0) = inf and E(1) = cv.
/// Throws DomainError outside [0, 1].
double expected_verifications(double p, int cv);

}  // namespace physrl::minions
