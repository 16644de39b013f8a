#include <cmath>
#include <limits>

#include "physrl/minions.hpp"

namespace physrl::minions {

const char* phase_name(Phase p) {
    switch (p) {
        case Phase::Solving: return "Solving";
        case Phase::Introspecting: return "Introspecting";
        case Phase::PhysicsReview: return "PhysicsReview";
        case Phase::GeneralReview: return "GeneralReview";
        case Phase::Accepted: return "Accepted";
        case Phase::Regenerating: return "Regenerating";
    }
    return "?";
}

const char* event_name(EventType t) {
    switch (t) {
        case EventType::SolverDone: return "SolverDone";
        case EventType::IntrospectDone: return "IntrospectDone";
        case EventType::PhysicsPass: return "PhysicsPass";
        case EventType::PhysicsFail: return "PhysicsFail";
        case EventType::GeneralPass: return "GeneralPass";
        case EventType::GeneralFail: return "GeneralFail";
    }
    return "?";
}

namespace {

[[noreturn]] void illegal(Phase phase, EventType event) {
    throw IllegalTransition(std::string("event ") + event_name(event) +
                            " not admissible in phase " + phase_name(phase));
}

MinionsState fail_round(MinionsState s, const std::string& report, const MinionsConfig& cfg) {
    s.verifier_calls += 1;
    s.consecutive_passes = 0;
    s.consecutive_fails += 1;
    s.bug_reports.push_back(report);
    s.phase = s.consecutive_fails >= cfg.cv ? Phase::Regenerating : Phase::Introspecting;
    return s;
}

}  // namespace

MinionsState step(const MinionsState& state, const Event& event, const MinionsConfig& cfg) {
    MinionsState s = state;
    switch (state.phase) {
        case Phase::Solving:
        case Phase::Regenerating:
            if (event.type != EventType::SolverDone) illegal(state.phase, event.type);
            s.candidate = event.payload;
            s.solver_calls += 1;
            // fresh candidate: per-candidate counters and reports start over
            s.consecutive_passes = 0;
            s.consecutive_fails = 0;
            s.candidate_passes = 0;
            s.bug_reports.clear();
            s.phase = Phase::Introspecting;
            return s;

        case Phase::Introspecting:
            if (event.type != EventType::IntrospectDone) illegal(state.phase, event.type);
            if (!event.payload.empty()) s.candidate = event.payload;
            s.phase = Phase::PhysicsReview;
            return s;

        case Phase::PhysicsReview:
            if (event.type == EventType::PhysicsPass) {
                s.phase = Phase::GeneralReview;
                return s;
            }
            if (event.type == EventType::PhysicsFail)
                return fail_round(std::move(s), event.payload, cfg);
            illegal(state.phase, event.type);

        case Phase::GeneralReview:
            if (event.type == EventType::GeneralPass) {
                s.verifier_calls += 1;
                s.consecutive_fails = 0;
                s.consecutive_passes += 1;
                s.candidate_passes += 1;
                s.phase = s.consecutive_passes >= cfg.cv ? Phase::Accepted
                                                         : Phase::PhysicsReview;
                return s;
            }
            if (event.type == EventType::GeneralFail)
                return fail_round(std::move(s), event.payload, cfg);
            illegal(state.phase, event.type);

        case Phase::Accepted:
            illegal(state.phase, event.type);
    }
    illegal(state.phase, event.type);
}

IntrospectorFn identity_introspector() {
    return [](const std::string& candidate, const std::vector<std::string>&) {
        return candidate;
    };
}

RunResult run(const std::string& problem, const SolverFn& solver,
              const IntrospectorFn& introspector, const VerifierFn& physics_verifier,
              const VerifierFn& general_verifier, const MinionsConfig& cfg,
              std::uint64_t /*seed*/) {
    (void)problem;
    RunResult result;
    MinionsState state;
    std::string best_candidate;
    int best_passes = -1;
    int attempts = 0;

    auto apply = [&](const Event& e) {
        Phase from = state.phase;
        state = step(state, e, cfg);
        result.trace.push_back(
            {from, e.type, state.phase, state.consecutive_passes, state.consecutive_fails});
    };

    auto remember_best = [&]() {
        if (state.candidate_passes > best_passes) {
            best_passes = state.candidate_passes;
            best_candidate = state.candidate;
        }
    };

    try {
        apply(Event::solver_done(solver(attempts++)));
        while (true) {
            if (state.phase == Phase::Introspecting)
                apply(Event::introspect_done(introspector(state.candidate, state.bug_reports)));

            // one verification round: physics stage, then general stage
            auto [phys_ok, phys_report] = physics_verifier(state.candidate);
            if (!phys_ok) {
                apply(Event::physics_fail(phys_report));
            } else {
                apply(Event::physics_pass());
                auto [gen_ok, gen_report] = general_verifier(state.candidate);
                if (gen_ok)
                    apply(Event::general_pass());
                else
                    apply(Event::general_fail(gen_report));
            }
            remember_best();

            if (state.phase == Phase::Accepted) {
                result.solution = state.candidate;
                result.converged = true;
                break;
            }
            if (state.phase == Phase::Regenerating) {
                if (state.solver_calls - 1 >= cfg.max_regenerations) {
                    result.solution = best_candidate;  // NotConverged
                    result.converged = false;
                    break;
                }
                apply(Event::solver_done(solver(attempts++)));
            }
        }
    } catch (const IllegalTransition&) {
        throw;
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw VerifierUnavailable(std::string("provider failed after ") +
                                  std::to_string(result.trace.size()) +
                                  " transitions: " + e.what());
    }
    result.final_state = state;
    return result;
}

double expected_verifications(double p, int cv) {
    if (cv < 1) throw DomainError("cv must be >= 1");
    if (p < 0.0 || p > 1.0) throw DomainError("pass probability must lie in [0, 1]");
    if (p == 0.0) return std::numeric_limits<double>::infinity();
    if (p == 1.0) return static_cast<double>(cv);
    double pk = std::pow(p, cv);
    return (1.0 - pk) / (pk * (1.0 - p));
}

}  // namespace physrl::minions
