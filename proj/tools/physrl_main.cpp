#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "physrl/boxparse.hpp"
#include "physrl/corpus.hpp"
#include "physrl/evalkit.hpp"
#include "physrl/gspo.hpp"
#include "physrl/minions.hpp"
#include "physrl/reward.hpp"
#include "physrl/symcheck.hpp"
#include "physrl/trainer.hpp"

#define CPPHTTPLIB_NO_EXCEPTIONS 0
#include <httplib.h>

namespace {

using nlohmann::json;
using namespace physrl;

// exit-code contract: 0 success, 1 domain failure, 2 usage error, 3 data error
constexpr int kOk = 0;
constexpr int kDomainFailure = 1;
constexpr int kUsageError = 2;
constexpr int kDataError = 3;

struct GlobalOpts {
    std::uint64_t seed = 0;
    int threads = 0;
    bool json = false;
};

bool is_data_error(const Error& e) {
    const std::string kind = e.kind();
    return kind == "ParseError" || kind == "SchemaError" || kind == "DuplicateId" ||
           kind == "MissingStats" || kind == "GoldCorruptError" ||
           kind == "MissingThreshold" || kind == "AllUnparseable" || kind == "RaggedRuns" ||
           kind == "ExprSyntaxError";
}

void emit_error(const GlobalOpts& g, const Error& e) {
    if (g.json) {
        json j;
        j["error"] = e.kind();
        j["message"] = e.what();
        std::cerr << j.dump() << "\n";
    } else {
        std::cerr << "error (" << e.kind() << "): " << e.what() << "\n";
    }
}

std::string hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return "missing";
    std::ostringstream buf;
    buf << in.rdbuf();
    char out[32];
    std::snprintf(out, sizeof(out), "fnv64:%016llx",
                  static_cast<unsigned long long>(fnv1a(buf.str())));
    return out;
}

void write_manifest(const std::string& path, const std::string& command,
                    const GlobalOpts& g, const json& flags,
                    const std::vector<std::string>& inputs) {
    json j;
    j["command"] = command;
    j["seed"] = g.seed;
    j["threads"] = g.threads;
    j["flags"] = flags;
    json in = json::object();
    for (const auto& p : inputs) in[p] = hash_file(p);
    j["inputs"] = std::move(in);
    std::ofstream out(path);
    out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------

int cmd_ingest(const GlobalOpts& g, const std::string& input, const std::string& output) {
    auto records = corpus::load_dataset(input);
    if (!output.empty()) {
        corpus::save_dataset(records, output);
        write_manifest(output + ".manifest.json", "ingest", g,
                       json{{"input", input}, {"output", output}}, {input});
    }
    if (g.json) {
        json j;
        j["records"] = records.size();
        j["valid"] = true;
        std::cout << j.dump() << "\n";
    } else {
        std::cout << "ok: " << records.size() << " records\n";
    }
    return kOk;
}

int cmd_filter(const GlobalOpts& g, const std::string& input, const std::string& stats_path,
               double hi, const std::string& output) {
    auto records = corpus::load_dataset(input);
    auto stats = corpus::load_stats(stats_path);
    auto kept = corpus::filter_by_pass_rate(records, stats, hi);
    if (!output.empty()) {
        corpus::save_dataset(kept, output);
        write_manifest(output + ".manifest.json", "filter", g,
                       json{{"input", input}, {"stats", stats_path}, {"hi", hi},
                            {"output", output}},
                       {input, stats_path});
    }
    if (g.json) {
        json j;
        j["input_records"] = records.size();
        j["retained"] = kept.size();
        std::cout << j.dump() << "\n";
    } else {
        std::cout << "retained " << kept.size() << " of " << records.size() << " records\n";
    }
    return kOk;
}

int cmd_verify(const GlobalOpts& g, const std::string& pred, const std::string& gold,
               const std::string& answer_type, double rel_tol, double tolerance,
               const std::string& unit_pred, const std::string& unit_gold) {
    corpus::GoldAnswer ga;
    ga.value = gold;
    auto t = corpus::answer_type_from_name(answer_type);
    if (!t) throw SchemaError("unknown answer_type '" + answer_type + "'");
    ga.answer_type = *t;
    if (tolerance > 0) ga.tolerance = tolerance;

    sym::EquivConfig cfg;
    cfg.seed = g.seed;
    if (rel_tol > 0) cfg.rel_tol = rel_tol;

    auto result = sym::equivalent_detail(pred, ga, cfg);
    bool units_checked = !unit_pred.empty() || !unit_gold.empty();
    bool units_ok = units_checked ? sym::units_match(unit_pred, unit_gold) : true;

    if (g.json) {
        json j;
        j["equal"] = result.equal;
        j["stage"] = sym::stage_name(result.stage);
        if (units_checked) j["units_match"] = units_ok;
        std::cout << j.dump() << "\n";
    } else {
        std::cout << (result.equal ? "true" : "false") << " "
                  << sym::stage_name(result.stage);
        if (units_checked) std::cout << " units=" << (units_ok ? "match" : "mismatch");
        std::cout << "\n";
    }
    return result.equal ? kOk : kDomainFailure;
}

std::vector<trainer::ToyTask> tasks_from_dataset(const std::string& path) {
    auto records = corpus::load_dataset(path);
    std::vector<trainer::ToyTask> tasks;
    int index = 0;
    for (const auto& rec : records) {
        trainer::ToyTask task;
        task.record = rec;
        task.tier = static_cast<int>(rec.answers.size());
        task.prompt = {trainer::ToyVocab::kBoxDigit0 + (index / 10) % 10,
                       trainer::ToyVocab::kBoxDigit0 + index % 10, trainer::ToyVocab::kPlus};
        if (rec.answers.size() > 3)
            throw SchemaError("record '" + rec.id + "': trainable tasks carry 1-3 answers");
        for (const auto& a : rec.answers) {
            if (a.value.size() != 1 || a.value[0] < '0' || a.value[0] > '9')
                throw SchemaError("record '" + rec.id +
                                  "': trainable answers must be single digits");
            task.prompt.push_back(trainer::ToyVocab::kBoxDigit0 + (a.value[0] - '0'));
        }
        tasks.push_back(std::move(task));
        ++index;
    }
    return tasks;
}

int cmd_train(const GlobalOpts& g, const std::string& schedule_name,
              const std::string& tasks_path, const std::string& out_dir,
              const std::string& steps_override, double rollout_shift,
              const std::string& dump_dir) {
    trainer::ModelScale scale;
    if (schedule_name == "small")
        scale = trainer::ModelScale::Small;
    else if (schedule_name == "large")
        scale = trainer::ModelScale::Large;
    else
        throw DomainError("unknown schedule '" + schedule_name + "' (small|large)");

    auto schedule = trainer::toy_schedule(scale);
    if (!steps_override.empty()) {
        std::istringstream in(steps_override);
        std::string tok;
        std::size_t i = 0;
        while (std::getline(in, tok, ',') && i < schedule.size())
            schedule[i++].steps = std::stoi(tok);
    }

    std::vector<trainer::ToyTask> tasks = tasks_path == "builtin"
                                              ? trainer::make_toy_tasks(60, 30, 10, g.seed)
                                              : tasks_from_dataset(tasks_path);

    trainer::TrainerConfig tc;
    tc.seed = g.seed;
    tc.rollout_shift = rollout_shift;
    tc.dump_dir = dump_dir;
    if (!dump_dir.empty()) std::filesystem::create_directories(dump_dir);
    reward::RuleScorer scorer(tc.equiv);

    auto policy = trainer::make_toy_base_policy();
    auto result = trainer::run_schedule(policy, tasks, schedule, scorer, tc);

    std::string telemetry_path, ckpt_path;
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        telemetry_path = out_dir + "/telemetry.csv";
        ckpt_path = out_dir + "/policy.ckpt";
        trainer::write_telemetry_csv(result.telemetry, telemetry_path);
        gspo::save_policy(policy, ckpt_path);
        json flags{{"schedule", schedule_name}, {"tasks", tasks_path}, {"out", out_dir}};
        std::vector<std::string> inputs;
        if (tasks_path != "builtin") inputs.push_back(tasks_path);
        write_manifest(out_dir + "/train.manifest.json", "train", g, flags, inputs);
    }

    double solve = trainer::greedy_solve_rate(
        policy, tasks, static_cast<int>(schedule.back().generation_window), scorer);
    json per_tier = json::object();
    for (int tier = 1; tier <= 3; ++tier) {
        std::vector<trainer::ToyTask> subset;
        for (const auto& t : tasks)
            if (t.tier == tier) subset.push_back(t);
        if (!subset.empty())
            per_tier["tier" + std::to_string(tier)] = trainer::greedy_solve_rate(
                policy, subset, static_cast<int>(schedule.back().generation_window), scorer);
    }
    if (g.json) {
        json j;
        j["steps"] = result.telemetry.size();
        j["final_solve_rate"] = solve;
        j["solve_by_tier"] = per_tier;
        j["retained_per_stage"] = result.retained_per_stage;
        if (!telemetry_path.empty()) j["telemetry"] = telemetry_path;
        if (!ckpt_path.empty()) j["checkpoint"] = ckpt_path;
        std::cout << j.dump() << "\n";
    } else {
        std::cout << "trained " << result.telemetry.size() << " steps; final solve rate "
                  << solve << "\n";
    }
    return kOk;
}

minions::VerifierFn make_verifier(const std::string& spec, std::uint64_t seed,
                                  const char* role) {
    if (spec == "stub:pass")
        return [](const std::string&) { return std::make_pair(true, std::string()); };
    if (spec == "stub:fail")
        return [role](const std::string&) {
            return std::make_pair(false, std::string(role) + " rejected the candidate");
        };
    if (spec.rfind("stub:p=", 0) == 0) {
        double p = std::stod(spec.substr(7));
        auto rng = std::make_shared<Rng>(derive_seed(seed, fnv1a(role)));
        return [p, rng, role](const std::string&) {
            bool ok = rng->next_unit() < p;
            return std::make_pair(ok, ok ? std::string()
                                         : std::string(role) + " rejected the candidate");
        };
    }
    // HTTP endpoint speaking the judge-style contract
    return [spec, role](const std::string& candidate) {
        httplib::Client client(spec);
        client.set_connection_timeout(30, 0);
        client.set_read_timeout(30, 0);
        json req{{"candidate", candidate}, {"role", role}};
        auto res = client.Post("/verify", req.dump(), "application/json");
        if (!res || res->status != 200)
            throw VerifierUnavailable("verifier endpoint " + spec + " unreachable");
        auto j = json::parse(res->body);
        return std::make_pair(j.at("pass").get<bool>(), j.value("report", std::string()));
    };
}

minions::SolverFn make_solver(const std::string& spec, const std::string& problem) {
    if (spec.rfind("stub:const:", 0) == 0) {
        std::string text = spec.substr(11);
        return [text](int attempt) {
            return text + " (attempt " + std::to_string(attempt) + ")";
        };
    }
    return [spec, problem](int attempt) {
        httplib::Client client(spec);
        client.set_connection_timeout(30, 0);
        client.set_read_timeout(30, 0);
        json req{{"problem", problem}, {"attempt", attempt}};
        auto res = client.Post("/solve", req.dump(), "application/json");
        if (!res || res->status != 200)
            throw VerifierUnavailable("solver endpoint " + spec + " unreachable");
        return json::parse(res->body).at("solution").get<std::string>();
    };
}

int cmd_minions(const GlobalOpts& g, const std::string& problem_path, int cv,
                int max_regenerations, const std::string& solver_spec,
                const std::string& physics_spec, const std::string& general_spec,
                const std::string& trace_path) {
    std::ifstream in(problem_path);
    if (!in) throw ParseError(0, "cannot open problem '" + problem_path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string problem = buf.str();

    minions::MinionsConfig cfg;
    cfg.cv = cv;
    cfg.max_regenerations = max_regenerations;

    auto result = minions::run(problem, make_solver(solver_spec, problem),
                               minions::identity_introspector(),
                               make_verifier(physics_spec, g.seed, "physics"),
                               make_verifier(general_spec, g.seed, "general"), cfg, g.seed);

    json trace = json::array();
    for (const auto& t : result.trace) {
        trace.push_back(json{{"from", minions::phase_name(t.from)},
                             {"event", minions::event_name(t.event)},
                             {"to", minions::phase_name(t.to)},
                             {"consecutive_passes", t.consecutive_passes},
                             {"consecutive_fails", t.consecutive_fails}});
    }
    if (!trace_path.empty()) {
        std::ofstream tout(trace_path);
        json j{{"converged", result.converged},
               {"solution", result.solution},
               {"solver_calls", result.final_state.solver_calls},
               {"verifier_calls", result.final_state.verifier_calls},
               {"trace", trace}};
        tout << j.dump(2) << "\n";
        write_manifest(trace_path + ".manifest.json", "minions", g,
                       json{{"problem", problem_path}, {"cv", cv}}, {problem_path});
    }
    if (g.json) {
        json j{{"converged", result.converged},
               {"solution", result.solution},
               {"solver_calls", result.final_state.solver_calls},
               {"verifier_calls", result.final_state.verifier_calls}};
        std::cout << j.dump() << "\n";
    } else {
        std::cout << (result.converged ? "accepted" : "not-converged") << " after "
                  << result.final_state.verifier_calls << " verification rounds; solution:\n"
                  << result.solution << "\n";
    }
    return result.converged ? kOk : kDomainFailure;
}

int cmd_grade(const GlobalOpts& g, const std::string& scores_path,
              const std::string& thresholds_path, const std::string& out_path) {
    auto rows = evalkit::load_scores_csv(scores_path);
    auto thresholds = evalkit::load_thresholds(thresholds_path);
    auto scores = evalkit::exam_scores_from_rows(rows);
    auto counts = evalkit::medal_table(scores, thresholds);

    json exams = json::array();
    for (const auto& [exam, score] : scores) {
        auto it = std::find_if(thresholds.begin(), thresholds.end(),
                               [&](const auto& t) { return t.exam_id == exam; });
        exams.push_back(json{{"exam", exam},
                             {"score", score},
                             {"medal", evalkit::medal_name(evalkit::assign_medal(score, *it))}});
    }
    json j{{"exams", exams},
           {"medal_table",
            json{{"gold", counts.gold}, {"silver", counts.silver}, {"bronze", counts.bronze}}}};

    if (!out_path.empty()) {
        std::ofstream out(out_path);
        out << j.dump(2) << "\n";
        write_manifest(out_path + ".manifest.json", "grade", g,
                       json{{"scores", scores_path}, {"thresholds", thresholds_path}},
                       {scores_path, thresholds_path});
    }
    if (g.json) {
        std::cout << j.dump() << "\n";
    } else {
        for (const auto& e : exams)
            std::cout << e["exam"].get<std::string>() << "  " << e["score"].get<double>()
                      << "  " << e["medal"].get<std::string>() << "\n";
        std::cout << "medals: " << counts.gold << " gold, " << counts.silver << " silver, "
                  << counts.bronze << " bronze\n";
    }
    return kOk;
}

int cmd_ttrl_label(const GlobalOpts& g, const std::string& dataset_path,
                   const std::string& samples_path, int k, const std::string& out_path) {
    auto records = corpus::load_dataset(dataset_path);
    auto usable = evalkit::filter_mcq(records);

    // samples file: JSONL rows {question_id, text}
    std::ifstream in(samples_path);
    if (!in) throw ParseError(0, "cannot open samples '" + samples_path + "'");
    std::map<std::string, std::vector<std::string>> by_question;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(line_no, e.what());
        }
        by_question[j.at("question_id").get<std::string>()].push_back(
            j.at("text").get<std::string>());
    }

    sym::EquivConfig cfg;
    cfg.seed = g.seed;
    json labels = json::array();
    double consensus_sum = 0.0;
    std::size_t labeled = 0;
    std::ofstream out;
    if (!out_path.empty()) out.open(out_path);
    for (const auto& rec : usable) {
        auto it = by_question.find(rec.id);
        if (it == by_question.end()) continue;
        if (k > 0 && static_cast<int>(it->second.size()) != k)
            throw RaggedRuns("question '" + rec.id + "' has " +
                             std::to_string(it->second.size()) + " samples, expected " +
                             std::to_string(k));
        auto label = evalkit::majority_label(it->second, rec, cfg);
        json jl{{"question_id", label.question_id},
                {"label", label.label},
                {"votes", label.votes},
                {"total", label.total},
                {"tie", label.tie}};
        if (out.is_open()) out << jl.dump() << "\n";
        labels.push_back(std::move(jl));
        consensus_sum += static_cast<double>(label.votes) / label.total;
        ++labeled;
    }
    if (!out_path.empty())
        write_manifest(out_path + ".manifest.json", "ttrl-label", g,
                       json{{"dataset", dataset_path}, {"samples", samples_path}, {"k", k}},
                       {dataset_path, samples_path});

    double mean_consensus = labeled ? consensus_sum / static_cast<double>(labeled) : 0.0;
    if (g.json) {
        json j{{"labeled", labeled},
               {"excluded_mcq", records.size() - usable.size()},
               {"mean_consensus_ratio", mean_consensus},
               {"labels", labels}};
        std::cout << j.dump() << "\n";
    } else {
        std::cout << "labeled " << labeled << " questions ("
                  << records.size() - usable.size()
                  << " multiple-choice excluded); mean consensus ratio " << mean_consensus
                  << "\n";
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"verifiable-reward RL toolkit for physics answers"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOpts g;
    app.add_option("--seed", g.seed, "root seed; fixed seed means identical outputs");
    app.add_option("--threads", g.threads, "worker pool cap (0 = runtime default)");
    app.add_flag("--json", g.json, "machine-readable output on stdout");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "validate a JSONL dataset");
    std::string in_input, in_output;
    bool in_validate = false;
    ingest->add_option("--input", in_input)->required();
    ingest->add_flag("--validate", in_validate, "validate records (always on)");
    ingest->add_option("--output", in_output, "write normalized records here");

    // filter
    auto* filter = app.add_subcommand("filter", "pass-rate learnability filter");
    std::string f_input, f_stats, f_output;
    double f_hi = 0.7;
    filter->add_option("--input", f_input)->required();
    filter->add_option("--stats", f_stats)->required();
    filter->add_option("--hi", f_hi, "retain 0 < pass <= hi");
    filter->add_option("--output", f_output);

    // verify
    auto* verify = app.add_subcommand("verify", "rule-based answer equivalence");
    std::string v_pred, v_gold, v_type = "Expression", v_unit_pred, v_unit_gold;
    double v_rel_tol = 0.0, v_tolerance = 0.0;
    verify->add_option("--pred", v_pred)->required();
    verify->add_option("--gold", v_gold)->required();
    verify->add_option("--answer-type", v_type);
    verify->add_option("--rel-tol", v_rel_tol);
    verify->add_option("--tolerance", v_tolerance, "per-answer relative tolerance");
    verify->add_option("--unit-pred", v_unit_pred);
    verify->add_option("--unit-gold", v_unit_gold);

    // train
    auto* train = app.add_subcommand("train", "multi-stage RL on the toy environment");
    std::string t_schedule = "small", t_tasks = "builtin", t_out, t_steps, t_dump;
    double t_shift = 0.0;
    train->add_option("--schedule", t_schedule, "small|large (desk-scaled)");
    train->add_option("--tasks", t_tasks, "builtin or a JSONL dataset of digit tasks");
    train->add_option("--out", t_out, "output directory (telemetry, checkpoint)");
    train->add_option("--steps", t_steps, "per-stage step override, e.g. 50,50,25");
    train->add_option("--rollout-shift", t_shift, "inject train/rollout log-prob mismatch");
    train->add_option("--dump-step", t_dump, "write per-update JSON dumps here");

    // minions
    auto* mn = app.add_subcommand("minions", "consecutive-verification agent loop");
    std::string m_problem, m_solver = "stub:const:solution", m_phys = "stub:pass",
                m_gen = "stub:pass", m_trace;
    int m_cv = 2, m_maxregen = 8;
    mn->add_option("--problem", m_problem)->required();
    mn->add_option("--cv", m_cv);
    mn->add_option("--max-regenerations", m_maxregen);
    mn->add_option("--solver", m_solver, "endpoint URL or stub:const:<text>");
    mn->add_option("--physics-verifier", m_phys, "endpoint URL or stub:pass|stub:fail|stub:p=0.8");
    mn->add_option("--general-verifier", m_gen);
    mn->add_option("--trace", m_trace, "write the transition trace JSON here");

    // grade
    auto* grade = app.add_subcommand("grade", "exam scores and medal table");
    std::string gr_scores, gr_thresholds, gr_out;
    grade->add_option("--scores", gr_scores)->required();
    grade->add_option("--thresholds", gr_thresholds)->required();
    grade->add_option("--out", gr_out);

    // ttrl-label
    auto* ttrl = app.add_subcommand("ttrl-label", "majority-vote pseudo-labels");
    std::string tl_dataset, tl_samples, tl_out;
    int tl_k = 32;
    ttrl->add_option("--dataset", tl_dataset)->required();
    ttrl->add_option("--samples", tl_samples)->required();
    ttrl->add_option("--k", tl_k, "required samples per question (0 = any)");
    ttrl->add_option("--out", tl_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsageError;
    }

    set_threads(g.threads);

    try {
        if (ingest->parsed()) return cmd_ingest(g, in_input, in_output);
        if (filter->parsed()) return cmd_filter(g, f_input, f_stats, f_hi, f_output);
        if (verify->parsed())
            return cmd_verify(g, v_pred, v_gold, v_type, v_rel_tol, v_tolerance, v_unit_pred,
                              v_unit_gold);
        if (train->parsed())
            return cmd_train(g, t_schedule, t_tasks, t_out, t_steps, t_shift, t_dump);
        if (mn->parsed())
            return cmd_minions(g, m_problem, m_cv, m_maxregen, m_solver, m_phys, m_gen,
                               m_trace);
        if (grade->parsed()) return cmd_grade(g, gr_scores, gr_thresholds, gr_out);
        if (ttrl->parsed()) return cmd_ttrl_label(g, tl_dataset, tl_samples, tl_k, tl_out);
    } catch (const Error& e) {
        emit_error(g, e);
        return is_data_error(e) ? kDataError : kDomainFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDomainFailure;
    }
    return kUsageError;
}
