#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "physrl/corpus.hpp"
#include "physrl/symcheck.hpp"

namespace physrl {

void set_threads(int n) {
    detail::thread_cap_ref() = n;
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#endif
}

}  // namespace physrl

namespace physrl::corpus {

using nlohmann::json;

namespace {

const std::pair<Field, const char*> kFields[] = {
    {Field::Mechanics, "Mechanics"},
    {Field::Electromagnetism, "Electromagnetism"},
    {Field::Thermodynamics, "Thermodynamics"},
    {Field::Optics, "Optics"},
    {Field::ModernPhysics, "ModernPhysics"},
};

const std::pair<AnswerType, const char*> kAnswerTypes[] = {
    {AnswerType::Expression, "Expression"},
    {AnswerType::Numeric, "Numeric"},
    {AnswerType::Interval, "Interval"},
    {AnswerType::Tuple, "Tuple"},
    {AnswerType::Boolean, "Boolean"},
    {AnswerType::MultipleChoice, "MultipleChoice"},
};

}  // namespace

const char* field_name(Field f) {
    for (const auto& [v, n] : kFields)
        if (v == f) return n;
    return "?";
}

const char* answer_type_name(AnswerType t) {
    for (const auto& [v, n] : kAnswerTypes)
        if (v == t) return n;
    return "?";
}

std::optional<Field> field_from_name(const std::string& s) {
    for (const auto& [v, n] : kFields)
        if (s == n) return v;
    return std::nullopt;
}

std::optional<AnswerType> answer_type_from_name(const std::string& s) {
    for (const auto& [v, n] : kAnswerTypes)
        if (s == n) return v;
    return std::nullopt;
}

void validate_record(const ProblemRecord& rec) {
    if (rec.id.empty()) throw SchemaError("record has empty id");
    if (rec.question.empty()) throw SchemaError("record '" + rec.id + "': empty question");
    if (rec.answers.empty())
        throw SchemaError("record '" + rec.id + "': answers list is empty");
    if (rec.source.empty()) throw SchemaError("record '" + rec.id + "': empty source");
    for (std::size_t i = 0; i < rec.answers.size(); ++i) {
        const GoldAnswer& a = rec.answers[i];
        if (a.value.empty())
            throw SchemaError("record '" + rec.id + "': answer " + std::to_string(i) +
                              " has empty value");
        if (a.tolerance && *a.tolerance <= 0)
            throw SchemaError("record '" + rec.id + "': answer " + std::to_string(i) +
                              " has non-positive tolerance");
        if (a.answer_type == AnswerType::Expression || a.answer_type == AnswerType::Numeric) {
            try {
                sym::parse_expr(a.value);
            } catch (const ExprSyntaxError& e) {
                throw SchemaError("record '" + rec.id + "': answer " + std::to_string(i) +
                                  " ('" + a.value + "') does not parse: " + e.what());
            }
        }
    }
}

namespace {

ProblemRecord record_from_json(const json& j, std::size_t line_no) {
    auto need = [&](const char* key) -> const json& {
        auto it = j.find(key);
        if (it == j.end())
            throw ParseError(line_no, std::string("missing field '") + key + "'");
        return *it;
    };
    ProblemRecord rec;
    rec.id = need("id").get<std::string>();
    rec.question = need("question").get<std::string>();
    if (j.contains("solution") && !j["solution"].is_null())
        rec.solution = j["solution"].get<std::string>();
    const json& field = need("field");
    auto f = field_from_name(field.get<std::string>());
    if (!f)
        throw SchemaError("record '" + rec.id + "': unknown field '" +
                          field.get<std::string>() + "'");
    rec.field = *f;
    rec.source = need("source").get<std::string>();
    const json& answers = need("answers");
    if (!answers.is_array())
        throw ParseError(line_no, "'answers' must be an array");
    for (const auto& ja : answers) {
        GoldAnswer a;
        if (!ja.contains("value"))
            throw ParseError(line_no, "answer missing 'value'");
        a.value = ja["value"].get<std::string>();
        std::string ts = ja.value("answer_type", std::string("Expression"));
        auto t = answer_type_from_name(ts);
        if (!t)
            throw SchemaError("record '" + rec.id + "': unknown answer_type '" + ts + "'");
        a.answer_type = *t;
        a.unit = ja.value("unit", std::string());
        if (ja.contains("tolerance") && !ja["tolerance"].is_null())
            a.tolerance = ja["tolerance"].get<double>();
        rec.answers.push_back(std::move(a));
    }
    return rec;
}

}  // namespace

std::vector<ProblemRecord> parse_dataset(const std::string& text) {
    std::vector<ProblemRecord> out;
    std::unordered_set<std::string> seen;
    std::istringstream in(text);
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
        ProblemRecord rec = record_from_json(j, line_no);
        validate_record(rec);
        if (!seen.insert(rec.id).second)
            throw DuplicateId("duplicate record id '" + rec.id + "' at line " +
                              std::to_string(line_no));
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<ProblemRecord> load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(0, "cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_dataset(buf.str());
}

std::string serialize_record(const ProblemRecord& rec) {
    json j;
    j["id"] = rec.id;
    j["question"] = rec.question;
    if (!rec.solution.empty()) j["solution"] = rec.solution;
    j["field"] = field_name(rec.field);
    j["source"] = rec.source;
    json answers = json::array();
    for (const auto& a : rec.answers) {
        json ja;
        ja["value"] = a.value;
        ja["answer_type"] = answer_type_name(a.answer_type);
        ja["unit"] = a.unit;
        if (a.tolerance) ja["tolerance"] = *a.tolerance;
        answers.push_back(std::move(ja));
    }
    j["answers"] = std::move(answers);
    return j.dump();
}

void save_dataset(const std::vector<ProblemRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError(0, "cannot write '" + path + "'");
    for (const auto& r : records) out << serialize_record(r) << "\n";
}

std::vector<PassStats> load_stats(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(0, "cannot open '" + path + "'");
    std::vector<PassStats> out;
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
        PassStats s;
        s.question_id = j.at("question_id").get<std::string>();
        s.attempts = j.at("attempts").get<std::uint64_t>();
        s.passes = j.at("passes").get<std::uint64_t>();
        if (s.attempts < 1) throw SchemaError("stats '" + s.question_id + "': attempts < 1");
        if (s.passes > s.attempts)
            throw SchemaError("stats '" + s.question_id + "': passes > attempts");
        out.push_back(std::move(s));
    }
    return out;
}

void save_stats(const std::vector<PassStats>& stats, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError(0, "cannot write '" + path + "'");
    for (const auto& s : stats) {
        json j;
        j["question_id"] = s.question_id;
        j["attempts"] = s.attempts;
        j["passes"] = s.passes;
        out << j.dump() << "\n";
    }
}

std::vector<ProblemRecord> filter_by_pass_rate(const std::vector<ProblemRecord>& records,
                                               const std::vector<PassStats>& stats,
                                               double hi) {
    if (!(hi > 0.0 && hi <= 1.0))
        throw DomainError("filter threshold must satisfy 0 < hi <= 1");
    std::unordered_map<std::string, double> rate;
    rate.reserve(stats.size());
    for (const auto& s : stats) rate[s.question_id] = s.pass_rate();

    std::vector<ProblemRecord> out;
    for (const auto& r : records) {
        auto it = rate.find(r.id);
        if (it == rate.end())
            throw MissingStats("no pass statistics for record '" + r.id + "'");
        double p = it->second;
        if (p > 0.0 && p <= hi) out.push_back(r);
    }
    return out;
}

PassStats estimate_pass_rate(const ProblemRecord& record, Sampler& sampler,
                             std::uint64_t k, const RewardFn& reward_fn) {
    if (k < 1) throw DomainError("pass@k needs k >= 1");
    std::uint64_t passes = 0;
    std::exception_ptr fail;
#pragma omp parallel for schedule(static) reduction(+ : passes)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(k); ++i) {
        if (fail) continue;
        try {
            std::string gen = sampler.sample(record, static_cast<std::uint64_t>(i));
            double r = reward_fn(gen, record);
            if (r >= 1.0) passes += 1;  // pass = full credit
        } catch (...) {
#pragma omp critical
            if (!fail) fail = std::current_exception();
        }
    }
    if (fail) {
        try {
            std::rethrow_exception(fail);
        } catch (const std::exception& e) {
            throw Error("sampling record '" + record.id + "' failed: " + e.what());
        }
    }
    return PassStats{record.id, k, passes};
}

}  // namespace physrl::corpus
