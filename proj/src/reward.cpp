#include <nlohmann/json.hpp>

#include "physrl/boxparse.hpp"
#include "physrl/reward.hpp"

#define CPPHTTPLIB_NO_EXCEPTIONS 0
#include <httplib.h>

namespace physrl::reward {

RewardVector score_generation(const std::string& gen, const corpus::ProblemRecord& record,
                              const sym::EquivConfig& cfg) {
    auto extraction = boxparse::extract_boxes(gen);
    const std::size_t n = record.answers.size();

    RewardVector rv;
    rv.n_required = n;
    rv.n_predicted = extraction.boxes.size();
    rv.per_sub.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (i >= extraction.boxes.size()) break;  // absent tail scores 0
        if (sym::equivalent(extraction.boxes[i], record.answers[i], cfg))
            rv.per_sub[i] = 1;
    }
    int total = 0;
    for (int r : rv.per_sub) total += r;
    rv.aggregate = static_cast<double>(total) / static_cast<double>(n);
    return rv;
}

JudgedRewardVector score_with_judge(const std::string& gen,
                                    const corpus::ProblemRecord& record, Judge& judge,
                                    const sym::EquivConfig& cfg) {
    JudgedRewardVector out;
    out.base = score_generation(gen, record, cfg);
    auto extraction = boxparse::extract_boxes(gen);
    for (std::size_t i = 0; i < out.base.per_sub.size(); ++i) {
        if (out.base.per_sub[i] == 1) continue;       // rule already accepted
        if (i >= extraction.boxes.size()) continue;   // nothing to show a judge
        try {
            JudgeVerdict v =
                judge.judge(record.question, extraction.boxes[i], record.answers[i].value);
            out.judge_id = v.judge_id;
            if (v.correct) out.base.per_sub[i] = 1;   // OR-composition widens recall
        } catch (const JudgeUnavailable&) {
            out.judge_unavailable = true;
            break;
        }
    }
    int total = 0;
    for (int r : out.base.per_sub) total += r;
    out.base.aggregate =
        static_cast<double>(total) / static_cast<double>(out.base.n_required);
    return out;
}

namespace {

class HttpJudge final : public Judge {
  public:
    HttpJudge(std::string base_url, int timeout_seconds)
        : url_(std::move(base_url)), timeout_(timeout_seconds) {}

    JudgeVerdict judge(const std::string& question, const std::string& prediction,
                       const std::string& gold) override {
        httplib::Client client(url_);
        client.set_connection_timeout(timeout_, 0);
        client.set_read_timeout(timeout_, 0);
        if (const char* token = std::getenv("PHYSRL_JUDGE_TOKEN"))
            client.set_bearer_token_auth(token);

        nlohmann::json req;
        req["question"] = question;
        req["prediction"] = prediction;
        req["gold"] = gold;
        auto res = client.Post("/judge", req.dump(), "application/json");
        if (!res || res->status != 200)
            throw JudgeUnavailable("judge endpoint " + url_ + " unreachable or non-200");
        try {
            auto j = nlohmann::json::parse(res->body);
            JudgeVerdict v;
            v.correct = j.at("correct").get<bool>();
            v.judge_id = j.value("judge_id", url_);
            return v;
        } catch (const nlohmann::json::exception& e) {
            throw JudgeUnavailable(std::string("judge returned malformed JSON: ") + e.what());
        }
    }

  private:
    std::string url_;
    int timeout_;
};

}  // namespace

std::unique_ptr<Judge> make_http_judge(const std::string& base_url, int timeout_seconds) {
    return std::make_unique<HttpJudge>(base_url, timeout_seconds);
}

}  // namespace physrl::reward
