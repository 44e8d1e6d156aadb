#include "blm/rewards.hpp"

#include <cmath>
#include <sstream>

#include "blm/errors.hpp"

namespace blm {

double rule_reward(const StructuredOutput& prediction, const RiskLabel& truth) {
    if (!prediction.parsed_answer) return 0.0;
    const RiskLabel& pred = *prediction.parsed_answer;
    if (pred.scenario != truth.scenario) return 0.0;
    return pred.violation_type == truth.violation_type ? 1.0 : 0.5;
}

double format_reward(const StructuredOutput& prediction) {
    return prediction.think_span && prediction.answer_span ? 1.0 : 0.0;
}

namespace {

std::vector<std::string> words_of(const std::string& text) {
    std::vector<std::string> words;
    std::istringstream is(text);
    std::string w;
    while (is >> w) words.push_back(w);
    return words;
}

bool names_any(const std::vector<std::string>& words, const std::vector<std::string>& keywords) {
    for (const auto& w : words)
        for (const auto& kw : keywords)
            if (w == kw) return true;
    return false;
}

}  // namespace

std::vector<Principle> mock_critic(const std::string& think_text, const RiskLabel& truth,
                                   const PolicySchema& schema,
                                   const std::vector<std::string>& citations) {
    std::vector<std::string> words = words_of(think_text);

    const ScenarioEntry* true_scen = schema.find_scenario(truth.scenario);
    const ViolationType* true_type = schema.find_type(truth.scenario, truth.violation_type);
    if (!true_scen || !true_type) throw RewardError("truth label not registered in schema");

    std::vector<std::string> any_scenario_kw, any_type_kw;
    for (const auto* s : schema.risk_scenarios()) {
        any_scenario_kw.insert(any_scenario_kw.end(), s->keywords.begin(), s->keywords.end());
        for (const auto& t : s->types)
            any_type_kw.insert(any_type_kw.end(), t.keywords.begin(), t.keywords.end());
    }

    double clarity = names_any(words, true_scen->keywords)   ? 1.0
                     : names_any(words, any_scenario_kw)     ? 0.5
                                                             : 0.0;
    double attribution = names_any(words, true_type->keywords) ? 1.0
                         : names_any(words, any_type_kw)       ? 0.5
                                                               : 0.0;
    double grounding = names_any(words, citations) ? 1.0 : 0.0;

    const double w = 1.0 / 3.0;
    return {{"causal_clarity", w, clarity},
            {"risk_attribution", w, attribution},
            {"evidence_grounding", w, grounding}};
}

std::pair<double, std::vector<Principle>> sca_reward(const StructuredOutput& prediction,
                                                     const RiskLabel& truth,
                                                     const PolicySchema& schema,
                                                     const Vocabulary& vocab,
                                                     CriticAdapter& critic,
                                                     const std::vector<std::string>& citations) {
    CriticRequest request;
    request.think_text = vocab.detokenize(prediction.think_interior());
    request.truth = truth;
    request.guidelines = schema.serialize_guidelines();
    request.citations = citations;

    std::vector<Principle> principles = critic.score(request);
    if (principles.empty()) throw RewardError("critic returned no scoring principles");

    double weight_sum = 0.0;
    for (const auto& p : principles) {
        bool valid_score = p.score == 0.0 || p.score == 0.5 || p.score == 1.0;
        if (!valid_score) throw RewardError("critic score outside {0, 0.5, 1}: " + p.name);
        if (p.weight < 0.0) throw RewardError("negative principle weight: " + p.name);
        weight_sum += p.weight;
    }
    if (weight_sum <= 0.0) throw RewardError("critic principle weights sum to zero");

    double score = 0.0;
    std::vector<Principle> normalized = principles;
    for (auto& p : normalized) {
        p.weight /= weight_sum;
        score += p.weight * p.score;
    }
    return {score, normalized};
}

RewardBreakdown total_reward(const StructuredOutput& prediction, const RiskLabel& truth,
                             const PolicySchema& schema, const Vocabulary& vocab,
                             CriticAdapter& critic, const std::vector<std::string>& citations) {
    RewardBreakdown r;
    r.rule = rule_reward(prediction, truth);
    r.format = format_reward(prediction);
    auto [sca, principles] = sca_reward(prediction, truth, schema, vocab, critic, citations);
    r.sca = sca;
    r.principles = std::move(principles);
    r.total = r.rule + r.format + r.sca;
    return r;
}

nlohmann::json reward_to_json(const RewardBreakdown& r) {
    nlohmann::json principles = nlohmann::json::array();
    for (const auto& p : r.principles)
        principles.push_back({{"name", p.name}, {"weight", p.weight}, {"score", p.score}});
    return {{"rule", r.rule},
            {"format", r.format},
            {"scaR", r.sca},
            {"total", r.total},
            {"principles", principles}};
}

}  // namespace blm
