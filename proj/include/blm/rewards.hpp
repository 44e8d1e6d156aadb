#pragma once

#include <string>
#include <utility>
#include <vector>

#include "blm/parsing.hpp"
#include "blm/taxonomy.hpp"
#include "blm/vocab.hpp"

namespace blm {

struct Principle {
    std::string name;
    double weight = 0.0;
    double score = 0.0;  // in {0, 0.5, 1}
};

struct RewardBreakdown {
    double rule = 0.0;    // {0, 0.5, 1}
    double format = 0.0;  // {0, 1}
    double sca = 0.0;     // [0, 1]
    double total = 0.0;   // rule + format + sca
    std::vector<Principle> principles;
};

// 1.0 scene and type correct, 0.5 scene only, 0.0 otherwise.
double rule_reward(const StructuredOutput& prediction, const RiskLabel& truth);

// 1 iff both tagged regions are present.
double format_reward(const StructuredOutput& prediction);

// One scoring request per rollout. `citations` lists the evidence strings the
// input actually supports (frame references, ASR keywords present).
struct CriticRequest {
    std::string think_text;
    RiskLabel truth;
    std::string guidelines;
    std::vector<std::string> citations;
};

class CriticAdapter {
  public:
    virtual ~CriticAdapter() = default;
    // Throws RewardError on failure; scores outside {0, 0.5, 1} are rejected
    // at the sca_reward boundary.
    virtual std::vector<Principle> score(const CriticRequest& request) = 0;
};

// Three uniform principles: causal clarity (true scenario keyword named: 1,
// any risk scenario keyword: 0.5), risk attribution (same over violation-type
// keywords), evidence grounding (any cited evidence present in the input).
std::vector<Principle> mock_critic(const std::string& think_text, const RiskLabel& truth,
                                   const PolicySchema& schema,
                                   const std::vector<std::string>& citations);

class MockCritic : public CriticAdapter {
  public:
    explicit MockCritic(const PolicySchema& schema) : schema_(schema) {}
    std::vector<Principle> score(const CriticRequest& request) override {
        return mock_critic(request.think_text, request.truth, schema_, request.citations);
    }

  private:
    const PolicySchema& schema_;
};

// Weighted principle score with weights renormalized to sum 1.
std::pair<double, std::vector<Principle>> sca_reward(const StructuredOutput& prediction,
                                                     const RiskLabel& truth,
                                                     const PolicySchema& schema,
                                                     const Vocabulary& vocab,
                                                     CriticAdapter& critic,
                                                     const std::vector<std::string>& citations);

RewardBreakdown total_reward(const StructuredOutput& prediction, const RiskLabel& truth,
                             const PolicySchema& schema, const Vocabulary& vocab,
                             CriticAdapter& critic, const std::vector<std::string>& citations);

nlohmann::json reward_to_json(const RewardBreakdown& r);

}  // namespace blm
