#pragma once

#include <map>
#include <string>
#include <vector>

#include "blm/parsing.hpp"
#include "blm/rewards.hpp"
#include "blm/taxonomy.hpp"

namespace blm {

struct BinaryStats {
    double recall_norisk = 0.0;
    double recall_risk = 0.0;
    double precision_risk = 0.0;
    double recall_risk_dup = 0.0;  // Table-style duplicate recall column
    double f1_risk = 0.0;
    double f1_norisk = 0.0;
    double macro_f1 = 0.0;
    double weighted_f1 = 0.0;
};

struct EvalReport {
    double wide_acc = 0.0;             // scene OR type correct
    double wide_acc_scene_only = 0.0;  // alternate reading, reported side by side
    double strict_acc = 0.0;           // scene AND type correct
    std::map<std::string, double> severity_acc;
    BinaryStats binary;
    double consistency = 0.0;  // mean critic r_scaR
    int n = 0;
    std::map<std::string, double> per_scenario_acc;
};

// Missing parsed answers count as wrong (and as non-risk for binary
// detection). `citations` supplies per-sample evidence for the critic.
EvalReport evaluate(const std::vector<StructuredOutput>& predictions,
                    const std::vector<RiskLabel>& truths, const PolicySchema& schema,
                    const Vocabulary& vocab, CriticAdapter& critic,
                    const std::vector<std::vector<std::string>>& citations);

nlohmann::json report_to_json(const EvalReport& report);

}  // namespace blm
