#include "blm/evalkit.hpp"

#include <array>

#include "blm/errors.hpp"

namespace blm {

namespace {

double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

double f1(double precision, double recall) {
    return (precision + recall) == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
}

}  // namespace

EvalReport evaluate(const std::vector<StructuredOutput>& predictions,
                    const std::vector<RiskLabel>& truths, const PolicySchema& schema,
                    const Vocabulary& vocab, CriticAdapter& critic,
                    const std::vector<std::vector<std::string>>& citations) {
    if (predictions.size() != truths.size())
        throw DataError("predictions/truths length mismatch");
    if (predictions.empty()) throw DataError("empty evaluation set");
    if (!citations.empty() && citations.size() != predictions.size())
        throw DataError("citations length mismatch");

    const std::size_t n = predictions.size();
    EvalReport report;
    report.n = static_cast<int>(n);

    std::size_t strict = 0, wide = 0, wide_scene = 0;
    std::map<std::string, std::array<int, 2>> sev_counts;       // correct, total
    std::map<std::string, std::array<int, 2>> scenario_counts;  // strict-correct, total

    // binary confusion: predicted risk iff a parsed answer names a risk scenario
    int tp = 0, fn = 0, fp = 0, tn = 0;
    double consistency_sum = 0.0;

    static const std::vector<std::string> no_citations;
    for (std::size_t i = 0; i < n; ++i) {
        const StructuredOutput& pred = predictions[i];
        const RiskLabel& truth = truths[i];

        bool scene_ok = false, type_ok = false;
        if (pred.parsed_answer) {
            scene_ok = pred.parsed_answer->scenario == truth.scenario;
            type_ok = pred.parsed_answer->violation_type == truth.violation_type;
        }
        strict += scene_ok && type_ok;
        wide += scene_ok || type_ok;
        wide_scene += scene_ok;

        std::string sev = severity_name(truth.severity);
        sev_counts[sev][1]++;
        if (pred.parsed_answer && pred.parsed_answer->severity == truth.severity)
            sev_counts[sev][0]++;

        scenario_counts[truth.scenario][1]++;
        if (scene_ok && type_ok) scenario_counts[truth.scenario][0]++;

        bool truth_risk = !truth.is_no_risk();
        bool pred_risk = pred.parsed_answer && !pred.parsed_answer->is_no_risk();
        if (truth_risk && pred_risk) ++tp;
        else if (truth_risk) ++fn;
        else if (pred_risk) ++fp;
        else ++tn;

        const auto& cite = citations.empty() ? no_citations : citations[i];
        consistency_sum += sca_reward(pred, truth, schema, vocab, critic, cite).first;
    }

    report.strict_acc = static_cast<double>(strict) / static_cast<double>(n);
    report.wide_acc = static_cast<double>(wide) / static_cast<double>(n);
    report.wide_acc_scene_only = static_cast<double>(wide_scene) / static_cast<double>(n);
    report.consistency = consistency_sum / static_cast<double>(n);
    for (const auto& [sev, counts] : sev_counts)
        report.severity_acc[sev] = safe_div(counts[0], counts[1]);
    for (const auto& [scenario, counts] : scenario_counts)
        report.per_scenario_acc[scenario] = safe_div(counts[0], counts[1]);

    BinaryStats& b = report.binary;
    b.recall_risk = safe_div(tp, tp + fn);
    b.recall_norisk = safe_div(tn, tn + fp);
    b.precision_risk = safe_div(tp, tp + fp);
    b.recall_risk_dup = b.recall_risk;
    b.f1_risk = f1(b.precision_risk, b.recall_risk);
    double precision_norisk = safe_div(tn, tn + fn);
    b.f1_norisk = f1(precision_norisk, b.recall_norisk);
    b.macro_f1 = 0.5 * (b.f1_risk + b.f1_norisk);
    double support_risk = tp + fn, support_norisk = tn + fp;
    b.weighted_f1 = (support_risk * b.f1_risk + support_norisk * b.f1_norisk) / static_cast<double>(n);
    return report;
}

nlohmann::json report_to_json(const EvalReport& report) {
    nlohmann::json severity = nlohmann::json::object();
    for (const auto& [k, v] : report.severity_acc) severity[k] = v;
    nlohmann::json scenario = nlohmann::json::object();
    for (const auto& [k, v] : report.per_scenario_acc) scenario[k] = v;
    return {{"n", report.n},
            {"wide_acc", report.wide_acc},
            {"wide_acc_scene_only", report.wide_acc_scene_only},
            {"strict_acc", report.strict_acc},
            {"severity_acc", severity},
            {"per_scenario_acc", scenario},
            {"binary",
             {{"recall_norisk", report.binary.recall_norisk},
              {"recall_risk", report.binary.recall_risk},
              {"precision_risk", report.binary.precision_risk},
              {"recall_risk_dup", report.binary.recall_risk_dup},
              {"f1_risk", report.binary.f1_risk},
              {"macro_f1", report.binary.macro_f1},
              {"weighted_f1", report.binary.weighted_f1}}},
            {"consistency", report.consistency}};
}

}  // namespace blm
