#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace blm {

enum class Severity { High, Medium, Low, None };

std::string severity_name(Severity s);
std::optional<Severity> severity_from_name(const std::string& name);
int severity_rank(Severity s);  // High=3 .. None=0

// One node of the three-level taxonomy: severity / scenario / violation type.
struct RiskLabel {
    Severity severity = Severity::None;
    std::string scenario;
    std::string violation_type;

    bool is_no_risk() const;
    bool operator==(const RiskLabel&) const = default;
};

struct ViolationType {
    std::string id;
    std::string name;
    std::vector<std::string> keywords;
    Severity default_severity = Severity::Low;
};

struct ScenarioEntry {
    std::string id;
    std::string name;
    std::vector<std::string> keywords;
    std::vector<ViolationType> types;
    bool no_risk = false;
};

// Seven risk scenarios plus one dedicated no-risk scenario.
struct PolicySchema {
    std::string version;
    std::vector<ScenarioEntry> scenarios;

    const ScenarioEntry* find_scenario(const std::string& id) const;
    const ViolationType* find_type(const std::string& scenario_id, const std::string& type_id) const;
    const ScenarioEntry& no_risk_scenario() const;
    std::vector<const ScenarioEntry*> risk_scenarios() const;

    RiskLabel no_risk_label() const;
    bool valid_label(const RiskLabel& label) const;

    // Union of the scenario's and the violation type's keyword sets.
    std::vector<std::string> label_keywords(const RiskLabel& label) const;

    // Flat text rendering used in prompts and critic requests.
    std::string serialize_guidelines() const;
};

PolicySchema load_schema(const nlohmann::json& doc);
PolicySchema load_schema_file(const std::string& path);

// The schema bundled with the repo (same content as data/schema_default.json).
PolicySchema default_schema();
nlohmann::json default_schema_json();

}  // namespace blm
