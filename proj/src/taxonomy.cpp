#include "blm/taxonomy.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "blm/errors.hpp"

namespace blm {

std::string severity_name(Severity s) {
    switch (s) {
        case Severity::High: return "high";
        case Severity::Medium: return "medium";
        case Severity::Low: return "low";
        case Severity::None: return "none";
    }
    return "none";
}

std::optional<Severity> severity_from_name(const std::string& name) {
    if (name == "high") return Severity::High;
    if (name == "medium") return Severity::Medium;
    if (name == "low") return Severity::Low;
    if (name == "none") return Severity::None;
    return std::nullopt;
}

int severity_rank(Severity s) {
    switch (s) {
        case Severity::High: return 3;
        case Severity::Medium: return 2;
        case Severity::Low: return 1;
        case Severity::None: return 0;
    }
    return 0;
}

bool RiskLabel::is_no_risk() const { return severity == Severity::None; }

const ScenarioEntry* PolicySchema::find_scenario(const std::string& id) const {
    for (const auto& s : scenarios)
        if (s.id == id) return &s;
    return nullptr;
}

const ViolationType* PolicySchema::find_type(const std::string& scenario_id,
                                             const std::string& type_id) const {
    const ScenarioEntry* s = find_scenario(scenario_id);
    if (!s) return nullptr;
    for (const auto& t : s->types)
        if (t.id == type_id) return &t;
    return nullptr;
}

const ScenarioEntry& PolicySchema::no_risk_scenario() const {
    for (const auto& s : scenarios)
        if (s.no_risk) return s;
    throw SchemaError("schema has no no-risk scenario");
}

std::vector<const ScenarioEntry*> PolicySchema::risk_scenarios() const {
    std::vector<const ScenarioEntry*> out;
    for (const auto& s : scenarios)
        if (!s.no_risk) out.push_back(&s);
    return out;
}

RiskLabel PolicySchema::no_risk_label() const {
    const ScenarioEntry& s = no_risk_scenario();
    return RiskLabel{Severity::None, s.id, s.types.front().id};
}

bool PolicySchema::valid_label(const RiskLabel& label) const {
    const ScenarioEntry* s = find_scenario(label.scenario);
    if (!s) return false;
    const ViolationType* t = find_type(label.scenario, label.violation_type);
    if (!t) return false;
    // no-risk scenario <=> severity None <=> no-risk type
    if (s->no_risk != (label.severity == Severity::None)) return false;
    return true;
}

std::vector<std::string> PolicySchema::label_keywords(const RiskLabel& label) const {
    const ScenarioEntry* s = find_scenario(label.scenario);
    const ViolationType* t = find_type(label.scenario, label.violation_type);
    if (!s || !t) throw DataError("label not registered in schema: " + label.scenario);
    std::vector<std::string> out = s->keywords;
    for (const auto& kw : t->keywords) {
        bool dup = false;
        for (const auto& existing : out) dup = dup || existing == kw;
        if (!dup) out.push_back(kw);
    }
    return out;
}

std::string PolicySchema::serialize_guidelines() const {
    std::ostringstream os;
    os << "policy schema v" << version << "\n";
    for (const auto& s : scenarios) {
        os << "scenario " << s.id << " (" << s.name << ") keywords:";
        for (const auto& kw : s.keywords) os << " " << kw;
        os << "\n";
        for (const auto& t : s.types) {
            os << "  type " << t.id << " (" << t.name << ") severity=" << severity_name(t.default_severity)
               << " keywords:";
            for (const auto& kw : t.keywords) os << " " << kw;
            os << "\n";
        }
    }
    return os.str();
}

namespace {

Severity require_severity(const std::string& name) {
    auto s = severity_from_name(name);
    if (!s) throw SchemaError("unknown severity: " + name);
    return *s;
}

}  // namespace

PolicySchema load_schema(const nlohmann::json& doc) {
    PolicySchema schema;
    try {
        schema.version = doc.at("version").get<std::string>();
        for (const auto& sj : doc.at("scenarios")) {
            ScenarioEntry s;
            s.id = sj.at("id").get<std::string>();
            s.name = sj.at("name").get<std::string>();
            s.keywords = sj.at("keywords").get<std::vector<std::string>>();
            s.no_risk = sj.value("no_risk", false);
            for (const auto& tj : sj.at("types")) {
                ViolationType t;
                t.id = tj.at("id").get<std::string>();
                t.name = tj.at("name").get<std::string>();
                t.keywords = tj.at("keywords").get<std::vector<std::string>>();
                t.default_severity = require_severity(tj.at("severity").get<std::string>());
                s.types.push_back(std::move(t));
            }
            schema.scenarios.push_back(std::move(s));
        }
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("malformed schema document: ") + e.what());
    }

    int risk = 0, norisk = 0;
    std::set<std::string> ids;
    for (const auto& s : schema.scenarios) {
        (s.no_risk ? norisk : risk)++;
        if (!ids.insert(s.id).second) throw SchemaError("duplicate identifier: " + s.id);
        if (s.keywords.empty()) throw SchemaError("empty keyword set for scenario " + s.id);
        if (s.types.empty()) throw SchemaError("scenario without violation types: " + s.id);
        for (const auto& t : s.types) {
            if (!ids.insert(t.id).second) throw SchemaError("duplicate identifier: " + t.id);
            if (t.keywords.empty()) throw SchemaError("empty keyword set for type " + t.id);
            if (s.no_risk != (t.default_severity == Severity::None))
                throw SchemaError("severity inconsistent with no-risk flag for type " + t.id);
        }
    }
    if (risk != 7 || norisk != 1)
        throw SchemaError("schema must define exactly 7 risk scenarios plus 1 no-risk scenario, got " +
                          std::to_string(risk) + "+" + std::to_string(norisk));
    return schema;
}

PolicySchema load_schema_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open schema file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("schema file is not valid JSON: ") + e.what());
    }
    return load_schema(doc);
}

namespace {

nlohmann::json type_json(const char* id, const char* name, std::vector<std::string> kws,
                         const char* sev) {
    return {{"id", id}, {"name", name}, {"keywords", kws}, {"severity", sev}};
}

nlohmann::json scenario_json(const char* id, const char* name, std::vector<std::string> kws,
                             nlohmann::json types, bool no_risk = false) {
    nlohmann::json j = {{"id", id}, {"name", name}, {"keywords", kws}, {"types", types}};
    if (no_risk) j["no_risk"] = true;
    return j;
}

}  // namespace

nlohmann::json default_schema_json() {
    nlohmann::json scenarios = nlohmann::json::array();
    scenarios.push_back(scenario_json(
        "illegal_content", "Illegal Content", {"contraband", "unlawful"},
        {type_json("contraband_sale", "Contraband Sale", {"smuggled", "blackmarket"}, "high"),
         type_json("gambling_promo", "Gambling Promotion", {"casino", "wager"}, "high")}));
    scenarios.push_back(scenario_json(
        "false_marketing", "False Marketing", {"overclaim", "fabricated"},
        {type_json("income_exaggeration", "Income Exaggeration", {"getrich", "guaranteed_profit"}, "medium"),
         type_json("fake_discount", "Fake Discount", {"pricetrick", "phony_sale"}, "low")}));
    scenarios.push_back(scenario_json(
        "misleading_operations", "Misleading Operations", {"baitclick", "decoy"},
        {type_json("clickbait_redirect", "Clickbait Redirect", {"lurelink", "trapbutton"}, "low"),
         type_json("fake_interaction", "Fake Interaction", {"botlikes", "stagedchat"}, "medium")}));
    scenarios.push_back(scenario_json(
        "adult_content", "Adult Content", {"explicit", "lewd"},
        {type_json("sexual_imagery", "Sexual Imagery", {"nudity", "obscene"}, "high"),
         type_json("suggestive_dialogue", "Suggestive Dialogue", {"innuendo", "vulgar"}, "medium")}));
    scenarios.push_back(scenario_json(
        "privacy_violation", "Privacy Violation", {"doxxing", "surveillance"},
        {type_json("privacy_leak", "Privacy Leak", {"leakedinfo", "exposedid"}, "high"),
         type_json("data_harvesting", "Data Harvesting", {"scraping", "tracking"}, "medium")}));
    scenarios.push_back(scenario_json(
        "superstition", "Superstition", {"occult", "mystic"},
        {type_json("feudal_superstition", "Feudal Superstition", {"talisman", "hexcure"}, "medium"),
         type_json("fortune_telling", "Fortune Telling", {"palmistry", "zodiacscam"}, "low")}));
    scenarios.push_back(scenario_json(
        "medical_exaggeration", "Medical Exaggeration", {"curefast", "quackery"},
        {type_json("miracle_cure", "Miracle Cure", {"healall", "wonderdrug"}, "high"),
         type_json("unlicensed_treatment", "Unlicensed Treatment", {"backroom", "unverified"}, "medium")}));
    scenarios.push_back(scenario_json(
        "no_risk", "No Risk", {"compliant", "benign"},
        {type_json("clean", "Clean", {"ordinary", "harmless"}, "none")}, true));
    return {{"version", "1.0"}, {"scenarios", scenarios}};
}

PolicySchema default_schema() { return load_schema(default_schema_json()); }

}  // namespace blm
