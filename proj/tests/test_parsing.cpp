#include "doctest.h"

#include <cmath>
#include <regex>
#include <string>
#include <vector>

#include "blm/parsing.hpp"
#include "blm/rng.hpp"
#include "blm/taxonomy.hpp"
#include "blm/vocab.hpp"

using namespace blm;

namespace {

std::vector<int> toks(const Vocabulary& v, const std::vector<std::string>& words) {
    std::vector<int> out;
    for (const auto& w : words) out.push_back(v.require(w));
    return out;
}

// Independent oracle for tagged-region presence, applied to the detokenized
// string: a <think>...</think> pair followed (anywhere later) by an
// <answer>...</answer> pair.
bool regex_both_regions(const std::string& text) {
    static const std::regex re("<think> (?:.* )?</think>(?: .*)? <answer>(?: .*)? </answer>");
    return std::regex_search(text, re);
}

}  // namespace

TEST_CASE("well-formed output parses fully") {
    PolicySchema schema = default_schema();
    Vocabulary v = build_vocabulary(schema, 8, 4);
    const ScenarioEntry* scen = schema.risk_scenarios().front();
    const ViolationType& ty = scen->types.front();
    auto tokens = toks(v, {"<think>", scen->keywords.front(), "</think>", "<answer>", "scene=",
                           scen->id, "type=", ty.id, "severity=", severity_name(ty.default_severity),
                           "</answer>"});
    StructuredOutput out = parse_output(tokens, v, schema);
    REQUIRE(out.think_span.has_value());
    REQUIRE(out.answer_span.has_value());
    REQUIRE(out.parsed_answer.has_value());
    CHECK(out.parsed_answer->scenario == scen->id);
    CHECK(out.parsed_answer->violation_type == ty.id);
    CHECK(out.parsed_answer->severity == ty.default_severity);
    CHECK(out.think_interior() == std::vector<int>{v.require(scen->keywords.front())});
}

TEST_CASE("unregistered type id leaves parsed_answer absent") {
    PolicySchema schema = default_schema();
    Vocabulary v = build_vocabulary(schema, 8, 4);
    const ScenarioEntry* scen = schema.risk_scenarios().front();
    const ScenarioEntry* other = schema.risk_scenarios().back();
    // type id belongs to a different scenario: answer_span present, label invalid
    auto tokens = toks(v, {"<think>", "</think>", "<answer>", "scene=", scen->id, "type=",
                           other->types.front().id, "severity=", "high", "</answer>"});
    StructuredOutput out = parse_output(tokens, v, schema);
    CHECK(out.answer_span.has_value());
    CHECK(!out.parsed_answer.has_value());
}

TEST_CASE("missing or misordered tags degrade gracefully") {
    PolicySchema schema = default_schema();
    Vocabulary v = build_vocabulary(schema, 8, 4);

    StructuredOutput no_close = parse_output(toks(v, {"<think>", "<answer>", "</answer>"}), v, schema);
    CHECK(!no_close.think_span.has_value());
    // no think pair: first answer pair anywhere still counts
    CHECK(no_close.answer_span.has_value());

    StructuredOutput empty = parse_output({}, v, schema);
    CHECK(!empty.think_span.has_value());
    CHECK(!empty.answer_span.has_value());
    CHECK(empty.think_interior().empty());

    // answer entirely before the think pair: no answer pair after think
    StructuredOutput rev =
        parse_output(toks(v, {"<answer>", "</answer>", "<think>", "</think>"}), v, schema);
    CHECK(rev.think_span.has_value());
    CHECK(!rev.answer_span.has_value());
}

TEST_CASE("parse_output tagged-region detection matches the regex oracle on fuzz") {
    PolicySchema schema = default_schema();
    Vocabulary v = build_vocabulary(schema, 8, 4);
    auto rng = make_rng(derive_seed(21, {0xf022}));
    // token pool biased toward tags so pairs actually occur
    std::vector<int> pool{v.think_open, v.think_open, v.think_close, v.think_close,
                          v.answer_open, v.answer_open, v.answer_close, v.answer_close,
                          v.scene_marker, v.sep};
    for (int i = 0; i < 6; ++i) pool.push_back(uniform_int(rng, v.size()));

    for (int trial = 0; trial < 5000; ++trial) {
        int len = uniform_int(rng, 14);
        std::vector<int> tokens;
        for (int i = 0; i < len; ++i)
            tokens.push_back(pool[static_cast<std::size_t>(uniform_int(rng, static_cast<int>(pool.size())))]);
        StructuredOutput out = parse_output(tokens, v, schema);
        bool both = out.think_span.has_value() && out.answer_span.has_value();
        CHECK(both == regex_both_regions(v.detokenize(tokens)));
    }
}

TEST_CASE("keyword_prior arithmetic: 4 keywords, vocab 100, smoothing 0.1") {
    // shrink the schema to a single scenario with exactly 4 label keywords
    PolicySchema schema = default_schema();
    PolicySchema small;
    small.version = schema.version;
    ScenarioEntry scen = *schema.risk_scenarios().front();
    scen.keywords.resize(2);
    scen.types.resize(1);
    scen.types[0].keywords.resize(2);
    ScenarioEntry clean = schema.no_risk_scenario();
    small.scenarios = {scen, clean};

    Vocabulary probe = build_vocabulary(small, 4, 0);
    int filler = 100 - probe.size();
    REQUIRE(filler >= 0);
    Vocabulary v = build_vocabulary(small, 4, filler);
    REQUIRE(v.size() == 100);

    RiskLabel label{scen.types[0].default_severity, scen.id, scen.types[0].id};
    std::vector<double> prior = keyword_prior(label, small, v, 0.1);
    REQUIRE(prior.size() == 100);
    double sum = 0.0;
    std::vector<std::string> kws = small.label_keywords(label);
    REQUIRE(kws.size() == 4);
    for (const auto& w : kws) CHECK(prior[static_cast<std::size_t>(v.require(w))] ==
                                    doctest::Approx(0.225).epsilon(1e-12));
    int kw_count = 0;
    for (std::size_t i = 0; i < prior.size(); ++i) {
        sum += prior[i];
        if (prior[i] > 0.2) ++kw_count;
        else CHECK(prior[i] == doctest::Approx(0.1 / 96).epsilon(1e-12));
    }
    CHECK(kw_count == 4);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("keyword_prior rejects no-risk labels") {
    PolicySchema schema = default_schema();
    Vocabulary v = build_vocabulary(schema, 8, 4);
    CHECK_THROWS_AS(keyword_prior(schema.no_risk_label(), schema, v, 0.1), std::domain_error);
}
