#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "blm/errors.hpp"
#include "blm/keyframe.hpp"
#include "blm/parsing.hpp"
#include "blm/policy_model.hpp"
#include "blm/synth.hpp"
#include "blm/taxonomy.hpp"
#include "blm/vocab.hpp"

using namespace blm;

namespace {

struct Fixture {
    PolicySchema schema = default_schema();
    Vocabulary vocab;
    RiskPromptBank bank;
    Fixture() {
        vocab = build_vocabulary(schema, 16, 20);
        bank = make_prompt_bank(schema, 16, 7);
    }
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

TEST_CASE("generator config validation") {
    GeneratorConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    GeneratorConfig bad = cfg;
    bad.signal_strength = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.mismatch_rate = 1.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.per_scenario_count = -1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.asr_len = 2;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("prompt bank is orthonormal including the benign axis") {
    Fixture fx;
    REQUIRE(fx.bank.prompts.size() == 7);
    std::vector<std::vector<double>> all;
    for (const auto& p : fx.bank.prompts) all.push_back(p.vec);
    all.push_back(fx.bank.benign);
    for (std::size_t i = 0; i < all.size(); ++i) {
        CHECK(std::abs(dot(all[i], all[i]) - 1.0) < 1e-9);
        for (std::size_t j = i + 1; j < all.size(); ++j) CHECK(std::abs(dot(all[i], all[j])) < 1e-9);
    }
    CHECK(benign_direction(fx.schema, 16, 7) == fx.bank.benign);
}

TEST_CASE("dataset sizes, determinism and per-sample invariants") {
    Fixture fx;
    GeneratorConfig cfg;
    cfg.per_scenario_count = 100;
    cfg.no_risk_count = 300;
    auto data = generate_dataset(cfg, fx.schema, fx.vocab, fx.bank, 11);
    REQUIRE(data.size() == 7 * 100 + 300);

    auto again = generate_dataset(cfg, fx.schema, fx.vocab, fx.bank, 11);
    REQUIRE(again.size() == data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        CHECK(data[i].id == again[i].id);
        CHECK(data[i].label == again[i].label);
        CHECK(data[i].frames.frames == again[i].frames.frames);
        CHECK(data[i].frames.patch_grids == again[i].frames.patch_grids);
        CHECK(data[i].asr_tokens == again[i].asr_tokens);
        CHECK(data[i].planted_frames == again[i].planted_frames);
        CHECK(data[i].mismatch == again[i].mismatch);
    }
    auto other = generate_dataset(cfg, fx.schema, fx.vocab, fx.bank, 12);
    CHECK(other[0].frames.frames != data[0].frames.frames);

    int risk = 0, mismatches = 0;
    for (const auto& s : data) {
        CHECK_NOTHROW(s.frames.validate());
        CHECK(static_cast<int>(s.asr_tokens.size()) == cfg.asr_len);
        if (s.label.is_no_risk()) {
            CHECK(s.planted_frames.empty());
            CHECK(!s.mismatch);
            CHECK(s.provenance == Provenance::HighImpressionCompliant);
        } else {
            ++risk;
            if (s.mismatch) ++mismatches;
            // planted frames: 1..3, distinct temporal thirds (visual-side
            // mismatches carry none)
            if (!s.planted_frames.empty()) {
                CHECK(s.planted_frames.size() >= 1);
                CHECK(s.planted_frames.size() <= 3);
                std::vector<int> thirds;
                for (int f : s.planted_frames) {
                    CHECK(f >= 0);
                    CHECK(f < cfg.n_frames);
                    int b = 0;
                    while ((b + 1) * cfg.n_frames / 3 <= f) ++b;
                    thirds.push_back(b);
                }
                std::sort(thirds.begin(), thirds.end());
                CHECK(std::adjacent_find(thirds.begin(), thirds.end()) == thirds.end());
            } else {
                CHECK(s.mismatch);  // only ASR-side mismatches lack visuals
            }
        }
    }
    CHECK(risk == 700);
    // default mismatch_rate 0.1 over 700 risk samples
    CHECK(mismatches > 30);
    CHECK(mismatches < 130);
}

TEST_CASE("no-risk frames stay oblique to every risk prompt") {
    Fixture fx;
    GeneratorConfig cfg;
    cfg.per_scenario_count = 0;
    cfg.no_risk_count = 20;
    cfg.mismatch_rate = 0.0;
    auto data = generate_dataset(cfg, fx.schema, fx.vocab, fx.bank, 3);
    for (const auto& s : data)
        for (int i = 0; i < s.frames.n_frames; ++i)
            for (const auto& p : fx.bank.prompts)
                CHECK(std::abs(cosine(s.frames.frame(i), p.vec.data(), s.frames.dim)) < 0.3);
}

TEST_CASE("mock describer flags cross-modal mismatch in the observation stage") {
    Fixture fx;
    GeneratorConfig cfg;
    cfg.per_scenario_count = 4;
    cfg.no_risk_count = 0;
    MockDescriber describer(fx.schema, fx.vocab);
    const std::string marker = fx.vocab.text(fx.vocab.mismatch_marker);

    cfg.mismatch_rate = 1.0;
    bool saw_mismatch = false;
    for (const auto& s : generate_dataset(cfg, fx.schema, fx.vocab, fx.bank, 5)) {
        REQUIRE(s.mismatch);
        saw_mismatch = true;
        ClueSet clue = build_clue_set(s.frames, fx.bank, 3);
        ICoTRecord rec = make_icot_record(s, clue, fx.schema, fx.vocab, describer);
        CHECK(rec.stages[0].find(marker) != std::string::npos);
        CHECK(rec.label == s.label);
        for (const auto& stage : rec.stages) CHECK(!stage.empty());
        // verdict stage carries the final structured decision
        CHECK(rec.stages[3].find("scene= " + s.label.scenario) != std::string::npos);
    }
    CHECK(saw_mismatch);

    cfg.mismatch_rate = 0.0;
    for (const auto& s : generate_dataset(cfg, fx.schema, fx.vocab, fx.bank, 5)) {
        ClueSet clue = build_clue_set(s.frames, fx.bank, 3);
        ICoTRecord rec = make_icot_record(s, clue, fx.schema, fx.vocab, describer);
        CHECK(rec.stages[0].find(marker) == std::string::npos);
    }
}

TEST_CASE("icot prompts reference clues, transcript and guidelines") {
    Fixture fx;
    GeneratorConfig cfg;
    cfg.per_scenario_count = 1;
    cfg.no_risk_count = 0;
    auto data = generate_dataset(cfg, fx.schema, fx.vocab, fx.bank, 9);
    const VideoSample& s = data.front();
    ClueSet clue = build_clue_set(s.frames, fx.bank, 3);
    auto prompts = assemble_icot_prompts(s, clue, fx.schema, fx.vocab);
    std::string guidelines = fx.schema.serialize_guidelines();
    for (const auto& p : prompts) CHECK(p.find(guidelines) != std::string::npos);
    for (const auto& e : clue.entries) {
        std::string ref = "frame_" + std::to_string(e.frame_index) + ":patch_" +
                          std::to_string(e.patch_index);
        CHECK(prompts[0].find(ref) != std::string::npos);
        CHECK(prompts[1].find(ref) != std::string::npos);
    }
    CHECK(prompts[0].find(fx.vocab.text(s.asr_tokens[0])) != std::string::npos);
}

TEST_CASE("sft targets follow the output grammar and the 5:2:1 think mix") {
    Fixture fx;
    GeneratorConfig cfg;
    cfg.per_scenario_count = 60;
    cfg.no_risk_count = 60;
    auto data = generate_dataset(cfg, fx.schema, fx.vocab, fx.bank, 17);
    std::map<std::size_t, int> think_len_counts;
    int scen_only = 0, type_only = 0, pair = 0;
    for (const auto& s : data) {
        auto target = sft_target_tokens(s, fx.schema, fx.vocab);
        StructuredOutput out = parse_output(target, fx.vocab, fx.schema);
        REQUIRE(out.parsed_answer.has_value());
        CHECK(*out.parsed_answer == s.label);

        const ScenarioEntry* scen = fx.schema.find_scenario(s.label.scenario);
        const ViolationType* type = fx.schema.find_type(s.label.scenario, s.label.violation_type);
        auto in = [&](const std::vector<std::string>& kws, int tok) {
            return std::find(kws.begin(), kws.end(), fx.vocab.text(tok)) != kws.end();
        };
        auto think = out.think_interior();
        REQUIRE(!think.empty());
        REQUIRE(think.size() <= 2);
        ++think_len_counts[think.size()];
        if (think.size() == 2) {
            CHECK(in(scen->keywords, think[0]));
            CHECK(in(type->keywords, think[1]));
            ++pair;
        } else if (in(scen->keywords, think[0])) {
            ++scen_only;
        } else {
            CHECK(in(type->keywords, think[0]));
            ++type_only;
        }
        // targets are deterministic functions of the sample
        CHECK(sft_target_tokens(s, fx.schema, fx.vocab) == target);
    }
    // rough 5:2:1 proportions over 480 samples
    CHECK(scen_only > type_only);
    CHECK(type_only > pair);
    CHECK(pair > 0);
}

TEST_CASE("sample citations list clue frames then transcript keywords") {
    Fixture fx;
    GeneratorConfig cfg;
    cfg.per_scenario_count = 5;
    cfg.no_risk_count = 0;
    cfg.mismatch_rate = 0.0;
    for (const auto& s : generate_dataset(cfg, fx.schema, fx.vocab, fx.bank, 19)) {
        ClueSet clue = build_clue_set(s.frames, fx.bank, 3);
        auto cites = sample_citations(s, clue, fx.schema, fx.vocab);
        REQUIRE(cites.size() >= clue.entries.size());
        for (std::size_t i = 0; i < clue.entries.size(); ++i)
            CHECK(cites[i] == "frame_" + std::to_string(clue.entries[i].frame_index));
        // non-mismatch risk samples carry their label keywords in the ASR
        auto kws = fx.schema.label_keywords(s.label);
        for (const auto& kw : kws)
            CHECK(std::count(cites.begin(), cites.end(), kw) == 1);
    }
}

TEST_CASE("rejection sampling marks nearly everything hard for an untrained model") {
    Fixture fx;
    GeneratorConfig cfg;
    cfg.per_scenario_count = 3;
    cfg.no_risk_count = 3;
    auto data = generate_dataset(cfg, fx.schema, fx.vocab, fx.bank, 23);
    PolicyModel model =
        init_model(feature_dim_for(fx.schema), 24, fx.vocab, 1, context_dim_for(fx.schema));
    auto hard = rejection_sample_hard(data, model, fx.bank, fx.schema, fx.vocab, 3, 2, 1.5, 32, 29);
    CHECK(hard.size() >= data.size() - 2);
    // deterministic under the same seed
    auto hard2 = rejection_sample_hard(data, model, fx.bank, fx.schema, fx.vocab, 3, 2, 1.5, 32, 29);
    REQUIRE(hard.size() == hard2.size());
    for (std::size_t i = 0; i < hard.size(); ++i) CHECK(hard[i].id == hard2[i].id);

    CHECK_THROWS_AS(
        rejection_sample_hard(data, model, fx.bank, fx.schema, fx.vocab, 3, 0, 1.0, 32, 29),
        ConfigError);
}

TEST_CASE("safety concat resamples frames by stride and keeps the severe parent") {
    Fixture fx;
    GeneratorConfig cfg;
    cfg.per_scenario_count = 1;
    cfg.no_risk_count = 1;
    cfg.mismatch_rate = 0.0;
    auto data = generate_dataset(cfg, fx.schema, fx.vocab, fx.bank, 31);
    const VideoSample* risk = nullptr;
    const VideoSample* clean = nullptr;
    for (const auto& s : data) {
        if (s.label.is_no_risk() && !clean) clean = &s;
        if (!s.label.is_no_risk() && !risk) risk = &s;
    }
    REQUIRE(risk);
    REQUIRE(clean);

    VideoSample out = safety_concat(*risk, *clean, fx.schema, fx.vocab);
    CHECK(out.origin == "concat");
    CHECK(out.id == risk->id + "+" + clean->id);
    CHECK(out.frames.n_frames == 16);
    // stride-2 resample of the 32-frame concatenation: combined indices 0,2,...,30
    for (int i = 0; i < 16; ++i) {
        int combined = 2 * i;
        const VideoSample& src = combined < 16 ? *risk : *clean;
        int local = combined % 16;
        for (int j = 0; j < out.frames.dim; ++j)
            CHECK(out.frames.frame(i)[j] == src.frames.frame(local)[j]);
    }
    CHECK(out.asr_tokens.size() == risk->asr_tokens.size() + clean->asr_tokens.size() + 1);
    CHECK(out.asr_tokens[risk->asr_tokens.size()] == fx.vocab.sep);
    CHECK(out.label == risk->label);  // higher-severity parent wins

    // surviving planted frames map to even combined positions from the risk parent
    for (int f : out.planted_frames)
        CHECK(std::find(risk->planted_frames.begin(), risk->planted_frames.end(), 2 * f) !=
              risk->planted_frames.end());

    // unrelated risk scenarios are rejected
    auto risk_scens = fx.schema.risk_scenarios();
    VideoSample other = *risk;
    other.label.scenario = risk_scens[1]->id;
    other.label.violation_type = risk_scens[1]->types.front().id;
    CHECK_THROWS_AS(safety_concat(*risk, other, fx.schema, fx.vocab), std::domain_error);
}
