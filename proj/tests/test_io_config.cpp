#include "doctest.h"

#include <cstdio>
#include <string>
#include <vector>

#include "blm/config.hpp"
#include "blm/errors.hpp"
#include "blm/io.hpp"
#include "blm/keyframe.hpp"
#include "blm/synth.hpp"

using namespace blm;

namespace {

DatasetFile make_dataset_file(std::uint64_t seed) {
    PolicySchema schema = default_schema();
    Vocabulary vocab = build_vocabulary(schema, 16, 20);
    RiskPromptBank bank = make_prompt_bank(schema, 16, 7);
    GeneratorConfig cfg;
    cfg.per_scenario_count = 2;
    cfg.no_risk_count = 3;
    DatasetFile file;
    file.schema_version = schema.version;
    file.vocab_hash = vocab.hash();
    file.generator = cfg;
    file.bank = bank;
    file.samples = generate_dataset(cfg, schema, vocab, bank, seed);
    return file;
}

}  // namespace

TEST_CASE("an empty json document yields exactly the shipped defaults") {
    // guard on the frozen default pipeline configuration
    AppConfig def = config_from_json(nlohmann::json::object());
    AppConfig shipped = load_config_file("configs/default.json");
    CHECK(config_to_json(def) == config_to_json(shipped));

    CHECK(def.seed == 1);
    CHECK(def.threads == 1);
    CHECK(def.keyframes_m == 3);
    CHECK(def.generator.per_scenario_count == 100);
    CHECK(def.generator.no_risk_count == 300);
    CHECK(def.generator.signal_strength == 0.9);
    CHECK(def.generator.mismatch_rate == 0.1);
    CHECK(def.model.hidden == 24);
    CHECK(def.model.max_len == 32);
    CHECK(def.sft.lambda == 0.5);
    CHECK(def.sft.smoothing == 0.1);
    CHECK(def.sft.lr == 0.5);
    CHECK(def.sft.epochs == 6);
    CHECK(def.sft.batch_size == 16);
    CHECK(def.rl.group_size == 8);
    CHECK(def.rl.steps == 500);
    CHECK(def.rl.clip_scale == 0.2);
    CHECK(def.rl.lr == 0.015);
    CHECK(def.rl.temperature == 1.2);
    CHECK(def.rl.max_len == 32);
    CHECK(def.rl.max_resample_attempts == 3);
    CHECK(def.rl.anneal_mode == AnnealMode::Linear);
    CHECK(def.rl.normalization_mode == NormalizationMode::Token);
    CHECK(def.rl.loss_form == LossForm::Algorithm);
    CHECK(def.rl.std_mode == StdMode::Population);
    CHECK(def.curate.passes == 4);
    CHECK(def.curate.temperature == 1.5);
    CHECK(def.curate.concat_rate == 0.1);
    CHECK(def.curate.augment);
    CHECK_NOTHROW(def.validate());
}

TEST_CASE("config json round-trips and rejects invalid values") {
    AppConfig cfg = config_from_json(nlohmann::json::object());
    cfg.seed = 17;
    cfg.rl.steps = 25;
    cfg.generator.signal_strength = 0.7;
    AppConfig back = config_from_json(config_to_json(cfg));
    CHECK(config_to_json(back) == config_to_json(cfg));

    nlohmann::json bad = config_to_json(cfg);
    bad["rl"]["anneal_mode"] = "quadratic";
    CHECK_THROWS_AS(config_from_json(bad), ConfigError);
    bad = config_to_json(cfg);
    bad["generator"]["signal_strength"] = 1.5;
    CHECK_THROWS_AS(config_from_json(bad), ConfigError);
    bad = config_to_json(cfg);
    bad["threads"] = 0;
    CHECK_THROWS_AS(config_from_json(bad), ConfigError);
}

TEST_CASE("dataset files round-trip byte-stably") {
    DatasetFile file = make_dataset_file(33);
    std::string text = dataset_to_string(file);
    DatasetFile back = dataset_from_string(text);
    CHECK(back.schema_version == file.schema_version);
    CHECK(back.vocab_hash == file.vocab_hash);
    CHECK(back.bank.dim == file.bank.dim);
    CHECK(back.bank.benign == file.bank.benign);
    REQUIRE(back.bank.prompts.size() == file.bank.prompts.size());
    for (std::size_t i = 0; i < file.bank.prompts.size(); ++i) {
        CHECK(back.bank.prompts[i].scenario == file.bank.prompts[i].scenario);
        CHECK(back.bank.prompts[i].vec == file.bank.prompts[i].vec);
    }
    REQUIRE(back.samples.size() == file.samples.size());
    for (std::size_t i = 0; i < file.samples.size(); ++i) {
        const VideoSample& a = file.samples[i];
        const VideoSample& b = back.samples[i];
        CHECK(a.id == b.id);
        CHECK(a.label == b.label);
        CHECK(a.provenance == b.provenance);
        CHECK(a.origin == b.origin);
        CHECK(a.mismatch == b.mismatch);
        CHECK(a.planted_frames == b.planted_frames);
        CHECK(a.asr_tokens == b.asr_tokens);
        CHECK(a.frames.frames == b.frames.frames);          // bit-exact doubles
        CHECK(a.frames.patch_grids == b.frames.patch_grids);
    }
    // serialization is a pure function: a second pass is byte-identical
    CHECK(dataset_to_string(back) == text);

    std::string path = "/tmp/blm_test_dataset.jsonl";
    save_dataset(file, path);
    CHECK(dataset_to_string(load_dataset(path)) == text);
    CHECK(read_file(path) == text);
    std::remove(path.c_str());
}

TEST_CASE("malformed dataset text is rejected") {
    DatasetFile file = make_dataset_file(34);
    std::string text = dataset_to_string(file);
    CHECK_THROWS_AS(dataset_from_string(""), DataError);
    CHECK_THROWS_AS(dataset_from_string("not json\n"), DataError);
    // header promises more records than the body carries
    std::size_t cut = text.rfind("\n{");
    REQUIRE(cut != std::string::npos);
    CHECK_THROWS_AS(dataset_from_string(text.substr(0, cut + 1)), DataError);
}

TEST_CASE("clue files round-trip and carry the vocab hash") {
    DatasetFile file = make_dataset_file(35);
    std::vector<ClueFileRecord> records;
    for (const auto& s : file.samples)
        records.push_back({s.id, build_clue_set(s.frames, file.bank, 3)});
    std::string text = clues_to_string(records, file.vocab_hash);
    auto back = clues_from_string(text);
    REQUIRE(back.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(back[i].id == records[i].id);
        REQUIRE(back[i].clue.entries.size() == records[i].clue.entries.size());
        for (std::size_t j = 0; j < records[i].clue.entries.size(); ++j) {
            CHECK(back[i].clue.entries[j].frame_index == records[i].clue.entries[j].frame_index);
            CHECK(back[i].clue.entries[j].patch_index == records[i].clue.entries[j].patch_index);
            CHECK(back[i].clue.entries[j].frame_score == records[i].clue.entries[j].frame_score);
            CHECK(back[i].clue.entries[j].patch_score == records[i].clue.entries[j].patch_score);
        }
    }
    CHECK(clues_to_string(back, file.vocab_hash) == text);
    CHECK_THROWS_AS(clues_from_string("nope"), DataError);

    std::string path = "/tmp/blm_test_clues.jsonl";
    save_clues(records, file.vocab_hash, path);
    CHECK(read_file(path) == text);
    std::remove(path.c_str());
}

TEST_CASE("read_file reports missing paths") {
    CHECK_THROWS_AS(read_file("/tmp/blm_definitely_missing_file"), DataError);
}
