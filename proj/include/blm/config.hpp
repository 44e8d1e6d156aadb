#pragma once

#include <cstdint>
#include <string>

#include "blm/grpo.hpp"
#include "blm/synth.hpp"

namespace blm {

struct SftConfig {
    double lambda = 0.5;
    double smoothing = 0.1;
    double lr = 0.5;
    int epochs = 6;
    int batch_size = 16;
};

struct CurateConfig {
    int passes = 4;
    double temperature = 1.5;
    double concat_rate = 0.1;
    bool augment = true;  // false: D_RL = hard set only
};

struct ModelConfig {
    int hidden = 24;
    int filler_tokens = 20;
    int max_len = 32;
};

// One global config document with per-module sections; every CLI flag
// overrides its config key.
struct AppConfig {
    GeneratorConfig generator;
    int keyframes_m = 3;
    ModelConfig model;
    SftConfig sft;
    TrainerConfig rl;
    CurateConfig curate;
    std::string schema_path;  // empty: bundled default schema
    std::uint64_t seed = 1;
    int threads = 1;

    void validate() const;
};

AppConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const AppConfig& config);
AppConfig load_config_file(const std::string& path);

}  // namespace blm
