#include "blm/config.hpp"

#include <fstream>

#include "blm/errors.hpp"

namespace blm {

namespace {

AnnealMode anneal_from_name(const std::string& name) {
    if (name == "linear") return AnnealMode::Linear;
    if (name == "product") return AnnealMode::Product;
    throw ConfigError("unknown anneal_mode: " + name);
}

NormalizationMode norm_from_name(const std::string& name) {
    if (name == "token") return NormalizationMode::Token;
    if (name == "sequence") return NormalizationMode::Sequence;
    throw ConfigError("unknown normalization_mode: " + name);
}

LossForm loss_form_from_name(const std::string& name) {
    if (name == "algorithm") return LossForm::Algorithm;
    if (name == "equation") return LossForm::Equation;
    throw ConfigError("unknown loss_form: " + name);
}

StdMode std_from_name(const std::string& name) {
    if (name == "population") return StdMode::Population;
    if (name == "sample") return StdMode::Sample;
    throw ConfigError("unknown std_mode: " + name);
}

const char* anneal_name(AnnealMode m) { return m == AnnealMode::Linear ? "linear" : "product"; }
const char* norm_name(NormalizationMode m) {
    return m == NormalizationMode::Token ? "token" : "sequence";
}
const char* loss_form_name(LossForm f) { return f == LossForm::Algorithm ? "algorithm" : "equation"; }
const char* std_name(StdMode m) { return m == StdMode::Population ? "population" : "sample"; }

}  // namespace

void AppConfig::validate() const {
    generator.validate();
    rl.validate();
    if (keyframes_m < 1) throw ConfigError("keyframes_m must be >= 1");
    if (keyframes_m > generator.n_frames) throw ConfigError("keyframes_m exceeds n_frames");
    if (model.hidden < 1) throw ConfigError("model.hidden must be >= 1");
    if (model.max_len < 11) throw ConfigError("model.max_len too small for the output grammar");
    if (sft.lambda < 0.0) throw ConfigError("sft.lambda must be >= 0");
    if (sft.smoothing < 0.0 || sft.smoothing > 0.5) throw ConfigError("sft.smoothing outside [0, 0.5]");
    if (sft.lr <= 0.0) throw ConfigError("sft.lr must be > 0");
    if (sft.epochs < 1) throw ConfigError("sft.epochs must be >= 1");
    if (sft.batch_size < 1) throw ConfigError("sft.batch_size must be >= 1");
    if (curate.passes < 1) throw ConfigError("curate.passes must be >= 1");
    if (curate.temperature <= 0.0) throw ConfigError("curate.temperature must be > 0");
    if (curate.concat_rate < 0.0 || curate.concat_rate > 1.0)
        throw ConfigError("curate.concat_rate outside [0, 1]");
    if (threads < 1) throw ConfigError("threads must be >= 1");
}

AppConfig config_from_json(const nlohmann::json& doc) {
    AppConfig c;
    try {
        if (doc.contains("generator")) {
            const auto& g = doc["generator"];
            c.generator.per_scenario_count = g.value("per_scenario_count", c.generator.per_scenario_count);
            c.generator.no_risk_count = g.value("no_risk_count", c.generator.no_risk_count);
            c.generator.n_frames = g.value("n_frames", c.generator.n_frames);
            c.generator.dim = g.value("dim", c.generator.dim);
            c.generator.patches = g.value("patches", c.generator.patches);
            c.generator.signal_strength = g.value("signal_strength", c.generator.signal_strength);
            c.generator.mismatch_rate = g.value("mismatch_rate", c.generator.mismatch_rate);
            c.generator.noise_scale = g.value("noise_scale", c.generator.noise_scale);
            c.generator.asr_len = g.value("asr_len", c.generator.asr_len);
        }
        if (doc.contains("keyframe")) c.keyframes_m = doc["keyframe"].value("m", c.keyframes_m);
        if (doc.contains("model")) {
            const auto& m = doc["model"];
            c.model.hidden = m.value("hidden", c.model.hidden);
            c.model.filler_tokens = m.value("filler_tokens", c.model.filler_tokens);
            c.model.max_len = m.value("max_len", c.model.max_len);
        }
        if (doc.contains("sft")) {
            const auto& s = doc["sft"];
            c.sft.lambda = s.value("lambda", c.sft.lambda);
            c.sft.smoothing = s.value("smoothing", c.sft.smoothing);
            c.sft.lr = s.value("lr", c.sft.lr);
            c.sft.epochs = s.value("epochs", c.sft.epochs);
            c.sft.batch_size = s.value("batch_size", c.sft.batch_size);
        }
        if (doc.contains("rl")) {
            const auto& r = doc["rl"];
            c.rl.group_size = r.value("group_size", c.rl.group_size);
            c.rl.steps = r.value("steps", c.rl.steps);
            c.rl.clip_scale = r.value("clip_scale", c.rl.clip_scale);
            c.rl.lr = r.value("lr", c.rl.lr);
            c.rl.temperature = r.value("temperature", c.rl.temperature);
            c.rl.max_resample_attempts = r.value("max_resample_attempts", c.rl.max_resample_attempts);
            if (r.contains("anneal_mode")) c.rl.anneal_mode = anneal_from_name(r["anneal_mode"]);
            if (r.contains("normalization_mode"))
                c.rl.normalization_mode = norm_from_name(r["normalization_mode"]);
            if (r.contains("loss_form")) c.rl.loss_form = loss_form_from_name(r["loss_form"]);
            if (r.contains("std_mode")) c.rl.std_mode = std_from_name(r["std_mode"]);
        }
        if (doc.contains("curate")) {
            const auto& cu = doc["curate"];
            c.curate.passes = cu.value("passes", c.curate.passes);
            c.curate.temperature = cu.value("temperature", c.curate.temperature);
            c.curate.concat_rate = cu.value("concat_rate", c.curate.concat_rate);
            c.curate.augment = cu.value("augment", c.curate.augment);
        }
        c.schema_path = doc.value("schema_path", c.schema_path);
        c.seed = doc.value("seed", c.seed);
        c.threads = doc.value("threads", c.threads);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    c.rl.seed = c.seed;
    c.rl.max_len = c.model.max_len;
    c.validate();
    return c;
}

nlohmann::json config_to_json(const AppConfig& c) {
    return {{"generator",
             {{"per_scenario_count", c.generator.per_scenario_count},
              {"no_risk_count", c.generator.no_risk_count},
              {"n_frames", c.generator.n_frames},
              {"dim", c.generator.dim},
              {"patches", c.generator.patches},
              {"signal_strength", c.generator.signal_strength},
              {"mismatch_rate", c.generator.mismatch_rate},
              {"noise_scale", c.generator.noise_scale},
              {"asr_len", c.generator.asr_len}}},
            {"keyframe", {{"m", c.keyframes_m}}},
            {"model",
             {{"hidden", c.model.hidden},
              {"filler_tokens", c.model.filler_tokens},
              {"max_len", c.model.max_len}}},
            {"sft",
             {{"lambda", c.sft.lambda},
              {"smoothing", c.sft.smoothing},
              {"lr", c.sft.lr},
              {"epochs", c.sft.epochs},
              {"batch_size", c.sft.batch_size}}},
            {"rl",
             {{"group_size", c.rl.group_size},
              {"steps", c.rl.steps},
              {"clip_scale", c.rl.clip_scale},
              {"lr", c.rl.lr},
              {"temperature", c.rl.temperature},
              {"max_resample_attempts", c.rl.max_resample_attempts},
              {"anneal_mode", anneal_name(c.rl.anneal_mode)},
              {"normalization_mode", norm_name(c.rl.normalization_mode)},
              {"loss_form", loss_form_name(c.rl.loss_form)},
              {"std_mode", std_name(c.rl.std_mode)}}},
            {"curate",
             {{"passes", c.curate.passes},
              {"temperature", c.curate.temperature},
              {"concat_rate", c.curate.concat_rate},
              {"augment", c.curate.augment}}},
            {"schema_path", c.schema_path},
            {"seed", c.seed},
            {"threads", c.threads}};
}

AppConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config file is not valid JSON: ") + e.what());
    }
    return config_from_json(doc);
}

}  // namespace blm
