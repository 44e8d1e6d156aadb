#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "blm/config.hpp"
#include "blm/errors.hpp"
#include "blm/evalkit.hpp"
#include "blm/grpo.hpp"
#include "blm/io.hpp"
#include "blm/keyframe.hpp"
#include "blm/policy_model.hpp"
#include "blm/rewards.hpp"
#include "blm/rng.hpp"
#include "blm/synth.hpp"
#include "blm/taxonomy.hpp"
#include "blm/vocab.hpp"

namespace {

using namespace blm;

struct Session {
    AppConfig config;
    PolicySchema schema;
};

Session make_session(const std::string& config_path, bool seed_set, std::uint64_t seed,
                     bool threads_set, int threads) {
    Session s;
    s.config = config_path.empty() ? config_from_json(nlohmann::json::object())
                                   : load_config_file(config_path);
    if (seed_set) {
        s.config.seed = seed;
        s.config.rl.seed = seed;
    }
    if (threads_set) s.config.threads = threads;
    s.config.validate();
    s.schema = s.config.schema_path.empty() ? default_schema()
                                            : load_schema_file(s.config.schema_path);
    std::cerr << "effective config: " << config_to_json(s.config).dump() << "\n";
    return s;
}

Vocabulary vocab_for(const Session& s, int n_frames) {
    return build_vocabulary(s.schema, n_frames, s.config.model.filler_tokens);
}

DatasetFile load_dataset_checked(const Session& s, const std::string& path, Vocabulary& vocab_out) {
    DatasetFile ds = load_dataset(path);
    vocab_out = vocab_for(s, ds.generator.n_frames);
    if (vocab_out.hash() != ds.vocab_hash)
        throw DataError("dataset vocabulary hash disagrees with the active schema");
    return ds;
}

int cmd_gen_data(const Session& s, const std::string& out_path) {
    Vocabulary vocab = vocab_for(s, s.config.generator.n_frames);
    RiskPromptBank bank = make_prompt_bank(s.schema, s.config.generator.dim, s.config.seed);
    DatasetFile file;
    file.schema_version = s.schema.version;
    file.vocab_hash = vocab.hash();
    file.generator = s.config.generator;
    file.bank = bank;
    file.samples = generate_dataset(s.config.generator, s.schema, vocab, bank, s.config.seed);
    save_dataset(file, out_path);
    int risk = 0, mismatched = 0;
    for (const auto& smp : file.samples) {
        risk += smp.label.is_no_risk() ? 0 : 1;
        mismatched += smp.mismatch ? 1 : 0;
    }
    std::cout << nlohmann::json{{"samples", file.samples.size()},
                                {"risk", risk},
                                {"no_risk", file.samples.size() - risk},
                                {"mismatch", mismatched},
                                {"out", out_path}}
                     .dump()
              << "\n";
    return 0;
}

int cmd_select_keyframes(const Session& s, const std::string& data_path,
                         const std::string& out_path) {
    Vocabulary vocab;
    DatasetFile ds = load_dataset_checked(s, data_path, vocab);
    std::vector<ClueFileRecord> records;
    records.reserve(ds.samples.size());
    for (const auto& smp : ds.samples)
        records.push_back({smp.id, build_clue_set(smp.frames, ds.bank, s.config.keyframes_m)});
    save_clues(records, vocab.hash(), out_path);
    std::cout << nlohmann::json{{"clue_sets", records.size()}, {"m", s.config.keyframes_m},
                                {"out", out_path}}
                     .dump()
              << "\n";
    return 0;
}

std::vector<SftExample> build_sft_examples(const Session& s, const DatasetFile& ds,
                                           const Vocabulary& vocab) {
    std::vector<SftExample> examples;
    examples.reserve(ds.samples.size());
    for (const auto& smp : ds.samples) {
        ClueSet clue = build_clue_set(smp.frames, ds.bank, s.config.keyframes_m);
        examples.push_back({featurize(smp, clue, ds.bank, s.schema, vocab),
                            sft_target_tokens(smp, s.schema, vocab), smp.label});
    }
    return examples;
}

std::vector<TrainInput> build_train_inputs(const Session& s, const DatasetFile& ds,
                                           const Vocabulary& vocab) {
    std::vector<TrainInput> inputs;
    inputs.reserve(ds.samples.size());
    for (const auto& smp : ds.samples) {
        ClueSet clue = build_clue_set(smp.frames, ds.bank, s.config.keyframes_m);
        inputs.push_back({smp.id, featurize(smp, clue, ds.bank, s.schema, vocab), smp.label,
                          sample_citations(smp, clue, s.schema, vocab)});
    }
    return inputs;
}

int run_sft(const Session& s, const DatasetFile& ds, const Vocabulary& vocab, SftMode mode,
            const std::string& out_path) {
    std::vector<SftExample> examples = build_sft_examples(s, ds, vocab);
    PolicyModel model =
        init_model(feature_dim_for(s.schema), s.config.model.hidden, vocab, s.config.seed,
                   context_dim_for(s.schema));
    std::vector<std::size_t> order(examples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const int bs = s.config.sft.batch_size;
    for (int epoch = 0; epoch < s.config.sft.epochs; ++epoch) {
        auto epoch_rng =
            make_rng(derive_seed(s.config.seed, {0x5f7a, static_cast<std::uint64_t>(epoch)}));
        shuffle_seeded(order, epoch_rng);
        double ce_sum = 0.0, kl_sum = 0.0;
        int batches = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(bs)) {
            std::vector<SftExample> batch;
            for (std::size_t i = start; i < std::min(order.size(), start + static_cast<std::size_t>(bs)); ++i)
                batch.push_back(examples[order[i]]);
            SftLoss loss = sft_step(model, batch, mode, s.config.sft.lambda, s.config.sft.smoothing,
                                    s.config.sft.lr, s.schema, vocab);
            ce_sum += loss.ce;
            kl_sum += loss.kl;
            ++batches;
        }
        std::cout << nlohmann::json{{"epoch", epoch},
                                    {"ce", ce_sum / batches},
                                    {"kl", kl_sum / batches}}
                         .dump()
                  << "\n";
    }
    save_model(model, out_path);
    std::cout << nlohmann::json{{"saved", out_path}}.dump() << "\n";
    return 0;
}

int run_rl(const Session& s, const DatasetFile& ds, const Vocabulary& vocab, bool with_critic,
           const std::string& init_path, const std::string& out_path, const std::string& log_path) {
    PolicyModel model = load_model(init_path, vocab);
    std::vector<TrainInput> inputs = build_train_inputs(s, ds, vocab);
    MockCritic critic(s.schema);
    RewardFn fn = [&](const StructuredOutput& pred, const TrainInput& in) {
        if (with_critic) return total_reward(pred, in.truth, s.schema, vocab, critic, in.citations);
        RewardBreakdown r;
        r.rule = rule_reward(pred, in.truth);
        r.format = format_reward(pred);
        r.total = r.rule + r.format;
        return r;
    };
    TrainResult result = train_rl(model, inputs, fn, s.config.rl, vocab, s.schema);
    if (!log_path.empty()) {
        std::string log_text;
        for (const auto& entry : result.log) log_text += step_log_to_json(entry).dump() + "\n";
        write_file(log_path, log_text);
    }
    save_model(model, out_path);
    double final_mean = result.log.empty() ? 0.0
                                           : (result.log.back().rewards.empty()
                                                  ? 0.0
                                                  : result.log.back().loss);
    std::cout << nlohmann::json{{"steps", result.log.size()},
                                {"skipped", result.total_skipped},
                                {"final_loss", final_mean},
                                {"saved", out_path}}
                     .dump()
              << "\n";
    return 0;
}

int cmd_train(const Session& s, const std::string& data_path, const std::string& mode,
              const std::string& init_path, const std::string& out_path,
              const std::string& log_path) {
    Vocabulary vocab;
    DatasetFile ds = load_dataset_checked(s, data_path, vocab);
    if (mode == "ans_sft") return run_sft(s, ds, vocab, SftMode::AnswerOnly, out_path);
    if (mode == "think_sft") return run_sft(s, ds, vocab, SftMode::ThinkOnly, out_path);
    if (mode == "rule_sft") return run_sft(s, ds, vocab, SftMode::Rule, out_path);
    if (mode == "rule_rl" || mode == "sca_r_full") {
        if (init_path.empty())
            throw ConfigError("mode " + mode + " requires --init (a cold-start checkpoint)");
        return run_rl(s, ds, vocab, mode == "sca_r_full", init_path, out_path, log_path);
    }
    throw ConfigError("unknown training mode: " + mode);
}

int cmd_curate(const Session& s, const std::string& data_path, const std::string& init_path,
               const std::string& out_path) {
    Vocabulary vocab;
    DatasetFile ds = load_dataset_checked(s, data_path, vocab);
    PolicyModel model = load_model(init_path, vocab);
    std::vector<VideoSample> hard = rejection_sample_hard(
        ds.samples, model, ds.bank, s.schema, vocab, s.config.keyframes_m, s.config.curate.passes,
        s.config.curate.temperature, s.config.model.max_len, s.config.seed);
    for (auto& smp : hard) smp.origin = "hard_dup";

    std::size_t concat_count = 0;
    if (s.config.curate.augment && !hard.empty()) {
        auto rng = make_rng(derive_seed(s.config.seed, {0xc07a}));
        std::size_t want = static_cast<std::size_t>(s.config.curate.concat_rate *
                                                    static_cast<double>(hard.size()));
        std::vector<VideoSample> extra;
        for (std::size_t k = 0; k < want; ++k) {
            const VideoSample& a =
                hard[static_cast<std::size_t>(uniform_int(rng, static_cast<int>(hard.size())))];
            std::vector<const VideoSample*> partners;
            for (const auto& cand : ds.samples)
                if (cand.id != a.id &&
                    (cand.label.scenario == a.label.scenario || cand.label.is_no_risk()))
                    partners.push_back(&cand);
            if (partners.empty()) continue;
            const VideoSample& b = *partners[static_cast<std::size_t>(
                uniform_int(rng, static_cast<int>(partners.size())))];
            extra.push_back(safety_concat(a, b, s.schema, vocab));
        }
        concat_count = extra.size();
        hard.insert(hard.end(), extra.begin(), extra.end());
    }

    DatasetFile out = ds;
    out.samples = std::move(hard);
    save_dataset(out, out_path);
    std::cout << nlohmann::json{{"hard", out.samples.size() - concat_count},
                                {"concat", concat_count},
                                {"out", out_path}}
                     .dump()
              << "\n";
    return 0;
}

int cmd_eval(const Session& s, const std::string& data_path, const std::string& init_path,
             const std::string& out_path) {
    Vocabulary vocab;
    DatasetFile ds = load_dataset_checked(s, data_path, vocab);
    PolicyModel model = load_model(init_path, vocab);
    std::vector<StructuredOutput> predictions;
    std::vector<RiskLabel> truths;
    std::vector<std::vector<std::string>> citations;
    for (const auto& smp : ds.samples) {
        ClueSet clue = build_clue_set(smp.frames, ds.bank, s.config.keyframes_m);
        std::vector<double> feats = featurize(smp, clue, ds.bank, s.schema, vocab);
        Rollout rollout = sample_response(model, feats, 1.0, 0, s.config.model.max_len, vocab,
                                          s.schema, /*greedy=*/true);
        predictions.push_back(rollout.structured);
        truths.push_back(smp.label);
        citations.push_back(sample_citations(smp, clue, s.schema, vocab));
    }
    MockCritic critic(s.schema);
    EvalReport report = evaluate(predictions, truths, s.schema, vocab, critic, citations);
    nlohmann::json doc = report_to_json(report);
    std::cout << doc.dump(2) << "\n";
    if (!out_path.empty()) write_file(out_path, doc.dump(2) + "\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Desk-scale moderation-training pipeline: synthetic data, keyframe selection, "
                 "rule-anchored SFT, hybrid-reward RL, evaluation"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    int threads = 1;
    app.add_option("--config", config_path, "JSON config file (defaults used when omitted)");
    auto* seed_opt = app.add_option("--seed", seed, "Override the config seed");
    auto* threads_opt = app.add_option("--threads", threads, "Override the config thread count");

    std::string data_path, init_path, out_path, log_path, mode;

    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
    gen->add_option("--out", out_path, "Output dataset path")->required();

    auto* kf = app.add_subcommand("select-keyframes", "Select rule-anchored keyframes and clue sets");
    kf->add_option("--data", data_path, "Input dataset")->required();
    kf->add_option("--out", out_path, "Output clue file")->required();

    auto* train = app.add_subcommand("train", "Train a policy (SFT or RL)");
    train->add_option("--data", data_path, "Input dataset")->required();
    train->add_option("--mode", mode,
                      "ans_sft | think_sft | rule_sft | rule_rl | sca_r_full")
        ->required();
    train->add_option("--init", init_path, "Initial checkpoint (required for RL modes)");
    train->add_option("--out", out_path, "Output checkpoint path")->required();
    train->add_option("--log", log_path, "Optional per-step RL training log (JSONL)");

    auto* curate = app.add_subcommand("curate", "Rejection-sample hard cases and augment");
    curate->add_option("--data", data_path, "Input dataset")->required();
    curate->add_option("--init", init_path, "Checkpoint used for rejection sampling")->required();
    curate->add_option("--out", out_path, "Output curated dataset")->required();

    auto* ev = app.add_subcommand("eval", "Greedy-decode a checkpoint and report metrics");
    ev->add_option("--data", data_path, "Input dataset")->required();
    ev->add_option("--init", init_path, "Checkpoint to evaluate")->required();
    ev->add_option("--out", out_path, "Optional report output path");

    CLI11_PARSE(app, argc, argv);

    try {
        Session s = make_session(config_path, seed_opt->count() > 0, seed,
                                 threads_opt->count() > 0, threads);
        if (gen->parsed()) return cmd_gen_data(s, out_path);
        if (kf->parsed()) return cmd_select_keyframes(s, data_path, out_path);
        if (train->parsed()) return cmd_train(s, data_path, mode, init_path, out_path, log_path);
        if (curate->parsed()) return cmd_curate(s, data_path, init_path, out_path);
        if (ev->parsed()) return cmd_eval(s, data_path, init_path, out_path);
        return 1;
    } catch (const blm::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const blm::SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return 3;
    } catch (const blm::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const blm::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const blm::RewardError& e) {
        std::cerr << "reward error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
