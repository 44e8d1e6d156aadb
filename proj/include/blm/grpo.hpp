#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "blm/policy_model.hpp"
#include "blm/rewards.hpp"

namespace blm {

enum class AnnealMode { Linear, Product };
enum class NormalizationMode { Token, Sequence };
enum class LossForm { Algorithm, Equation };  // min(K*A, clip*A) vs min(K, clip)*A
enum class StdMode { Population, Sample };

struct TrainerConfig {
    int group_size = 8;       // G
    int steps = 500;          // S
    double clip_scale = 0.2;  // epsilon
    double lr = 0.015;
    AnnealMode anneal_mode = AnnealMode::Linear;
    NormalizationMode normalization_mode = NormalizationMode::Token;
    LossForm loss_form = LossForm::Algorithm;
    StdMode std_mode = StdMode::Population;
    double temperature = 1.2;
    std::uint64_t seed = 0;
    int max_resample_attempts = 3;
    int max_len = 32;

    void validate() const;  // throws ConfigError
};

struct RolloutGroup {
    std::string input_id;
    std::vector<Rollout> rollouts;
    std::vector<double> rewards;
    std::vector<double> advantages;
    double mean = 0.0;
    double stddev = 0.0;
};

// Z-score advantages with the chosen std convention; nullopt = skip signal
// for zero-variance groups.
std::optional<std::vector<double>> group_advantages(const std::vector<double>& rewards,
                                                    StdMode std_mode = StdMode::Population);

// Annealed clip bound B_s for step s in [0, S]. Linear: eps*(S-s)/S.
// Product: eps * prod_{i=1..s} (S-i)/S.
double clip_factor(int step, const TrainerConfig& config);

struct SurrogateResult {
    double loss = 0.0;
    Gradient grad;
};

// Clipped surrogate over one rollout group; the gradient flows only through
// the current-policy log-probs (reference detached).
SurrogateResult surrogate_loss(const PolicyModel& model, const std::vector<double>& features,
                               const RolloutGroup& group, double clip_bound,
                               NormalizationMode mode, const ContextMap& cmap,
                               LossForm form = LossForm::Algorithm);

struct TrainInput {
    std::string id;
    std::vector<double> features;
    RiskLabel truth;
    std::vector<std::string> citations;
};

using RewardFn = std::function<RewardBreakdown(const StructuredOutput&, const TrainInput&)>;

struct StepLog {
    int step = 0;
    std::string input_id;
    std::vector<double> rewards;
    std::vector<double> advantages;
    double clip_bound = 0.0;
    double loss = 0.0;
    double mean_rule = 0.0, mean_format = 0.0, mean_sca = 0.0;
    int skip_count = 0;  // cumulative
    bool skipped = false;
    double wall_time = 0.0;
};

struct TrainResult {
    std::vector<StepLog> log;
    int total_skipped = 0;
};

nlohmann::json step_log_to_json(const StepLog& log);

// Algorithm-1 loop: one input per step (seeded shuffle, cyclic), G rollouts,
// hybrid reward, z-score advantages with resample-then-skip on zero variance,
// annealed clip, one gradient step, reference update.
TrainResult train_rl(PolicyModel& model, const std::vector<TrainInput>& dataset, RewardFn reward_fn,
                     const TrainerConfig& config, const Vocabulary& vocab,
                     const PolicySchema& schema);

}  // namespace blm
