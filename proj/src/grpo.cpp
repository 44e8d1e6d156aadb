#include "blm/grpo.hpp"

#include <chrono>
#include <cmath>

#include "blm/errors.hpp"
#include "blm/rng.hpp"

namespace blm {

void TrainerConfig::validate() const {
    if (group_size < 2) throw ConfigError("group_size must be >= 2");
    if (steps < 1) throw ConfigError("steps must be >= 1");
    if (clip_scale <= 0.0 || clip_scale >= 1.0) throw ConfigError("clip_scale must lie in (0, 1)");
    if (lr <= 0.0) throw ConfigError("lr must be > 0");
    if (temperature <= 0.0) throw ConfigError("temperature must be > 0");
    if (max_resample_attempts < 1) throw ConfigError("max_resample_attempts must be >= 1");
    if (max_len < 4) throw ConfigError("max_len too small for a well-formed output");
}

std::optional<std::vector<double>> group_advantages(const std::vector<double>& rewards,
                                                    StdMode std_mode) {
    const std::size_t g = rewards.size();
    if (g < 2) throw std::domain_error("group_advantages requires G >= 2");
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= static_cast<double>(g);
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    if (var == 0.0) return std::nullopt;
    double denom = std_mode == StdMode::Population ? static_cast<double>(g)
                                                   : static_cast<double>(g - 1);
    double sd = std::sqrt(var / denom);
    std::vector<double> adv(g);
    for (std::size_t i = 0; i < g; ++i) adv[i] = (rewards[i] - mean) / sd;
    return adv;
}

double clip_factor(int step, const TrainerConfig& config) {
    const int s_total = config.steps;
    if (step < 0 || step > s_total) throw std::domain_error("clip_factor step outside [0, S]");
    if (config.anneal_mode == AnnealMode::Linear)
        return config.clip_scale * static_cast<double>(s_total - step) / static_cast<double>(s_total);
    double prod = 1.0;  // empty product at step 0
    for (int i = 1; i <= step; ++i)
        prod *= static_cast<double>(s_total - i) / static_cast<double>(s_total);
    return config.clip_scale * prod;
}

namespace {

double clip(double x, double lo, double hi) { return x < lo ? lo : (x > hi ? hi : x); }

}  // namespace

SurrogateResult surrogate_loss(const PolicyModel& model, const std::vector<double>& features,
                               const RolloutGroup& group, double clip_bound,
                               NormalizationMode mode, const ContextMap& cmap, LossForm form) {
    const int g = static_cast<int>(group.rollouts.size());
    if (g < 2 || group.advantages.size() != static_cast<std::size_t>(g))
        throw DataError("surrogate_loss needs a scored, non-skipped rollout group");

    SurrogateResult result;
    result.grad = zero_gradient(model);

    long total_tokens = 0;
    for (const auto& r : group.rollouts) total_tokens += static_cast<long>(r.tokens.size());
    if (total_tokens == 0) throw DataError("empty rollouts in group");

    const double lo = 1.0 - clip_bound, hi = 1.0 + clip_bound;

    for (int i = 0; i < g; ++i) {
        const Rollout& roll = group.rollouts[static_cast<std::size_t>(i)];
        const double advantage = group.advantages[static_cast<std::size_t>(i)];
        std::vector<double> lp_cur = logprob_sequence(model, features, roll.tokens, cmap);
        const std::vector<double>& lp_ref = roll.logprob_reference;
        if (lp_ref.size() != lp_cur.size()) throw DataError("reference logprob length mismatch");

        // dL/d lp_cur per token, flowing only through the current policy.
        std::vector<double> coeff(lp_cur.size(), 0.0);

        if (mode == NormalizationMode::Token) {
            for (std::size_t t = 0; t < lp_cur.size(); ++t) {
                if (!std::isfinite(lp_cur[t]) || !std::isfinite(lp_ref[t]))
                    throw NumericError("non-finite log-probability in surrogate loss");
                double k = std::exp(lp_cur[t] - lp_ref[t]);
                double term, dterm_dk;
                if (form == LossForm::Algorithm) {
                    double u1 = k * advantage, u2 = clip(k, lo, hi) * advantage;
                    term = std::min(u1, u2);
                    dterm_dk = u1 <= u2 ? advantage : 0.0;
                } else {
                    term = std::min(k, clip(k, lo, hi)) * advantage;
                    dterm_dk = k <= hi ? advantage : 0.0;
                }
                result.loss += -term / static_cast<double>(total_tokens);
                coeff[t] = -(dterm_dk * k) / static_cast<double>(total_tokens);
            }
        } else {
            double sum_cur = 0.0, sum_ref = 0.0;
            for (std::size_t t = 0; t < lp_cur.size(); ++t) {
                if (!std::isfinite(lp_cur[t]) || !std::isfinite(lp_ref[t]))
                    throw NumericError("non-finite log-probability in surrogate loss");
                sum_cur += lp_cur[t];
                sum_ref += lp_ref[t];
            }
            double k = std::exp(sum_cur - sum_ref);
            double term, dterm_dk;
            if (form == LossForm::Algorithm) {
                double u1 = k * advantage, u2 = clip(k, lo, hi) * advantage;
                term = std::min(u1, u2);
                dterm_dk = u1 <= u2 ? advantage : 0.0;
            } else {
                term = std::min(k, clip(k, lo, hi)) * advantage;
                dterm_dk = k <= hi ? advantage : 0.0;
            }
            result.loss += -term / static_cast<double>(g);
            double c = -(dterm_dk * k) / static_cast<double>(g);
            for (std::size_t t = 0; t < coeff.size(); ++t) coeff[t] = c;
        }

        // Backprop coeff through teacher-forced positions.
        std::vector<double> x = context_input(model, features, cmap);
        const std::size_t base = features.size();
        std::vector<double> logits, hidden, dlogits;
        int prev = 0;  // <bos>
        for (std::size_t t = 0; t < roll.tokens.size(); ++t) {
            int tok = roll.tokens[t];
            if (coeff[t] != 0.0) {
                step_logits(model, x, prev, logits, hidden);
                std::vector<double> p = softmax(logits);
                dlogits.assign(p.size(), 0.0);
                for (std::size_t k2 = 0; k2 < p.size(); ++k2) dlogits[k2] = -coeff[t] * p[k2];
                dlogits[static_cast<std::size_t>(tok)] += coeff[t];
                step_backward(model, x, prev, hidden, dlogits, result.grad);
            }
            context_note_token(x, base, cmap, tok);
            prev = tok;
        }
    }
    if (!std::isfinite(result.loss)) throw NumericError("non-finite surrogate loss");
    return result;
}

nlohmann::json step_log_to_json(const StepLog& log) {
    return {{"step", log.step},
            {"input_id", log.input_id},
            {"rewards", log.rewards},
            {"advantages", log.advantages},
            {"B", log.clip_bound},
            {"loss", log.loss},
            {"mean_rule", log.mean_rule},
            {"mean_format", log.mean_format},
            {"mean_scaR", log.mean_sca},
            {"skip_count", log.skip_count},
            {"skipped", log.skipped},
            {"wall_time", log.wall_time}};
}

TrainResult train_rl(PolicyModel& model, const std::vector<TrainInput>& dataset, RewardFn reward_fn,
                     const TrainerConfig& config, const Vocabulary& vocab,
                     const PolicySchema& schema) {
    config.validate();
    if (dataset.empty()) throw DataError("empty RL dataset");

    // Reference policy snapshot; updated after every gradient step.
    PolicyModel reference = model;
    const ContextMap cmap = build_context_map(schema, vocab);

    std::vector<int> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    auto shuffle_rng = make_rng(derive_seed(config.seed, {0x0dd3}));
    shuffle_seeded(order, shuffle_rng);

    TrainResult result;
    int skip_count = 0;
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();

    for (int s = 1; s <= config.steps; ++s) {
        const TrainInput& input = dataset[static_cast<std::size_t>(
            order[static_cast<std::size_t>((s - 1) % static_cast<int>(order.size()))])];

        RolloutGroup group;
        group.input_id = input.id;
        std::vector<RewardBreakdown> breakdowns;
        bool scored = false;
        for (int attempt = 0; attempt < config.max_resample_attempts && !scored; ++attempt) {
            group.rollouts.clear();
            group.rewards.clear();
            breakdowns.clear();
            for (int i = 0; i < config.group_size; ++i) {
                std::uint64_t seed = derive_seed(config.seed, {0x9011, static_cast<std::uint64_t>(s),
                                                              static_cast<std::uint64_t>(attempt),
                                                              static_cast<std::uint64_t>(i)});
                Rollout roll = sample_response(model, input.features, config.temperature, seed,
                                               config.max_len, vocab, schema);
                roll.logprob_reference = logprob_sequence(reference, input.features, roll.tokens, cmap);
                RewardBreakdown reward = reward_fn(roll.structured, input);
                group.rewards.push_back(reward.total);
                breakdowns.push_back(std::move(reward));
                group.rollouts.push_back(std::move(roll));
            }
            auto adv = group_advantages(group.rewards, config.std_mode);
            if (adv) {
                group.advantages = *adv;
                scored = true;
            }
        }

        StepLog log;
        log.step = s;
        log.input_id = input.id;
        log.rewards = group.rewards;
        log.clip_bound = clip_factor(s, config);
        for (const auto& b : breakdowns) {
            log.mean_rule += b.rule / static_cast<double>(config.group_size);
            log.mean_format += b.format / static_cast<double>(config.group_size);
            log.mean_sca += b.sca / static_cast<double>(config.group_size);
        }

        if (!scored) {
            ++skip_count;
            log.skipped = true;
        } else {
            double mean = 0.0;
            for (double r : group.rewards) mean += r / static_cast<double>(config.group_size);
            group.mean = mean;
            log.advantages = group.advantages;

            SurrogateResult surrogate = surrogate_loss(model, input.features, group, log.clip_bound,
                                                       config.normalization_mode, cmap,
                                                       config.loss_form);
            log.loss = surrogate.loss;
            apply_gradient(model, surrogate.grad, config.lr);
            if (!model.finite()) throw NumericError("non-finite parameters during RL training");
            reference = model;  // theta_old <- theta
        }

        log.skip_count = skip_count;
        log.wall_time = std::chrono::duration<double>(clock::now() - start).count();
        result.log.push_back(std::move(log));
    }
    result.total_skipped = skip_count;
    return result;
}

}  // namespace blm
