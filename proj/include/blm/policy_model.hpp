#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "blm/keyframe.hpp"
#include "blm/parsing.hpp"
#include "blm/synth.hpp"
#include "blm/taxonomy.hpp"
#include "blm/vocab.hpp"

namespace blm {

// Feature-conditioned bigram policy. Per decoding step the input x is the
// static feature vector concatenated with fixed prefix-context indicators
// (see ContextMap); with previous token p:
//   z = W_in^T x + E[p],  a = tanh(z),  logits = W_out^T a + b_out
// The context indicators are a deterministic function of the already-emitted
// tokens, not of any parameter, so per-position gradients keep the same form
// as for a pure bigram model. Small enough that every gradient is
// hand-derivable and finite-difference checkable, expressive enough to emit
// the tagged output grammar — and the answer span can condition on what the
// reasoning trace said.
struct PolicyModel {
    int feature_dim = 0;
    int hidden = 0;
    int vocab_size = 0;
    std::uint64_t vocab_hash = 0;

    std::vector<double> w_in;   // feature_dim * hidden
    std::vector<double> embed;  // vocab_size * hidden
    std::vector<double> w_out;  // hidden * vocab_size
    std::vector<double> b_out;  // vocab_size

    std::size_t num_params() const;
    double& param_at(std::size_t i);
    double param_at(std::size_t i) const;
    bool finite() const;
};

struct Gradient {
    std::vector<double> w_in, embed, w_out, b_out;
    std::size_t num_params() const;
    double param_at(std::size_t i) const;
};

// Maps keyword tokens to prefix-context dimensions: one dimension per
// scenario and one per violation type, set to 1 once any of its keywords has
// been emitted. Non-trainable; shared by sampling and teacher-forced paths.
struct ContextMap {
    int n_dims = 0;
    std::vector<int> dim_of;  // per vocab token; -1 for non-keyword tokens
    int dim() const { return n_dims; }
};

ContextMap build_context_map(const PolicySchema& schema, const Vocabulary& vocab);
int context_dim_for(const PolicySchema& schema);

// Model input buffer for one sequence: static features then a zeroed context
// block; context_note_token flips the dimension for an emitted keyword.
std::vector<double> context_input(const PolicyModel& model, const std::vector<double>& features,
                                  const ContextMap& cmap);
void context_note_token(std::vector<double>& x, std::size_t base, const ContextMap& cmap, int tok);

// context_dims: trailing input rows of W_in initialized to zero (the
// prefix-context block, left for RL to train).
PolicyModel init_model(int feature_dim, int hidden, const Vocabulary& vocab, std::uint64_t seed,
                       int context_dims = 0);
Gradient zero_gradient(const PolicyModel& model);
void apply_gradient(PolicyModel& model, const Gradient& grad, double lr);  // theta -= lr * grad

// logits for one step; `hidden_out` (size hidden) receives the tanh activations.
void step_logits(const PolicyModel& model, const std::vector<double>& features, int prev_token,
                 std::vector<double>& logits_out, std::vector<double>& hidden_out);

std::vector<double> softmax(const std::vector<double>& logits);
std::vector<double> log_softmax(const std::vector<double>& logits);

// Accumulates parameter gradients for one step given dL/dlogits.
void step_backward(const PolicyModel& model, const std::vector<double>& features, int prev_token,
                   const std::vector<double>& hidden_act, const std::vector<double>& dlogits,
                   Gradient& grad);

// --- featurization ---------------------------------------------------------

// Per-scenario max keyframe cosine (K), per-scenario ASR keyword hit rate (K),
// per-scenario |visual - asr| mismatch indicators (K), plus 2 length features.
std::vector<double> featurize(const VideoSample& sample, const ClueSet& clue,
                              const RiskPromptBank& bank, const PolicySchema& schema,
                              const Vocabulary& vocab);

// Full model input width: featurize() output plus the prefix-context block.
int feature_dim_for(const PolicySchema& schema);

// --- decoding --------------------------------------------------------------

struct Rollout {
    std::vector<int> tokens;
    std::vector<double> logprob_current;    // per-token, temperature-1 measure
    std::vector<double> logprob_reference;  // filled by the trainer
    StructuredOutput structured;
};

// Autoregressive sampling from softmax(logits/temperature); stops after
// </answer> or max_len tokens. greedy=true ignores temperature and seed.
Rollout sample_response(const PolicyModel& model, const std::vector<double>& features,
                        double temperature, std::uint64_t seed, int max_len,
                        const Vocabulary& vocab, const PolicySchema& schema, bool greedy = false);

// Teacher-forced per-token log-probabilities.
std::vector<double> logprob_sequence(const PolicyModel& model, const std::vector<double>& features,
                                     const std::vector<int>& tokens, const ContextMap& cmap);

// --- rule-anchored SFT -----------------------------------------------------

enum class SftMode { AnswerOnly, ThinkOnly, Rule };

struct SftExample {
    std::vector<double> features;
    std::vector<int> target;
    RiskLabel label;
};

struct SftLoss {
    double ce = 0.0;
    double kl = 0.0;
    double total = 0.0;
};

// Loss only (plus optional gradient). CE covers all target positions except
// the think interior (ThinkOnly: the think region instead); the KL term
// aligns every think-interior step distribution with keyword_prior(label),
// averaged over think positions, skipped for no-risk labels.
SftLoss sft_loss(const PolicyModel& model, const std::vector<SftExample>& batch, SftMode mode,
                 double lambda, double smoothing, const PolicySchema& schema,
                 const Vocabulary& vocab, Gradient* grad_out);

// One gradient-descent step over the batch; returns the pre-update loss.
SftLoss sft_step(PolicyModel& model, const std::vector<SftExample>& batch, SftMode mode,
                 double lambda, double smoothing, double lr, const PolicySchema& schema,
                 const Vocabulary& vocab);

// --- checkpoints -----------------------------------------------------------

nlohmann::json model_to_json(const PolicyModel& model);
PolicyModel model_from_json(const nlohmann::json& doc, const Vocabulary& vocab);
void save_model(const PolicyModel& model, const std::string& path);
PolicyModel load_model(const std::string& path, const Vocabulary& vocab);

}  // namespace blm
