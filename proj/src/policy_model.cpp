#include "blm/policy_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "blm/errors.hpp"
#include "blm/rng.hpp"

namespace blm {

std::size_t PolicyModel::num_params() const {
    return w_in.size() + embed.size() + w_out.size() + b_out.size();
}

double& PolicyModel::param_at(std::size_t i) {
    if (i < w_in.size()) return w_in[i];
    i -= w_in.size();
    if (i < embed.size()) return embed[i];
    i -= embed.size();
    if (i < w_out.size()) return w_out[i];
    i -= w_out.size();
    return b_out.at(i);
}

double PolicyModel::param_at(std::size_t i) const {
    return const_cast<PolicyModel*>(this)->param_at(i);
}

bool PolicyModel::finite() const {
    for (std::size_t i = 0; i < num_params(); ++i)
        if (!std::isfinite(param_at(i))) return false;
    return true;
}

std::size_t Gradient::num_params() const {
    return w_in.size() + embed.size() + w_out.size() + b_out.size();
}

double Gradient::param_at(std::size_t i) const {
    if (i < w_in.size()) return w_in[i];
    i -= w_in.size();
    if (i < embed.size()) return embed[i];
    i -= embed.size();
    if (i < w_out.size()) return w_out[i];
    i -= w_out.size();
    return b_out.at(i);
}

PolicyModel init_model(int feature_dim, int hidden, const Vocabulary& vocab, std::uint64_t seed,
                       int context_dims) {
    if (context_dims < 0 || context_dims > feature_dim)
        throw std::domain_error("context_dims outside [0, feature_dim]");
    PolicyModel m;
    m.feature_dim = feature_dim;
    m.hidden = hidden;
    m.vocab_size = vocab.size();
    m.vocab_hash = vocab.hash();
    auto rng = make_rng(derive_seed(seed, {0x30de1}));
    auto fill = [&rng](std::vector<double>& v, std::size_t n, double scale) {
        v.resize(n);
        for (double& x : v) x = scale * gaussian(rng);
    };
    fill(m.w_in, static_cast<std::size_t>(feature_dim) * hidden, 0.1);
    // The prefix-context rows start at zero: after SFT (which leaves them
    // untouched) the context block is behaviorally inert, and only RL learns
    // to couple the reasoning trace to the answer.
    for (int i = feature_dim - context_dims; i < feature_dim; ++i)
        for (int j = 0; j < hidden; ++j) m.w_in[static_cast<std::size_t>(i) * hidden + j] = 0.0;
    fill(m.embed, static_cast<std::size_t>(m.vocab_size) * hidden, 0.1);
    fill(m.w_out, static_cast<std::size_t>(hidden) * m.vocab_size, 0.1);
    m.b_out.assign(static_cast<std::size_t>(m.vocab_size), 0.0);
    return m;
}

Gradient zero_gradient(const PolicyModel& model) {
    Gradient g;
    g.w_in.assign(model.w_in.size(), 0.0);
    g.embed.assign(model.embed.size(), 0.0);
    g.w_out.assign(model.w_out.size(), 0.0);
    g.b_out.assign(model.b_out.size(), 0.0);
    return g;
}

void apply_gradient(PolicyModel& model, const Gradient& grad, double lr) {
    auto axpy = [lr](std::vector<double>& x, const std::vector<double>& g) {
        for (std::size_t i = 0; i < x.size(); ++i) x[i] -= lr * g[i];
    };
    axpy(model.w_in, grad.w_in);
    axpy(model.embed, grad.embed);
    axpy(model.w_out, grad.w_out);
    axpy(model.b_out, grad.b_out);
}

void step_logits(const PolicyModel& model, const std::vector<double>& features, int prev_token,
                 std::vector<double>& logits_out, std::vector<double>& hidden_out) {
    const int h = model.hidden, v = model.vocab_size, f = model.feature_dim;
    hidden_out.assign(static_cast<std::size_t>(h), 0.0);
    const double* erow = model.embed.data() + static_cast<std::size_t>(prev_token) * h;
    for (int j = 0; j < h; ++j) {
        double z = erow[j];
        for (int i = 0; i < f; ++i) z += features[static_cast<std::size_t>(i)] * model.w_in[static_cast<std::size_t>(i) * h + j];
        hidden_out[static_cast<std::size_t>(j)] = std::tanh(z);
    }
    logits_out = model.b_out;
    for (int j = 0; j < h; ++j) {
        const double a = hidden_out[static_cast<std::size_t>(j)];
        const double* wrow = model.w_out.data() + static_cast<std::size_t>(j) * v;
        for (int k = 0; k < v; ++k) logits_out[static_cast<std::size_t>(k)] += a * wrow[k];
    }
}

std::vector<double> softmax(const std::vector<double>& logits) {
    double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        sum += p[i];
    }
    for (double& x : p) x /= sum;
    return p;
}

std::vector<double> log_softmax(const std::vector<double>& logits) {
    double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double x : logits) sum += std::exp(x - mx);
    double lse = mx + std::log(sum);
    std::vector<double> lp(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) lp[i] = logits[i] - lse;
    return lp;
}

void step_backward(const PolicyModel& model, const std::vector<double>& features, int prev_token,
                   const std::vector<double>& hidden_act, const std::vector<double>& dlogits,
                   Gradient& grad) {
    const int h = model.hidden, v = model.vocab_size, f = model.feature_dim;
    for (int k = 0; k < v; ++k) grad.b_out[static_cast<std::size_t>(k)] += dlogits[static_cast<std::size_t>(k)];
    double* gerow = grad.embed.data() + static_cast<std::size_t>(prev_token) * h;
    for (int j = 0; j < h; ++j) {
        const double a = hidden_act[static_cast<std::size_t>(j)];
        const double* wrow = model.w_out.data() + static_cast<std::size_t>(j) * v;
        double* gwrow = grad.w_out.data() + static_cast<std::size_t>(j) * v;
        double da = 0.0;
        for (int k = 0; k < v; ++k) {
            da += wrow[k] * dlogits[static_cast<std::size_t>(k)];
            gwrow[k] += a * dlogits[static_cast<std::size_t>(k)];
        }
        double dz = da * (1.0 - a * a);
        for (int i = 0; i < f; ++i)
            grad.w_in[static_cast<std::size_t>(i) * h + j] += features[static_cast<std::size_t>(i)] * dz;
        gerow[j] += dz;
    }
}

// --- prefix context --------------------------------------------------------

ContextMap build_context_map(const PolicySchema& schema, const Vocabulary& vocab) {
    ContextMap map;
    map.dim_of.assign(static_cast<std::size_t>(vocab.size()), -1);
    int d = 0;
    for (const auto& scen : schema.scenarios) {
        for (const auto& w : scen.keywords)
            map.dim_of[static_cast<std::size_t>(vocab.require(w))] = d;
        ++d;
        for (const auto& ty : scen.types) {
            for (const auto& w : ty.keywords)
                map.dim_of[static_cast<std::size_t>(vocab.require(w))] = d;
            ++d;
        }
    }
    map.n_dims = d;
    return map;
}

int context_dim_for(const PolicySchema& schema) {
    int d = 0;
    for (const auto& s : schema.scenarios) d += 1 + static_cast<int>(s.types.size());
    return d;
}

std::vector<double> context_input(const PolicyModel& model, const std::vector<double>& features,
                                  const ContextMap& cmap) {
    if (static_cast<int>(features.size()) + cmap.n_dims != model.feature_dim)
        throw DataError("feature vector size does not match the model input layout");
    std::vector<double> x(static_cast<std::size_t>(model.feature_dim), 0.0);
    std::copy(features.begin(), features.end(), x.begin());
    return x;
}

void context_note_token(std::vector<double>& x, std::size_t base, const ContextMap& cmap, int tok) {
    int d = cmap.dim_of[static_cast<std::size_t>(tok)];
    if (d >= 0) x[base + static_cast<std::size_t>(d)] = 1.0;
}

// --- featurization ---------------------------------------------------------

int feature_dim_for(const PolicySchema& schema) {
    return 3 * static_cast<int>(schema.risk_scenarios().size()) + 2 + context_dim_for(schema);
}

std::vector<double> featurize(const VideoSample& sample, const ClueSet& clue,
                              const RiskPromptBank& bank, const PolicySchema& schema,
                              const Vocabulary& vocab) {
    auto risk = schema.risk_scenarios();
    const int k = static_cast<int>(risk.size());
    std::vector<double> visual(static_cast<std::size_t>(k), 0.0);
    std::vector<double> asr(static_cast<std::size_t>(k), 0.0);

    for (int s = 0; s < k; ++s) {
        const RiskPrompt* prompt = nullptr;
        for (const auto& p : bank.prompts)
            if (p.scenario == risk[static_cast<std::size_t>(s)]->id) prompt = &p;
        if (!prompt) throw DataError("prompt bank missing scenario " + risk[static_cast<std::size_t>(s)]->id);
        double best = -1.0;
        for (const auto& e : clue.entries)
            best = std::max(best, cosine(sample.frames.frame(e.frame_index), prompt->vec.data(),
                                         sample.frames.dim));
        visual[static_cast<std::size_t>(s)] = best;
    }

    if (!sample.asr_tokens.empty()) {
        for (int s = 0; s < k; ++s) {
            const ScenarioEntry* scen = risk[static_cast<std::size_t>(s)];
            std::vector<int> kw_ids;
            for (const auto& w : scen->keywords) kw_ids.push_back(vocab.require(w));
            for (const auto& t : scen->types)
                for (const auto& w : t.keywords) kw_ids.push_back(vocab.require(w));
            int hits = 0;
            for (int tok : sample.asr_tokens)
                for (int id : kw_ids)
                    if (tok == id) { ++hits; break; }
            asr[static_cast<std::size_t>(s)] =
                static_cast<double>(hits) / static_cast<double>(sample.asr_tokens.size());
        }
    }

    std::vector<double> feats;
    feats.reserve(static_cast<std::size_t>(3 * k + 2));
    feats.insert(feats.end(), visual.begin(), visual.end());
    feats.insert(feats.end(), asr.begin(), asr.end());
    for (int s = 0; s < k; ++s)
        feats.push_back(std::fabs(visual[static_cast<std::size_t>(s)] - asr[static_cast<std::size_t>(s)]));
    feats.push_back(static_cast<double>(sample.asr_tokens.size()) / 32.0);
    feats.push_back(static_cast<double>(clue.entries.size()) / 16.0);
    return feats;
}

// --- decoding --------------------------------------------------------------

Rollout sample_response(const PolicyModel& model, const std::vector<double>& features,
                        double temperature, std::uint64_t seed, int max_len,
                        const Vocabulary& vocab, const PolicySchema& schema, bool greedy) {
    if (!greedy && temperature <= 0.0)
        throw std::domain_error("sampling temperature must be > 0 (use greedy for the limit)");
    if (max_len < 1) throw std::domain_error("max_len must be >= 1");

    auto rng = make_rng(seed);
    Rollout r;
    const ContextMap cmap = build_context_map(schema, vocab);
    std::vector<double> x = context_input(model, features, cmap);
    const std::size_t base = features.size();
    std::vector<double> logits, hidden;
    int prev = vocab.bos;
    for (int t = 0; t < max_len; ++t) {
        step_logits(model, x, prev, logits, hidden);
        std::vector<double> lp = log_softmax(logits);
        int tok;
        if (greedy) {
            tok = 0;
            for (int k = 1; k < model.vocab_size; ++k)
                if (logits[static_cast<std::size_t>(k)] > logits[static_cast<std::size_t>(tok)]) tok = k;
        } else {
            std::vector<double> scaled(logits.size());
            for (std::size_t i = 0; i < logits.size(); ++i) scaled[i] = logits[i] / temperature;
            tok = categorical(rng, softmax(scaled));
        }
        r.tokens.push_back(tok);
        r.logprob_current.push_back(lp[static_cast<std::size_t>(tok)]);
        context_note_token(x, base, cmap, tok);
        prev = tok;
        if (tok == vocab.answer_close) break;
    }
    r.logprob_reference = r.logprob_current;
    r.structured = parse_output(r.tokens, vocab, schema);
    return r;
}

std::vector<double> logprob_sequence(const PolicyModel& model, const std::vector<double>& features,
                                     const std::vector<int>& tokens, const ContextMap& cmap) {
    std::vector<double> out;
    out.reserve(tokens.size());
    std::vector<double> x = context_input(model, features, cmap);
    const std::size_t base = features.size();
    std::vector<double> logits, hidden;
    int prev = 0;  // <bos> is token 0 by construction
    for (int tok : tokens) {
        if (tok < 0 || tok >= model.vocab_size) throw DataError("token outside vocabulary");
        step_logits(model, x, prev, logits, hidden);
        out.push_back(log_softmax(logits)[static_cast<std::size_t>(tok)]);
        context_note_token(x, base, cmap, tok);
        prev = tok;
    }
    return out;
}

// --- SFT -------------------------------------------------------------------

namespace {

struct PositionPlan {
    std::vector<char> ce;  // per position
    std::vector<char> kl;  // per position (think interior, risk labels only)
};

PositionPlan plan_positions(const std::vector<int>& target, SftMode mode, bool risk_label,
                            const Vocabulary& vocab, const PolicySchema& schema) {
    StructuredOutput parsed = parse_output(target, vocab, schema);
    if (!parsed.think_span || !parsed.answer_span)
        throw DataError("SFT target is missing a tagged region");
    const int n = static_cast<int>(target.size());
    PositionPlan plan;
    plan.ce.assign(static_cast<std::size_t>(n), 0);
    plan.kl.assign(static_cast<std::size_t>(n), 0);
    const TokenSpan& think = *parsed.think_span;
    for (int i = 0; i < n; ++i) {
        bool interior = i > think.open && i < think.close;
        bool in_think_region = i >= think.open && i <= think.close;
        switch (mode) {
            case SftMode::ThinkOnly:
                plan.ce[static_cast<std::size_t>(i)] = in_think_region && !interior;
                plan.kl[static_cast<std::size_t>(i)] = 0;
                break;
            case SftMode::AnswerOnly:
                plan.ce[static_cast<std::size_t>(i)] = !interior;
                break;
            case SftMode::Rule:
                plan.ce[static_cast<std::size_t>(i)] = !interior;
                plan.kl[static_cast<std::size_t>(i)] = interior && risk_label;
                break;
        }
    }
    if (mode == SftMode::ThinkOnly) {
        // interior supervision for the think-only baseline
        for (int i = think.open; i <= think.close; ++i) plan.ce[static_cast<std::size_t>(i)] = 1;
    }
    return plan;
}

}  // namespace

SftLoss sft_loss(const PolicyModel& model, const std::vector<SftExample>& batch, SftMode mode,
                 double lambda, double smoothing, const PolicySchema& schema,
                 const Vocabulary& vocab, Gradient* grad_out) {
    if (lambda < 0.0) throw std::domain_error("lambda must be >= 0");
    if (batch.empty()) throw DataError("empty SFT batch");

    // First pass: position counts for batch-level normalization.
    std::vector<PositionPlan> plans;
    plans.reserve(batch.size());
    long ce_count = 0, kl_count = 0;
    for (const auto& ex : batch) {
        plans.push_back(plan_positions(ex.target, mode, !ex.label.is_no_risk(), vocab, schema));
        for (char c : plans.back().ce) ce_count += c;
        for (char c : plans.back().kl) kl_count += c;
    }

    SftLoss loss;
    const ContextMap cmap = build_context_map(schema, vocab);
    std::vector<double> logits, hidden, dlogits;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const auto& ex = batch[b];
        const auto& plan = plans[b];
        std::vector<double> prior;
        if (kl_count > 0 && !ex.label.is_no_risk() && mode == SftMode::Rule && lambda > 0.0)
            prior = keyword_prior(ex.label, schema, vocab, smoothing);

        // The context block stays zero under teacher forcing: target thinks
        // always name a correct keyword, so live context bits would let the
        // answer span shortcut through the label instead of the evidence
        // features. The context pathway is trained by RL on sampled thinks.
        std::vector<double> x = context_input(model, ex.features, cmap);
        int prev = vocab.bos;
        for (std::size_t t = 0; t < ex.target.size(); ++t) {
            int tok = ex.target[t];
            bool want_ce = plan.ce[t];
            bool want_kl = plan.kl[t] && !prior.empty();
            if (!want_ce && !want_kl) {
                prev = tok;
                continue;
            }
            step_logits(model, x, prev, logits, hidden);
            std::vector<double> lp = log_softmax(logits);
            std::vector<double> p = softmax(logits);
            dlogits.assign(p.size(), 0.0);

            if (want_ce) {
                loss.ce += -lp[static_cast<std::size_t>(tok)] / static_cast<double>(ce_count);
                if (grad_out) {
                    double c = 1.0 / static_cast<double>(ce_count);
                    for (std::size_t k = 0; k < p.size(); ++k) dlogits[k] += c * p[k];
                    dlogits[static_cast<std::size_t>(tok)] -= c;
                }
            }
            if (want_kl) {
                double kl = 0.0;
                for (std::size_t k = 0; k < p.size(); ++k)
                    if (p[k] > 0.0) kl += p[k] * (std::log(p[k]) - std::log(prior[k]));
                loss.kl += kl / static_cast<double>(kl_count);
                if (grad_out) {
                    double c = lambda / static_cast<double>(kl_count);
                    for (std::size_t k = 0; k < p.size(); ++k) {
                        double term = std::log(p[k]) - std::log(prior[k]) - kl;
                        dlogits[k] += c * p[k] * term;
                    }
                }
            }
            if (grad_out) step_backward(model, x, prev, hidden, dlogits, *grad_out);
            prev = tok;
        }
    }
    loss.total = loss.ce + lambda * loss.kl;
    return loss;
}

SftLoss sft_step(PolicyModel& model, const std::vector<SftExample>& batch, SftMode mode,
                 double lambda, double smoothing, double lr, const PolicySchema& schema,
                 const Vocabulary& vocab) {
    if (lr <= 0.0) throw std::domain_error("learning rate must be > 0");
    Gradient grad = zero_gradient(model);
    SftLoss loss = sft_loss(model, batch, mode, lambda, smoothing, schema, vocab, &grad);
    apply_gradient(model, grad, lr);
    if (!model.finite()) throw NumericError("non-finite parameters after SFT step");
    return loss;
}

// --- checkpoints -----------------------------------------------------------

nlohmann::json model_to_json(const PolicyModel& model) {
    return {{"version", "1"},
            {"vocab_hash", model.vocab_hash},
            {"feature_dim", model.feature_dim},
            {"hidden", model.hidden},
            {"vocab_size", model.vocab_size},
            {"w_in", model.w_in},
            {"embed", model.embed},
            {"w_out", model.w_out},
            {"b_out", model.b_out}};
}

PolicyModel model_from_json(const nlohmann::json& doc, const Vocabulary& vocab) {
    PolicyModel m;
    try {
        m.vocab_hash = doc.at("vocab_hash").get<std::uint64_t>();
        m.feature_dim = doc.at("feature_dim").get<int>();
        m.hidden = doc.at("hidden").get<int>();
        m.vocab_size = doc.at("vocab_size").get<int>();
        m.w_in = doc.at("w_in").get<std::vector<double>>();
        m.embed = doc.at("embed").get<std::vector<double>>();
        m.w_out = doc.at("w_out").get<std::vector<double>>();
        m.b_out = doc.at("b_out").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed checkpoint: ") + e.what());
    }
    if (m.vocab_hash != vocab.hash())
        throw DataError("checkpoint vocabulary hash does not match the loaded schema");
    if (m.vocab_size != vocab.size()) throw DataError("checkpoint vocab size mismatch");
    if (m.w_in.size() != static_cast<std::size_t>(m.feature_dim) * m.hidden ||
        m.embed.size() != static_cast<std::size_t>(m.vocab_size) * m.hidden ||
        m.w_out.size() != static_cast<std::size_t>(m.hidden) * m.vocab_size ||
        m.b_out.size() != static_cast<std::size_t>(m.vocab_size))
        throw DataError("checkpoint parameter array sizes are inconsistent");
    return m;
}

void save_model(const PolicyModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out << model_to_json(model).dump() << "\n";
}

PolicyModel load_model(const std::string& path, const Vocabulary& vocab) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint is not valid JSON: ") + e.what());
    }
    return model_from_json(doc, vocab);
}

}  // namespace blm
