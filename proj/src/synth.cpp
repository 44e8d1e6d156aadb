#include "blm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "blm/errors.hpp"
#include "blm/policy_model.hpp"
#include "blm/rng.hpp"

namespace blm {

std::string provenance_name(Provenance p) {
    switch (p) {
        case Provenance::ExpertAudited: return "expert_audited";
        case Provenance::RuleTriggered: return "rule_triggered";
        case Provenance::HighImpressionCompliant: return "high_impression_compliant";
    }
    return "expert_audited";
}

Provenance provenance_from_name(const std::string& name) {
    if (name == "expert_audited") return Provenance::ExpertAudited;
    if (name == "rule_triggered") return Provenance::RuleTriggered;
    if (name == "high_impression_compliant") return Provenance::HighImpressionCompliant;
    throw DataError("unknown provenance: " + name);
}

void GeneratorConfig::validate() const {
    if (per_scenario_count < 0 || no_risk_count < 0) throw ConfigError("negative sample count");
    if (per_scenario_count + no_risk_count == 0) throw ConfigError("empty dataset configured");
    if (n_frames < 1) throw ConfigError("n_frames must be >= 1");
    if (patches < 1) throw ConfigError("patches must be >= 1");
    if (signal_strength <= 0.0 || signal_strength > 1.0)
        throw ConfigError("signal_strength must lie in (0, 1]");
    if (mismatch_rate < 0.0 || mismatch_rate > 1.0)
        throw ConfigError("mismatch_rate must lie in [0, 1]");
    if (noise_scale < 0.0) throw ConfigError("noise_scale must be >= 0");
    if (asr_len < 6) throw ConfigError("asr_len must be >= 6");
}

namespace {

// `count` orthonormal vectors from seeded gaussians (Gram-Schmidt).
std::vector<std::vector<double>> orthonormal_set(int count, int dim, std::uint64_t seed) {
    if (dim < count) throw ConfigError("embedding dim too small for prompt bank");
    auto rng = make_rng(seed);
    std::vector<std::vector<double>> vecs;
    while (static_cast<int>(vecs.size()) < count) {
        std::vector<double> v(static_cast<std::size_t>(dim));
        for (double& x : v) x = gaussian(rng);
        for (const auto& u : vecs) {
            double dot = 0.0;
            for (int i = 0; i < dim; ++i) dot += v[static_cast<std::size_t>(i)] * u[static_cast<std::size_t>(i)];
            for (int i = 0; i < dim; ++i) v[static_cast<std::size_t>(i)] -= dot * u[static_cast<std::size_t>(i)];
        }
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        if (norm < 1e-6) continue;  // redraw on a degenerate residual
        for (double& x : v) x /= norm;
        vecs.push_back(std::move(v));
    }
    return vecs;
}

void normalize(std::vector<double>& v) {
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0.0)
        for (double& x : v) x /= norm;
}

}  // namespace

RiskPromptBank make_prompt_bank(const PolicySchema& schema, int dim, std::uint64_t seed) {
    auto risk = schema.risk_scenarios();
    auto vecs = orthonormal_set(static_cast<int>(risk.size()) + 1, dim, derive_seed(seed, {0xba7f}));
    RiskPromptBank bank;
    bank.dim = dim;
    for (std::size_t k = 0; k < risk.size(); ++k) bank.prompts.push_back({risk[k]->id, vecs[k]});
    bank.benign = vecs.back();
    return bank;
}

std::vector<double> benign_direction(const PolicySchema& schema, int dim, std::uint64_t seed) {
    auto risk = schema.risk_scenarios();
    auto vecs = orthonormal_set(static_cast<int>(risk.size()) + 1, dim, derive_seed(seed, {0xba7f}));
    return vecs.back();
}

namespace {

struct FillerPool {
    std::vector<int> ids;
};

FillerPool filler_pool(const Vocabulary& vocab) {
    FillerPool pool;
    for (int i = 0; i < vocab.size(); ++i)
        if (vocab.text(i).rfind("filler_", 0) == 0) pool.ids.push_back(i);
    if (pool.ids.empty()) throw DataError("vocabulary has no filler tokens");
    return pool;
}

std::vector<int> make_asr(std::mt19937_64& rng, const FillerPool& pool, int len,
                          const std::vector<int>& keyword_ids) {
    std::vector<int> asr(static_cast<std::size_t>(len));
    for (int& t : asr) t = pool.ids[static_cast<std::size_t>(uniform_int(rng, static_cast<int>(pool.ids.size())))];
    if (!keyword_ids.empty()) {
        std::vector<int> positions(static_cast<std::size_t>(len));
        for (int i = 0; i < len; ++i) positions[static_cast<std::size_t>(i)] = i;
        shuffle_seeded(positions, rng);
        for (std::size_t k = 0; k < keyword_ids.size() && k < positions.size(); ++k)
            asr[static_cast<std::size_t>(positions[k])] = keyword_ids[k];
    }
    return asr;
}

VideoSample make_sample(const GeneratorConfig& cfg, const PolicySchema& schema,
                        const Vocabulary& vocab, const RiskPromptBank& bank,
                        const std::vector<double>& benign, const FillerPool& pool,
                        const ScenarioEntry& scenario, int global_index, std::uint64_t seed) {
    auto rng = make_rng(derive_seed(seed, {0x5a5a, static_cast<std::uint64_t>(global_index)}));
    const int n = cfg.n_frames, d = cfg.dim, p = cfg.patches;

    VideoSample s;
    {
        std::ostringstream os;
        os << "s" << global_index << "_" << scenario.id;
        s.id = os.str();
    }
    s.frames.n_frames = n;
    s.frames.dim = d;
    s.frames.patches = p;
    s.frames.frames.assign(static_cast<std::size_t>(n) * d, 0.0);
    s.frames.patch_grids.assign(static_cast<std::size_t>(n) * p * d, 0.0);

    bool is_risk = !scenario.no_risk;
    const ViolationType& vt = scenario.types.front();
    s.label = is_risk ? RiskLabel{vt.default_severity, scenario.id, vt.id} : schema.no_risk_label();

    bool plant_visual = false, inject_asr = true;
    if (is_risk) {
        if (uniform01(rng) < cfg.mismatch_rate) {
            s.mismatch = true;
            if (uniform01(rng) < 0.5) {
                plant_visual = true;   // visual signature without ASR keywords
                inject_asr = false;
            } else {
                plant_visual = false;  // ASR keywords without visual signature
            }
        } else {
            plant_visual = true;
        }
        s.provenance = uniform01(rng) < 0.5 ? Provenance::ExpertAudited : Provenance::RuleTriggered;
    } else {
        s.provenance = Provenance::HighImpressionCompliant;
    }

    // Planted frames sit in distinct temporal thirds so the m=3 BIN selection
    // can recover every one of them.
    if (plant_visual) {
        int thirds = std::min(3, n);
        std::vector<int> bins(static_cast<std::size_t>(thirds));
        for (int j = 0; j < thirds; ++j) bins[static_cast<std::size_t>(j)] = j;
        shuffle_seeded(bins, rng);
        int count = 1 + uniform_int(rng, thirds);
        for (int j = 0; j < count; ++j) {
            int b = bins[static_cast<std::size_t>(j)];
            int lo = b * n / thirds, hi = (b + 1) * n / thirds;
            s.planted_frames.push_back(lo + uniform_int(rng, hi - lo));
        }
        std::sort(s.planted_frames.begin(), s.planted_frames.end());
    }

    const std::vector<double>* prompt = nullptr;
    if (is_risk) {
        for (const auto& pr : bank.prompts)
            if (pr.scenario == scenario.id) prompt = &pr.vec;
        if (!prompt) throw DataError("prompt bank missing scenario " + scenario.id);
    }

    for (int i = 0; i < n; ++i) {
        bool planted = std::binary_search(s.planted_frames.begin(), s.planted_frames.end(), i);
        std::vector<double> v(static_cast<std::size_t>(d));
        for (int j = 0; j < d; ++j) {
            double base = planted
                              ? (1.0 - cfg.signal_strength) * benign[static_cast<std::size_t>(j)] +
                                    cfg.signal_strength * (*prompt)[static_cast<std::size_t>(j)]
                              : benign[static_cast<std::size_t>(j)];
            v[static_cast<std::size_t>(j)] = base + cfg.noise_scale * gaussian(rng);
        }
        normalize(v);
        std::copy(v.begin(), v.end(), s.frames.frames.begin() + static_cast<std::size_t>(i) * d);

        double* grid = s.frames.patch_grids.data() + static_cast<std::size_t>(i) * p * d;
        for (int j = 0; j < p * d; ++j) grid[j] = 0.3 * gaussian(rng);
        if (planted) {
            int hot = uniform_int(rng, p);
            for (int j = 0; j < d; ++j) grid[static_cast<std::size_t>(hot) * d + j] *= 3.0;
        }
    }

    std::vector<int> keyword_ids;
    if (inject_asr)
        for (const auto& kw : schema.label_keywords(s.label)) keyword_ids.push_back(vocab.require(kw));
    s.asr_tokens = make_asr(rng, pool, cfg.asr_len, keyword_ids);
    return s;
}

}  // namespace

std::vector<VideoSample> generate_dataset(const GeneratorConfig& config, const PolicySchema& schema,
                                          const Vocabulary& vocab, const RiskPromptBank& bank,
                                          std::uint64_t seed) {
    config.validate();
    if (static_cast<int>(bank.benign.size()) != config.dim)
        throw DataError("prompt bank benign direction missing or wrong dimension");
    const std::vector<double>& benign = bank.benign;
    FillerPool pool = filler_pool(vocab);

    std::vector<VideoSample> out;
    int index = 0;
    for (const auto* scenario : schema.risk_scenarios())
        for (int c = 0; c < config.per_scenario_count; ++c)
            out.push_back(make_sample(config, schema, vocab, bank, benign, pool, *scenario, index++, seed));
    const ScenarioEntry& norisk = schema.no_risk_scenario();
    for (int c = 0; c < config.no_risk_count; ++c)
        out.push_back(make_sample(config, schema, vocab, bank, benign, pool, norisk, index++, seed));
    return out;
}

// --- ICoT ------------------------------------------------------------------

std::array<std::string, 3> assemble_icot_prompts(const VideoSample& sample, const ClueSet& clue,
                                                 const PolicySchema& schema,
                                                 const Vocabulary& vocab) {
    std::ostringstream clues;
    for (const auto& e : clue.entries)
        clues << " frame_" << e.frame_index << ":patch_" << e.patch_index;

    std::ostringstream asr;
    int limit = std::min<int>(16, static_cast<int>(sample.asr_tokens.size()));
    for (int i = 0; i < limit; ++i) asr << (i ? " " : "") << vocab.text(sample.asr_tokens[static_cast<std::size_t>(i)]);

    std::string guidelines = schema.serialize_guidelines();
    std::array<std::string, 3> prompts;
    prompts[0] = "[observation] Describe the visual content of" + clues.str() +
                 ", summarize the ASR transcript \"" + asr.str() +
                 "\" and assess cross-modal consistency.\n" + guidelines;
    prompts[1] = "[screening+causal] Identify potential policy violations in" + clues.str() +
                 " and analyze their underlying causes.\n" + guidelines;
    prompts[2] = "[verdict] Integrate the reasoning into a final compliance decision.\n" + guidelines;
    return prompts;
}

std::array<std::string, 4> MockDescriber::describe(const std::array<std::string, 3>& /*prompts*/,
                                                   const VideoSample& sample, const ClueSet& clue) {
    std::ostringstream obs;
    obs << "observed";
    for (const auto& e : clue.entries) obs << " frame_" << e.frame_index;
    for (int t : sample.asr_tokens) {
        const std::string& tok = vocab_.text(t);
        if (tok.rfind("filler_", 0) != 0) obs << " " << tok;
    }
    if (sample.mismatch) obs << " " << vocab_.text(vocab_.mismatch_marker);

    const ScenarioEntry* scen = schema_.find_scenario(sample.label.scenario);
    const ViolationType* type = schema_.find_type(sample.label.scenario, sample.label.violation_type);
    std::ostringstream screening, causal;
    screening << "screening";
    for (const auto& kw : scen->keywords) screening << " " << kw;
    screening << " -> " << scen->id;
    causal << "cause";
    for (const auto& kw : type->keywords) causal << " " << kw;
    causal << " -> " << type->id;

    std::ostringstream verdict;
    verdict << "scene= " << sample.label.scenario << " type= " << sample.label.violation_type
            << " severity= " << severity_name(sample.label.severity);
    return {obs.str(), screening.str(), causal.str(), verdict.str()};
}

ICoTRecord make_icot_record(const VideoSample& sample, const ClueSet& clue,
                            const PolicySchema& schema, const Vocabulary& vocab,
                            DescriberAdapter& describer) {
    auto prompts = assemble_icot_prompts(sample, clue, schema, vocab);
    ICoTRecord rec;
    rec.clue = clue;
    rec.stages = describer.describe(prompts, sample, clue);
    rec.label = sample.label;
    for (const auto& stage : rec.stages)
        if (stage.empty()) throw DataError("describer produced an empty stage");
    return rec;
}

std::vector<int> sft_target_tokens(const VideoSample& sample, const PolicySchema& schema,
                                   const Vocabulary& vocab) {
    const ScenarioEntry* scen = schema.find_scenario(sample.label.scenario);
    const ViolationType* type = schema.find_type(sample.label.scenario, sample.label.violation_type);
    if (!scen || !type) throw DataError("SFT sample label not registered in schema");
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : sample.id) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    // Think interiors cycle between a scenario keyword, a type keyword, and
    // the pair, so every keyword token appears in the corpus and the closing
    // tag is trained as a successor of both keyword kinds.
    const std::string& scen_kw = scen->keywords[static_cast<std::size_t>(h % scen->keywords.size())];
    const std::string& type_kw =
        type->keywords[static_cast<std::size_t>((h >> 32) % type->keywords.size())];

    std::vector<int> t;
    t.push_back(vocab.think_open);
    switch ((h >> 16) % 8) {
        case 0:
        case 1:
        case 2:
        case 3:
        case 4: t.push_back(vocab.require(scen_kw)); break;
        case 5:
        case 6: t.push_back(vocab.require(type_kw)); break;
        default:
            t.push_back(vocab.require(scen_kw));
            t.push_back(vocab.require(type_kw));
            break;
    }
    t.push_back(vocab.think_close);
    t.push_back(vocab.answer_open);
    t.push_back(vocab.scene_marker);
    t.push_back(vocab.require(sample.label.scenario));
    t.push_back(vocab.type_marker);
    t.push_back(vocab.require(sample.label.violation_type));
    t.push_back(vocab.severity_marker);
    t.push_back(vocab.require(severity_name(sample.label.severity)));
    t.push_back(vocab.answer_close);
    return t;
}

std::vector<std::string> sample_citations(const VideoSample& sample, const ClueSet& clue,
                                          const PolicySchema& schema, const Vocabulary& vocab) {
    std::unordered_set<std::string> keywords;
    for (const auto& scenario : schema.scenarios) {
        keywords.insert(scenario.keywords.begin(), scenario.keywords.end());
        for (const auto& type : scenario.types)
            keywords.insert(type.keywords.begin(), type.keywords.end());
    }
    std::vector<std::string> cites;
    std::unordered_set<std::string> seen;
    for (const auto& e : clue.entries) cites.push_back("frame_" + std::to_string(e.frame_index));
    for (int t : sample.asr_tokens) {
        const std::string& tok = vocab.text(t);
        if (keywords.count(tok) && seen.insert(tok).second) cites.push_back(tok);
    }
    return cites;
}

// --- curation --------------------------------------------------------------

std::vector<VideoSample> rejection_sample_hard(const std::vector<VideoSample>& dataset,
                                               const PolicyModel& model, const RiskPromptBank& bank,
                                               const PolicySchema& schema, const Vocabulary& vocab,
                                               int keyframes_m, int passes, double temperature,
                                               int max_len, std::uint64_t seed) {
    if (passes < 1) throw ConfigError("rejection sampling requires passes >= 1");
    if (temperature <= 0.0) throw ConfigError("rejection sampling requires temperature > 0");
    std::vector<VideoSample> hard;
    for (std::size_t idx = 0; idx < dataset.size(); ++idx) {
        const VideoSample& s = dataset[idx];
        ClueSet clue = build_clue_set(s.frames, bank, keyframes_m);
        std::vector<double> feats = featurize(s, clue, bank, schema, vocab);
        bool ever_correct = false;
        for (int p = 0; p < passes && !ever_correct; ++p) {
            Rollout r = sample_response(model, feats, temperature,
                                        derive_seed(seed, {0x4a3d, idx, static_cast<std::uint64_t>(p)}),
                                        max_len, vocab, schema);
            const auto& ans = r.structured.parsed_answer;
            ever_correct = ans && ans->scenario == s.label.scenario &&
                           ans->violation_type == s.label.violation_type;
        }
        if (!ever_correct) hard.push_back(s);
    }
    return hard;
}

VideoSample safety_concat(const VideoSample& a, const VideoSample& b, const PolicySchema& schema,
                          const Vocabulary& vocab) {
    bool related = a.label.scenario == b.label.scenario || b.label.is_no_risk();
    if (!related) throw std::domain_error("safety_concat requires related scenarios");
    if (a.frames.dim != b.frames.dim || a.frames.patches != b.frames.patches)
        throw DataError("safety_concat requires matching embedding shapes");

    const int n = a.frames.n_frames;
    const int m_total = n + b.frames.n_frames;
    const int d = a.frames.dim, p = a.frames.patches;

    VideoSample out;
    out.id = a.id + "+" + b.id;
    out.origin = "concat";
    out.frames.n_frames = n;
    out.frames.dim = d;
    out.frames.patches = p;
    out.frames.frames.resize(static_cast<std::size_t>(n) * d);
    out.frames.patch_grids.resize(static_cast<std::size_t>(n) * p * d);

    auto source_frame = [&](int combined) -> const VideoSample& {
        return combined < n ? a : b;
    };
    std::vector<char> planted_combined(static_cast<std::size_t>(m_total), 0);
    for (int i : a.planted_frames) planted_combined[static_cast<std::size_t>(i)] = 1;
    for (int i : b.planted_frames) planted_combined[static_cast<std::size_t>(n + i)] = 1;

    for (int i = 0; i < n; ++i) {
        int combined = static_cast<int>((static_cast<long long>(i) * m_total) / n);
        const VideoSample& src = source_frame(combined);
        int local = combined < n ? combined : combined - n;
        std::copy_n(src.frames.frame(local), d, out.frames.frames.begin() + static_cast<std::size_t>(i) * d);
        std::copy_n(src.frames.patch_grid(local), static_cast<std::size_t>(p) * d,
                    out.frames.patch_grids.begin() + static_cast<std::size_t>(i) * p * d);
        if (planted_combined[static_cast<std::size_t>(combined)]) out.planted_frames.push_back(i);
    }

    out.asr_tokens = a.asr_tokens;
    out.asr_tokens.push_back(vocab.sep);
    out.asr_tokens.insert(out.asr_tokens.end(), b.asr_tokens.begin(), b.asr_tokens.end());

    const VideoSample& parent =
        severity_rank(a.label.severity) >= severity_rank(b.label.severity) ? a : b;
    out.label = parent.label;
    out.provenance = parent.provenance;
    out.mismatch = parent.mismatch;
    if (!schema.valid_label(out.label)) throw DataError("safety_concat produced an invalid label");
    return out;
}

}  // namespace blm
