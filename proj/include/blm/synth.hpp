#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "blm/keyframe.hpp"
#include "blm/parsing.hpp"
#include "blm/taxonomy.hpp"
#include "blm/vocab.hpp"

namespace blm {

enum class Provenance { ExpertAudited, RuleTriggered, HighImpressionCompliant };
std::string provenance_name(Provenance p);
Provenance provenance_from_name(const std::string& name);

struct VideoSample {
    std::string id;
    FrameEmbeddingSet frames;
    std::vector<int> asr_tokens;
    RiskLabel label;
    Provenance provenance = Provenance::ExpertAudited;
    std::vector<int> planted_frames;  // generator ground truth, empty for no-risk
    bool mismatch = false;
    std::string origin = "base";  // base | hard_dup | concat
};

struct GeneratorConfig {
    int per_scenario_count = 100;
    int no_risk_count = 300;
    int n_frames = 16;
    int dim = 16;
    int patches = 4;
    double signal_strength = 0.9;   // sigma_sig in (0, 1]
    double mismatch_rate = 0.1;     // rho in [0, 1]
    double noise_scale = 0.02;
    int asr_len = 24;

    void validate() const;  // throws ConfigError on bad ranges
};

// K=7 prompt vectors, one per risk scenario, orthonormalized from seeded
// gaussian draws (requires dim >= scenario count + 1; the extra direction
// is the shared benign axis).
RiskPromptBank make_prompt_bank(const PolicySchema& schema, int dim, std::uint64_t seed);
std::vector<double> benign_direction(const PolicySchema& schema, int dim, std::uint64_t seed);

std::vector<VideoSample> generate_dataset(const GeneratorConfig& config, const PolicySchema& schema,
                                          const Vocabulary& vocab, const RiskPromptBank& bank,
                                          std::uint64_t seed);

// --- ICoT assembly ---------------------------------------------------------

struct ICoTRecord {
    ClueSet clue;
    std::array<std::string, 4> stages;  // observation, risk screening, causal analysis, verdict
    RiskLabel label;
};

// Three stage prompts (observation; screening+causal; verdict), each carrying
// the clue references, an ASR excerpt and the serialized rule schema.
std::array<std::string, 3> assemble_icot_prompts(const VideoSample& sample, const ClueSet& clue,
                                                 const PolicySchema& schema, const Vocabulary& vocab);

// Adapter contract for the frozen describer model: prompts in, stage texts out.
class DescriberAdapter {
  public:
    virtual ~DescriberAdapter() = default;
    virtual std::array<std::string, 4> describe(const std::array<std::string, 3>& prompts,
                                                const VideoSample& sample, const ClueSet& clue) = 0;
};

// Deterministic describer backed by generator ground truth.
class MockDescriber : public DescriberAdapter {
  public:
    MockDescriber(const PolicySchema& schema, const Vocabulary& vocab)
        : schema_(schema), vocab_(vocab) {}
    std::array<std::string, 4> describe(const std::array<std::string, 3>& prompts,
                                        const VideoSample& sample, const ClueSet& clue) override;

  private:
    const PolicySchema& schema_;
    const Vocabulary& vocab_;
};

ICoTRecord make_icot_record(const VideoSample& sample, const ClueSet& clue,
                            const PolicySchema& schema, const Vocabulary& vocab,
                            DescriberAdapter& describer);

// Serializes a sample's supervision target into the fixed output grammar:
//   <think> kw... </think> <answer> scene= <id> type= <id> severity= <id> </answer>
// The think interior cycles per sample id between a scenario keyword, a
// violation-type keyword, and a scenario+type keyword pair (5:2:1), so every
// keyword token occurs as a predecessor of </think> in the corpus while
// keyword-to-keyword transitions stay rare.
std::vector<int> sft_target_tokens(const VideoSample& sample, const PolicySchema& schema,
                                   const Vocabulary& vocab);

// Evidence strings the input actually supports: one "frame_<i>" reference per
// clue entry plus every ASR token that is a schema keyword.
std::vector<std::string> sample_citations(const VideoSample& sample, const ClueSet& clue,
                                          const PolicySchema& schema, const Vocabulary& vocab);

// --- RL data curation ------------------------------------------------------

struct PolicyModel;  // policy_model.hpp

// Hard iff the strict (scene AND type) match fails in every pass.
std::vector<VideoSample> rejection_sample_hard(const std::vector<VideoSample>& dataset,
                                               const PolicyModel& model, const RiskPromptBank& bank,
                                               const PolicySchema& schema, const Vocabulary& vocab,
                                               int keyframes_m, int passes, double temperature,
                                               int max_len, std::uint64_t seed);

// Pre: same scenario, or b no-risk. Frames concatenated then stride-resampled
// back to a's N; label is the higher-severity parent's.
VideoSample safety_concat(const VideoSample& a, const VideoSample& b, const PolicySchema& schema,
                          const Vocabulary& vocab);

}  // namespace blm
