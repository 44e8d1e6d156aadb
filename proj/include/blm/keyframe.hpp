#pragma once

#include <string>
#include <utility>
#include <vector>

namespace blm {

// N frame embeddings (N x d, row-major) plus per-frame patch grids (N x P x d).
struct FrameEmbeddingSet {
    int n_frames = 0;
    int dim = 0;
    int patches = 0;
    std::vector<double> frames;       // n_frames * dim
    std::vector<double> patch_grids;  // n_frames * patches * dim

    const double* frame(int i) const { return frames.data() + static_cast<std::size_t>(i) * dim; }
    const double* patch_grid(int i) const {
        return patch_grids.data() + static_cast<std::size_t>(i) * patches * dim;
    }
    void validate() const;  // throws DataError on inconsistent sizes
};

struct RiskPrompt {
    std::string scenario;
    std::vector<double> vec;
};

struct RiskPromptBank {
    int dim = 0;
    std::vector<RiskPrompt> prompts;
    std::vector<double> benign;  // shared compliant axis, orthonormal to the prompts
};

struct ClueEntry {
    int frame_index = 0;
    int patch_index = 0;
    double frame_score = 0.0;
    double patch_score = 0.0;
};

// Selected (keyframe, region) pairs, sorted by frame index.
struct ClueSet {
    std::vector<ClueEntry> entries;
    bool contains_frame(int frame_index) const;
};

double cosine(const double* a, const double* b, int dim);  // domain_error on zero norm

// s_i = max_k cosine(v_i, t_k)
std::vector<double> frame_scores(const FrameEmbeddingSet& frames, const RiskPromptBank& bank);

// Hybrid BIN+TOP selection. Bin j (1-based) covers floor((j-1)N/m) ..
// floor(jN/m)-1; per-bin argmax with lowest-index ties, global top-score
// fallback (score desc, index asc) until m distinct indices. Sorted ascending.
std::vector<int> select_keyframes(const std::vector<double>& scores, int m);

// argmax_p ||row p||_2, lowest index on ties.
std::pair<int, double> salient_patch(const double* grid, int patches, int dim);

ClueSet build_clue_set(const FrameEmbeddingSet& frames, const RiskPromptBank& bank, int m);

}  // namespace blm
