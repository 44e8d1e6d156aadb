#include "blm/keyframe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "blm/errors.hpp"

namespace blm {

void FrameEmbeddingSet::validate() const {
    if (n_frames < 1) throw DataError("frame set requires N >= 1");
    if (frames.size() != static_cast<std::size_t>(n_frames) * dim)
        throw DataError("frame array size does not match N*d");
    if (patch_grids.size() != static_cast<std::size_t>(n_frames) * patches * dim)
        throw DataError("patch array size does not match N*P*d");
}

bool ClueSet::contains_frame(int frame_index) const {
    for (const auto& e : entries)
        if (e.frame_index == frame_index) return true;
    return false;
}

double cosine(const double* a, const double* b, int dim) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (int i = 0; i < dim; ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw std::domain_error("cosine undefined for zero-norm vector");
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<double> frame_scores(const FrameEmbeddingSet& frames, const RiskPromptBank& bank) {
    frames.validate();
    if (bank.prompts.empty()) throw DataError("empty risk prompt bank");
    if (bank.dim != frames.dim) throw DataError("prompt bank dimension mismatch");
    std::vector<double> scores(static_cast<std::size_t>(frames.n_frames));
    for (int i = 0; i < frames.n_frames; ++i) {
        double best = -2.0;
        for (const auto& p : bank.prompts)
            best = std::max(best, cosine(frames.frame(i), p.vec.data(), frames.dim));
        scores[static_cast<std::size_t>(i)] = best;
    }
    return scores;
}

std::vector<int> select_keyframes(const std::vector<double>& scores, int m) {
    const int n = static_cast<int>(scores.size());
    if (m < 1 || m > n) throw std::domain_error("select_keyframes requires 1 <= m <= N");

    std::vector<char> chosen(static_cast<std::size_t>(n), 0);
    int count = 0;
    for (int j = 1; j <= m; ++j) {
        int lo = static_cast<int>((static_cast<long long>(j - 1) * n) / m);
        int hi = static_cast<int>((static_cast<long long>(j) * n) / m);
        if (lo >= hi) continue;
        int best = lo;
        for (int i = lo + 1; i < hi; ++i)
            if (scores[static_cast<std::size_t>(i)] > scores[static_cast<std::size_t>(best)]) best = i;
        if (!chosen[static_cast<std::size_t>(best)]) {
            chosen[static_cast<std::size_t>(best)] = 1;
            ++count;
        }
    }

    if (count < m) {
        // TOP fallback: score desc, index asc.
        std::vector<int> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&scores](int a, int b) {
            return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
        });
        for (int i : order) {
            if (count == m) break;
            if (!chosen[static_cast<std::size_t>(i)]) {
                chosen[static_cast<std::size_t>(i)] = 1;
                ++count;
            }
        }
    }

    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(m));
    for (int i = 0; i < n; ++i)
        if (chosen[static_cast<std::size_t>(i)]) out.push_back(i);
    return out;
}

std::pair<int, double> salient_patch(const double* grid, int patches, int dim) {
    if (patches < 1) throw std::domain_error("salient_patch requires P >= 1");
    int best = 0;
    double best_norm = -1.0;
    for (int p = 0; p < patches; ++p) {
        double sq = 0.0;
        for (int i = 0; i < dim; ++i) {
            double x = grid[static_cast<std::size_t>(p) * dim + i];
            sq += x * x;
        }
        double norm = std::sqrt(sq);
        if (norm > best_norm) {
            best_norm = norm;
            best = p;
        }
    }
    return {best, best_norm};
}

ClueSet build_clue_set(const FrameEmbeddingSet& frames, const RiskPromptBank& bank, int m) {
    std::vector<double> scores = frame_scores(frames, bank);
    std::vector<int> selected = select_keyframes(scores, m);
    ClueSet clue;
    clue.entries.reserve(selected.size());
    for (int i : selected) {
        auto [patch, patch_score] = salient_patch(frames.patch_grid(i), frames.patches, frames.dim);
        clue.entries.push_back({i, patch, scores[static_cast<std::size_t>(i)], patch_score});
    }
    return clue;
}

}  // namespace blm
