#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "blm/errors.hpp"
#include "blm/keyframe.hpp"
#include "blm/rng.hpp"
#include "blm/synth.hpp"
#include "blm/taxonomy.hpp"
#include "blm/vocab.hpp"

using namespace blm;

namespace {

// Independent reference for the hybrid BIN+TOP rule: per-bin argmax (bin j,
// 1-based, covers floor((j-1)N/m) .. floor(jN/m)-1, lowest index on ties),
// then global top-score fallback (score desc, index asc) to m distinct picks.
std::vector<int> reference_select(const std::vector<double>& s, int m) {
    const int n = static_cast<int>(s.size());
    std::set<int> chosen;
    for (int j = 1; j <= m; ++j) {
        int lo = static_cast<int>(static_cast<long long>(j - 1) * n / m);
        int hi = static_cast<int>(static_cast<long long>(j) * n / m);
        if (lo >= hi) continue;
        int best = lo;
        for (int i = lo; i < hi; ++i)
            if (s[i] > s[best]) best = i;
        chosen.insert(best);
    }
    std::vector<int> order(s.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (s[a] != s[b]) return s[a] > s[b];
        return a < b;
    });
    for (int i : order) {
        if (static_cast<int>(chosen.size()) >= m) break;
        chosen.insert(i);
    }
    return {chosen.begin(), chosen.end()};
}

}  // namespace

TEST_CASE("cosine basics and zero-norm error") {
    std::vector<double> a{1.0, 0.0}, b{0.0, 2.0}, c{3.0, 0.0}, z{0.0, 0.0};
    CHECK(cosine(a.data(), b.data(), 2) == doctest::Approx(0.0));
    CHECK(cosine(a.data(), c.data(), 2) == doctest::Approx(1.0));
    CHECK_THROWS_AS(cosine(a.data(), z.data(), 2), std::domain_error);
}

TEST_CASE("frame_scores matches a double-loop max-cosine oracle") {
    auto rng = make_rng(derive_seed(7, {0xf5a}));
    PolicySchema schema = default_schema();
    RiskPromptBank bank = make_prompt_bank(schema, 16, 3);

    FrameEmbeddingSet frames;
    frames.n_frames = 16;
    frames.dim = 16;
    frames.patches = 1;
    frames.frames.resize(16 * 16);
    frames.patch_grids.resize(16 * 16);
    for (double& x : frames.frames) x = gaussian(rng);
    frames.patch_grids = frames.frames;

    std::vector<double> got = frame_scores(frames, bank);
    REQUIRE(got.size() == 16);
    for (int i = 0; i < 16; ++i) {
        double best = -2.0;
        for (const auto& p : bank.prompts)
            best = std::max(best, cosine(frames.frame(i), p.vec.data(), frames.dim));
        CHECK(std::fabs(got[static_cast<std::size_t>(i)] - best) < 1e-12);
    }
}

TEST_CASE("select_keyframes: strictly increasing scores pick bin maxima") {
    std::vector<double> s(16);
    for (int i = 0; i < 16; ++i) s[static_cast<std::size_t>(i)] = 0.1 * i;
    CHECK(select_keyframes(s, 3) == std::vector<int>{4, 9, 15});
}

TEST_CASE("select_keyframes matches the reference on random instances") {
    auto rng = make_rng(derive_seed(11, {0xb17}));
    for (int trial = 0; trial < 300; ++trial) {
        int n = 1 + uniform_int(rng, 64);
        int m = 1 + uniform_int(rng, n);
        std::vector<double> s(static_cast<std::size_t>(n));
        for (double& x : s) x = uniform01(rng);
        if (trial % 5 == 0)  // exercise tie handling
            for (double& x : s) x = std::floor(x * 4.0) / 4.0;
        CHECK(select_keyframes(s, m) == reference_select(s, m));
    }
}

TEST_CASE("salient_patch matches an exhaustive row-norm oracle") {
    auto rng = make_rng(derive_seed(13, {0x9a7c4}));
    const int patches = 49, dim = 32;
    std::vector<double> grid(static_cast<std::size_t>(patches) * dim);
    for (double& x : grid) x = gaussian(rng);

    auto [idx, norm] = salient_patch(grid.data(), patches, dim);
    int best = 0;
    double best_norm = -1.0;
    for (int p = 0; p < patches; ++p) {
        double n2 = 0.0;
        for (int d = 0; d < dim; ++d) {
            double v = grid[static_cast<std::size_t>(p) * dim + d];
            n2 += v * v;
        }
        double n = std::sqrt(n2);
        if (n > best_norm) {
            best_norm = n;
            best = p;
        }
    }
    CHECK(idx == best);
    CHECK(norm == doctest::Approx(best_norm).epsilon(1e-12));
}

TEST_CASE("build_clue_set recovers planted frames at full signal") {
    PolicySchema schema = default_schema();
    Vocabulary vocab = build_vocabulary(schema, 16, 20);
    GeneratorConfig g;
    g.per_scenario_count = 10;
    g.no_risk_count = 10;
    g.signal_strength = 1.0;
    g.mismatch_rate = 0.0;
    RiskPromptBank bank = make_prompt_bank(schema, g.dim, 5);
    auto data = generate_dataset(g, schema, vocab, bank, 5);
    int risk = 0;
    for (const auto& s : data) {
        if (s.label.is_no_risk()) continue;
        ++risk;
        REQUIRE(s.planted_frames.size() >= 1);
        REQUIRE(s.planted_frames.size() <= 3);
        ClueSet clue = build_clue_set(s.frames, bank, 3);
        for (int f : s.planted_frames) CHECK(clue.contains_frame(f));
        // planted frames sit in distinct temporal thirds
        std::set<int> thirds;
        for (int f : s.planted_frames)
            for (int b = 0; b < 3; ++b)
                if (b * g.n_frames / 3 <= f && f < (b + 1) * g.n_frames / 3) thirds.insert(b);
        CHECK(thirds.size() == s.planted_frames.size());
    }
    CHECK(risk == 70);
}

TEST_CASE("clue sets are sorted by frame index") {
    PolicySchema schema = default_schema();
    RiskPromptBank bank = make_prompt_bank(schema, 16, 9);
    auto rng = make_rng(3);
    FrameEmbeddingSet frames;
    frames.n_frames = 12;
    frames.dim = 16;
    frames.patches = 4;
    frames.frames.resize(12 * 16);
    frames.patch_grids.resize(12 * 4 * 16);
    for (double& x : frames.frames) x = gaussian(rng);
    for (double& x : frames.patch_grids) x = gaussian(rng);
    ClueSet clue = build_clue_set(frames, bank, 5);
    REQUIRE(clue.entries.size() == 5);
    for (std::size_t i = 1; i < clue.entries.size(); ++i)
        CHECK(clue.entries[i - 1].frame_index < clue.entries[i].frame_index);
}

TEST_CASE("frame embedding validation") {
    FrameEmbeddingSet f;
    f.n_frames = 2;
    f.dim = 4;
    f.patches = 2;
    f.frames.assign(8, 0.0);
    f.patch_grids.assign(16, 0.0);
    CHECK_NOTHROW(f.validate());
    f.frames.pop_back();
    CHECK_THROWS_AS(f.validate(), DataError);
}
