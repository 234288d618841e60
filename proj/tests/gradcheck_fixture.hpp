#pragma once

#include <cmath>
#include <random>

#include "trusteval/embed.hpp"
#include "trusteval/siamese.hpp"

#include "test_util.hpp"

namespace testutil {

// Random config with the relu kinks kept away from zero, so finite
// differences are trustworthy.
struct CheckSetup {
    trusteval::ModelParams m;
    trusteval::PairExample pair;
};

inline bool has_kink_near_zero(const trusteval::ModelParams& m, const trusteval::Acfg& g,
                               double margin) {
    trusteval::ForwardCache c = trusteval::forward_cached(m, g);
    for (const auto& per_vertex : c.t)
        for (const auto& tk : per_vertex)
            for (const auto& level : tk)
                for (double v : level)
                    // exact zeros come from all-zero sigma inputs (first
                    // round) and stay zero under perturbation; only values
                    // near but not at the kink break finite differences
                    if (v != 0.0 && std::abs(v) < margin) return true;
    return false;
}

inline CheckSetup sample_check_setup(std::mt19937_64& rng, std::size_t p, std::size_t L,
                                     std::size_t H) {
    using namespace trusteval;
    for (;;) {
        ModelParams m = init_params(p, 2, L, H, rng());
        PairExample pair;
        pair.g_ref = random_acfg(rng);
        pair.g_slot = random_acfg(rng);
        pair.label = rng() % 2 ? 1 : -1;
        if (has_kink_near_zero(m, pair.g_ref, 1e-6)) continue;
        if (has_kink_near_zero(m, pair.g_slot, 1e-6)) continue;
        const Vec ua = forward(m, pair.g_ref).U;
        const Vec ub = forward(m, pair.g_slot).U;
        if (norm(ua) < 1e-6 || norm(ub) < 1e-6) continue;
        return {std::move(m), std::move(pair)};
    }
}

} // namespace testutil
