#pragma once

#include <random>
#include <string>

#include "trusteval/acfg.hpp"
#include "trusteval/rng.hpp"
#include "trusteval/telemetry.hpp"

namespace testutil {

inline trusteval::SlotRecord random_record(std::mt19937_64& rng, std::uint64_t slot = 0) {
    trusteval::SlotRecord r;
    r.slot_index = slot;
    r.delay_ms = trusteval::uniform_in(rng, 0.0, 100.0);
    r.subtasks_received = rng() % 50;
    r.cpu_utilization = trusteval::uniform01(rng);
    r.avg_completion_ms = trusteval::uniform_in(rng, 0.0, 200.0);
    r.effectiveness = rng() % 2 ? 1 : 0;
    return r;
}

inline trusteval::NormStats random_stats(std::mt19937_64& rng) {
    trusteval::NormStats s;
    auto range = [&](double lo, double hi, double& min, double& max) {
        double a = trusteval::uniform_in(rng, lo, hi);
        double b = trusteval::uniform_in(rng, lo, hi);
        min = std::min(a, b);
        max = std::max(a, b) + 1e-6; // keep ranges non-degenerate
    };
    range(0.0, 100.0, s.delay_min, s.delay_max);
    range(0.0, 50.0, s.subtasks_min, s.subtasks_max);
    range(0.0, 1.0, s.cpu_min, s.cpu_max);
    range(0.0, 200.0, s.completion_min, s.completion_max);
    s.valid = true;
    return s;
}

inline trusteval::Acfg random_acfg(std::mt19937_64& rng) {
    trusteval::Acfg g;
    for (auto& vertex : g.r)
        for (auto& f : vertex) f = trusteval::uniform01(rng);
    g.r[2][0] = rng() % 2 ? 1.0 : 0.0;
    g.r[2][1] = 0.0;
    return g;
}

// Scratch file path unique to the current test process.
inline std::string tmp_path(const std::string& name) {
    return "/tmp/trusteval_test_" + std::to_string(::getpid()) + "_" + name;
}

} // namespace testutil
