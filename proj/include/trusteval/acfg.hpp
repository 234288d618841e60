#pragma once

#include <array>
#include <cstddef>
#include <utility>
#include <vector>

#include "json.hpp"

#include "trusteval/telemetry.hpp"

namespace trusteval {

inline constexpr std::size_t kVertexCount = 3;
inline constexpr std::size_t kFeatureDim = 2;

// Min/max of the four continuous raw features over a normal-behavior corpus.
// Frozen at dataset-build time and carried inside model and dataset files so
// training and serving normalize identically.
struct NormStats {
    double delay_min = 0.0, delay_max = 0.0;
    double subtasks_min = 0.0, subtasks_max = 0.0;
    double cpu_min = 0.0, cpu_max = 0.0;
    double completion_min = 0.0, completion_max = 0.0;
    bool valid = false;

    bool operator==(const NormStats&) const = default;
};

// The fixed 3-vertex attributed graph describing one time slot:
//   vertex 0 communication [delay, subtasks]
//   vertex 1 computing     [cpu, completion]
//   vertex 2 effectiveness [efc, 0]
// Directed influence edges 0->1, 1->2, 0->2: communication affects
// computing, both affect effectiveness.
struct Acfg {
    std::array<std::array<double, kFeatureDim>, kVertexCount> r{};

    static constexpr std::array<std::pair<int, int>, 3> edges{{{0, 1}, {1, 2}, {0, 2}}};

    // Aggregation sources for vertex k: its in-neighbors under the edges
    // above. Kept behind one accessor so the propagation direction is a
    // single-point change.
    static const std::vector<int>& in_neighbors(std::size_t k);

    bool operator==(const Acfg&) const = default;
};

NormStats compute_norm_stats(const std::vector<SlotRecord>& records);

// Min-max map into [0, 1]; degenerate range maps to 0.5, values outside the
// range clamp to the border.
double normalize_feature(double x, double min, double max);

Acfg build_acfg(const SlotRecord& record, const NormStats& stats);

nlohmann::json norm_stats_to_json(const NormStats& stats);
NormStats norm_stats_from_json(const nlohmann::json& j);

} // namespace trusteval
