#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trusteval/acfg.hpp"
#include "trusteval/linalg.hpp"
#include "trusteval/siamese.hpp"
#include "trusteval/telemetry.hpp"

namespace trusteval {

struct DatasetConfig {
    std::size_t n_raw = 5000;        // simulated normal-behavior records
    std::size_t q_select = 4000;     // mutually similar records kept for positives
    std::size_t s_anomalies = 1000;  // anomalous records, one negative pair each
    std::size_t k = 8;               // clusters used during selection
    std::size_t kmeans_iters = 100;
    std::uint64_t seed = 0;
};

struct KmeansResult {
    std::vector<std::size_t> assignments;
    std::vector<Vec> centroids;
    std::vector<double> sse_history;  // total within-cluster squared error per iteration
};

// Lloyd's algorithm, deterministic per seed: distinct random points as the
// initial centroids, empty clusters re-seeded with the farthest point,
// termination on assignment fixpoint or max_iters.
KmeansResult kmeans(const std::vector<Vec>& points, std::size_t k, std::size_t max_iters,
                    std::uint64_t seed);

// The cfg.q_select records whose normalized features sit closest to their
// own cluster centroid, taken from the largest cluster outward.
std::vector<SlotRecord> select_similar(const std::vector<SlotRecord>& records,
                                       const DatasetConfig& cfg);

// A labeled pair in raw-record form. Files store raw records and graphs are
// rebuilt against the stored stats on load, so normalization stays
// single-sourced.
struct LabeledPair {
    SlotRecord ref;
    SlotRecord slot;
    int label = 1;

    bool operator==(const LabeledPair&) const = default;
};

// count pairs of two distinct uniformly drawn records, label +1.
std::vector<LabeledPair> build_positive_pairs(const std::vector<SlotRecord>& selected,
                                              std::size_t count, std::uint64_t seed);

// One pair per anomalous record against a uniform draw from the trusted
// pool, label -1.
std::vector<LabeledPair> build_negative_pairs(const std::vector<SlotRecord>& anomalous,
                                              const std::vector<SlotRecord>& trusted_pool,
                                              std::uint64_t seed);

std::vector<PairExample> build_pair_examples(const std::vector<LabeledPair>& pairs,
                                             const NormStats& stats);

struct Dataset {
    std::vector<LabeledPair> pairs;  // positives first, then negatives
    NormStats stats;
};

// Full pipeline: simulate n_raw trusted records, freeze norm stats over
// them, keep the q_select most similar, pair positives, synthesize
// s_anomalies anomalous records (kinds drawn uniformly), pair negatives.
Dataset make_dataset(const DatasetConfig& cfg, const TrustedProfile& profile);

// JSON lines; header carries format_version and the frozen stats.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

} // namespace trusteval
