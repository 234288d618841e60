#include "trusteval/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"

#include "trusteval/errors.hpp"
#include "trusteval/rng.hpp"

namespace trusteval {

namespace {

// Stream tags keeping the independent random purposes of dataset
// construction decorrelated under one user-facing seed.
constexpr std::uint64_t kKmeansStream = 0x6b6d65616e73;   // selection clustering
constexpr std::uint64_t kPositiveStream = 0x706f73;       // positive pairing
constexpr std::uint64_t kNegativeStream = 0x6e6567;       // negative pairing
constexpr std::uint64_t kAnomalyStream = 0x616e6f;        // anomaly synthesis

double sq_dist(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

} // namespace

KmeansResult kmeans(const std::vector<Vec>& points, std::size_t k, std::size_t max_iters,
                    std::uint64_t seed) {
    const std::size_t n = points.size();
    if (k < 1) throw validation_error("kmeans: k must be >= 1");
    if (k > n) throw validation_error("kmeans: k exceeds point count");
    const std::size_t dim = points.front().size();
    for (const auto& pt : points)
        if (pt.size() != dim) throw validation_error("kmeans: dimension mismatch");

    // k distinct random points as the initial centroids
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < k; ++i)
        std::swap(idx[i], idx[i + uniform_index(rng, n - i)]);

    KmeansResult res;
    res.centroids.reserve(k);
    for (std::size_t c = 0; c < k; ++c) res.centroids.push_back(points[idx[c]]);
    res.assignments.assign(n, 0);

    std::vector<std::size_t> prev;
    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        // assignment step: nearest centroid, ties to the lowest index
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double best_d = sq_dist(points[i], res.centroids[0]);
            for (std::size_t c = 1; c < k; ++c) {
                const double d = sq_dist(points[i], res.centroids[c]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            res.assignments[i] = best;
        }

        // re-seed empty clusters with the point farthest from its centroid;
        // that point's error drops to zero, so SSE stays monotone
        std::vector<std::size_t> count(k, 0);
        for (std::size_t a : res.assignments) ++count[a];
        for (std::size_t c = 0; c < k; ++c) {
            if (count[c] != 0) continue;
            std::size_t farthest = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = sq_dist(points[i], res.centroids[res.assignments[i]]);
                if (d > far_d && count[res.assignments[i]] > 1) {
                    far_d = d;
                    farthest = i;
                }
            }
            --count[res.assignments[farthest]];
            res.centroids[c] = points[farthest];
            res.assignments[farthest] = c;
            count[c] = 1;
        }

        double sse = 0.0;
        for (std::size_t i = 0; i < n; ++i) sse += sq_dist(points[i], res.centroids[res.assignments[i]]);
        res.sse_history.push_back(sse);

        if (res.assignments == prev) break;
        prev = res.assignments;

        // centroid update: per-cluster mean, fixed accumulation order
        std::vector<Vec> sums(k, Vec(dim, 0.0));
        std::fill(count.begin(), count.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            add_in_place(sums[res.assignments[i]], points[i]);
            ++count[res.assignments[i]];
        }
        for (std::size_t c = 0; c < k; ++c)
            for (std::size_t j = 0; j < dim; ++j)
                res.centroids[c][j] = sums[c][j] / static_cast<double>(count[c]);
    }
    return res;
}

namespace {

Vec normalized_features(const SlotRecord& r, const NormStats& s) {
    return {normalize_feature(r.delay_ms, s.delay_min, s.delay_max),
            normalize_feature(static_cast<double>(r.subtasks_received), s.subtasks_min,
                              s.subtasks_max),
            normalize_feature(r.cpu_utilization, s.cpu_min, s.cpu_max),
            normalize_feature(r.avg_completion_ms, s.completion_min, s.completion_max)};
}

} // namespace

std::vector<SlotRecord> select_similar(const std::vector<SlotRecord>& records,
                                       const DatasetConfig& cfg) {
    if (cfg.q_select > records.size())
        throw validation_error("select_similar: q_select exceeds record count");
    if (cfg.q_select == 0) return {};

    const NormStats stats = compute_norm_stats(records);
    std::vector<Vec> feats;
    feats.reserve(records.size());
    for (const auto& r : records) feats.push_back(normalized_features(r, stats));

    const KmeansResult km =
        kmeans(feats, cfg.k, cfg.kmeans_iters, mix_seed(cfg.seed, kKmeansStream));

    std::vector<std::vector<std::size_t>> members(cfg.k);
    for (std::size_t i = 0; i < records.size(); ++i) members[km.assignments[i]].push_back(i);

    // largest cluster first; ties to the lower cluster id
    std::vector<std::size_t> order(cfg.k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return members[a].size() > members[b].size();
    });

    std::vector<SlotRecord> out;
    out.reserve(cfg.q_select);
    for (std::size_t c : order) {
        auto& m = members[c];
        std::stable_sort(m.begin(), m.end(), [&](std::size_t a, std::size_t b) {
            return sq_dist(feats[a], km.centroids[c]) < sq_dist(feats[b], km.centroids[c]);
        });
        for (std::size_t i : m) {
            out.push_back(records[i]);
            if (out.size() == cfg.q_select) return out;
        }
    }
    return out;
}

std::vector<LabeledPair> build_positive_pairs(const std::vector<SlotRecord>& selected,
                                              std::size_t count, std::uint64_t seed) {
    if (selected.size() < 2)
        throw validation_error("build_positive_pairs: need at least two records");
    std::mt19937_64 rng(seed);
    std::vector<LabeledPair> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t a = uniform_index(rng, selected.size());
        std::size_t b = uniform_index(rng, selected.size() - 1);
        if (b >= a) ++b; // uniform over the remaining indices
        out.push_back({selected[a], selected[b], 1});
    }
    return out;
}

std::vector<LabeledPair> build_negative_pairs(const std::vector<SlotRecord>& anomalous,
                                              const std::vector<SlotRecord>& trusted_pool,
                                              std::uint64_t seed) {
    if (anomalous.empty() || trusted_pool.empty())
        throw validation_error("build_negative_pairs: empty input");
    std::mt19937_64 rng(seed);
    std::vector<LabeledPair> out;
    out.reserve(anomalous.size());
    for (const auto& anom : anomalous)
        out.push_back({trusted_pool[uniform_index(rng, trusted_pool.size())], anom, -1});
    return out;
}

std::vector<PairExample> build_pair_examples(const std::vector<LabeledPair>& pairs,
                                             const NormStats& stats) {
    std::vector<PairExample> out;
    out.reserve(pairs.size());
    for (const auto& pr : pairs)
        out.push_back({build_acfg(pr.ref, stats), build_acfg(pr.slot, stats), pr.label});
    return out;
}

Dataset make_dataset(const DatasetConfig& cfg, const TrustedProfile& profile) {
    if (cfg.q_select + cfg.s_anomalies == 0)
        throw validation_error("make_dataset: refusing to build an empty dataset");
    if (cfg.q_select > 0 && cfg.q_select < 2)
        throw validation_error("make_dataset: need at least two selected records to pair");
    if (cfg.n_raw == 0) throw validation_error("make_dataset: n_raw must be positive");

    std::vector<SlotRecord> raw;
    raw.reserve(cfg.n_raw);
    for (std::size_t i = 0; i < cfg.n_raw; ++i)
        raw.push_back(simulate_trusted_slot(profile, i));

    Dataset ds;
    ds.stats = compute_norm_stats(raw);

    std::vector<SlotRecord> selected;
    if (cfg.q_select > 0) {
        selected = select_similar(raw, cfg);
        auto positives = build_positive_pairs(selected, cfg.q_select, mix_seed(cfg.seed, kPositiveStream));
        ds.pairs.insert(ds.pairs.end(), positives.begin(), positives.end());
    }

    if (cfg.s_anomalies > 0) {
        std::mt19937_64 arng(mix_seed(cfg.seed, kAnomalyStream));
        std::vector<SlotRecord> anomalous;
        anomalous.reserve(cfg.s_anomalies);
        for (std::size_t i = 0; i < cfg.s_anomalies; ++i) {
            SlotRecord base = simulate_trusted_slot(profile, cfg.n_raw + i);
            const auto kind = static_cast<AnomalyKind>(arng() % 3);
            anomalous.push_back(inject_anomaly(base, kind, arng));
        }
        const auto& pool = selected.empty() ? raw : selected;
        auto negatives = build_negative_pairs(anomalous, pool, mix_seed(cfg.seed, kNegativeStream));
        ds.pairs.insert(ds.pairs.end(), negatives.begin(), negatives.end());
    }
    return ds;
}

namespace {

nlohmann::json record_json(const SlotRecord& r) {
    return nlohmann::json::parse(to_json_line(r));
}

} // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
    if (!ds.stats.valid) throw validation_error("save_dataset: stats unset");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw file_missing_error("cannot open for writing: " + path);
    nlohmann::json header{{"format_version", 1}, {"norm_stats", norm_stats_to_json(ds.stats)}};
    out << header.dump() << '\n';
    for (const auto& pr : ds.pairs) {
        nlohmann::json line{{"label", pr.label}, {"ref", record_json(pr.ref)},
                            {"slot", record_json(pr.slot)}};
        out << line.dump() << '\n';
    }
    if (!out) throw file_corrupt_error("short write: " + path);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw file_missing_error("cannot open: " + path);

    std::string line;
    if (!std::getline(in, line)) throw file_corrupt_error("dataset: empty file");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw file_corrupt_error(std::string("dataset: bad header: ") + e.what());
    }
    if (!header.is_object() || !header.contains("format_version") ||
        !header["format_version"].is_number_integer())
        throw file_corrupt_error("dataset: missing 'format_version'");
    if (header["format_version"].get<int>() != 1)
        throw version_error("dataset: unsupported format_version " +
                            std::to_string(header["format_version"].get<int>()));
    if (!header.contains("norm_stats")) throw file_corrupt_error("dataset: missing 'norm_stats'");

    Dataset ds;
    ds.stats = norm_stats_from_json(header["norm_stats"]);

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw file_corrupt_error(std::string("dataset: bad pair line: ") + e.what());
        }
        if (!j.is_object() || !j.contains("label") || !j.contains("ref") || !j.contains("slot") ||
            !j["label"].is_number_integer())
            throw file_corrupt_error("dataset: malformed pair line");
        const int label = j["label"].get<int>();
        if (label != 1 && label != -1) throw file_corrupt_error("dataset: label must be +1 or -1");
        ds.pairs.push_back({slot_record_from_json(j["ref"].dump()),
                            slot_record_from_json(j["slot"].dump()), label});
    }
    return ds;
}

} // namespace trusteval
