#include "trusteval/acfg.hpp"

#include <algorithm>
#include <cmath>

#include "trusteval/errors.hpp"

namespace trusteval {

const std::vector<int>& Acfg::in_neighbors(std::size_t k) {
    static const std::vector<int> sets[kVertexCount] = {{}, {0}, {0, 1}};
    if (k >= kVertexCount) throw validation_error("in_neighbors: vertex index out of range");
    return sets[k];
}

NormStats compute_norm_stats(const std::vector<SlotRecord>& records) {
    if (records.empty()) throw validation_error("compute_norm_stats: empty corpus");
    NormStats s;
    const auto& first = records.front();
    s.delay_min = s.delay_max = first.delay_ms;
    s.subtasks_min = s.subtasks_max = static_cast<double>(first.subtasks_received);
    s.cpu_min = s.cpu_max = first.cpu_utilization;
    s.completion_min = s.completion_max = first.avg_completion_ms;
    for (const auto& r : records) {
        s.delay_min = std::min(s.delay_min, r.delay_ms);
        s.delay_max = std::max(s.delay_max, r.delay_ms);
        double subtasks = static_cast<double>(r.subtasks_received);
        s.subtasks_min = std::min(s.subtasks_min, subtasks);
        s.subtasks_max = std::max(s.subtasks_max, subtasks);
        s.cpu_min = std::min(s.cpu_min, r.cpu_utilization);
        s.cpu_max = std::max(s.cpu_max, r.cpu_utilization);
        s.completion_min = std::min(s.completion_min, r.avg_completion_ms);
        s.completion_max = std::max(s.completion_max, r.avg_completion_ms);
    }
    s.valid = true;
    return s;
}

double normalize_feature(double x, double min, double max) {
    if (min > max) throw validation_error("normalize_feature: min > max");
    if (min == max) return 0.5;
    return std::clamp((x - min) / (max - min), 0.0, 1.0);
}

Acfg build_acfg(const SlotRecord& record, const NormStats& stats) {
    if (!stats.valid) throw validation_error("build_acfg: normalization stats unset");
    Acfg g;
    g.r[0] = {normalize_feature(record.delay_ms, stats.delay_min, stats.delay_max),
              normalize_feature(static_cast<double>(record.subtasks_received), stats.subtasks_min,
                                stats.subtasks_max)};
    g.r[1] = {normalize_feature(record.cpu_utilization, stats.cpu_min, stats.cpu_max),
              normalize_feature(record.avg_completion_ms, stats.completion_min,
                                stats.completion_max)};
    g.r[2] = {static_cast<double>(record.effectiveness), 0.0};
    return g;
}

nlohmann::json norm_stats_to_json(const NormStats& stats) {
    return nlohmann::json{
        {"valid", stats.valid},
        {"delay_ms", {stats.delay_min, stats.delay_max}},
        {"subtasks", {stats.subtasks_min, stats.subtasks_max}},
        {"cpu", {stats.cpu_min, stats.cpu_max}},
        {"cmpl_ms", {stats.completion_min, stats.completion_max}},
    };
}

namespace {

void read_range(const nlohmann::json& j, const char* key, double& min, double& max) {
    if (!j.contains(key) || !j[key].is_array() || j[key].size() != 2 ||
        !j[key][0].is_number() || !j[key][1].is_number())
        throw file_corrupt_error(std::string("norm_stats: bad '") + key + "'");
    min = j[key][0].get<double>();
    max = j[key][1].get<double>();
    if (!std::isfinite(min) || !std::isfinite(max) || min > max)
        throw file_corrupt_error(std::string("norm_stats: invalid range for '") + key + "'");
}

} // namespace

NormStats norm_stats_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw file_corrupt_error("norm_stats: not an object");
    NormStats s;
    if (!j.contains("valid") || !j["valid"].is_boolean())
        throw file_corrupt_error("norm_stats: missing 'valid'");
    s.valid = j["valid"].get<bool>();
    read_range(j, "delay_ms", s.delay_min, s.delay_max);
    read_range(j, "subtasks", s.subtasks_min, s.subtasks_max);
    read_range(j, "cpu", s.cpu_min, s.cpu_max);
    read_range(j, "cmpl_ms", s.completion_min, s.completion_max);
    return s;
}

} // namespace trusteval
