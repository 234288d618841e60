#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace trusteval {

// One time slot of collaborator telemetry as reported to the evaluator.
struct SlotRecord {
    std::uint64_t slot_index = 0;
    double delay_ms = 0.0;             // average packet delay within the slot
    std::uint64_t subtasks_received = 0;
    double cpu_utilization = 0.0;      // fraction of capacity, in [0, 1]
    double avg_completion_ms = 0.0;    // average subtask completion time
    int effectiveness = 1;             // 1 = all results correct, 0 = corrupted

    bool operator==(const SlotRecord&) const = default;
};

// Distribution parameters for a collaborator behaving normally. Defaults are
// an operational baseline, not magic numbers: tests must hold for any
// internally consistent profile.
struct TrustedProfile {
    double delay_mean = 20.0;
    double delay_stddev = 5.0;
    double subtasks_mean = 12.0;
    double subtasks_stddev = 2.0;
    double cpu_mean = 0.30;
    double cpu_stddev = 0.05;
    double completion_mean = 40.0;
    double completion_stddev = 8.0;
    std::uint64_t seed = 0;
};

enum class AnomalyKind {
    CpuSaturation,     // CPU pinned high, completion times inflated
    PacketDrop,        // subtasks lost in transit, delay inflated
    ResultCorruption,  // results altered, effectiveness check fails
};

// Draw one normal-behavior slot. Deterministic in (profile.seed, slot_index);
// every field is clamped into its legal range.
SlotRecord simulate_trusted_slot(const TrustedProfile& profile, std::uint64_t slot_index);

// Apply one anomaly to a copy of the record. Only the fields belonging to
// the anomaly kind change.
SlotRecord inject_anomaly(SlotRecord record, AnomalyKind kind, std::mt19937_64& rng);

// n_slots records in slot order, with anomalies applied at the given slots.
// Deterministic in (profile.seed, n_slots, anomaly_slots).
std::vector<SlotRecord> simulate_stream(const TrustedProfile& profile, std::uint64_t n_slots,
                                        const std::map<std::uint64_t, AnomalyKind>& anomaly_slots);

// Wire/file form: one JSON object per line, keys
// slot, delay_ms, subtasks, cpu, cmpl_ms, efc.
std::string to_json_line(const SlotRecord& record);
SlotRecord slot_record_from_json(const std::string& line);

void save_records(const std::vector<SlotRecord>& records, const std::string& path);
std::vector<SlotRecord> load_records(const std::string& path);

} // namespace trusteval
