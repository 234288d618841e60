#include "trusteval/telemetry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "trusteval/errors.hpp"
#include "trusteval/rng.hpp"

namespace trusteval {

namespace {
// Stream tag separating anomaly-parameter draws from the trusted draws of
// the same slot, so adding an anomaly never shifts neighboring slots.
constexpr std::uint64_t kAnomalyStream = 0x616e6f6d;
} // namespace

SlotRecord simulate_trusted_slot(const TrustedProfile& profile, std::uint64_t slot_index) {
    auto rng = make_engine(profile.seed, slot_index);
    SlotRecord r;
    r.slot_index = slot_index;
    r.delay_ms = std::max(0.0, normal(rng, profile.delay_mean, profile.delay_stddev));
    double subtasks = normal(rng, profile.subtasks_mean, profile.subtasks_stddev);
    r.subtasks_received = subtasks <= 0.0 ? 0 : static_cast<std::uint64_t>(std::llround(subtasks));
    r.cpu_utilization = std::clamp(normal(rng, profile.cpu_mean, profile.cpu_stddev), 0.0, 1.0);
    r.avg_completion_ms = std::max(0.0, normal(rng, profile.completion_mean, profile.completion_stddev));
    r.effectiveness = 1;
    return r;
}

SlotRecord inject_anomaly(SlotRecord record, AnomalyKind kind, std::mt19937_64& rng) {
    switch (kind) {
    case AnomalyKind::CpuSaturation:
        record.cpu_utilization = uniform_in(rng, 0.85, 1.0);
        record.avg_completion_ms *= uniform_in(rng, 1.5, 3.0);
        break;
    case AnomalyKind::PacketDrop:
        record.subtasks_received = static_cast<std::uint64_t>(
            static_cast<double>(record.subtasks_received) * uniform_in(rng, 0.2, 0.6));
        record.delay_ms *= uniform_in(rng, 2.0, 5.0);
        break;
    case AnomalyKind::ResultCorruption:
        record.effectiveness = 0;
        break;
    }
    return record;
}

std::vector<SlotRecord> simulate_stream(const TrustedProfile& profile, std::uint64_t n_slots,
                                        const std::map<std::uint64_t, AnomalyKind>& anomaly_slots) {
    for (const auto& [slot, kind] : anomaly_slots) {
        (void)kind;
        if (slot >= n_slots) {
            std::ostringstream msg;
            msg << "simulate_stream: anomaly slot " << slot << " out of range (n_slots = "
                << n_slots << ")";
            throw validation_error(msg.str());
        }
    }
    std::vector<SlotRecord> out;
    out.reserve(n_slots);
    for (std::uint64_t slot = 0; slot < n_slots; ++slot) {
        SlotRecord r = simulate_trusted_slot(profile, slot);
        auto it = anomaly_slots.find(slot);
        if (it != anomaly_slots.end()) {
            auto arng = make_engine(mix_seed(profile.seed, kAnomalyStream), slot);
            r = inject_anomaly(r, it->second, arng);
        }
        out.push_back(r);
    }
    return out;
}

std::string to_json_line(const SlotRecord& r) {
    nlohmann::json j{
        {"slot", r.slot_index},
        {"delay_ms", r.delay_ms},
        {"subtasks", r.subtasks_received},
        {"cpu", r.cpu_utilization},
        {"cmpl_ms", r.avg_completion_ms},
        {"efc", r.effectiveness},
    };
    return j.dump();
}

namespace {

double finite_nonneg(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number())
        throw file_corrupt_error(std::string("slot record: missing or non-numeric '") + key + "'");
    double v = j[key].get<double>();
    if (!std::isfinite(v) || v < 0.0)
        throw file_corrupt_error(std::string("slot record: '") + key + "' out of range");
    return v;
}

} // namespace

SlotRecord slot_record_from_json(const std::string& line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw file_corrupt_error(std::string("slot record: bad JSON: ") + e.what());
    }
    if (!j.is_object()) throw file_corrupt_error("slot record: not a JSON object");

    SlotRecord r;
    if (!j.contains("slot") || !j["slot"].is_number_unsigned())
        throw file_corrupt_error("slot record: missing or negative 'slot'");
    r.slot_index = j["slot"].get<std::uint64_t>();
    r.delay_ms = finite_nonneg(j, "delay_ms");
    if (!j.contains("subtasks") || !j["subtasks"].is_number_unsigned())
        throw file_corrupt_error("slot record: missing or negative 'subtasks'");
    r.subtasks_received = j["subtasks"].get<std::uint64_t>();
    r.cpu_utilization = finite_nonneg(j, "cpu");
    if (r.cpu_utilization > 1.0) throw file_corrupt_error("slot record: 'cpu' above 1");
    r.avg_completion_ms = finite_nonneg(j, "cmpl_ms");
    if (!j.contains("efc") || !j["efc"].is_number_integer())
        throw file_corrupt_error("slot record: missing or non-integer 'efc'");
    r.effectiveness = j["efc"].get<int>();
    if (r.effectiveness != 0 && r.effectiveness != 1)
        throw file_corrupt_error("slot record: 'efc' must be 0 or 1");
    return r;
}

void save_records(const std::vector<SlotRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw file_missing_error("cannot open for writing: " + path);
    for (const auto& r : records) out << to_json_line(r) << '\n';
    if (!out) throw file_corrupt_error("short write: " + path);
}

std::vector<SlotRecord> load_records(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw file_missing_error("cannot open: " + path);
    std::vector<SlotRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(slot_record_from_json(line));
    }
    return out;
}

} // namespace trusteval
