#include "doctest.h"

#include <cstdio>
#include <set>

#include "json.hpp"

#include "trusteval/errors.hpp"
#include "trusteval/rng.hpp"
#include "trusteval/telemetry.hpp"

#include "test_util.hpp"

using namespace trusteval;

TEST_SUITE("telemetry") {

TEST_CASE("trusted slots are deterministic in (seed, slot)") {
    TrustedProfile p;
    p.seed = 1234;
    for (std::uint64_t slot : {0ULL, 1ULL, 17ULL, 1000000ULL}) {
        SlotRecord a = simulate_trusted_slot(p, slot);
        SlotRecord b = simulate_trusted_slot(p, slot);
        CHECK(a == b);
        CHECK(to_json_line(a) == to_json_line(b));
    }
    // different slots should not repeat the same draws
    CHECK(simulate_trusted_slot(p, 0) != simulate_trusted_slot(p, 1));
}

TEST_CASE("trusted slots respect field ranges (bulk property)") {
    std::mt19937_64 meta(7);
    for (int profile_idx = 0; profile_idx < 10; ++profile_idx) {
        TrustedProfile p;
        p.seed = meta();
        p.delay_mean = uniform_in(meta, 1.0, 100.0);
        p.delay_stddev = uniform_in(meta, 0.0, 50.0);
        p.cpu_mean = uniform01(meta);
        p.cpu_stddev = uniform_in(meta, 0.0, 0.5);
        p.completion_mean = uniform_in(meta, 1.0, 200.0);
        p.completion_stddev = uniform_in(meta, 0.0, 100.0);
        p.subtasks_mean = uniform_in(meta, 0.0, 30.0);
        p.subtasks_stddev = uniform_in(meta, 0.0, 10.0);
        for (std::uint64_t slot = 0; slot < 1000; ++slot) {
            SlotRecord r = simulate_trusted_slot(p, slot);
            CHECK(r.cpu_utilization >= 0.0);
            CHECK(r.cpu_utilization <= 1.0);
            CHECK(r.delay_ms >= 0.0);
            CHECK(r.avg_completion_ms >= 0.0);
            CHECK(r.effectiveness == 1);
        }
    }
}

TEST_CASE("cpu saturation raises cpu and inflates completion only") {
    std::mt19937_64 rng(11);
    TrustedProfile p;
    p.seed = 99;
    for (int i = 0; i < 200; ++i) {
        SlotRecord base = simulate_trusted_slot(p, i);
        SlotRecord anom = inject_anomaly(base, AnomalyKind::CpuSaturation, rng);
        CHECK(anom.cpu_utilization >= 0.85);
        CHECK(anom.cpu_utilization <= 1.0);
        CHECK(anom.avg_completion_ms >= 1.5 * base.avg_completion_ms);
        CHECK(anom.avg_completion_ms <= 3.0 * base.avg_completion_ms);
        CHECK(anom.delay_ms == base.delay_ms);
        CHECK(anom.subtasks_received == base.subtasks_received);
        CHECK(anom.effectiveness == base.effectiveness);
    }
}

TEST_CASE("packet drop shrinks subtasks and inflates delay only") {
    std::mt19937_64 rng(12);
    TrustedProfile p;
    p.seed = 100;
    for (int i = 0; i < 200; ++i) {
        SlotRecord base = simulate_trusted_slot(p, i);
        SlotRecord anom = inject_anomaly(base, AnomalyKind::PacketDrop, rng);
        CHECK(anom.subtasks_received <= static_cast<std::uint64_t>(0.6 * base.subtasks_received + 1));
        CHECK(anom.delay_ms >= 2.0 * base.delay_ms);
        CHECK(anom.delay_ms <= 5.0 * base.delay_ms);
        CHECK(anom.cpu_utilization == base.cpu_utilization);
        CHECK(anom.avg_completion_ms == base.avg_completion_ms);
        CHECK(anom.effectiveness == base.effectiveness);
    }
}

TEST_CASE("packet drop on zero subtasks stays zero") {
    std::mt19937_64 rng(13);
    SlotRecord r;
    r.subtasks_received = 0;
    r.delay_ms = 10.0;
    SlotRecord anom = inject_anomaly(r, AnomalyKind::PacketDrop, rng);
    CHECK(anom.subtasks_received == 0);
}

TEST_CASE("result corruption flips effectiveness only") {
    std::mt19937_64 rng(14);
    TrustedProfile p;
    SlotRecord base = simulate_trusted_slot(p, 3);
    SlotRecord anom = inject_anomaly(base, AnomalyKind::ResultCorruption, rng);
    CHECK(anom.effectiveness == 0);
    anom.effectiveness = base.effectiveness;
    CHECK(anom == base);
}

TEST_CASE("streams honor slot count and anomaly placement") {
    TrustedProfile p;
    p.seed = 2024;
    std::map<std::uint64_t, AnomalyKind> anomalies;
    for (std::uint64_t s : {1ULL, 4ULL, 7ULL, 8ULL, 11ULL, 13ULL, 17ULL, 21ULL, 25ULL, 29ULL})
        anomalies[s] = s % 2 ? AnomalyKind::ResultCorruption : AnomalyKind::CpuSaturation;
    auto stream = simulate_stream(p, 30, anomalies);
    REQUIRE(stream.size() == 30);
    int anomalous = 0;
    for (std::uint64_t i = 0; i < 30; ++i) {
        CHECK(stream[i].slot_index == i);
        if (anomalies.count(i)) {
            ++anomalous;
            if (i % 2)
                CHECK(stream[i].effectiveness == 0);
            else
                CHECK(stream[i].cpu_utilization >= 0.85);
        } else {
            CHECK(stream[i] == simulate_trusted_slot(p, i));
        }
    }
    CHECK(anomalous == 10);

    // replay is identical
    auto replay = simulate_stream(p, 30, anomalies);
    CHECK(replay == stream);
}

TEST_CASE("empty anomaly map gives an all-trusted stream") {
    TrustedProfile p;
    auto stream = simulate_stream(p, 5, {});
    REQUIRE(stream.size() == 5);
    for (const auto& r : stream) CHECK(r.effectiveness == 1);
}

TEST_CASE("out-of-range anomaly slot is rejected") {
    TrustedProfile p;
    CHECK_THROWS_AS(simulate_stream(p, 3, {{5, AnomalyKind::PacketDrop}}), validation_error);
}

TEST_CASE("json line round trip with exact keys") {
    std::mt19937_64 rng(15);
    for (int i = 0; i < 500; ++i) {
        SlotRecord r = testutil::random_record(rng, i);
        std::string line = to_json_line(r);
        auto j = nlohmann::json::parse(line);
        std::set<std::string> keys;
        for (auto it = j.begin(); it != j.end(); ++it) keys.insert(it.key());
        CHECK(keys == std::set<std::string>{"slot", "delay_ms", "subtasks", "cpu", "cmpl_ms", "efc"});

        SlotRecord back = slot_record_from_json(line);
        CHECK(back == r);
        CHECK(to_json_line(back) == line);
    }
}

TEST_CASE("malformed record lines are rejected") {
    CHECK_THROWS_AS(slot_record_from_json("not json"), file_corrupt_error);
    CHECK_THROWS_AS(slot_record_from_json("[1,2]"), file_corrupt_error);
    CHECK_THROWS_AS(slot_record_from_json(R"({"slot":0})"), file_corrupt_error);
    CHECK_THROWS_AS(slot_record_from_json(
                        R"({"slot":0,"delay_ms":1,"subtasks":2,"cpu":1.5,"cmpl_ms":3,"efc":1})"),
                    file_corrupt_error);
    CHECK_THROWS_AS(slot_record_from_json(
                        R"({"slot":0,"delay_ms":1,"subtasks":2,"cpu":0.5,"cmpl_ms":3,"efc":2})"),
                    file_corrupt_error);
}

TEST_CASE("record files round trip") {
    TrustedProfile p;
    p.seed = 31337;
    auto stream = simulate_stream(p, 12, {{2, AnomalyKind::PacketDrop}});
    std::string path = testutil::tmp_path("records.jsonl");
    save_records(stream, path);
    auto loaded = load_records(path);
    CHECK(loaded == stream);
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_records(path), file_missing_error);
}

} // TEST_SUITE
