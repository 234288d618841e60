#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "trusteval/service.hpp"
#include "trusteval/telemetry.hpp"
#include "service_fixture.hpp"

using namespace trusteval;
using nlohmann::json;

namespace {

using Fixture = testutil::ServiceFixture;

Fixture make_fixture() {
    static const Fixture fixture = testutil::make_service_fixture();
    REQUIRE(fixture.delta > 0.0);
    REQUIRE(fixture.delta <= 1.0);
    // the construction must leave real margin on both sides of delta
    REQUIRE(fixture.sim_similar > fixture.delta + 0.05);
    REQUIRE(fixture.sim_dissimilar < fixture.delta - 0.05);
    return fixture;
}

json record_json(const SlotRecord& r) { return json::parse(to_json_line(r)); }

json register_frame(const Fixture& f, const std::string& id) {
    return json{{"type", "REGISTER"},      {"session_id", id},
                {"initiator_id", "sat-1"}, {"collaborator_id", "sat-2"},
                {"delta", f.delta},        {"reference", record_json(f.reference)}};
}

json telemetry_frame(const std::string& id, const SlotRecord& r) {
    return json{{"type", "TELEMETRY"}, {"session_id", id}, {"record", record_json(r)}};
}

std::vector<json> handle(ServiceState& state, const Fixture& f, const json& frame) {
    std::vector<json> out;
    for (const auto& line : handle_line(state, frame.dump(), f.model))
        out.push_back(json::parse(line));
    return out;
}

} // namespace

TEST_SUITE("service") {

TEST_CASE("registration is silent and creates an active session") {
    auto f = make_fixture();
    ServiceState state;
    CHECK(handle(state, f, register_frame(f, "s1")).empty());
    REQUIRE(state.sessions.count("s1") == 1);
    const auto& s = state.sessions.at("s1");
    CHECK(s.status == SessionStatus::Active);
    CHECK(s.delta == f.delta);
    CHECK(s.initiator_id == "sat-1");
    CHECK(s.collaborator_id == "sat-2");
    CHECK(s.next_seq == 1);
    CHECK(s.reference == f.reference);
}

TEST_CASE("malformed registration variants") {
    auto f = make_fixture();
    ServiceState state;

    auto expect_malformed = [&](json frame) {
        auto out = handle(state, f, frame);
        REQUIRE(out.size() == 1);
        CHECK(out[0]["type"] == "ERROR");
        CHECK(out[0]["code"] == "malformed");
        CHECK_FALSE(out[0].contains("seq")); // no session to bind to
        CHECK(state.sessions.empty());
    };

    auto base = register_frame(f, "s1");

    auto drop = [&](const std::string& key) {
        auto j = base;
        j.erase(key);
        return j;
    };
    expect_malformed(drop("session_id"));
    expect_malformed(drop("initiator_id"));
    expect_malformed(drop("collaborator_id"));
    expect_malformed(drop("reference"));
    expect_malformed(drop("delta"));

    auto j = base;
    j["session_id"] = "";
    expect_malformed(j);

    j = base;
    j["delta"] = "high";
    expect_malformed(j);
    j["delta"] = 0.0;
    expect_malformed(j);
    j["delta"] = 1.01;
    expect_malformed(j);

    j = base;
    j["reference"].erase("cpu");
    expect_malformed(j);
}

TEST_CASE("duplicate registration consumes the existing session's sequence") {
    auto f = make_fixture();
    ServiceState state;
    handle(state, f, register_frame(f, "s1"));

    auto out = handle(state, f, register_frame(f, "s1"));
    REQUIRE(out.size() == 1);
    CHECK(out[0]["code"] == "duplicate_session");
    CHECK(out[0]["session_id"] == "s1");
    CHECK(out[0]["seq"] == 1);
    CHECK(state.sessions.at("s1").status == SessionStatus::Active);

    // the counter moved on: the next verdict is seq 2
    auto v = handle(state, f, telemetry_frame("s1", f.similar));
    REQUIRE(v.size() == 1);
    CHECK(v[0]["seq"] == 2);
}

TEST_CASE("trusted telemetry yields sequential verdicts") {
    auto f = make_fixture();
    ServiceState state;
    handle(state, f, register_frame(f, "s1"));

    for (std::uint64_t i = 1; i <= 3; ++i) {
        auto rec = f.similar;
        rec.slot_index = i;
        auto out = handle(state, f, telemetry_frame("s1", rec));
        REQUIRE(out.size() == 1);
        CHECK(out[0]["type"] == "VERDICT");
        CHECK(out[0]["session_id"] == "s1");
        CHECK(out[0]["seq"] == i);
        CHECK(out[0]["slot"] == i);
        CHECK(out[0]["trusted"] == true);
        CHECK(out[0]["similarity"].get<double>() >= f.delta);
    }
    CHECK(state.sessions.at("s1").slots_seen == 3);

    // identical telemetry replayed against the reference scores 1
    auto out = handle(state, f, telemetry_frame("s1", f.reference));
    REQUIRE(out.size() == 1);
    CHECK(out[0]["similarity"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("untrusted telemetry terminates the session") {
    auto f = make_fixture();
    ServiceState state;
    handle(state, f, register_frame(f, "s1"));

    auto out = handle(state, f, telemetry_frame("s1", f.dissimilar));
    REQUIRE(out.size() == 2);
    CHECK(out[0]["type"] == "VERDICT");
    CHECK(out[0]["trusted"] == false);
    CHECK(out[0]["seq"] == 1);
    CHECK(out[1]["type"] == "TERMINATE");
    CHECK(out[1]["seq"] == 2);
    CHECK(out[1]["slot"] == f.dissimilar.slot_index);
    CHECK(state.sessions.at("s1").status == SessionStatus::Terminated);

    // the session is spent: telemetry and deregistration both refuse
    out = handle(state, f, telemetry_frame("s1", f.similar));
    REQUIRE(out.size() == 1);
    CHECK(out[0]["code"] == "session_terminated");
    CHECK(out[0]["seq"] == 3);

    out = handle(state, f, json{{"type", "DEREGISTER"}, {"session_id", "s1"}});
    REQUIRE(out.size() == 1);
    CHECK(out[0]["code"] == "session_terminated");
    CHECK(out[0]["seq"] == 4);
}

TEST_CASE("deregistration closes quietly and stays closed") {
    auto f = make_fixture();
    ServiceState state;
    handle(state, f, register_frame(f, "s1"));

    CHECK(handle(state, f, json{{"type", "DEREGISTER"}, {"session_id", "s1"}}).empty());
    CHECK(state.sessions.at("s1").status == SessionStatus::Closed);

    auto out = handle(state, f, telemetry_frame("s1", f.similar));
    REQUIRE(out.size() == 1);
    CHECK(out[0]["code"] == "session_closed");
    CHECK(out[0]["seq"] == 1);

    out = handle(state, f, json{{"type", "DEREGISTER"}, {"session_id", "s1"}});
    REQUIRE(out.size() == 1);
    CHECK(out[0]["code"] == "session_closed");
    CHECK(out[0]["seq"] == 2);
}

TEST_CASE("unknown sessions answer without a sequence number") {
    auto f = make_fixture();
    ServiceState state;

    auto out = handle(state, f, telemetry_frame("ghost", f.similar));
    REQUIRE(out.size() == 1);
    CHECK(out[0]["code"] == "unknown_session");
    CHECK(out[0]["session_id"] == "ghost");
    CHECK_FALSE(out[0].contains("seq"));

    out = handle(state, f, json{{"type", "DEREGISTER"}, {"session_id", "ghost"}});
    REQUIRE(out.size() == 1);
    CHECK(out[0]["code"] == "unknown_session");
    CHECK_FALSE(out[0].contains("seq"));
}

TEST_CASE("malformed and unknown frames") {
    auto f = make_fixture();
    ServiceState state;
    handle(state, f, register_frame(f, "s1"));

    auto replies = handle_line(state, "{nope", f.model);
    REQUIRE(replies.size() == 1);
    auto e = json::parse(replies[0]);
    CHECK(e["code"] == "malformed");
    CHECK_FALSE(e.contains("session_id"));
    CHECK_FALSE(e.contains("seq"));

    // a typeless frame naming a live session is still session-bound and
    // consumes its sequence
    auto out = handle(state, f, json{{"session_id", "s1"}});
    REQUIRE(out.size() == 1);
    CHECK(out[0]["code"] == "malformed");
    CHECK(out[0]["seq"] == 1);

    out = handle(state, f, json{{"type", "PING"}, {"session_id", "s1"}});
    REQUIRE(out.size() == 1);
    CHECK(out[0]["code"] == "unknown_type");
    CHECK(out[0]["seq"] == 2);

    out = handle(state, f, telemetry_frame("s1", f.similar));
    REQUIRE(out.size() == 1);
    CHECK(out[0]["seq"] == 3);

    // a telemetry frame missing its record is malformed, seq still moves
    out = handle(state, f, json{{"type", "TELEMETRY"}, {"session_id", "s1"}});
    REQUIRE(out.size() == 1);
    CHECK(out[0]["code"] == "malformed");
    CHECK(out[0]["seq"] == 4);
}

TEST_CASE("unknown inbound fields are ignored") {
    auto f = make_fixture();
    ServiceState state;
    auto reg = register_frame(f, "s1");
    reg["padding"] = 17;
    CHECK(handle(state, f, reg).empty());

    auto tel = telemetry_frame("s1", f.similar);
    tel["trace_id"] = "abc";
    auto out = handle(state, f, tel);
    REQUIRE(out.size() == 1);
    CHECK(out[0]["type"] == "VERDICT");
}

TEST_CASE("sessions interleave with independent gapless sequences") {
    auto f = make_fixture();
    ServiceState state;
    handle(state, f, register_frame(f, "a"));
    handle(state, f, register_frame(f, "b"));

    std::vector<std::uint64_t> seq_a, seq_b;
    auto feed = [&](const std::string& id, const SlotRecord& rec, std::vector<std::uint64_t>& seqs) {
        for (const auto& msg : handle(state, f, telemetry_frame(id, rec)))
            seqs.push_back(msg["seq"].get<std::uint64_t>());
    };
    feed("a", f.similar, seq_a);
    feed("b", f.similar, seq_b);
    feed("a", f.similar, seq_a);
    feed("b", f.dissimilar, seq_b); // verdict + terminate
    feed("a", f.similar, seq_a);

    CHECK(seq_a == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(seq_b == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(state.sessions.at("a").status == SessionStatus::Active);
    CHECK(state.sessions.at("b").status == SessionStatus::Terminated);
}

TEST_CASE("replaying a transcript reproduces the outbound bytes") {
    auto f = make_fixture();

    std::vector<std::string> inbound;
    inbound.push_back(register_frame(f, "s1").dump());
    inbound.push_back(register_frame(f, "s2").dump());
    auto rec = f.similar;
    for (std::uint64_t i = 0; i < 4; ++i) {
        rec.slot_index = i;
        inbound.push_back(telemetry_frame(i % 2 ? "s1" : "s2", rec).dump());
    }
    inbound.push_back("{broken");
    inbound.push_back(telemetry_frame("s1", f.dissimilar).dump());
    inbound.push_back(json{{"type", "DEREGISTER"}, {"session_id", "s2"}}.dump());
    inbound.push_back(telemetry_frame("s1", f.similar).dump());

    auto run = [&]() {
        ServiceState state;
        std::string out;
        for (const auto& line : inbound)
            for (const auto& reply : handle_line(state, line, f.model)) out += reply + "\n";
        return out;
    };
    const auto first = run();
    CHECK(first == run());
    CHECK_FALSE(first.empty());
}

} // TEST_SUITE
