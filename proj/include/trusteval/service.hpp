#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "trusteval/embed.hpp"
#include "trusteval/telemetry.hpp"

namespace trusteval {

enum class SessionStatus { Active, Terminated, Closed };

// One registered collaboration [initiator, collaborator] with its
// trusted-state reference snapshot. Sessions only ever move
// Active -> Terminated (untrusted verdict) or Active -> Closed (deregister
// or connection loss).
struct Session {
    std::string session_id;
    std::string initiator_id;
    std::string collaborator_id;
    SlotRecord reference;
    double delta = 0.85;
    SessionStatus status = SessionStatus::Active;
    std::uint64_t slots_seen = 0;
    std::uint64_t next_seq = 1;  // outbound sequence counter, gapless
};

struct ServiceState {
    std::map<std::string, Session> sessions;
};

// The whole protocol as a pure function: one inbound NDJSON line maps to
// zero or more outbound NDJSON lines, with all effects in `state`. No
// clock, no randomness, no I/O; replaying a transcript into a fresh state
// reproduces the outbound bytes exactly.
//
// Inbound frames (field `type`): REGISTER{session_id, initiator_id,
// collaborator_id, reference, delta}, TELEMETRY{session_id, record},
// DEREGISTER{session_id}. Unknown fields are ignored; unknown types and
// malformed frames come back as ERROR. Outbound frames: VERDICT, TERMINATE,
// ERROR. Outbound frames that belong to a known session consume its
// sequence counter (field `seq`).
std::vector<std::string> handle_line(ServiceState& state, const std::string& line,
                                     const ModelParams& model);

// Poll-driven TCP front end over handle_line. Accepts any number of
// connections, frames messages by LF, routes replies to the connection
// that sent the inbound frame. Dropping a connection closes the sessions it
// registered; SIGINT/SIGTERM sends ERROR{code:"shutdown"} to every active
// session and returns. Returns 0 on clean shutdown.
int serve(const std::string& host, std::uint16_t port, const ModelParams& model);

} // namespace trusteval
