#include "trusteval/service.hpp"

#include <algorithm>
#include <cerrno>
#include <csignal>
#include <cstring>
#include <iostream>

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include "json.hpp"

#include "trusteval/acfg.hpp"
#include "trusteval/errors.hpp"
#include "trusteval/siamese.hpp"

namespace trusteval {

namespace {

using nlohmann::json;

// Take the session's next sequence number if the message names a session we
// know; session-less errors go out without one.
void attach_session(json& msg, ServiceState& state, const std::string& session_id) {
    msg["session_id"] = session_id;
    auto it = state.sessions.find(session_id);
    if (it != state.sessions.end()) msg["seq"] = it->second.next_seq++;
}

json error_frame(ServiceState& state, const json& inbound, const std::string& code,
                 const std::string& detail) {
    json e{{"type", "ERROR"}, {"code", code}, {"detail", detail}};
    if (inbound.is_object() && inbound.contains("session_id") && inbound["session_id"].is_string())
        attach_session(e, state, inbound["session_id"].get<std::string>());
    return e;
}

bool parse_record_field(const json& j, SlotRecord& out, std::string& why) {
    try {
        out = slot_record_from_json(j.dump());
        return true;
    } catch (const error& e) {
        why = e.what();
        return false;
    }
}

std::vector<json> handle_register(ServiceState& state, const json& msg, const ModelParams&) {
    if (!msg.contains("session_id") || !msg["session_id"].is_string() ||
        msg["session_id"].get<std::string>().empty())
        return {error_frame(state, msg, "malformed", "REGISTER needs a non-empty session_id")};
    const std::string id = msg["session_id"].get<std::string>();

    if (!msg.contains("initiator_id") || !msg["initiator_id"].is_string() ||
        !msg.contains("collaborator_id") || !msg["collaborator_id"].is_string())
        return {error_frame(state, msg, "malformed", "REGISTER needs initiator_id and collaborator_id")};
    if (!msg.contains("reference") || !msg["reference"].is_object())
        return {error_frame(state, msg, "malformed", "REGISTER needs a reference record")};
    if (!msg.contains("delta") || !msg["delta"].is_number())
        return {error_frame(state, msg, "malformed", "REGISTER needs a numeric delta")};
    const double delta = msg["delta"].get<double>();
    if (!(delta > 0.0 && delta <= 1.0))
        return {error_frame(state, msg, "malformed", "delta must be in (0, 1]")};

    SlotRecord reference;
    std::string why;
    if (!parse_record_field(msg["reference"], reference, why))
        return {error_frame(state, msg, "malformed", "bad reference record: " + why)};

    if (state.sessions.count(id))
        return {error_frame(state, msg, "duplicate_session", "session_id already registered")};

    Session s;
    s.session_id = id;
    s.initiator_id = msg["initiator_id"].get<std::string>();
    s.collaborator_id = msg["collaborator_id"].get<std::string>();
    s.reference = reference;
    s.delta = delta;
    state.sessions.emplace(id, std::move(s));
    return {};
}

std::vector<json> handle_telemetry(ServiceState& state, const json& msg, const ModelParams& model) {
    if (!msg.contains("session_id") || !msg["session_id"].is_string())
        return {error_frame(state, msg, "malformed", "TELEMETRY needs a session_id")};
    const std::string id = msg["session_id"].get<std::string>();
    auto it = state.sessions.find(id);
    if (it == state.sessions.end()) {
        json e{{"type", "ERROR"}, {"code", "unknown_session"}, {"detail", "no such session"},
               {"session_id", id}};
        return {e};
    }
    Session& s = it->second;
    if (s.status == SessionStatus::Terminated)
        return {error_frame(state, msg, "session_terminated", "session was terminated")};
    if (s.status == SessionStatus::Closed)
        return {error_frame(state, msg, "session_closed", "session was deregistered")};

    if (!msg.contains("record") || !msg["record"].is_object())
        return {error_frame(state, msg, "malformed", "TELEMETRY needs a record")};
    SlotRecord record;
    std::string why;
    if (!parse_record_field(msg["record"], record, why))
        return {error_frame(state, msg, "malformed", "bad record: " + why)};

    // same scoring as offline stream evaluation, one slot at a time
    const Vec ref_emb = forward(model, build_acfg(s.reference, model.norm_stats)).U;
    const Vec slot_emb = forward(model, build_acfg(record, model.norm_stats)).U;
    const Similarity sim = cosine_similarity(ref_emb, slot_emb);
    const bool trusted = !sim.degenerate && sim.value >= s.delta;
    ++s.slots_seen;

    std::vector<json> out;
    json verdict{{"type", "VERDICT"}, {"session_id", id}, {"seq", s.next_seq++},
                 {"slot", record.slot_index}, {"similarity", sim.value}, {"trusted", trusted}};
    out.push_back(std::move(verdict));
    if (!trusted) {
        s.status = SessionStatus::Terminated;
        json term{{"type", "TERMINATE"}, {"session_id", id}, {"seq", s.next_seq++},
                  {"slot", record.slot_index}};
        out.push_back(std::move(term));
    }
    return out;
}

std::vector<json> handle_deregister(ServiceState& state, const json& msg) {
    if (!msg.contains("session_id") || !msg["session_id"].is_string())
        return {error_frame(state, msg, "malformed", "DEREGISTER needs a session_id")};
    const std::string id = msg["session_id"].get<std::string>();
    auto it = state.sessions.find(id);
    if (it == state.sessions.end()) {
        json e{{"type", "ERROR"}, {"code", "unknown_session"}, {"detail", "no such session"},
               {"session_id", id}};
        return {e};
    }
    Session& s = it->second;
    if (s.status == SessionStatus::Terminated)
        return {error_frame(state, msg, "session_terminated", "session was terminated")};
    if (s.status == SessionStatus::Closed)
        return {error_frame(state, msg, "session_closed", "session already deregistered")};
    s.status = SessionStatus::Closed;
    return {};
}

} // namespace

std::vector<std::string> handle_line(ServiceState& state, const std::string& line,
                                     const ModelParams& model) {
    json msg;
    std::vector<json> out;
    bool parsed = true;
    try {
        msg = json::parse(line);
    } catch (const json::exception& e) {
        parsed = false;
        out.push_back(error_frame(state, json{}, "malformed", std::string("bad JSON: ") + e.what()));
    }

    if (parsed) {
        if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) {
            out.push_back(error_frame(state, msg, "malformed", "missing 'type'"));
        } else {
            const std::string type = msg["type"].get<std::string>();
            if (type == "REGISTER")
                out = handle_register(state, msg, model);
            else if (type == "TELEMETRY")
                out = handle_telemetry(state, msg, model);
            else if (type == "DEREGISTER")
                out = handle_deregister(state, msg);
            else
                out.push_back(error_frame(state, msg, "unknown_type", "unsupported type '" + type + "'"));
        }
    }

    std::vector<std::string> lines;
    lines.reserve(out.size());
    for (const auto& j : out) lines.push_back(j.dump());
    return lines;
}

namespace {

volatile std::sig_atomic_t g_stop = 0;
void stop_handler(int) { g_stop = 1; }

struct Connection {
    int fd = -1;
    std::string inbuf;
    std::string outbuf;
    std::vector<std::string> sessions;  // sessions registered over this connection
};

void close_sessions_of(ServiceState& state, Connection& conn) {
    for (const auto& id : conn.sessions) {
        auto it = state.sessions.find(id);
        if (it != state.sessions.end() && it->second.status == SessionStatus::Active)
            it->second.status = SessionStatus::Closed;
    }
}

} // namespace

int serve(const std::string& host, std::uint16_t port, const ModelParams& model) {
    validate_params(model);
    if (!model.norm_stats.valid) throw validation_error("serve: model carries no norm stats");

    const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listener < 0) throw error(std::string("socket: ") + std::strerror(errno));
    int one = 1;
    ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(listener);
        throw validation_error("serve: bad listen address: " + host);
    }
    if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
        const std::string why = std::strerror(errno);
        ::close(listener);
        throw error("bind " + host + ":" + std::to_string(port) + ": " + why);
    }
    if (::listen(listener, 16) < 0) {
        const std::string why = std::strerror(errno);
        ::close(listener);
        throw error("listen: " + why);
    }
    ::fcntl(listener, F_SETFL, O_NONBLOCK);

    std::signal(SIGINT, stop_handler);
    std::signal(SIGTERM, stop_handler);
    std::signal(SIGPIPE, SIG_IGN);

    std::cout << "listening on " << host << ":" << port << std::endl;

    ServiceState state;
    std::vector<Connection> conns;

    while (!g_stop) {
        std::vector<pollfd> fds;
        fds.push_back({listener, POLLIN, 0});
        for (const auto& c : conns) {
            short events = POLLIN;
            if (!c.outbuf.empty()) events |= POLLOUT;
            fds.push_back({c.fd, events, 0});
        }

        const int ready = ::poll(fds.data(), fds.size(), 250);
        if (ready < 0) {
            if (errno == EINTR) continue;
            break;
        }
        if (ready == 0) continue;

        if (fds[0].revents & POLLIN) {
            for (;;) {
                const int fd = ::accept(listener, nullptr, nullptr);
                if (fd < 0) break;
                ::fcntl(fd, F_SETFL, O_NONBLOCK);
                conns.push_back({fd, {}, {}, {}});
            }
        }

        std::vector<std::size_t> dead;
        for (std::size_t ci = 0; ci < conns.size(); ++ci) {
            auto& conn = conns[ci];
            const auto& pfd = fds[ci + 1];

            if (pfd.revents & (POLLERR | POLLHUP | POLLNVAL)) {
                dead.push_back(ci);
                continue;
            }

            if (pfd.revents & POLLIN) {
                char buf[65536];
                bool closed = false;
                for (;;) {
                    const ssize_t n = ::read(conn.fd, buf, sizeof(buf));
                    if (n > 0) {
                        conn.inbuf.append(buf, static_cast<std::size_t>(n));
                    } else if (n == 0) {
                        closed = true;
                        break;
                    } else {
                        if (errno == EAGAIN || errno == EWOULDBLOCK) break;
                        closed = true;
                        break;
                    }
                }

                std::size_t pos;
                while ((pos = conn.inbuf.find('\n')) != std::string::npos) {
                    std::string line = conn.inbuf.substr(0, pos);
                    conn.inbuf.erase(0, pos + 1);
                    if (!line.empty() && line.back() == '\r') line.pop_back();
                    if (line.empty()) continue;

                    // remember which connection owns a session that a
                    // successful REGISTER creates
                    std::string maybe_new;
                    try {
                        auto j = json::parse(line);
                        if (j.is_object() && j.value("type", "") == "REGISTER" &&
                            j.contains("session_id") && j["session_id"].is_string())
                            maybe_new = j["session_id"].get<std::string>();
                    } catch (const json::exception&) {
                    }
                    const bool existed = !maybe_new.empty() && state.sessions.count(maybe_new) > 0;

                    for (const auto& reply : handle_line(state, line, model))
                        conn.outbuf += reply + "\n";

                    if (!maybe_new.empty() && !existed && state.sessions.count(maybe_new))
                        conn.sessions.push_back(maybe_new);
                }
                if (closed) {
                    dead.push_back(ci);
                    continue;
                }
            }

            if (!conn.outbuf.empty()) {
                const ssize_t n = ::write(conn.fd, conn.outbuf.data(), conn.outbuf.size());
                if (n > 0)
                    conn.outbuf.erase(0, static_cast<std::size_t>(n));
                else if (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK)
                    dead.push_back(ci);
            }
        }

        for (auto it = dead.rbegin(); it != dead.rend(); ++it) {
            close_sessions_of(state, conns[*it]);
            ::close(conns[*it].fd);
            conns.erase(conns.begin() + static_cast<std::ptrdiff_t>(*it));
        }
    }

    // orderly shutdown: tell every active session, flush, close
    for (auto& conn : conns) {
        for (const auto& id : conn.sessions) {
            auto it = state.sessions.find(id);
            if (it == state.sessions.end() || it->second.status != SessionStatus::Active) continue;
            json e{{"type", "ERROR"}, {"code", "shutdown"}, {"detail", "server stopping"},
                   {"session_id", id}, {"seq", it->second.next_seq++}};
            conn.outbuf += e.dump() + "\n";
            it->second.status = SessionStatus::Closed;
        }
        while (!conn.outbuf.empty()) {
            const ssize_t n = ::write(conn.fd, conn.outbuf.data(), conn.outbuf.size());
            if (n <= 0) break;
            conn.outbuf.erase(0, static_cast<std::size_t>(n));
        }
        ::close(conn.fd);
    }
    ::close(listener);
    return 0;
}

} // namespace trusteval
