/*
 * Copyright (c) 2026, The datum-guard Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DATUM_ROUTER_HPP
#define DATUM_ROUTER_HPP

#include "datum/dialect.hpp"
#include "datum/protocols.hpp"
#include "datum/session.hpp"
#include "datum/statectx.hpp"
#include "datum/wire.hpp"

#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

namespace datum {

enum class EnforcementMode { Enforce, Warn };

struct Endpoint {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;

    friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

inline std::string to_string(const Endpoint& e) { return e.host + ":" + std::to_string(e.port); }

inline Endpoint parse_endpoint(std::string_view text)
{
    const auto colon = text.rfind(':');
    if (colon == std::string_view::npos || colon == 0) {
        throw Error(ErrorCode::ConfigError, "endpoint must be host:port, got '" + std::string(text) + "'");
    }
    Endpoint e;
    e.host = std::string(text.substr(0, colon));
    unsigned port = 0;
    const auto digits = text.substr(colon + 1);
    auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
    if (ec != std::errc() || p != digits.data() + digits.size() || port > 65535) {
        throw Error(ErrorCode::ConfigError, "bad port in '" + std::string(text) + "'");
    }
    e.port = static_cast<std::uint16_t>(port);
    return e;
}

struct ProxyConfig {
    Endpoint gcs_listen{"127.0.0.1", 14550};  // GCS traffic arrives here
    Endpoint uav_endpoint{"127.0.0.1", 14555}; // autopilot address
    Endpoint uav_bind{"127.0.0.1", 0};         // local socket facing the autopilot
    EnforcementMode mode = EnforcementMode::Enforce;
    std::shared_ptr<const Dialect> dialect;
    std::vector<std::shared_ptr<const ProtocolSpec>> protocols;
    StateSettings state;
    std::string report_path; // empty = no report log
    std::string gcs_role = "GCS";
    std::string uav_role = "UAV";

    [[nodiscard]] Direction uplink() const { return {gcs_role, uav_role}; }
    [[nodiscard]] Direction downlink() const { return {uav_role, gcs_role}; }
};

inline void validate(const ProxyConfig& c)
{
    if (!c.dialect) {
        throw Error(ErrorCode::ConfigError, "no dialect loaded");
    }
    if (c.protocols.empty()) {
        throw Error(ErrorCode::ConfigError, "no protocols loaded");
    }
    if (c.gcs_listen == c.uav_endpoint || (c.uav_bind.port != 0 && c.uav_bind == c.gcs_listen)) {
        throw Error(ErrorCode::ConfigError, "proxy endpoints must be distinct");
    }
    for (const auto& p : c.protocols) {
        if (std::find(p->roles.begin(), p->roles.end(), c.gcs_role) == p->roles.end() ||
            std::find(p->roles.begin(), p->roles.end(), c.uav_role) == p->roles.end()) {
            throw Error(ErrorCode::ConfigError, "protocol " + p->name + " does not use roles " + c.gcs_role + "/" + c.uav_role);
        }
    }
}

/*
 * Config file (JSON); relative paths resolve against the file's directory:
 *   {"gcs_listen": "127.0.0.1:14550", "uav_endpoint": "127.0.0.1:14555", "uav_bind": "127.0.0.1:0",
 *    "mode": "enforce" | "warn", "dialect": path, "protocols": [path, ...], "state": path?, "report": path?}
 */
inline ProxyConfig load_proxy_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::ConfigError, "cannot open config " + path);
    }
    const auto base = std::filesystem::path(path).parent_path();
    auto resolve = [&](const std::string& p) {
        const std::filesystem::path q(p);
        return (q.is_absolute() ? q : base / q).lexically_normal().string();
    };
    ProxyConfig c;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
        if (j.contains("gcs_listen")) c.gcs_listen = parse_endpoint(j.at("gcs_listen").get<std::string>());
        if (j.contains("uav_endpoint")) c.uav_endpoint = parse_endpoint(j.at("uav_endpoint").get<std::string>());
        if (j.contains("uav_bind")) c.uav_bind = parse_endpoint(j.at("uav_bind").get<std::string>());
        const auto mode = j.value("mode", std::string("enforce"));
        if (mode == "enforce") {
            c.mode = EnforcementMode::Enforce;
        } else if (mode == "warn") {
            c.mode = EnforcementMode::Warn;
        } else {
            throw Error(ErrorCode::ConfigError, "mode must be enforce or warn");
        }
        if (j.contains("report")) c.report_path = resolve(j.at("report").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ConfigError, path + ": " + e.what());
    }
    try {
        c.dialect = std::make_shared<const Dialect>(load_dialect_or_schema(resolve(j.at("dialect").get<std::string>())));
        const auto resolver = c.dialect->resolver();
        for (const auto& p : j.value("protocols", nlohmann::json::array())) {
            c.protocols.push_back(std::make_shared<const ProtocolSpec>(load_protocol_file(resolve(p.get<std::string>()), resolver)));
        }
        if (j.contains("state")) c.state = load_state_settings(resolve(j.at("state").get<std::string>()));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ConfigError, path + ": " + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ConfigError) throw;
        throw Error(ErrorCode::ConfigError, path + ": " + e.what());
    }
    validate(c);
    return c;
}

/*
 * Routing core
 */

enum class Action { Forward, Drop };

inline std::string_view to_string(Action a) { return a == Action::Forward ? "Forward" : "Drop"; }

struct Outcome {
    std::string protocol;
    StepKind kind;

    friend bool operator==(const Outcome&, const Outcome&) = default;
};

struct Decision {
    Action action = Action::Forward;
    std::string label;            // empty for unknown message ids
    std::uint32_t msg_id = 0;
    std::vector<Outcome> outcomes; // non-irrelevant monitor results, load order
    std::vector<ViolationReport> reports;

    friend bool operator==(const Decision&, const Decision&) = default;
};

inline nlohmann::json to_json(const Decision& d)
{
    auto outcomes = nlohmann::json::array();
    for (const auto& o : d.outcomes) outcomes.push_back({{"protocol", o.protocol}, {"result", to_string(o.kind)}});
    auto reports = nlohmann::json::array();
    for (const auto& r : d.reports) reports.push_back(to_json(r));
    return {{"action", to_string(d.action)}, {"label", d.label}, {"msg_id", d.msg_id}, {"outcomes", outcomes}, {"reports", reports}};
}

struct ProtocolCounters {
    std::size_t seen = 0;
    std::size_t forwarded = 0;
    std::size_t dropped = 0;
    std::size_t violations = 0;
    std::size_t completed = 0;
};

struct SessionEntry {
    std::shared_ptr<const ProtocolSpec> spec;
    MonitorState initial;
    MonitorState state;
    std::set<std::string> initiating;
    ProtocolCounters counters;
};

/// SessionTable plus state context; one instance per serialized decision pipeline.
class Router {
public:
    explicit Router(const ProxyConfig& config) : config_(config)
    {
        if (!config_.dialect) {
            throw Error(ErrorCode::ConfigError, "no dialect loaded");
        }
        ctx_.settings = config_.state;
        ctx_.settings.vehicle_role = config_.uav_role;
        ctx_.settings.gcs_role = config_.gcs_role;
        for (const auto& spec : config_.protocols) {
            SessionEntry e;
            e.spec = spec;
            e.initial = start(spec);
            e.state = e.initial;
            e.initiating = initial_labels(spec->root);
            sessions_.push_back(std::move(e));
        }
    }

    /// Frames must be checksum-valid or of an unknown message id.
    Decision route(const Direction& dir, const Frame& frame, double now)
    {
        const MessageSchema* schema = config_.dialect->message(frame.msg_id);
        if (schema == nullptr) {
            ++totals_.seen;
            ++totals_.forwarded;
            ++totals_.unknown;
            return Decision{Action::Forward, {}, frame.msg_id, {}, {}};
        }
        ObservedMessage msg{dir, schema->name, decode_payload(*config_.dialect, *schema, frame.payload), now};
        return route(msg, frame.msg_id);
    }

    Decision route(const ObservedMessage& msg, std::uint32_t msg_id = 0)
    {
        if (msg_id == 0 && config_.dialect) {
            if (const auto* s = config_.dialect->message(msg.label)) msg_id = s->id;
        }
        Decision d{Action::Forward, msg.label, msg_id, {}, {}};
        update_from_message(ctx_, msg.direction, msg.label, msg.fields, msg.time);

        std::vector<std::optional<MonitorState>> next(sessions_.size());
        std::optional<std::size_t> first_violation;
        for (std::size_t i = 0; i < sessions_.size(); ++i) {
            auto& e = sessions_[i];
            const Env externals = externals_for(*e.spec, msg.time);
            MonitorState current = e.state;
            if (!is_relevant(current, msg, externals)) {
                continue;
            }
            ++e.counters.seen;
            StepResult r;
            if (current.status == Status::Running) {
                r = step(current, msg, externals);
            } else if (current.status == Status::Completed && is_retransmission(current, msg)) {
                r = StepResult{StepKind::Retransmission, current, std::nullopt};
            } else if (current.status == Status::Completed || e.spec->persistent || e.initiating.count(msg.label)) {
                r = step(e.initial, msg, externals);
            } else {
                // Violated session, waiting for its initiating label.
                ViolationReport rep;
                rep.timestamp = msg.time;
                rep.protocol = e.spec->name;
                rep.label = msg.label;
                rep.direction = msg.direction;
                for (const auto& l : e.initiating) rep.expected.push_back({l, {}, {}});
                rep.reason = ViolationReason::UnexpectedLabel;
                rep.detail = "session violated earlier; waiting for a new session";
                r = StepResult{StepKind::Violation, current, rep};
            }
            d.outcomes.push_back({e.spec->name, r.kind});
            if (r.kind == StepKind::Violation) {
                ++e.counters.violations;
                d.reports.push_back(*r.report);
                if (!first_violation) first_violation = i;
            } else if (r.kind == StepKind::Completed) {
                ++e.counters.completed;
            }
            next[i] = std::move(r.state);
            if (first_violation && config_.mode == EnforcementMode::Enforce) {
                break;
            }
        }

        if (first_violation && config_.mode == EnforcementMode::Enforce) {
            d.action = Action::Drop;
            sessions_[*first_violation].state = std::move(*next[*first_violation]);
        } else {
            for (std::size_t i = 0; i < sessions_.size(); ++i) {
                if (next[i]) sessions_[i].state = std::move(*next[i]);
            }
            if (!first_violation && msg.label == "PARAM_SET") {
                update_from_message(ctx_, msg.direction, msg.label, msg.fields, msg.time, true);
            }
        }
        for (std::size_t i = 0; i < sessions_.size(); ++i) {
            if (!next[i] && !(first_violation && i == *first_violation)) continue;
            auto& c = sessions_[i].counters;
            (d.action == Action::Forward ? c.forwarded : c.dropped) += 1;
        }
        ++totals_.seen;
        (d.action == Action::Forward ? totals_.forwarded : totals_.dropped) += 1;
        return d;
    }

    [[nodiscard]] const std::vector<SessionEntry>& sessions() const noexcept { return sessions_; }
    [[nodiscard]] const StateContext& context() const noexcept { return ctx_; }
    StateContext& context() noexcept { return ctx_; }
    [[nodiscard]] const ProxyConfig& config() const noexcept { return config_; }

    struct Totals {
        std::size_t seen = 0;
        std::size_t forwarded = 0;
        std::size_t dropped = 0;
        std::size_t unknown = 0;
    };
    [[nodiscard]] const Totals& totals() const noexcept { return totals_; }

private:
    Env externals_for(const ProtocolSpec& spec, double now) const
    {
        Bindings b;
        for (const auto& name : spec.externals) {
            if (auto v = lookup_state(ctx_, name, now)) b.emplace(name, *v);
        }
        return Env(std::move(b));
    }

    ProxyConfig config_;
    StateContext ctx_;
    std::vector<SessionEntry> sessions_;
    Totals totals_;
};

/// One JSONL line per report.
inline void write_reports(std::ostream& out, const Decision& d)
{
    for (const auto& r : d.reports) {
        auto j = to_json(r);
        j["action"] = d.action == Action::Drop ? "drop" : "forward";
        out << j.dump() << "\n";
    }
}

inline void write_summary(std::ostream& out, const Router& router)
{
    const auto& t = router.totals();
    out << "messages: " << t.seen << " seen, " << t.forwarded << " forwarded, " << t.dropped << " dropped, "
        << t.unknown << " unknown id\n";
    for (const auto& e : router.sessions()) {
        out << "  " << e.spec->name << ": " << e.counters.seen << " seen, " << e.counters.forwarded << " forwarded, "
            << e.counters.dropped << " dropped, " << e.counters.violations << " violations, " << e.counters.completed
            << " completed, status " << to_string(e.state.status) << "\n";
    }
}

inline nlohmann::json summary_json(const Router& router)
{
    const auto& t = router.totals();
    nlohmann::json j{{"seen", t.seen}, {"forwarded", t.forwarded}, {"dropped", t.dropped}, {"unknown", t.unknown}};
    auto protocols = nlohmann::json::array();
    for (const auto& e : router.sessions()) {
        protocols.push_back({{"name", e.spec->name},
                             {"seen", e.counters.seen},
                             {"forwarded", e.counters.forwarded},
                             {"dropped", e.counters.dropped},
                             {"violations", e.counters.violations},
                             {"completed", e.counters.completed},
                             {"status", to_string(e.state.status)}});
    }
    j["protocols"] = protocols;
    return j;
}

} // namespace datum

#endif
