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

#ifndef DATUM_HARNESS_HPP
#define DATUM_HARNESS_HPP

#include "datum/router.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace datum {

/*
 * Traces
 *
 * JSONL. An optional first line {"scenario": name, "params": [...], "seed": n, "expect": {...}} describes the
 * generator; every other line is {"from", "to", "label", "fields": {...}, "delay": seconds}.
 */

struct TraceRecord {
    Direction direction;
    std::string label;
    nlohmann::json fields = nlohmann::json::object();
    double delay = 0;
    std::optional<std::uint8_t> sys_id;
    std::optional<std::uint8_t> comp_id;
};

enum class OutcomeKind { AllForwarded, DropAt };

struct ExpectedOutcome {
    OutcomeKind kind = OutcomeKind::AllForwarded;
    std::size_t index = 0;
    ViolationReason reason = ViolationReason::RefinementFalse;

    friend bool operator==(const ExpectedOutcome&, const ExpectedOutcome&) = default;
};

inline std::string to_string(const ExpectedOutcome& o)
{
    if (o.kind == OutcomeKind::AllForwarded) return "AllForwarded";
    return "DropAt(" + std::to_string(o.index) + ", " + std::string(to_string(o.reason)) + ")";
}

struct Trace {
    std::string scenario;
    std::vector<std::string> params;
    std::uint64_t seed = 0;
    std::optional<ExpectedOutcome> expect;
    std::vector<TraceRecord> records;
};

inline nlohmann::json outcome_to_json(const ExpectedOutcome& o)
{
    if (o.kind == OutcomeKind::AllForwarded) return {{"outcome", "AllForwarded"}};
    return {{"outcome", "DropAt"}, {"index", o.index}, {"reason", to_string(o.reason)}};
}

inline ExpectedOutcome outcome_from_json(const nlohmann::json& j)
{
    ExpectedOutcome o;
    const auto kind = j.at("outcome").get<std::string>();
    if (kind == "AllForwarded") return o;
    if (kind != "DropAt") throw Error(ErrorCode::TraceParseError, "unknown outcome " + kind);
    o.kind = OutcomeKind::DropAt;
    o.index = j.at("index").get<std::size_t>();
    o.reason = violation_reason_from_string(j.at("reason").get<std::string>());
    return o;
}

inline std::string emit_trace(const Trace& t)
{
    std::string out;
    if (!t.scenario.empty()) {
        nlohmann::json h{{"scenario", t.scenario}, {"params", t.params}, {"seed", t.seed}};
        if (t.expect) h["expect"] = outcome_to_json(*t.expect);
        out += h.dump() + "\n";
    }
    for (const auto& r : t.records) {
        nlohmann::json j{{"from", r.direction.from}, {"to", r.direction.to}, {"label", r.label}, {"fields", r.fields},
                         {"delay", r.delay}};
        if (r.sys_id) j["sys"] = *r.sys_id;
        if (r.comp_id) j["comp"] = *r.comp_id;
        out += j.dump() + "\n";
    }
    return out;
}

inline Trace parse_trace(std::string_view text)
{
    Trace t;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto nl = text.find('\n', pos);
        const auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            if (j.contains("scenario")) {
                if (line_no != 1 || !t.records.empty()) throw Error(ErrorCode::TraceParseError, "header must be first");
                t.scenario = j.at("scenario").get<std::string>();
                t.params = j.value("params", std::vector<std::string>{});
                t.seed = j.value("seed", std::uint64_t{0});
                if (j.contains("expect")) t.expect = outcome_from_json(j.at("expect"));
                continue;
            }
            TraceRecord r;
            r.direction = {j.at("from").get<std::string>(), j.at("to").get<std::string>()};
            r.label = j.at("label").get<std::string>();
            r.fields = j.value("fields", nlohmann::json::object());
            if (!r.fields.is_object()) throw Error(ErrorCode::TraceParseError, "fields must be an object");
            r.delay = j.value("delay", 0.0);
            if (!(r.delay >= 0) || !std::isfinite(r.delay)) throw Error(ErrorCode::TraceParseError, "bad delay");
            if (j.contains("sys")) r.sys_id = j.at("sys").get<std::uint8_t>();
            if (j.contains("comp")) r.comp_id = j.at("comp").get<std::uint8_t>();
            t.records.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::TraceParseError, "line " + std::to_string(line_no) + ": " + e.what());
        } catch (const Error& e) {
            throw Error(ErrorCode::TraceParseError, "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return t;
}

inline Trace load_trace(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::IoFailure, "cannot open trace " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_trace(ss.str());
}

/*
 * Trace -> frames
 */

namespace detail {

inline Value json_scalar(const Dialect& d, const FieldSchema& f, const nlohmann::json& j)
{
    if (f.type == BaseType::Float || f.type == BaseType::Double) {
        if (!j.is_number()) throw Error(ErrorCode::TraceParseError, f.name + " needs a number");
        return Value::real(j.get<double>());
    }
    if (j.is_string()) {
        const EnumSchema* e = f.enum_ref.empty() ? nullptr : d.enumeration(f.enum_ref);
        const EnumEntry* entry = e ? e->by_name(j.get<std::string>()) : nullptr;
        if (entry == nullptr) throw Error(ErrorCode::TraceParseError, f.name + ": unknown entry " + j.get<std::string>());
        return Value::integer(entry->value);
    }
    if (j.is_number_unsigned()) {
        const auto u = j.get<std::uint64_t>();
        if (u > static_cast<std::uint64_t>(INT64_MAX)) throw Error(ErrorCode::TraceParseError, f.name + " out of range");
        return Value::integer(static_cast<std::int64_t>(u));
    }
    if (j.is_number_integer()) return Value::integer(j.get<std::int64_t>());
    throw Error(ErrorCode::TraceParseError, f.name + " needs an integer");
}

} // namespace detail

inline FieldMap record_fields(const Dialect& d, const MessageSchema& schema, const nlohmann::json& fields)
{
    FieldMap partial;
    for (const auto& [name, j] : fields.items()) {
        const FieldSchema* f = schema.field(name);
        if (f == nullptr) throw Error(ErrorCode::TraceParseError, schema.name + " has no field " + name);
        if (f->type == BaseType::Char && f->array_length != 0) {
            if (!j.is_string()) throw Error(ErrorCode::TraceParseError, name + " needs a string");
            partial.set(name, Value::string(j.get<std::string>()));
        } else if (f->array_length != 0) {
            if (!j.is_array() || j.size() > f->array_length) throw Error(ErrorCode::TraceParseError, name + " needs an array");
            ValueList items;
            for (const auto& e : j) items.push_back(detail::json_scalar(d, *f, e));
            while (items.size() < f->array_length) {
                items.push_back(f->type == BaseType::Float || f->type == BaseType::Double ? Value::real(0) : Value::integer(0));
            }
            partial.set(name, Value::array(std::move(items)));
        } else {
            partial.set(name, detail::json_scalar(d, *f, j));
        }
    }
    return complete_fields(schema, partial);
}

struct EncodedRecord {
    Direction direction;
    std::vector<std::uint8_t> bytes;
    double time = 0; // virtual, cumulative delays
};

/// Encodes every record as a v2 frame; sequence numbers count per direction.
inline std::vector<EncodedRecord> encode_trace(const Dialect& d, const Trace& t, const std::string& gcs_role = kGcs)
{
    std::vector<EncodedRecord> out;
    std::map<std::string, std::uint8_t> seq;
    double now = 0;
    for (std::size_t i = 0; i < t.records.size(); ++i) {
        const auto& r = t.records[i];
        const MessageSchema* schema = d.message(r.label);
        if (schema == nullptr) {
            throw Error(ErrorCode::TraceParseError, "record " + std::to_string(i) + ": unknown message " + r.label);
        }
        const bool from_gcs = r.direction.from == gcs_role;
        const std::uint8_t sys = r.sys_id.value_or(from_gcs ? 255 : 1);
        const std::uint8_t comp = r.comp_id.value_or(from_gcs ? 190 : 1);
        try {
            const FieldMap fields = record_fields(d, *schema, r.fields);
            now += r.delay;
            out.push_back({r.direction, encode_message(*schema, fields, seq[r.direction.from]++, sys, comp), now});
        } catch (const Error& e) {
            throw Error(ErrorCode::TraceParseError, "record " + std::to_string(i) + " (" + r.label + "): " + e.what());
        }
    }
    return out;
}

/*
 * Replay
 */

struct ReplayReport {
    std::vector<Decision> decisions;
    std::vector<ViolationReport> violations;
    std::vector<std::pair<std::string, Status>> statuses;
    ExpectedOutcome outcome;
    std::optional<bool> matched; // set when the trace carries an expectation
};

/// First decision carrying a report, or AllForwarded.
inline ExpectedOutcome observed_outcome(const std::vector<Decision>& decisions)
{
    for (std::size_t i = 0; i < decisions.size(); ++i) {
        if (!decisions[i].reports.empty()) return {OutcomeKind::DropAt, i, decisions[i].reports.front().reason};
    }
    return {};
}

inline ReplayReport replay_trace(const Trace& trace, const ProxyConfig& config)
{
    ReplayReport out;
    Router router(config);
    const auto frames = encode_trace(*config.dialect, trace, config.gcs_role);
    const CrcExtraLookup lookup = crc_lookup(*config.dialect);
    for (const auto& rec : frames) {
        auto frame = decode_frame(rec.bytes, lookup);
        if (!frame) {
            throw Error(ErrorCode::TraceParseError, "record does not frame");
        }
        Decision d = router.route(rec.direction, *frame, rec.time);
        out.violations.insert(out.violations.end(), d.reports.begin(), d.reports.end());
        out.decisions.push_back(std::move(d));
    }
    for (const auto& e : router.sessions()) out.statuses.emplace_back(e.spec->name, e.state.status);
    out.outcome = observed_outcome(out.decisions);
    if (trace.expect) out.matched = out.outcome == *trace.expect;
    return out;
}

/// Deterministic text form of a replay: one decision per line.
inline std::string decisions_text(const std::vector<Decision>& decisions)
{
    std::string out;
    for (const auto& d : decisions) out += to_json(d).dump() + "\n";
    return out;
}

/*
 * Scenarios
 */

struct ScenarioSpec {
    std::string kind;
    std::vector<std::string> params;
};

/// "good_mission:100", "stale_buffer:2,1", "param_attack:13.0", "parachute_attack:flip".
inline ScenarioSpec parse_scenario_spec(std::string_view text)
{
    ScenarioSpec s;
    const auto colon = text.find(':');
    s.kind = std::string(text.substr(0, colon));
    if (colon != std::string_view::npos) {
        std::string rest(text.substr(colon + 1));
        std::stringstream ss(rest);
        std::string item;
        while (std::getline(ss, item, ',')) s.params.push_back(item);
    }
    return s;
}

inline const std::vector<std::string>& parachute_setups()
{
    static const std::vector<std::string> setups{"safe", "n_not_2", "disarmed", "acro", "flip", "ascending", "low_altitude"};
    return setups;
}

namespace detail {

class ScenarioBuilder {
public:
    explicit ScenarioBuilder(std::uint64_t seed) : rng_(seed) {}

    /// UAV heartbeat fields; replaced by parachute setups.
    nlohmann::json vehicle_heartbeat{{"type", 2}, {"autopilot", 3}, {"base_mode", 81}, {"custom_mode", 0},
                                     {"system_status", 3}, {"mavlink_version", 3}};

    void add(const Direction& dir, std::string label, nlohmann::json fields)
    {
        const double delay = 0.02 + static_cast<double>(rng_() % 61) / 1000.0;
        now_ += delay;
        pending_delay_ += delay;
        while (next_heartbeat_ <= now_) {
            push_heartbeats();
            next_heartbeat_ += 1.0;
        }
        trace.records.push_back({dir, std::move(label), std::move(fields), pending_delay_, {}, {}});
        pending_delay_ = 0;
    }

    std::size_t last_index() const { return trace.records.size() - 1; }
    std::uint64_t next() { return rng_(); }

    Trace trace;

private:
    void push_heartbeats()
    {
        const Direction down{kUav, kGcs};
        const Direction up{kGcs, kUav};
        trace.records.push_back({down, "HEARTBEAT", vehicle_heartbeat, pending_delay_, {}, {}});
        trace.records.push_back({up, "HEARTBEAT",
                                 {{"type", 6}, {"autopilot", 8}, {"base_mode", 0}, {"custom_mode", 0},
                                  {"system_status", 4}, {"mavlink_version", 3}},
                                 0.0, {}, {}});
        pending_delay_ = 0;
    }

    std::mt19937_64 rng_;
    double now_ = 0;
    double pending_delay_ = 0;
    double next_heartbeat_ = 0;
};

inline std::int64_t int_param(const ScenarioSpec& s, std::size_t i)
{
    try {
        std::size_t used = 0;
        const auto v = std::stoll(s.params.at(i), &used);
        if (used != s.params[i].size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidParams, s.kind + ": parameter " + std::to_string(i + 1) + " must be an integer");
    }
}

inline double real_param(const ScenarioSpec& s, std::size_t i)
{
    try {
        std::size_t used = 0;
        const auto v = std::stod(s.params.at(i), &used);
        if (used != s.params[i].size() || !std::isfinite(v)) throw std::invalid_argument("bad");
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidParams, s.kind + ": parameter " + std::to_string(i + 1) + " must be a number");
    }
}

inline void mission_prefix(ScenarioBuilder& b, std::int64_t n, std::int64_t items)
{
    const Direction up{kGcs, kUav};
    const Direction down{kUav, kGcs};
    b.add(up, "MISSION_COUNT", {{"target_system", 1}, {"target_component", 1}, {"count", n}, {"mission_type", 0}});
    for (std::int64_t i = 0; i < items; ++i) {
        b.add(down, "MISSION_REQUEST_INT", {{"target_system", 255}, {"target_component", 190}, {"seq", i}, {"mission_type", 0}});
        const auto lat = 473977000 + static_cast<std::int64_t>(b.next() % 20000);
        const auto lon = 85455000 + static_cast<std::int64_t>(b.next() % 20000);
        b.add(up, "MISSION_ITEM_INT",
              {{"target_system", 1}, {"target_component", 1}, {"seq", i}, {"frame", 6}, {"command", 16},
               {"current", i == 0 ? 1 : 0}, {"autocontinue", 1}, {"x", lat}, {"y", lon},
               {"z", 20.0 + static_cast<double>(b.next() % 200) / 10.0}, {"mission_type", 0}});
    }
}

} // namespace detail

/// Deterministic in (spec, seed). Throws InvalidParams.
inline Trace generate_scenario(const ScenarioSpec& spec, std::uint64_t seed = 1)
{
    using detail::int_param;
    using detail::real_param;
    detail::ScenarioBuilder b(seed);
    const Direction up{kGcs, kUav};
    const Direction down{kUav, kGcs};
    auto need = [&](std::size_t lo, std::size_t hi) {
        if (spec.params.size() < lo || spec.params.size() > hi) {
            throw Error(ErrorCode::InvalidParams, spec.kind + ": wrong number of parameters");
        }
    };
    const nlohmann::json accepted_ack{{"target_system", 255}, {"target_component", 190}, {"type", "MAV_MISSION_ACCEPTED"},
                                      {"mission_type", 0}};
    ExpectedOutcome expect;

    if (spec.kind == "good_mission") {
        need(1, 1);
        const auto n = int_param(spec, 0);
        if (n < 1 || n > 65534) throw Error(ErrorCode::InvalidParams, "good_mission: N must be in [1, 65534]");
        detail::mission_prefix(b, n, n);
        b.add(down, "MISSION_ACK", accepted_ack);
    } else if (spec.kind == "stale_buffer") {
        need(2, 2);
        const auto n = int_param(spec, 0);
        const auto k = int_param(spec, 1);
        if (n < 1 || n > 65534 || k < 0 || k >= n) throw Error(ErrorCode::InvalidParams, "stale_buffer: need 0 <= k < N");
        detail::mission_prefix(b, n, k);
        b.add(down, "MISSION_ACK", accepted_ack);
        expect = {OutcomeKind::DropAt, b.last_index(), ViolationReason::RefinementFalse};
    } else if (spec.kind == "out_of_order_request") {
        need(1, 1);
        const auto n = int_param(spec, 0);
        if (n < 2 || n > 65534) throw Error(ErrorCode::InvalidParams, "out_of_order_request: N must be in [2, 65534]");
        detail::mission_prefix(b, n, 0);
        b.add(down, "MISSION_REQUEST_INT", {{"target_system", 255}, {"target_component", 190}, {"seq", 1}, {"mission_type", 0}});
        expect = {OutcomeKind::DropAt, b.last_index(), ViolationReason::RefinementFalse};
    } else if (spec.kind == "param_attack") {
        need(1, 3);
        const double value = real_param(spec, 0);
        const double pitch_p = spec.params.size() > 1 ? real_param(spec, 1) : 6.5;
        const double rate_ff = spec.params.size() > 2 ? real_param(spec, 2) : 2.0;
        auto param_value = [&](const char* id, double v) {
            b.add(down, "PARAM_VALUE", {{"param_id", id}, {"param_value", v}, {"param_type", 9}, {"param_count", 2}, {"param_index", 0}});
        };
        param_value("MC_PITCH_P", pitch_p);
        param_value("MC_PITCHRATE_FF", rate_ff);
        b.add(up, "PARAM_SET", {{"target_system", 1}, {"target_component", 1}, {"param_id", "MC_PITCHRATE_MAX"},
                                {"param_value", value}, {"param_type", 9}});
        // float32 on the wire: compare what the vehicle would receive
        const double sent = static_cast<double>(static_cast<float>(value));
        const double limit = static_cast<double>(static_cast<float>(pitch_p)) * static_cast<double>(static_cast<float>(rate_ff));
        if (!(sent < limit)) expect = {OutcomeKind::DropAt, b.last_index(), ViolationReason::RefinementFalse};
    } else if (spec.kind == "parachute_attack") {
        need(1, 1);
        const auto& setup = spec.params[0];
        const auto& known = parachute_setups();
        if (std::find(known.begin(), known.end(), setup) == known.end()) {
            throw Error(ErrorCode::InvalidParams, "parachute_attack: unknown setup " + setup);
        }
        b.vehicle_heartbeat["base_mode"] = setup == "disarmed" ? 81 : 209; // 209 = 0x80 armed | 0x51
        b.vehicle_heartbeat["custom_mode"] = setup == "acro" ? 1 : setup == "flip" ? 14 : 0;
        b.add(down, "HEARTBEAT", b.vehicle_heartbeat);
        b.add(down, "PARAM_VALUE", {{"param_id", "CHUTE_ALT_MIN"}, {"param_value", 30.0}, {"param_type", 9},
                                    {"param_count", 1}, {"param_index", 0}});
        b.add(down, "GLOBAL_POSITION_INT",
              {{"time_boot_ms", 1000}, {"lat", 473977000}, {"lon", 85455000}, {"alt", 500000},
               {"relative_alt", setup == "low_altitude" ? 20000 : 40000}, {"vx", 0}, {"vy", 0},
               {"vz", setup == "ascending" ? -200 : 50}, {"hdg", 0}});
        b.add(up, "COMMAND_LONG", {{"target_system", 1}, {"target_component", 1}, {"command", kMavCmdDoParachute},
                                   {"confirmation", 0}, {"param1", setup == "n_not_2" ? 1.0 : 2.0}});
        if (setup != "safe") expect = {OutcomeKind::DropAt, b.last_index(), ViolationReason::RefinementFalse};
    } else {
        throw Error(ErrorCode::InvalidParams, "unknown scenario kind " + spec.kind);
    }
    b.trace.scenario = spec.kind;
    b.trace.params = spec.params;
    b.trace.seed = seed;
    b.trace.expect = expect;
    return b.trace;
}

/*
 * Benchmark
 */

struct BenchReport {
    std::size_t messages = 0;     // per repetition
    std::size_t repetitions = 0;
    std::size_t dropped = 0;      // per repetition
    double median_us = 0;
    double mean_us = 0;
    double stddev_us = 0;
    double min_us = 0;
    double max_us = 0;
    long peak_rss_kb = 0;
};

/// VmHWM of this process, or -1 when /proc is unavailable.
inline long peak_rss_kb()
{
    std::ifstream in("/proc/self/status");
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("VmHWM:", 0) == 0) {
            return std::strtol(line.c_str() + 6, nullptr, 10);
        }
    }
    return -1;
}

inline BenchReport bench(const ProxyConfig& config, const Trace& trace, std::size_t repetitions)
{
    if (repetitions < 30) {
        throw Error(ErrorCode::InvalidParams, "bench needs at least 30 repetitions");
    }
    const auto frames = encode_trace(*config.dialect, trace, config.gcs_role);
    const CrcExtraLookup lookup = crc_lookup(*config.dialect);
    std::vector<Frame> decoded;
    for (const auto& f : frames) decoded.push_back(*decode_frame(f.bytes, lookup));

    std::vector<double> samples;
    samples.reserve(frames.size() * repetitions);
    std::size_t dropped = 0;
    for (std::size_t rep = 0; rep < repetitions; ++rep) {
        Router router(config);
        for (std::size_t i = 0; i < frames.size(); ++i) {
            const auto t0 = std::chrono::steady_clock::now();
            const Decision d = router.route(frames[i].direction, decoded[i], frames[i].time);
            const auto t1 = std::chrono::steady_clock::now();
            samples.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
            dropped += d.action == Action::Drop;
        }
    }
    BenchReport r;
    r.messages = frames.size();
    r.repetitions = repetitions;
    r.dropped = dropped / repetitions;
    if (samples.empty()) return r;
    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    r.median_us = n % 2 ? sorted[n / 2] : (sorted[n / 2 - 1] + sorted[n / 2]) / 2;
    r.mean_us = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(n);
    double ss = 0;
    for (double s : samples) ss += (s - r.mean_us) * (s - r.mean_us);
    r.stddev_us = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0;
    r.min_us = sorted.front();
    r.max_us = sorted.back();
    r.peak_rss_kb = peak_rss_kb();
    return r;
}

inline nlohmann::json to_json(const BenchReport& r)
{
    return {{"messages", r.messages},   {"repetitions", r.repetitions}, {"dropped", r.dropped}, {"median_us", r.median_us},
            {"mean_us", r.mean_us},     {"stddev_us", r.stddev_us},     {"min_us", r.min_us},
            {"max_us", r.max_us},       {"peak_rss_kb", r.peak_rss_kb}};
}

inline std::string format_fixed(double v, int digits = 2)
{
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(digits);
    out << v;
    return out.str();
}

/// "mean ± stddev" presentation plus median and memory.
inline std::string bench_table(const BenchReport& r)
{
    std::ostringstream out;
    out << "messages/rep  reps  latency (us, mean ± sd)   median (us)  peak RSS (KB)\n";
    out << r.messages << std::string(13 - std::min<std::size_t>(12, std::to_string(r.messages).size()), ' ')
        << r.repetitions << std::string(6 - std::min<std::size_t>(5, std::to_string(r.repetitions).size()), ' ')
        << format_fixed(r.mean_us) << " ± " << format_fixed(r.stddev_us) << "            " << format_fixed(r.median_us)
        << "         " << r.peak_rss_kb << "\n";
    return out.str();
}

} // namespace datum

#endif
