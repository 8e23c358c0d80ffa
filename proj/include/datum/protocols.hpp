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

#ifndef DATUM_PROTOCOLS_HPP
#define DATUM_PROTOCOLS_HPP

#include "datum/refinement_parser.hpp"
#include "datum/session.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace datum {

inline constexpr const char* kGcs = "GCS";
inline constexpr const char* kUav = "UAV";
inline constexpr std::int64_t kMavCmdDoParachute = 208;

struct MissionParams {
    std::int64_t mission_item_limit = 65535;
};

struct PitchGuardParams {
    double p = 1.0;
    double q = 1.0;
};

enum class AltitudeComparison { AboveMin, BelowMin };

struct ParachuteGuardParams {
    AltitudeComparison altitude_comparison = AltitudeComparison::AboveMin;
    std::vector<std::string> forbidden_modes{"ACRO", "FLIP"};
    std::int64_t release_value = 2;
};

inline Value mission_accepted() { return Value::enumeration("MAV_MISSION_RESULT", "MAV_MISSION_ACCEPTED", 0); }

inline ProtocolSpec build_mission_protocol(const MissionParams& params = {})
{
    using namespace expr;
    if (params.mission_item_limit <= 1 || params.mission_item_limit > 65535) {
        throw Error(ErrorCode::InvalidParams, "mission_item_limit must be in (1, 65535]");
    }
    const Protocol item = Protocol::offer(kGcs, kUav,
        {Choice{"MISSION_ITEM_INT", {{"seq", "y"}}, eq(var("y"), var("x")), Protocol::recur(0, var("curr") + lit(1))}});
    const Protocol loop = Protocol::offer(kUav, kGcs,
        {Choice{"MISSION_REQUEST_INT", {{"seq", "x"}}, var("curr") < var("N") && eq(var("x"), var("curr")), item},
         Choice{"MISSION_ACK", {{"type", "t"}}, ne(var("t"), lit(mission_accepted())) || eq(var("curr"), var("N")),
                Protocol::end()}});
    const Protocol body = Protocol::mu("curr", lit(0) <= var("curr") && var("curr") <= var("N"), lit(0), loop);

    ProtocolSpec spec;
    spec.name = "mission";
    spec.roles = {kGcs, kUav};
    spec.root = Protocol::offer(kGcs, kUav,
        {Choice{"MISSION_COUNT", {{"count", "N"}}, var("N") >= lit(1) && var("N") < var("MISSION_ITEM_LIMIT"), body}});
    spec.constants = {{"MISSION_ITEM_LIMIT", Value::integer(params.mission_item_limit)}};
    return spec;
}

inline ProtocolSpec build_param_guard(const PitchGuardParams& params = {})
{
    using namespace expr;
    if (!std::isfinite(params.p) || !std::isfinite(params.q) || params.p <= 0 || params.q <= 0) {
        throw Error(ErrorCode::InvalidParams, "p and q must be finite and positive");
    }
    ProtocolSpec spec;
    spec.name = "param_guard";
    spec.roles = {kGcs, kUav};
    spec.root = Protocol::offer(kGcs, kUav,
        {Choice{"PARAM_SET", {{"param_value", "n"}},
                var("n") < (var("p") * var("MC_PITCH_P")) * (var("q") * var("MC_PITCHRATE_FF")), Protocol::end()}});
    spec.filters = {{"PARAM_SET", eq(var("param_id"), lit("MC_PITCHRATE_MAX"))}};
    spec.externals = {"MC_PITCH_P", "MC_PITCHRATE_FF"};
    spec.constants = {{"p", Value::real(params.p)}, {"q", Value::real(params.q)}};
    spec.persistent = true;
    spec.retransmission = false;
    return spec;
}

inline ProtocolSpec build_parachute_guard(const ParachuteGuardParams& params = {})
{
    using namespace expr;
    if (params.forbidden_modes.empty()) {
        throw Error(ErrorCode::InvalidParams, "forbidden_modes must not be empty");
    }
    RefExpr pred = eq(var("n"), lit(params.release_value)) && eq(var("motors"), lit(true));
    for (const auto& m : params.forbidden_modes) {
        pred = pred && ne(var("mode"), lit(m.c_str()));
    }
    pred = pred && var("v_z") <= lit(0);
    pred = pred && (params.altitude_comparison == AltitudeComparison::AboveMin ? var("alt") >= var("CHUTE_ALT_MIN")
                                                                               : var("alt") <= var("CHUTE_ALT_MIN"));
    ProtocolSpec spec;
    spec.name = "parachute_guard";
    spec.roles = {kGcs, kUav};
    spec.root = Protocol::offer(kGcs, kUav,
        {Choice{"COMMAND_LONG", {{"param1", "n"}}, pred, Protocol::end()},
         Choice{"COMMAND_INT", {{"param1", "n"}}, pred, Protocol::end()}});
    const RefExpr is_chute = eq(var("command"), lit(kMavCmdDoParachute));
    spec.filters = {{"COMMAND_LONG", is_chute}, {"COMMAND_INT", is_chute}};
    spec.externals = {"motors", "mode", "v_z", "alt", "CHUTE_ALT_MIN"};
    spec.persistent = true;
    spec.retransmission = false;
    return spec;
}

/*
 * Protocol definition files
 *
 *   {"name": ..., "roles": [A, B], "persistent": bool, "retransmission": bool,
 *    "relevant": [...]?, "externals": [...], "constants": {...}, "filters": {label: src},
 *    "protocol": node}
 *   node := {"offer": {"from", "to", "choices": [{"label", "binders": [{"field","var"}], "refinement", "then": node}]}}
 *         | {"mu": {"var", "bound", "init", "body": node}}
 *         | {"recur": {"depth", "update"}}
 *         | "end"
 */

inline nlohmann::json protocol_to_json(const Protocol& p)
{
    const auto& n = p.node().data;
    if (auto* o = std::get_if<OfferNode>(&n)) {
        auto choices = nlohmann::json::array();
        for (const auto& c : o->choices) {
            auto binders = nlohmann::json::array();
            for (const auto& b : c.binders) binders.push_back({{"field", b.field}, {"var", b.var}});
            choices.push_back({{"label", c.label}, {"binders", binders}, {"refinement", to_source(c.refinement)},
                               {"then", protocol_to_json(c.continuation)}});
        }
        return {{"offer", {{"from", o->from}, {"to", o->to}, {"choices", choices}}}};
    }
    if (auto* m = std::get_if<MuNode>(&n)) {
        return {{"mu", {{"var", m->var}, {"bound", to_source(m->bound)}, {"init", to_source(m->init)},
                        {"body", protocol_to_json(m->body)}}}};
    }
    if (auto* r = std::get_if<RecurNode>(&n)) {
        return {{"recur", {{"depth", r->depth}, {"update", to_source(r->update)}}}};
    }
    return "end";
}

inline nlohmann::json spec_to_json(const ProtocolSpec& spec)
{
    nlohmann::json j;
    j["name"] = spec.name;
    j["roles"] = spec.roles;
    j["persistent"] = spec.persistent;
    j["retransmission"] = spec.retransmission;
    if (spec.relevant) j["relevant"] = *spec.relevant;
    j["externals"] = spec.externals;
    j["constants"] = bindings_to_json(spec.constants);
    auto filters = nlohmann::json::object();
    for (const auto& [label, f] : spec.filters) filters[label] = to_source(f);
    j["filters"] = filters;
    j["protocol"] = protocol_to_json(spec.root);
    return j;
}

inline std::string emit_protocol(const ProtocolSpec& spec) { return spec_to_json(spec).dump(2) + "\n"; }

namespace detail {

inline Protocol protocol_from_json(const nlohmann::json& j, const EnumResolver& resolver)
{
    if (j.is_string() && j.get<std::string>() == "end") {
        return Protocol::end();
    }
    if (j.contains("offer")) {
        const auto& o = j.at("offer");
        std::vector<Choice> choices;
        for (const auto& c : o.at("choices")) {
            Choice ch;
            ch.label = c.at("label").get<std::string>();
            for (const auto& b : c.value("binders", nlohmann::json::array())) {
                ch.binders.push_back({b.at("field").get<std::string>(), b.at("var").get<std::string>()});
            }
            ch.refinement = parse_refinement(c.value("refinement", std::string("true")), resolver);
            ch.continuation = protocol_from_json(c.at("then"), resolver);
            choices.push_back(std::move(ch));
        }
        return Protocol::offer(o.at("from").get<std::string>(), o.at("to").get<std::string>(), std::move(choices));
    }
    if (j.contains("mu")) {
        const auto& m = j.at("mu");
        return Protocol::mu(m.at("var").get<std::string>(), parse_refinement(m.at("bound").get<std::string>(), resolver),
                            parse_refinement(m.at("init").get<std::string>(), resolver),
                            protocol_from_json(m.at("body"), resolver));
    }
    if (j.contains("recur")) {
        const auto& r = j.at("recur");
        return Protocol::recur(r.at("depth").get<std::size_t>(), parse_refinement(r.at("update").get<std::string>(), resolver));
    }
    throw Error(ErrorCode::ConfigError, "unknown protocol node " + j.dump());
}

} // namespace detail

/// Parses a protocol definition; enum literals need `resolver`. Throws ConfigError or IllFormedProtocol.
inline ProtocolSpec load_protocol(std::string_view text, const EnumResolver& resolver = {})
{
    ProtocolSpec spec;
    try {
        const auto j = nlohmann::json::parse(text);
        spec.name = j.at("name").get<std::string>();
        spec.roles = j.at("roles").get<std::vector<std::string>>();
        spec.persistent = j.value("persistent", false);
        spec.retransmission = j.value("retransmission", !spec.persistent);
        if (j.contains("relevant")) spec.relevant = j.at("relevant").get<std::set<std::string>>();
        spec.externals = j.value("externals", std::set<std::string>{});
        if (j.contains("constants")) spec.constants = bindings_from_json(j.at("constants"));
        const auto filters = j.value("filters", nlohmann::json::object());
        for (const auto& [label, src] : filters.items()) {
            spec.filters.emplace(label, parse_refinement(src.get<std::string>(), resolver));
        }
        spec.root = detail::protocol_from_json(j.at("protocol"), resolver);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("protocol file: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ParseError) throw Error(ErrorCode::ConfigError, e.what());
        throw;
    }
    if (auto problems = check_well_formed(spec); !problems.empty()) {
        std::string msg = spec.name + ":";
        for (const auto& p : problems) msg += " " + p + ";";
        throw Error(ErrorCode::IllFormedProtocol, msg);
    }
    return spec;
}

inline ProtocolSpec load_protocol_file(const std::string& path, const EnumResolver& resolver = {})
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::IoFailure, "cannot open protocol file " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return load_protocol(ss.str(), resolver);
}

} // namespace datum

#endif
