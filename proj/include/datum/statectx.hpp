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

#ifndef DATUM_STATECTX_HPP
#define DATUM_STATECTX_HPP

#include "datum/error.hpp"
#include "datum/refinement.hpp"
#include "datum/session.hpp"
#include "datum/wire.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

namespace datum {

template <typename T>
struct Timed {
    T value{};
    double time = 0;

    friend bool operator==(const Timed&, const Timed&) = default;
};

struct VehicleState {
    std::optional<Timed<bool>> motors;
    std::optional<Timed<std::string>> mode;
    std::optional<Timed<double>> alt;  // m, relative
    std::optional<Timed<double>> v_z;  // m/s, positive up

    friend bool operator==(const VehicleState&, const VehicleState&) = default;
};

using ParamTable = std::map<std::string, Timed<double>, std::less<>>;

/// Autopilot-specific decoding of HEARTBEAT.custom_mode.
struct ModeMap {
    std::map<std::int64_t, std::string> autopilots;                             // MAV_AUTOPILOT value -> table name
    std::map<std::string, std::map<std::int64_t, std::string>> tables;
    std::string fallback;                                                       // table used for unlisted autopilots, may be empty

    [[nodiscard]] std::optional<std::string> decode(std::int64_t autopilot, std::int64_t custom_mode) const
    {
        auto a = autopilots.find(autopilot);
        const std::string& table_name = a != autopilots.end() ? a->second : fallback;
        auto t = tables.find(table_name);
        if (t == tables.end()) {
            return std::nullopt;
        }
        if (auto m = t->second.find(custom_mode); m != t->second.end()) {
            return m->second;
        }
        // PX4 packs the main mode in bits 16..23; sub modes refine it.
        if (const std::int64_t main = custom_mode & 0x00FF0000; main != 0) {
            if (auto m = t->second.find(main); m != t->second.end()) {
                return m->second;
            }
        }
        return std::nullopt;
    }

    friend bool operator==(const ModeMap&, const ModeMap&) = default;
};

inline ModeMap default_mode_map()
{
    ModeMap m;
    m.autopilots = {{3, "ardupilot"}, {12, "px4"}};
    m.tables["ardupilot"] = {{0, "STABILIZE"}, {1, "ACRO"},      {2, "ALT_HOLD"},  {3, "AUTO"},     {4, "GUIDED"},
                             {5, "LOITER"},    {6, "RTL"},       {7, "CIRCLE"},    {9, "LAND"},     {11, "DRIFT"},
                             {13, "SPORT"},    {14, "FLIP"},     {15, "AUTOTUNE"}, {16, "POSHOLD"}, {17, "BRAKE"},
                             {18, "THROW"},    {19, "AVOID_ADSB"}, {20, "GUIDED_NOGPS"}, {21, "SMART_RTL"},
                             {22, "FLOWHOLD"}, {23, "FOLLOW"},   {24, "ZIGZAG"},   {25, "SYSTEMID"}, {26, "AUTOROTATE"},
                             {27, "AUTO_RTL"}};
    auto px4 = [](std::int64_t main) { return main << 16; };
    m.tables["px4"] = {{px4(1), "MANUAL"}, {px4(2), "ALTCTL"},   {px4(3), "POSCTL"},     {px4(4), "AUTO"},
                       {px4(5), "ACRO"},   {px4(6), "OFFBOARD"}, {px4(7), "STABILIZED"}, {px4(8), "RATTITUDE"}};
    return m;
}

inline ModeMap mode_map_from_json(const nlohmann::json& j)
{
    ModeMap m;
    try {
        for (const auto& [k, v] : j.at("autopilots").items()) m.autopilots[std::stoll(k)] = v.get<std::string>();
        for (const auto& [name, table] : j.at("modes").items()) {
            auto& t = m.tables[name];
            for (const auto& [k, v] : table.items()) t[std::stoll(k, nullptr, 0)] = v.get<std::string>();
        }
        m.fallback = j.value("fallback", std::string());
    } catch (const std::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("mode map: ") + e.what());
    }
    return m;
}

inline nlohmann::json mode_map_to_json(const ModeMap& m)
{
    nlohmann::json j;
    for (const auto& [k, v] : m.autopilots) j["autopilots"][std::to_string(k)] = v;
    for (const auto& [name, table] : m.tables) {
        for (const auto& [k, v] : table) j["modes"][name][std::to_string(k)] = v;
    }
    j["fallback"] = m.fallback;
    return j;
}

struct StateSettings {
    double max_age = 3.0; // seconds, dynamic state only
    ModeMap modes = default_mode_map();
    std::string vehicle_role = "UAV";
    std::string gcs_role = "GCS";
};

struct StateContext {
    StateSettings settings;
    VehicleState vehicle;
    ParamTable params;
    std::size_t warnings = 0;

    friend bool operator==(const StateContext& a, const StateContext& b)
    {
        return a.vehicle == b.vehicle && a.params == b.params && a.warnings == b.warnings;
    }
};

namespace detail {

inline std::optional<double> as_number(const Value* v)
{
    if (v == nullptr) return std::nullopt;
    if (v->is_int()) return static_cast<double>(v->as_int());
    if (v->is_enum()) return static_cast<double>(v->as_enum().value);
    if (v->is_float()) return v->as_float();
    return std::nullopt;
}

inline std::optional<std::int64_t> as_integer(const Value* v)
{
    if (v == nullptr) return std::nullopt;
    if (v->is_int()) return v->as_int();
    if (v->is_enum()) return v->as_enum().value;
    return std::nullopt;
}

template <typename T>
void stamp(std::optional<Timed<T>>& slot, T value, double now)
{
    const double t = slot ? std::max(slot->time, now) : now;
    slot = Timed<T>{std::move(value), t};
}

inline void set_param(StateContext& ctx, const FieldMap& f, double now)
{
    const Value* id = f.get("param_id");
    auto value = as_number(f.get("param_value"));
    if (id == nullptr || !id->is_str() || id->as_str().empty() || id->as_str().size() > 16 || !value ||
        !std::isfinite(*value)) {
        ++ctx.warnings;
        return;
    }
    auto it = ctx.params.find(id->as_str());
    const double t = it != ctx.params.end() ? std::max(it->second.time, now) : now;
    ctx.params.insert_or_assign(id->as_str(), Timed<double>{*value, t});
}

} // namespace detail

/// Applies one observed message. PARAM_SET only counts when the caller reports it as accepted.
inline void update_from_message(StateContext& ctx, const Direction& dir, std::string_view label, const FieldMap& f,
                                double now, bool param_set_accepted = false)
{
    const bool from_vehicle = dir.from == ctx.settings.vehicle_role;
    if (label == "HEARTBEAT" && from_vehicle) {
        auto base_mode = detail::as_integer(f.get("base_mode"));
        auto custom = detail::as_integer(f.get("custom_mode"));
        auto autopilot = detail::as_integer(f.get("autopilot"));
        if (!base_mode || !custom || !autopilot) {
            ++ctx.warnings;
            return;
        }
        detail::stamp(ctx.vehicle.motors, (*base_mode & 0x80) != 0, now);
        if (auto name = ctx.settings.modes.decode(*autopilot, *custom)) {
            detail::stamp(ctx.vehicle.mode, *name, now);
        } else {
            // An undecodable mode must not look like a permitted one.
            ctx.vehicle.mode.reset();
            ++ctx.warnings;
        }
    } else if (label == "GLOBAL_POSITION_INT" && from_vehicle) {
        auto rel = detail::as_number(f.get("relative_alt"));
        auto vz = detail::as_number(f.get("vz"));
        if (!rel || !vz) {
            ++ctx.warnings;
            return;
        }
        detail::stamp(ctx.vehicle.alt, *rel / 1000.0, now);
        detail::stamp(ctx.vehicle.v_z, -*vz / 100.0, now);
    } else if (label == "PARAM_VALUE" && from_vehicle) {
        detail::set_param(ctx, f, now);
    } else if (label == "PARAM_SET" && dir.from == ctx.settings.gcs_role && param_set_accepted) {
        detail::set_param(ctx, f, now);
    }
}

/// Fresh value of a state variable or parameter; nullopt when unknown or stale.
inline std::optional<Value> lookup_state(const StateContext& ctx, std::string_view name, double now,
                                         std::optional<double> max_age = std::nullopt)
{
    const double age = max_age.value_or(ctx.settings.max_age);
    auto fresh = [&](const auto& slot) { return slot && now - slot->time <= age; };
    if (name == "motors") {
        return fresh(ctx.vehicle.motors) ? std::optional(Value::boolean(ctx.vehicle.motors->value)) : std::nullopt;
    }
    if (name == "mode") {
        return fresh(ctx.vehicle.mode) ? std::optional(Value::string(ctx.vehicle.mode->value)) : std::nullopt;
    }
    if (name == "alt") {
        return fresh(ctx.vehicle.alt) ? std::optional(Value::real(ctx.vehicle.alt->value)) : std::nullopt;
    }
    if (name == "v_z") {
        return fresh(ctx.vehicle.v_z) ? std::optional(Value::real(ctx.vehicle.v_z->value)) : std::nullopt;
    }
    if (auto it = ctx.params.find(name); it != ctx.params.end()) {
        return Value::real(it->second.value);
    }
    return std::nullopt;
}

/// Every available name at `now`, for use as the externals layer of one evaluation.
inline Bindings state_snapshot(const StateContext& ctx, double now)
{
    Bindings out;
    for (const auto& [name, entry] : ctx.params) out.insert_or_assign(name, Value::real(entry.value));
    for (const char* name : {"motors", "mode", "alt", "v_z"}) {
        if (auto v = lookup_state(ctx, name, now)) out.insert_or_assign(name, *v);
    }
    return out;
}

inline StateSettings load_state_settings(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::IoFailure, "cannot open state settings " + path);
    }
    StateSettings s;
    try {
        const auto j = nlohmann::json::parse(in);
        s.max_age = j.value("max_age", s.max_age);
        if (j.contains("autopilots") || j.contains("modes")) s.modes = mode_map_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("state settings: ") + e.what());
    }
    return s;
}

} // namespace datum

#endif
