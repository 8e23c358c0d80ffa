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

#ifndef DATUM_JSON_VALUE_HPP
#define DATUM_JSON_VALUE_HPP

#include "datum/error.hpp"
#include "datum/refinement.hpp"

#include <json.hpp>

namespace datum {

/// Ints stay integers, floats stay floats, enums become {"enum","entry","value"} objects.
inline nlohmann::json value_to_json(const Value& v)
{
    switch (v.kind()) {
    case ValueKind::Int: return v.as_int();
    case ValueKind::Float: return v.as_float();
    case ValueKind::Bool: return v.as_bool();
    case ValueKind::Str: return v.as_str();
    case ValueKind::Enum:
        return nlohmann::json{{"enum", v.as_enum().enum_name}, {"entry", v.as_enum().entry}, {"value", v.as_enum().value}};
    case ValueKind::Array: {
        auto arr = nlohmann::json::array();
        for (const auto& item : v.as_array()) arr.push_back(value_to_json(item));
        return arr;
    }
    }
    return nullptr;
}

inline Value value_from_json(const nlohmann::json& j)
{
    if (j.is_boolean()) return Value::boolean(j.get<bool>());
    if (j.is_number_unsigned()) {
        const auto u = j.get<std::uint64_t>();
        if (u > static_cast<std::uint64_t>(INT64_MAX)) return Value::real(static_cast<double>(u));
        return Value::integer(static_cast<std::int64_t>(u));
    }
    if (j.is_number_integer()) return Value::integer(j.get<std::int64_t>());
    if (j.is_number_float()) return Value::real(j.get<double>());
    if (j.is_string()) return Value::string(j.get<std::string>());
    if (j.is_object() && j.contains("enum")) {
        return Value::enumeration(j.at("enum").get<std::string>(), j.at("entry").get<std::string>(),
                                  j.at("value").get<std::int64_t>());
    }
    if (j.is_array()) {
        ValueList items;
        for (const auto& e : j) items.push_back(value_from_json(e));
        try {
            return Value::array(std::move(items));
        } catch (const std::invalid_argument& e) {
            throw Error(ErrorCode::ParseError, e.what());
        }
    }
    throw Error(ErrorCode::ParseError, "cannot convert JSON value " + j.dump());
}

inline nlohmann::json bindings_to_json(const Bindings& b)
{
    auto out = nlohmann::json::object();
    for (const auto& [k, v] : b) out[k] = value_to_json(v);
    return out;
}

inline Bindings bindings_from_json(const nlohmann::json& j)
{
    Bindings out;
    for (const auto& [k, v] : j.items()) out.insert_or_assign(k, value_from_json(v));
    return out;
}

} // namespace datum

#endif
