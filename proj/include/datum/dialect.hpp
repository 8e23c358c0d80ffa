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

#ifndef DATUM_DIALECT_HPP
#define DATUM_DIALECT_HPP

#include "datum/crc.hpp"
#include "datum/error.hpp"
#include "datum/refinement.hpp"
#include "datum/refinement_parser.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <json.hpp>

namespace datum {

enum class BaseType { Uint8, Int8, Uint16, Int16, Uint32, Int32, Uint64, Int64, Float, Double, Char };

struct BaseTypeInfo {
    BaseType type;
    std::string_view name;
    std::size_t size;
};

inline constexpr BaseTypeInfo kBaseTypes[] = {
    {BaseType::Uint8, "uint8_t", 1},   {BaseType::Int8, "int8_t", 1},   {BaseType::Uint16, "uint16_t", 2},
    {BaseType::Int16, "int16_t", 2},   {BaseType::Uint32, "uint32_t", 4}, {BaseType::Int32, "int32_t", 4},
    {BaseType::Uint64, "uint64_t", 8}, {BaseType::Int64, "int64_t", 8}, {BaseType::Float, "float", 4},
    {BaseType::Double, "double", 8},   {BaseType::Char, "char", 1},
};

inline const BaseTypeInfo& info(BaseType t) { return kBaseTypes[static_cast<std::size_t>(t)]; }
inline std::string_view type_name(BaseType t) { return info(t).name; }
inline std::size_t type_size(BaseType t) { return info(t).size; }

inline std::optional<BaseType> base_type_from_name(std::string_view name)
{
    if (name == "uint8_t_mavlink_version") {
        return BaseType::Uint8;
    }
    for (const auto& t : kBaseTypes) {
        if (t.name == name) {
            return t.type;
        }
    }
    return std::nullopt;
}

struct FieldSchema {
    std::string name;
    BaseType type = BaseType::Uint8;
    std::size_t array_length = 0; // 0 for scalars
    std::string enum_ref;         // empty when not enum-typed
    bool extension = false;

    [[nodiscard]] std::size_t wire_size() const { return type_size(type) * std::max<std::size_t>(1, array_length); }

    friend bool operator==(const FieldSchema&, const FieldSchema&) = default;
};

/// Stable sort of base fields by element size (largest first); extensions keep declaration order.
inline std::vector<FieldSchema> wire_order(const std::vector<FieldSchema>& fields)
{
    std::vector<FieldSchema> base;
    std::vector<FieldSchema> ext;
    for (const auto& f : fields) {
        (f.extension ? ext : base).push_back(f);
    }
    std::stable_sort(base.begin(), base.end(),
                     [](const FieldSchema& a, const FieldSchema& b) { return type_size(a.type) > type_size(b.type); });
    base.insert(base.end(), ext.begin(), ext.end());
    return base;
}

struct MessageSchema {
    std::uint32_t id = 0;
    std::string name;
    std::vector<FieldSchema> fields;     // declaration order
    std::vector<std::size_t> wire_index; // wire position of fields[i]
    std::vector<std::size_t> offset;     // byte offset of fields[i] in the full payload
    std::uint8_t crc_extra = 0;
    std::size_t payload_length = 0;

    [[nodiscard]] const FieldSchema* field(std::string_view field_name) const
    {
        for (const auto& f : fields) {
            if (f.name == field_name) {
                return &f;
            }
        }
        return nullptr;
    }

    /// Fields in wire order (declaration indices).
    [[nodiscard]] std::vector<std::size_t> wire_sequence() const
    {
        std::vector<std::size_t> seq(fields.size());
        for (std::size_t i = 0; i < fields.size(); ++i) {
            seq[wire_index[i]] = i;
        }
        return seq;
    }

    friend bool operator==(const MessageSchema&, const MessageSchema&) = default;
};

/// Seed byte mixed into every frame checksum of a message, derived from its base-field layout.
inline std::uint8_t compute_crc_extra(const MessageSchema& schema)
{
    Crc16X25 crc;
    crc.add(schema.name);
    crc.add(std::string_view(" "));
    for (const auto& f : wire_order(schema.fields)) {
        if (f.extension) {
            continue;
        }
        crc.add(type_name(f.type));
        crc.add(std::string_view(" "));
        crc.add(f.name);
        crc.add(std::string_view(" "));
        if (f.array_length != 0) {
            crc.add(static_cast<std::uint8_t>(f.array_length));
        }
    }
    const std::uint16_t v = crc.get();
    return static_cast<std::uint8_t>((v & 0xFF) ^ (v >> 8));
}

/// Fills wire_index, offset, payload_length and crc_extra from `fields`.
inline void finalize_layout(MessageSchema& schema)
{
    std::vector<std::size_t> order(schema.fields.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::stable_partition(order.begin(), order.end(), [&](std::size_t i) { return !schema.fields[i].extension; });
    const auto ext_begin = std::find_if(order.begin(), order.end(), [&](std::size_t i) { return schema.fields[i].extension; });
    std::stable_sort(order.begin(), ext_begin, [&](std::size_t a, std::size_t b) {
        return type_size(schema.fields[a].type) > type_size(schema.fields[b].type);
    });
    schema.wire_index.assign(schema.fields.size(), 0);
    schema.offset.assign(schema.fields.size(), 0);
    std::size_t off = 0;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        schema.wire_index[order[pos]] = pos;
        schema.offset[order[pos]] = off;
        off += schema.fields[order[pos]].wire_size();
    }
    schema.payload_length = off;
    schema.crc_extra = compute_crc_extra(schema);
}

struct EnumEntry {
    std::string name;
    std::int64_t value = 0;

    friend bool operator==(const EnumEntry&, const EnumEntry&) = default;
};

struct EnumSchema {
    std::string name;
    bool bitmask = false;
    std::vector<EnumEntry> entries;

    [[nodiscard]] const EnumEntry* by_value(std::int64_t v) const
    {
        for (const auto& e : entries) {
            if (e.value == v) {
                return &e;
            }
        }
        return nullptr;
    }
    [[nodiscard]] const EnumEntry* by_name(std::string_view n) const
    {
        for (const auto& e : entries) {
            if (e.name == n) {
                return &e;
            }
        }
        return nullptr;
    }

    friend bool operator==(const EnumSchema&, const EnumSchema&) = default;
};

/**
 * A fully resolved MAVLink dialect. Immutable after parsing; share it by
 * const reference or shared_ptr.
 */
struct Dialect {
    std::optional<int> version;
    std::optional<int> dialect;
    std::vector<std::string> includes; // every resolved include, in resolution order
    std::map<std::string, EnumSchema, std::less<>> enums;
    std::map<std::uint32_t, MessageSchema> messages;
    std::vector<std::string> warnings; // diagnostics only; not part of the schema

    [[nodiscard]] const MessageSchema* message(std::uint32_t id) const
    {
        auto it = messages.find(id);
        return it == messages.end() ? nullptr : &it->second;
    }

    /// Requires reindex() after `messages` was last modified.
    [[nodiscard]] const MessageSchema* message(std::string_view name) const
    {
        auto it = by_name_.find(name);
        return it == by_name_.end() ? nullptr : message(it->second);
    }

    void reindex()
    {
        by_name_.clear();
        for (const auto& [id, m] : messages) {
            by_name_.emplace(m.name, id);
        }
    }

    [[nodiscard]] const EnumSchema* enumeration(std::string_view name) const
    {
        auto it = enums.find(name);
        return it == enums.end() ? nullptr : &it->second;
    }

    [[nodiscard]] std::optional<std::uint8_t> crc_extra(std::uint32_t id) const
    {
        const auto* m = message(id);
        return m ? std::optional<std::uint8_t>(m->crc_extra) : std::nullopt;
    }

    /// Resolves `ENUM.ENTRY` refinement literals against this dialect.
    [[nodiscard]] EnumResolver resolver() const
    {
        return [this](std::string_view enum_name, std::string_view entry) -> std::optional<Value> {
            const auto* e = enumeration(enum_name);
            if (e == nullptr) {
                return std::nullopt;
            }
            const auto* en = e->by_name(entry);
            if (en == nullptr) {
                return std::nullopt;
            }
            return Value::enumeration(e->name, en->name, en->value);
        };
    }

    friend bool operator==(const Dialect& a, const Dialect& b)
    {
        return a.version == b.version && a.dialect == b.dialect && a.includes == b.includes && a.enums == b.enums &&
               a.messages == b.messages;
    }

private:
    std::map<std::string, std::uint32_t, std::less<>> by_name_;
};

/// Supplies the text of an included dialect file by name, or nullopt.
using IncludeResolver = std::function<std::optional<std::string>(std::string_view name)>;

/// Resolves includes relative to `dir`.
inline IncludeResolver filesystem_resolver(std::filesystem::path dir)
{
    return [dir = std::move(dir)](std::string_view name) -> std::optional<std::string> {
        std::ifstream in(dir / std::string(name), std::ios::binary);
        if (!in) {
            return std::nullopt;
        }
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
}

namespace detail {

using boost::property_tree::ptree;

inline std::string attr(const ptree& node, const char* name)
{
    return node.get<std::string>(std::string("<xmlattr>.") + name, "");
}

inline std::optional<std::int64_t> parse_enum_value(const std::string& text)
{
    if (text.empty()) {
        return std::nullopt;
    }
    try {
        if (auto pow = text.find("**"); pow != std::string::npos) {
            const long long base = std::stoll(text.substr(0, pow), nullptr, 0);
            const long long exp = std::stoll(text.substr(pow + 2), nullptr, 0);
            long long v = 1;
            for (long long i = 0; i < exp; ++i) {
                v *= base;
            }
            return v;
        }
        std::size_t used = 0;
        const long long v = std::stoll(text, &used, 0);
        if (used != text.size()) {
            return std::nullopt;
        }
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

class DialectParser {
public:
    explicit DialectParser(const IncludeResolver& resolver) : resolver_(resolver) {}

    void parse_document(const std::string& xml_text, const std::string& doc_name)
    {
        ptree tree;
        try {
            std::istringstream in(xml_text);
            boost::property_tree::read_xml(in, tree);
        } catch (const boost::property_tree::xml_parser_error& e) {
            throw Error(ErrorCode::MalformedXml, doc_name + ": " + e.message());
        }
        auto root_it = tree.find("mavlink");
        if (root_it == tree.not_found()) {
            throw Error(ErrorCode::MalformedXml, doc_name + ": missing <mavlink> root element");
        }
        const ptree& root = root_it->second;

        // Includes first, so the including document's definitions extend them.
        for (const auto& [tag, child] : root) {
            if (tag == "include") {
                include(child.get_value<std::string>(), doc_name);
            }
        }
        const bool top_level = depth_ == 0;
        for (const auto& [tag, child] : root) {
            if (tag == "include" || tag == "<xmlcomment>" || tag == "<xmlattr>") {
                continue;
            }
            if (tag == "version") {
                if (top_level || !out_.version) {
                    out_.version = parse_int(child.get_value<std::string>(), doc_name, "version");
                }
            } else if (tag == "dialect") {
                if (top_level || !out_.dialect) {
                    out_.dialect = parse_int(child.get_value<std::string>(), doc_name, "dialect");
                }
            } else if (tag == "enums") {
                parse_enums(child, doc_name);
            } else if (tag == "messages") {
                parse_messages(child, doc_name);
            } else {
                warn(doc_name, "ignored element <" + tag + ">");
            }
        }
    }

    Dialect take()
    {
        out_.reindex();
        return std::move(out_);
    }

private:
    void warn(const std::string& doc, const std::string& what) { out_.warnings.push_back(doc + ": " + what); }

    static int parse_int(const std::string& text, const std::string& doc, const char* what)
    {
        auto v = parse_enum_value(text);
        if (!v) {
            throw Error(ErrorCode::MalformedXml, doc + ": bad <" + what + "> value '" + text + "'");
        }
        return static_cast<int>(*v);
    }

    void include(const std::string& name, const std::string& from)
    {
        if (done_.count(name) != 0 || active_.count(name) != 0) {
            return;
        }
        auto text = resolver_ ? resolver_(name) : std::nullopt;
        if (!text) {
            throw Error(ErrorCode::UnresolvedInclude, from + ": cannot resolve include '" + name + "'");
        }
        active_.insert(name);
        ++depth_;
        parse_document(*text, name);
        --depth_;
        active_.erase(name);
        done_.insert(name);
        out_.includes.push_back(name);
    }

    void parse_enums(const ptree& enums, const std::string& doc)
    {
        for (const auto& [tag, e] : enums) {
            if (tag == "<xmlcomment>" || tag == "<xmlattr>") {
                continue;
            }
            if (tag != "enum") {
                warn(doc, "ignored element <" + tag + "> in <enums>");
                continue;
            }
            const std::string name = attr(e, "name");
            if (name.empty()) {
                throw Error(ErrorCode::MalformedXml, doc + ": enum without a name");
            }
            EnumSchema& schema = out_.enums[name];
            schema.name = name;
            if (attr(e, "bitmask") == "true") {
                schema.bitmask = true;
            }
            std::int64_t next = schema.entries.empty() ? 0 : schema.entries.back().value + 1;
            for (const auto& [etag, entry] : e) {
                if (etag != "entry") {
                    if (etag != "description" && etag != "deprecated" && etag != "wip" && etag != "<xmlattr>" &&
                        etag != "<xmlcomment>") {
                        warn(doc, "ignored element <" + etag + "> in enum " + name);
                    }
                    continue;
                }
                EnumEntry en;
                en.name = attr(entry, "name");
                const std::string value = attr(entry, "value");
                if (value.empty()) {
                    en.value = next;
                } else if (auto v = parse_enum_value(value)) {
                    en.value = *v;
                } else {
                    throw Error(ErrorCode::MalformedXml, doc + ": bad value '" + value + "' for " + en.name);
                }
                next = en.value + 1;
                if (schema.by_name(en.name) != nullptr) {
                    throw Error(ErrorCode::MalformedXml, doc + ": duplicate entry " + en.name + " in enum " + name);
                }
                if (schema.by_value(en.value) != nullptr) {
                    throw Error(ErrorCode::MalformedXml,
                                doc + ": duplicate value " + std::to_string(en.value) + " in enum " + name);
                }
                schema.entries.push_back(std::move(en));
            }
        }
    }

    void parse_messages(const ptree& messages, const std::string& doc)
    {
        for (const auto& [tag, m] : messages) {
            if (tag == "<xmlcomment>" || tag == "<xmlattr>") {
                continue;
            }
            if (tag != "message") {
                warn(doc, "ignored element <" + tag + "> in <messages>");
                continue;
            }
            MessageSchema schema;
            schema.name = attr(m, "name");
            auto id = parse_enum_value(attr(m, "id"));
            if (schema.name.empty() || !id || *id < 0 || *id > 0xFFFFFF) {
                throw Error(ErrorCode::MalformedXml, doc + ": message needs a name and an id in 0..16777215");
            }
            schema.id = static_cast<std::uint32_t>(*id);
            bool in_extensions = false;
            std::set<std::string> seen;
            for (const auto& [ftag, f] : m) {
                if (ftag == "extensions") {
                    in_extensions = true;
                    continue;
                }
                if (ftag != "field") {
                    if (ftag != "description" && ftag != "wip" && ftag != "deprecated" && ftag != "superseded" &&
                        ftag != "<xmlattr>" && ftag != "<xmlcomment>") {
                        warn(doc, "ignored element <" + ftag + "> in message " + schema.name);
                    }
                    continue;
                }
                schema.fields.push_back(parse_field(f, schema.name, in_extensions));
                if (!seen.insert(schema.fields.back().name).second) {
                    throw Error(ErrorCode::MalformedXml,
                                doc + ": duplicate field '" + schema.fields.back().name + "' in " + schema.name);
                }
            }
            finalize_layout(schema);
            if (schema.payload_length > 255) {
                throw Error(ErrorCode::MalformedXml, doc + ": payload of " + schema.name + " exceeds 255 bytes");
            }
            if (out_.messages.count(schema.id) != 0) {
                throw Error(ErrorCode::DuplicateMessageId,
                            doc + ": id " + std::to_string(schema.id) + " (" + schema.name + ") already defined by " +
                                out_.messages[schema.id].name);
            }
            if (!names_.insert(schema.name).second) {
                throw Error(ErrorCode::MalformedXml, doc + ": duplicate message name " + schema.name);
            }
            out_.messages.emplace(schema.id, std::move(schema));
        }
    }

    static FieldSchema parse_field(const ptree& f, const std::string& msg, bool extension)
    {
        FieldSchema field;
        field.name = attr(f, "name");
        field.enum_ref = attr(f, "enum");
        field.extension = extension;
        std::string type = attr(f, "type");
        if (field.name.empty() || type.empty()) {
            throw Error(ErrorCode::MalformedXml, "field without name or type in " + msg);
        }
        if (auto lb = type.find('['); lb != std::string::npos) {
            const auto rb = type.find(']', lb);
            auto len = rb == std::string::npos ? std::nullopt : parse_enum_value(type.substr(lb + 1, rb - lb - 1));
            if (!len || *len < 1 || *len > 255) {
                throw Error(ErrorCode::UnknownFieldType, "bad array type '" + type + "' in " + msg);
            }
            field.array_length = static_cast<std::size_t>(*len);
            type = type.substr(0, lb);
        }
        auto base = base_type_from_name(type);
        if (!base) {
            throw Error(ErrorCode::UnknownFieldType, "'" + type + "' in " + msg + "." + field.name);
        }
        field.type = *base;
        return field;
    }

    const IncludeResolver& resolver_;
    Dialect out_;
    std::set<std::string> done_;
    std::set<std::string> active_;
    std::set<std::string> names_;
    int depth_ = 0;
};

} // namespace detail

/**
 * Parses a MAVLink dialect XML document, pulling includes through `resolver`.
 * Unknown elements are skipped and listed in Dialect::warnings.
 */
inline Dialect parse_dialect(const std::string& xml_text, const IncludeResolver& resolver = {})
{
    detail::DialectParser parser(resolver);
    parser.parse_document(xml_text, "<root>");
    return parser.take();
}

inline Dialect load_dialect_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_dialect(ss.str(), filesystem_resolver(path.parent_path()));
}

/*
 * Canonical schema document
 */

inline constexpr std::string_view kSchemaFormat = "datum-schema/1";

inline nlohmann::json schema_json(const Dialect& d)
{
    using nlohmann::json;
    json doc;
    doc["format"] = kSchemaFormat;
    doc["version"] = d.version ? json(*d.version) : json(nullptr);
    doc["dialect"] = d.dialect ? json(*d.dialect) : json(nullptr);
    doc["includes"] = d.includes;
    json enums = json::object();
    for (const auto& [name, e] : d.enums) {
        json entries = json::array();
        for (const auto& en : e.entries) {
            entries.push_back({{"name", en.name}, {"value", en.value}});
        }
        enums[name] = {{"bitmask", e.bitmask}, {"entries", std::move(entries)}};
    }
    doc["enums"] = std::move(enums);
    json messages = json::array();
    for (const auto& [id, m] : d.messages) {
        json fields = json::array();
        for (std::size_t i = 0; i < m.fields.size(); ++i) {
            const auto& f = m.fields[i];
            fields.push_back({{"name", f.name},
                              {"type", type_name(f.type)},
                              {"array_length", f.array_length},
                              {"enum", f.enum_ref},
                              {"extension", f.extension},
                              {"wire_index", m.wire_index[i]},
                              {"offset", m.offset[i]}});
        }
        messages.push_back({{"id", m.id},
                            {"name", m.name},
                            {"crc_extra", m.crc_extra},
                            {"payload_length", m.payload_length},
                            {"fields", std::move(fields)}});
    }
    doc["messages"] = std::move(messages);
    return doc;
}

/// Writes the canonical schema document: sorted keys, fixed indentation, trailing newline.
inline void emit_schema(const Dialect& d, std::ostream& out)
{
    out << schema_json(d).dump(1) << '\n';
    if (!out) {
        throw Error(ErrorCode::IoFailure, "schema write failed");
    }
}

inline std::string emit_schema(const Dialect& d)
{
    std::ostringstream ss;
    emit_schema(d, ss);
    return ss.str();
}

/// Reads a document produced by emit_schema() back into a Dialect. Layout is recomputed and checked.
inline Dialect load_schema(const std::string& text)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("schema document: ") + e.what());
    }
    if (!doc.is_object() || doc.value("format", "") != kSchemaFormat) {
        throw Error(ErrorCode::ParseError, "not a " + std::string(kSchemaFormat) + " document");
    }
    try {
        Dialect d;
        if (!doc["version"].is_null()) {
            d.version = doc["version"].get<int>();
        }
        if (!doc["dialect"].is_null()) {
            d.dialect = doc["dialect"].get<int>();
        }
        d.includes = doc["includes"].get<std::vector<std::string>>();
        for (const auto& [name, e] : doc["enums"].items()) {
            EnumSchema schema{name, e.at("bitmask").get<bool>(), {}};
            for (const auto& en : e.at("entries")) {
                schema.entries.push_back({en.at("name").get<std::string>(), en.at("value").get<std::int64_t>()});
            }
            d.enums.emplace(name, std::move(schema));
        }
        for (const auto& m : doc["messages"]) {
            MessageSchema schema;
            schema.id = m.at("id").get<std::uint32_t>();
            schema.name = m.at("name").get<std::string>();
            for (const auto& f : m.at("fields")) {
                FieldSchema field;
                field.name = f.at("name").get<std::string>();
                auto t = base_type_from_name(f.at("type").get<std::string>());
                if (!t) {
                    throw Error(ErrorCode::UnknownFieldType, f.at("type").get<std::string>());
                }
                field.type = *t;
                field.array_length = f.at("array_length").get<std::size_t>();
                field.enum_ref = f.at("enum").get<std::string>();
                field.extension = f.at("extension").get<bool>();
                schema.fields.push_back(std::move(field));
            }
            finalize_layout(schema);
            if (schema.crc_extra != m.at("crc_extra").get<int>()) {
                throw Error(ErrorCode::ParseError, "crc_extra mismatch for " + schema.name);
            }
            d.messages.emplace(schema.id, std::move(schema));
        }
        d.reindex();
        return d;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("schema document: ") + e.what());
    }
}

/// Loads either a dialect XML (includes resolved next to it) or a schema document, by extension.
inline Dialect load_dialect_or_schema(const std::filesystem::path& path)
{
    if (path.extension() == ".xml") {
        return load_dialect_file(path);
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_schema(ss.str());
}

} // namespace datum

#endif // DATUM_DIALECT_HPP
