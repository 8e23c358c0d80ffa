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

#ifndef DATUM_WIRE_HPP
#define DATUM_WIRE_HPP

#include "datum/crc.hpp"
#include "datum/dialect.hpp"
#include "datum/error.hpp"
#include "datum/refinement.hpp"

#include <bit>
#include <cfloat>
#include <cmath>
#include <cstring>
#include <deque>
#include <functional>
#include <span>
#include <variant>
#include <vector>

namespace datum {

/*
 * MAVLink v2 framing
 */

inline constexpr std::uint8_t kMagicV2 = 0xFD;
inline constexpr std::size_t kHeaderLength = 10;
inline constexpr std::size_t kChecksumLength = 2;
inline constexpr std::size_t kMaxPayload = 255;

struct Frame {
    std::uint8_t magic = kMagicV2;
    std::uint8_t payload_len = 0;
    std::uint8_t incompat_flags = 0;
    std::uint8_t compat_flags = 0;
    std::uint8_t seq = 0;
    std::uint8_t sys_id = 0;
    std::uint8_t comp_id = 0;
    std::uint32_t msg_id = 0; // 24 bits on the wire
    std::vector<std::uint8_t> payload;
    std::uint16_t checksum = 0;
    /// False for message ids the loaded dialect does not know (no crc_extra to check against).
    bool checksum_verified = false;

    friend bool operator==(const Frame&, const Frame&) = default;
};

/// Serializes exactly the frame as held, without re-truncating or recomputing the checksum.
inline std::vector<std::uint8_t> frame_bytes(const Frame& f)
{
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderLength + f.payload.size() + kChecksumLength);
    out.push_back(f.magic);
    out.push_back(f.payload_len);
    out.push_back(f.incompat_flags);
    out.push_back(f.compat_flags);
    out.push_back(f.seq);
    out.push_back(f.sys_id);
    out.push_back(f.comp_id);
    out.push_back(static_cast<std::uint8_t>(f.msg_id & 0xFF));
    out.push_back(static_cast<std::uint8_t>((f.msg_id >> 8) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((f.msg_id >> 16) & 0xFF));
    out.insert(out.end(), f.payload.begin(), f.payload.end());
    out.push_back(static_cast<std::uint8_t>(f.checksum & 0xFF));
    out.push_back(static_cast<std::uint8_t>(f.checksum >> 8));
    return out;
}

/// Checksum over header (after magic) and payload, finished with crc_extra.
inline std::uint16_t frame_checksum(std::span<const std::uint8_t> header_and_payload, std::uint8_t crc_extra)
{
    Crc16X25 crc;
    crc.add(header_and_payload.subspan(1));
    crc.add(crc_extra);
    return crc.get();
}

/// Drops trailing zero bytes, keeping at least one byte.
inline std::vector<std::uint8_t> truncate_payload(std::vector<std::uint8_t> payload)
{
    while (payload.size() > 1 && payload.back() == 0) {
        payload.pop_back();
    }
    if (payload.empty()) {
        payload.push_back(0);
    }
    return payload;
}

inline std::vector<std::uint8_t> encode_frame(std::uint32_t msg_id, std::span<const std::uint8_t> payload,
                                              std::uint8_t seq, std::uint8_t sys_id, std::uint8_t comp_id,
                                              std::uint8_t crc_extra)
{
    auto body = truncate_payload(std::vector<std::uint8_t>(payload.begin(), payload.end()));
    if (body.size() > kMaxPayload) {
        throw Error(ErrorCode::PayloadTooLong, std::to_string(body.size()) + " payload bytes");
    }
    if (msg_id > 0xFFFFFF) {
        throw Error(ErrorCode::InvalidParams, "message id exceeds 24 bits");
    }
    Frame f;
    f.payload_len = static_cast<std::uint8_t>(body.size());
    f.seq = seq;
    f.sys_id = sys_id;
    f.comp_id = comp_id;
    f.msg_id = msg_id;
    f.payload = std::move(body);
    auto bytes = frame_bytes(f);
    const auto sum = frame_checksum(std::span(bytes).first(bytes.size() - kChecksumLength), crc_extra);
    bytes[bytes.size() - 2] = static_cast<std::uint8_t>(sum & 0xFF);
    bytes[bytes.size() - 1] = static_cast<std::uint8_t>(sum >> 8);
    return bytes;
}

struct NeedMoreBytes {
    friend bool operator==(const NeedMoreBytes&, const NeedMoreBytes&) = default;
};

enum class ResyncReason { Garbage, ChecksumMismatch, UnsupportedIncompatFlags };

struct Resync {
    std::size_t skipped = 0;
    ResyncReason reason = ResyncReason::Garbage;

    friend bool operator==(const Resync&, const Resync&) = default;
};

using DecodeResult = std::variant<Frame, NeedMoreBytes, Resync>;

using CrcExtraLookup = std::function<std::optional<std::uint8_t>(std::uint32_t msg_id)>;

/**
 * Streaming MAVLink v2 deframer. Feed arbitrary chunks, then call next()
 * until it returns NeedMoreBytes. v1 frames, garbage, signed frames and
 * frames failing their checksum are skipped and reported as Resync.
 */
class FrameDecoder {
public:
    explicit FrameDecoder(CrcExtraLookup lookup) : lookup_(std::move(lookup)) {}

    void feed(std::span<const std::uint8_t> bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }

    [[nodiscard]] std::size_t buffered() const noexcept { return buf_.size(); }
    void reset() { buf_.clear(); }

    DecodeResult next()
    {
        if (buf_.empty()) {
            return NeedMoreBytes{};
        }
        if (buf_.front() != kMagicV2) {
            return skip_to_magic(0, ResyncReason::Garbage);
        }
        if (buf_.size() < kHeaderLength) {
            return NeedMoreBytes{};
        }
        if (buf_[2] != 0) {
            return skip_to_magic(1, ResyncReason::UnsupportedIncompatFlags);
        }
        const std::size_t len = buf_[1];
        const std::size_t total = kHeaderLength + len + kChecksumLength;
        if (buf_.size() < total) {
            return NeedMoreBytes{};
        }
        Frame f;
        f.payload_len = buf_[1];
        f.incompat_flags = buf_[2];
        f.compat_flags = buf_[3];
        f.seq = buf_[4];
        f.sys_id = buf_[5];
        f.comp_id = buf_[6];
        f.msg_id = static_cast<std::uint32_t>(buf_[7]) | (static_cast<std::uint32_t>(buf_[8]) << 8) |
                   (static_cast<std::uint32_t>(buf_[9]) << 16);
        f.payload.assign(buf_.begin() + kHeaderLength, buf_.begin() + static_cast<std::ptrdiff_t>(kHeaderLength + len));
        f.checksum = static_cast<std::uint16_t>(buf_[total - 2] | (buf_[total - 1] << 8));

        if (auto extra = lookup_ ? lookup_(f.msg_id) : std::nullopt) {
            Crc16X25 crc;
            for (std::size_t i = 1; i < kHeaderLength + len; ++i) {
                crc.add(buf_[i]);
            }
            crc.add(*extra);
            if (crc.get() != f.checksum) {
                return skip_to_magic(1, ResyncReason::ChecksumMismatch);
            }
            f.checksum_verified = true;
        }
        buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(total));
        return f;
    }

private:
    Resync skip_to_magic(std::size_t from, ResyncReason reason)
    {
        std::size_t i = from;
        while (i < buf_.size() && buf_[i] != kMagicV2) {
            ++i;
        }
        buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(i));
        return Resync{i, reason};
    }

    CrcExtraLookup lookup_;
    std::deque<std::uint8_t> buf_;
};

inline CrcExtraLookup crc_lookup(const Dialect& d)
{
    return [&d](std::uint32_t id) { return d.crc_extra(id); };
}

/// One-shot decode of a complete frame buffer; nullopt when the bytes do not hold exactly one valid frame.
inline std::optional<Frame> decode_frame(std::span<const std::uint8_t> bytes, const CrcExtraLookup& lookup)
{
    FrameDecoder dec(lookup);
    dec.feed(bytes);
    auto r = dec.next();
    if (auto* f = std::get_if<Frame>(&r); f != nullptr && dec.buffered() == 0) {
        return std::move(*f);
    }
    return std::nullopt;
}

/*
 * Payload codec
 */

/// Decoded payload: every schema field in declaration order.
struct FieldMap {
    std::uint32_t msg_id = 0;
    std::string msg_name;
    std::vector<std::pair<std::string, Value>> fields;
    std::vector<std::string> warnings;

    [[nodiscard]] const Value* get(std::string_view name) const
    {
        for (const auto& [k, v] : fields) {
            if (k == name) {
                return &v;
            }
        }
        return nullptr;
    }

    void set(const std::string& name, Value v)
    {
        for (auto& [k, old] : fields) {
            if (k == name) {
                old = std::move(v);
                return;
            }
        }
        fields.emplace_back(name, std::move(v));
    }

    friend bool operator==(const FieldMap& a, const FieldMap& b)
    {
        return a.msg_id == b.msg_id && a.msg_name == b.msg_name && a.fields == b.fields;
    }
};

namespace detail {

template <typename T>
T read_le(const std::uint8_t* p)
{
    T v{};
    std::memcpy(&v, p, sizeof(T)); // host is little-endian (checked below)
    return v;
}

template <typename T>
void write_le(std::uint8_t* p, T v)
{
    std::memcpy(p, &v, sizeof(T));
}

static_assert(std::endian::native == std::endian::little, "payload codec assumes a little-endian host");

inline Value read_scalar(BaseType t, const std::uint8_t* p, std::vector<std::string>& warnings, const std::string& name)
{
    switch (t) {
    case BaseType::Uint8: return Value::integer(read_le<std::uint8_t>(p));
    case BaseType::Int8: return Value::integer(read_le<std::int8_t>(p));
    case BaseType::Uint16: return Value::integer(read_le<std::uint16_t>(p));
    case BaseType::Int16: return Value::integer(read_le<std::int16_t>(p));
    case BaseType::Uint32: return Value::integer(read_le<std::uint32_t>(p));
    case BaseType::Int32: return Value::integer(read_le<std::int32_t>(p));
    case BaseType::Int64: return Value::integer(read_le<std::int64_t>(p));
    case BaseType::Uint64: {
        const auto v = read_le<std::uint64_t>(p);
        if (v > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
            warnings.push_back(name + ": uint64 value beyond int64 range decoded as float");
            return Value::real(static_cast<double>(v));
        }
        return Value::integer(static_cast<std::int64_t>(v));
    }
    case BaseType::Float: return Value::real(read_le<float>(p));
    case BaseType::Double: return Value::real(read_le<double>(p));
    case BaseType::Char: {
        const char c = static_cast<char>(*p);
        return Value::string(c == 0 ? std::string() : std::string(1, c));
    }
    }
    return Value::integer(0);
}

inline std::optional<std::int64_t> integral_of(const Value& v)
{
    if (v.is_int()) {
        return v.as_int();
    }
    if (v.is_enum()) {
        return v.as_enum().value;
    }
    return std::nullopt;
}

inline void write_scalar(BaseType t, std::uint8_t* p, const Value& v, const std::string& name)
{
    auto out_of_range = [&](const std::string& why) { return Error(ErrorCode::FieldOutOfRange, name + ": " + why); };
    auto ranged = [&](auto tag) {
        using T = decltype(tag);
        auto i = integral_of(v);
        if (!i) {
            throw out_of_range("expected an integer, got " + std::string(to_string(v.kind())));
        }
        bool fits = false;
        if constexpr (std::is_signed_v<T>) {
            fits = *i >= std::numeric_limits<T>::min() && *i <= std::numeric_limits<T>::max();
        } else {
            fits = *i >= 0 && static_cast<std::uint64_t>(*i) <= std::numeric_limits<T>::max();
        }
        if (!fits) {
            throw out_of_range(std::to_string(*i) + " outside " + std::string(type_name(t)));
        }
        write_le<T>(p, static_cast<T>(*i));
    };
    switch (t) {
    case BaseType::Uint8: ranged(std::uint8_t{}); return;
    case BaseType::Int8: ranged(std::int8_t{}); return;
    case BaseType::Uint16: ranged(std::uint16_t{}); return;
    case BaseType::Int16: ranged(std::int16_t{}); return;
    case BaseType::Uint32: ranged(std::uint32_t{}); return;
    case BaseType::Int32: ranged(std::int32_t{}); return;
    case BaseType::Int64: ranged(std::int64_t{}); return;
    case BaseType::Uint64: {
        if (v.is_float()) {
            const double d = v.as_float();
            if (!(d >= 0.0 && d < 18446744073709551616.0) || std::floor(d) != d) {
                throw out_of_range("not representable as uint64");
            }
            write_le<std::uint64_t>(p, static_cast<std::uint64_t>(d));
            return;
        }
        ranged(std::uint64_t{});
        return;
    }
    case BaseType::Float:
    case BaseType::Double: {
        double d = 0;
        if (v.is_float()) {
            d = v.as_float();
        } else if (v.is_int()) {
            d = static_cast<double>(v.as_int());
        } else {
            throw out_of_range("expected a number, got " + std::string(to_string(v.kind())));
        }
        if (t == BaseType::Float) {
            if (std::isfinite(d) && std::fabs(d) > FLT_MAX) {
                throw out_of_range("outside float32 range");
            }
            write_le<float>(p, static_cast<float>(d));
        } else {
            write_le<double>(p, d);
        }
        return;
    }
    case BaseType::Char: {
        if (!v.is_str() || v.as_str().size() > 1) {
            throw out_of_range("expected a single character");
        }
        *p = v.as_str().empty() ? 0 : static_cast<std::uint8_t>(v.as_str()[0]);
        return;
    }
    }
}

} // namespace detail

/**
 * Little-endian extraction in wire order. Bytes past the end of `payload`
 * (v2 truncation) read as zero. Enum-typed fields become EnumV when the value
 * names an entry; otherwise IntV plus a warning. Bitmask enums stay IntV.
 */
inline FieldMap decode_payload(const Dialect& dialect, const MessageSchema& schema, std::span<const std::uint8_t> payload)
{
    std::vector<std::uint8_t> full(std::max(schema.payload_length, payload.size()), 0);
    std::copy(payload.begin(), payload.end(), full.begin());

    FieldMap out;
    out.msg_id = schema.id;
    out.msg_name = schema.name;
    out.fields.reserve(schema.fields.size());
    for (std::size_t i = 0; i < schema.fields.size(); ++i) {
        const auto& f = schema.fields[i];
        const std::uint8_t* p = full.data() + schema.offset[i];
        if (f.array_length == 0) {
            Value v = detail::read_scalar(f.type, p, out.warnings, f.name);
            if (!f.enum_ref.empty() && v.is_int()) {
                const EnumSchema* e = dialect.enumeration(f.enum_ref);
                if (e != nullptr && !e->bitmask) {
                    if (const auto* entry = e->by_value(v.as_int())) {
                        v = Value::enumeration(e->name, entry->name, entry->value);
                    } else {
                        out.warnings.push_back(f.name + ": value " + std::to_string(v.as_int()) + " not in enum " +
                                               f.enum_ref);
                    }
                }
            }
            out.fields.emplace_back(f.name, std::move(v));
        } else if (f.type == BaseType::Char) {
            std::string s(reinterpret_cast<const char*>(p), f.array_length);
            s.resize(std::strlen(s.c_str()));
            out.fields.emplace_back(f.name, Value::string(std::move(s)));
        } else {
            ValueList items;
            items.reserve(f.array_length);
            for (std::size_t k = 0; k < f.array_length; ++k) {
                items.push_back(detail::read_scalar(f.type, p + k * type_size(f.type), out.warnings, f.name));
            }
            // A uint64 element beyond int64 range decodes as Float; keep the array homogeneous.
            if (std::any_of(items.begin(), items.end(), [](const Value& x) { return x.is_float(); })) {
                for (auto& x : items) {
                    if (x.is_int()) {
                        x = Value::real(static_cast<double>(x.as_int()));
                    }
                }
            }
            out.fields.emplace_back(f.name, Value::array(std::move(items)));
        }
    }
    return out;
}

/// Packs `fields` in wire order and truncates trailing zeros (minimum one byte).
/// Absent extension fields encode as zero; absent base fields are an error.
inline std::vector<std::uint8_t> encode_payload(const MessageSchema& schema, const FieldMap& fields)
{
    std::vector<std::uint8_t> out(std::max<std::size_t>(schema.payload_length, 1), 0);
    for (std::size_t i = 0; i < schema.fields.size(); ++i) {
        const auto& f = schema.fields[i];
        const Value* v = fields.get(f.name);
        if (v == nullptr) {
            if (f.extension) {
                continue;
            }
            throw Error(ErrorCode::MissingField, schema.name + "." + f.name);
        }
        std::uint8_t* p = out.data() + schema.offset[i];
        const std::string where = schema.name + "." + f.name;
        if (f.array_length == 0) {
            detail::write_scalar(f.type, p, *v, where);
        } else if (f.type == BaseType::Char) {
            if (!v->is_str() || v->as_str().size() > f.array_length) {
                throw Error(ErrorCode::FieldOutOfRange, where + ": expected a string of at most " +
                                                            std::to_string(f.array_length) + " characters");
            }
            std::memcpy(p, v->as_str().data(), v->as_str().size());
        } else {
            if (!v->is_array() || v->as_array().size() > f.array_length) {
                throw Error(ErrorCode::FieldOutOfRange,
                            where + ": expected an array of at most " + std::to_string(f.array_length) + " elements");
            }
            for (std::size_t k = 0; k < v->as_array().size(); ++k) {
                detail::write_scalar(f.type, p + k * type_size(f.type), v->as_array()[k], where);
            }
        }
    }
    return truncate_payload(std::move(out));
}

/// Encodes a complete frame for `fields` using the schema's crc_extra.
inline std::vector<std::uint8_t> encode_message(const MessageSchema& schema, const FieldMap& fields, std::uint8_t seq,
                                                std::uint8_t sys_id, std::uint8_t comp_id)
{
    const auto payload = encode_payload(schema, fields);
    return encode_frame(schema.id, payload, seq, sys_id, comp_id, schema.crc_extra);
}

/// Fills any schema field missing from `partial` with its zero value.
inline FieldMap complete_fields(const MessageSchema& schema, const FieldMap& partial)
{
    FieldMap out;
    out.msg_id = schema.id;
    out.msg_name = schema.name;
    for (const auto& f : schema.fields) {
        if (const Value* v = partial.get(f.name)) {
            out.fields.emplace_back(f.name, *v);
            continue;
        }
        Value zero;
        if (f.type == BaseType::Char) {
            zero = Value::string("");
        } else if (f.array_length != 0) {
            const Value elem = (f.type == BaseType::Float || f.type == BaseType::Double) ? Value::real(0.0)
                                                                                         : Value::integer(0);
            zero = Value::array(ValueList(f.array_length, elem));
        } else if (f.type == BaseType::Float || f.type == BaseType::Double) {
            zero = Value::real(0.0);
        } else {
            zero = Value::integer(0);
        }
        out.fields.emplace_back(f.name, std::move(zero));
    }
    return out;
}

} // namespace datum

#endif // DATUM_WIRE_HPP
