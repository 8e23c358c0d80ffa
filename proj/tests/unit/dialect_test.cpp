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

#include "datum/dialect.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <random>

namespace datum {
namespace {

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const Dialect& common_dialect()
{
    static const Dialect d = load_dialect_file(std::string(DATUM_SHARE_DIR) + "/dialects/common.xml");
    return d;
}

nlohmann::json reference()
{
    return nlohmann::json::parse(read_file(std::string(DATUM_TEST_DATA_DIR) + "/reference_dialect.json"));
}

// Bitwise CRC-16/MCRF4XX, written from the polynomial definition.
std::uint16_t bitwise_crc(const std::string& bytes, std::uint16_t crc = 0xFFFF)
{
    for (unsigned char c : bytes) {
        crc ^= c;
        for (int i = 0; i < 8; ++i) crc = (crc & 1) ? static_cast<std::uint16_t>((crc >> 1) ^ 0x8408) : static_cast<std::uint16_t>(crc >> 1);
    }
    return crc;
}

FieldSchema field(std::string name, BaseType t, bool ext = false)
{
    FieldSchema f;
    f.name = std::move(name);
    f.type = t;
    f.extension = ext;
    return f;
}

std::vector<std::string> names(const std::vector<FieldSchema>& fs)
{
    std::vector<std::string> out;
    for (const auto& f : fs) out.push_back(f.name);
    return out;
}

TEST(Dialect, EmptyDocument)
{
    auto d = parse_dialect("<mavlink/>");
    EXPECT_TRUE(d.enums.empty());
    EXPECT_TRUE(d.messages.empty());
}

TEST(Dialect, MissionCountFromCommon)
{
    const auto* m = common_dialect().message("MISSION_COUNT");
    ASSERT_NE(m, nullptr);
    EXPECT_EQ(m->id, 44u);
    ASSERT_EQ(m->fields.size(), 4u);
    EXPECT_EQ(names(m->fields), (std::vector<std::string>{"target_system", "target_component", "count", "mission_type"}));
    EXPECT_EQ(m->fields[2].type, BaseType::Uint16);
    EXPECT_TRUE(m->fields[3].extension);
    EXPECT_EQ(m->fields[3].enum_ref, "MAV_MISSION_TYPE");
    EXPECT_EQ(names(wire_order(m->fields)),
              (std::vector<std::string>{"count", "target_system", "target_component", "mission_type"}));
    EXPECT_EQ(m->payload_length, 5u);
}

TEST(Dialect, WireOrderExamples)
{
    EXPECT_EQ(names(wire_order({field("a", BaseType::Uint8), field("b", BaseType::Uint32)})),
              (std::vector<std::string>{"b", "a"}));
    EXPECT_EQ(names(wire_order({field("a", BaseType::Uint16), field("b", BaseType::Uint16)})),
              (std::vector<std::string>{"a", "b"}));
    // Extensions are never reordered, even when larger.
    EXPECT_EQ(names(wire_order({field("a", BaseType::Uint8), field("x", BaseType::Uint8, true), field("y", BaseType::Double, true)})),
              (std::vector<std::string>{"a", "x", "y"}));
}

TEST(DialectProperty, WireOrderIsIdempotentPermutation)
{
    std::mt19937 rng(5);
    for (int i = 0; i < 500; ++i) {
        std::vector<FieldSchema> fs;
        const int n = static_cast<int>(rng() % 12);
        bool ext = false;
        for (int k = 0; k < n; ++k) {
            ext = ext || rng() % 5 == 0;
            fs.push_back(field("f" + std::to_string(k), static_cast<BaseType>(rng() % 11), ext));
        }
        auto w = wire_order(fs);
        auto sorted_in = names(fs), sorted_out = names(w);
        std::sort(sorted_in.begin(), sorted_in.end());
        std::sort(sorted_out.begin(), sorted_out.end());
        ASSERT_EQ(sorted_in, sorted_out);
        ASSERT_EQ(wire_order(w), w);
    }
}

TEST(Dialect, CrcExtraMatchesReferenceGenerator)
{
    const auto ref = reference();
    EXPECT_EQ(common_dialect().message("HEARTBEAT")->crc_extra, 50);
    std::size_t compared = 0;
    for (const auto& [name, m] : ref["messages"].items()) {
        const auto* schema = common_dialect().message(name);
        ASSERT_NE(schema, nullptr) << name;
        EXPECT_EQ(schema->id, m["id"].get<std::uint32_t>()) << name;
        EXPECT_EQ(schema->crc_extra, m["crc_extra"].get<int>()) << name;
        EXPECT_EQ(names(wire_order(schema->fields)), m["wire_order"].get<std::vector<std::string>>()) << name;
        ++compared;
    }
    EXPECT_GE(compared, 10u);
    EXPECT_EQ(compared, common_dialect().messages.size());
}

TEST(Dialect, CrcExtraOfFieldlessMessage)
{
    MessageSchema m;
    m.name = "X";
    finalize_layout(m);
    const std::uint16_t crc = bitwise_crc("X ");
    const auto expected = static_cast<std::uint8_t>((crc & 0xFF) ^ (crc >> 8));
    EXPECT_EQ(m.crc_extra, expected);
    const auto vectors = nlohmann::json::parse(read_file(std::string(DATUM_TEST_DATA_DIR) + "/reference_vectors.json"));
    EXPECT_EQ(m.crc_extra, vectors["crc_extra_zero_field_X"].get<int>());
}

TEST(Dialect, ScaleOfCommonDialect)
{
    EXPECT_GT(common_dialect().messages.size(), 200u);
    EXPECT_GT(common_dialect().enums.size(), 100u);
    EXPECT_EQ(common_dialect().enums.size(), reference()["enum_count"].get<std::size_t>());
    EXPECT_EQ(common_dialect().includes, (std::vector<std::string>{"minimal.xml", "standard.xml"}));
}

TEST(Dialect, EmitIsByteStableAndIdempotent)
{
    const auto a = emit_schema(common_dialect());
    const auto b = emit_schema(load_dialect_file(std::string(DATUM_SHARE_DIR) + "/dialects/common.xml"));
    EXPECT_EQ(a, b);
    const Dialect reloaded = load_schema(a);
    EXPECT_EQ(reloaded, common_dialect());
    EXPECT_EQ(emit_schema(reloaded), a);

    const auto empty = emit_schema(parse_dialect("<mavlink/>"));
    EXPECT_EQ(empty, emit_schema(parse_dialect("<mavlink></mavlink>")));
    auto doc = nlohmann::json::parse(empty);
    EXPECT_TRUE(doc["enums"].empty());
    EXPECT_TRUE(doc["messages"].empty());
}

TEST(Dialect, IncludesResolvedThroughCallback)
{
    std::map<std::string, std::string> files = {
        {"base.xml", R"(<mavlink><enums><enum name="E"><entry name="E_A" value="1"/><entry name="E_B"/></enum></enums>
                        <messages><message id="1" name="ONE"><field type="uint8_t" name="a" enum="E">a</field></message></messages></mavlink>)"},
    };
    IncludeResolver r = [&](std::string_view n) -> std::optional<std::string> {
        auto it = files.find(std::string(n));
        return it == files.end() ? std::nullopt : std::optional<std::string>(it->second);
    };
    auto d = parse_dialect(R"(<mavlink><include>base.xml</include><include>base.xml</include>
        <messages><message id="2" name="TWO"><field type="char[4]" name="s">s</field></message></messages></mavlink>)", r);
    EXPECT_EQ(d.messages.size(), 2u);
    ASSERT_NE(d.enumeration("E"), nullptr);
    EXPECT_EQ(d.enumeration("E")->by_name("E_B")->value, 2); // implicit successor value
    EXPECT_EQ(d.message("TWO")->fields[0].array_length, 4u);
    EXPECT_EQ(d.includes, (std::vector<std::string>{"base.xml"}));

    try {
        parse_dialect("<mavlink><include>missing.xml</include></mavlink>", r);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnresolvedInclude);
    }
}

ErrorCode error_of(const std::string& xml)
{
    try {
        parse_dialect(xml);
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error for " << xml;
    return ErrorCode::ParseError;
}

TEST(Dialect, Errors)
{
    EXPECT_EQ(error_of("<mavlink><messages>"), ErrorCode::MalformedXml);
    EXPECT_EQ(error_of("<other/>"), ErrorCode::MalformedXml);
    EXPECT_EQ(error_of(R"(<mavlink><messages><message id="5" name="A"><field type="uint8_t" name="x"/><field type="uint16_t" name="x"/></message></messages></mavlink>)"),
              ErrorCode::MalformedXml);
    EXPECT_EQ(error_of(R"(<mavlink><messages><message id="5" name="A"/><message id="5" name="B"/></messages></mavlink>)"),
              ErrorCode::DuplicateMessageId);
    EXPECT_EQ(error_of(R"(<mavlink><messages><message id="5" name="A"><field type="uint128_t" name="x"/></message></messages></mavlink>)"),
              ErrorCode::UnknownFieldType);
    EXPECT_EQ(error_of(R"(<mavlink><enums><enum name="E"><entry name="A" value="1"/><entry name="B" value="1"/></enum></enums></mavlink>)"),
              ErrorCode::MalformedXml);
}

TEST(Dialect, UnknownElementsProduceWarnings)
{
    auto d = parse_dialect(R"(<mavlink><frobnicate/><messages><message id="1" name="A"><field type="uint8_t" name="x"/><colour/></message></messages></mavlink>)");
    EXPECT_EQ(d.messages.size(), 1u);
    EXPECT_EQ(d.warnings.size(), 2u);
}

TEST(Dialect, MavlinkVersionQuirkIsPlainUint8)
{
    const auto* hb = common_dialect().message("HEARTBEAT");
    EXPECT_EQ(hb->field("mavlink_version")->type, BaseType::Uint8);
}

} // namespace
} // namespace datum
