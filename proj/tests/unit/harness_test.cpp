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

#include "datum/harness.hpp"
#include "support/config.hpp"

#include <gtest/gtest.h>

namespace datum {
namespace {

using namespace testing;

std::size_t protocol_messages(const Trace& t)
{
    return static_cast<std::size_t>(std::count_if(t.records.begin(), t.records.end(),
                                                  [](const TraceRecord& r) { return r.label.rfind("MISSION_", 0) == 0; }));
}

TEST(Harness, GoodMissionShape)
{
    const Trace t100 = generate_scenario({"good_mission", {"100"}});
    EXPECT_EQ(protocol_messages(t100), 202u);
    EXPECT_GT(t100.records.size(), 202u);
    EXPECT_EQ(t100.expect, ExpectedOutcome{});
    const Trace t1 = generate_scenario({"good_mission", {"1"}});
    EXPECT_EQ(protocol_messages(t1), 4u);
    EXPECT_EQ(t1.records.front().label, "HEARTBEAT");
}

TEST(Harness, SeededDeterminism)
{
    for (const char* s : {"good_mission:20", "stale_buffer:3,1", "param_attack:13", "parachute_attack:flip"}) {
        const auto spec = parse_scenario_spec(s);
        EXPECT_EQ(emit_trace(generate_scenario(spec, 7)), emit_trace(generate_scenario(spec, 7))) << s;
    }
    EXPECT_NE(emit_trace(generate_scenario({"good_mission", {"20"}}, 7)),
              emit_trace(generate_scenario({"good_mission", {"20"}}, 8)));
}

TEST(Harness, TraceRoundTrip)
{
    const Trace t = generate_scenario({"stale_buffer", {"3", "2"}}, 4);
    const std::string text = emit_trace(t);
    const Trace back = parse_trace(text);
    EXPECT_EQ(back.scenario, "stale_buffer");
    EXPECT_EQ(back.expect, t.expect);
    EXPECT_EQ(back.records.size(), t.records.size());
    EXPECT_EQ(emit_trace(back), text);
}

TEST(Harness, TraceParseErrors)
{
    auto code = [](std::string_view text) {
        try {
            parse_trace(text);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::IoFailure;
    };
    EXPECT_EQ(code("{not json"), ErrorCode::TraceParseError);
    EXPECT_EQ(code(R"({"from":"GCS","label":"X"})"), ErrorCode::TraceParseError);
    EXPECT_EQ(code(R"({"from":"GCS","to":"UAV","label":"X","delay":-1})"), ErrorCode::TraceParseError);
    EXPECT_EQ(code("{\"from\":\"GCS\",\"to\":\"UAV\",\"label\":\"X\"}\n{\"scenario\":\"late\"}"), ErrorCode::TraceParseError);

    const auto cfg = test_config();
    Trace bad = parse_trace(R"({"from":"GCS","to":"UAV","label":"NOT_A_MESSAGE"})");
    EXPECT_THROW(replay_trace(bad, cfg), Error);
    Trace bad_field = parse_trace(R"({"from":"GCS","to":"UAV","label":"MISSION_COUNT","fields":{"nope":1}})");
    EXPECT_THROW(replay_trace(bad_field, cfg), Error);
    Trace range = parse_trace(R"({"from":"GCS","to":"UAV","label":"MISSION_COUNT","fields":{"count":70000}})");
    EXPECT_THROW(replay_trace(range, cfg), Error);
}

TEST(Harness, EnumEntryNamesInTraces)
{
    const auto cfg = test_config();
    const auto* schema = cfg.dialect->message("MISSION_ACK");
    const FieldMap f = record_fields(*cfg.dialect, *schema, {{"type", "MAV_MISSION_ERROR"}});
    EXPECT_EQ(*f.get("type"), Value::integer(1));
}

TEST(Harness, ReplayGoodMission)
{
    const auto report = replay_trace(generate_scenario({"good_mission", {"100"}}), test_config());
    EXPECT_TRUE(report.violations.empty());
    EXPECT_EQ(report.statuses.at(0), (std::pair<std::string, Status>{"mission", Status::Completed}));
    EXPECT_EQ(report.matched, true);
}

TEST(Harness, ReplayOutOfOrderRequest)
{
    const Trace t = generate_scenario({"out_of_order_request", {"2"}});
    const auto report = replay_trace(t, test_config());
    ASSERT_EQ(report.outcome.kind, OutcomeKind::DropAt);
    EXPECT_EQ(t.records[report.outcome.index].label, "MISSION_REQUEST_INT");
    EXPECT_EQ(t.records[report.outcome.index].fields.at("seq"), 1);
    EXPECT_EQ(report.outcome.reason, ViolationReason::RefinementFalse);
    EXPECT_EQ(report.matched, true);
}

TEST(Harness, ReplayEmptyTrace)
{
    const auto report = replay_trace(Trace{}, test_config());
    EXPECT_TRUE(report.decisions.empty());
    for (const auto& [name, status] : report.statuses) EXPECT_EQ(status, Status::Running) << name;
    EXPECT_FALSE(report.matched.has_value());
}

TEST(Harness, ScenariosMeetTheirExpectations)
{
    std::vector<ScenarioSpec> specs;
    for (int n = 1; n <= 5; ++n) specs.push_back({"good_mission", {std::to_string(n)}});
    for (int n = 1; n <= 4; ++n) {
        for (int k = 0; k < n; ++k) specs.push_back({"stale_buffer", {std::to_string(n), std::to_string(k)}});
    }
    for (int n = 2; n <= 4; ++n) specs.push_back({"out_of_order_request", {std::to_string(n)}});
    for (const char* v : {"1", "12.99", "13", "13.01", "1e9", "-5"}) specs.push_back({"param_attack", {v}});
    specs.push_back({"param_attack", {"10", "2", "4"}});
    for (const auto& s : parachute_setups()) specs.push_back({"parachute_attack", {s}});
    for (const auto mode : {EnforcementMode::Enforce, EnforcementMode::Warn}) {
        for (const auto& s : specs) {
            for (std::uint64_t seed : {1, 2, 3}) {
                const auto report = replay_trace(generate_scenario(s, seed), test_config(mode));
                EXPECT_EQ(report.matched, true) << s.kind << " " << (s.params.empty() ? "" : s.params[0]) << " -> "
                                                << to_string(report.outcome);
            }
        }
    }
}

TEST(Harness, InvalidScenarioParams)
{
    for (const char* s : {"good_mission:0", "good_mission", "stale_buffer:2,2", "stale_buffer:2,-1",
                          "out_of_order_request:1", "param_attack:abc", "parachute_attack:sideways", "warp:1",
                          "good_mission:1x"}) {
        try {
            generate_scenario(parse_scenario_spec(s));
            ADD_FAILURE() << s;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::InvalidParams) << s;
        }
    }
}

TEST(Harness, ReplayIsByteIdentical)
{
    const Trace t = generate_scenario({"stale_buffer", {"3", "1"}}, 5);
    const auto a = replay_trace(t, test_config());
    const auto b = replay_trace(t, test_config());
    EXPECT_EQ(decisions_text(a.decisions), decisions_text(b.decisions));
}

TEST(Harness, BenchShape)
{
    const Trace t = generate_scenario({"good_mission", {"100"}});
    const auto full = bench(test_config(), t, 30);
    EXPECT_EQ(full.repetitions, 30u);
    EXPECT_EQ(full.messages, t.records.size());
    EXPECT_EQ(full.dropped, 0u);
    EXPECT_GE(full.stddev_us, 0.0);
    EXPECT_GT(full.mean_us, 0.0);
    EXPECT_GE(full.median_us, full.min_us);
    EXPECT_GT(full.peak_rss_kb, 0);
    const auto table = bench_table(full);
    EXPECT_NE(table.find(" ± "), std::string::npos);
    EXPECT_TRUE(to_json(full).contains("stddev_us"));
    EXPECT_THROW(bench(test_config(), t, 29), Error);
}

TEST(Harness, FullProtocolsCostAtLeastPassThrough)
{
    const Trace t = generate_scenario({"good_mission", {"100"}});
    ProxyConfig pass = test_config();
    pass.protocols.clear();
    // Medians are noisy at this scale; take the best of a few runs for each.
    double full_best = 1e18, pass_best = 1e18;
    for (int i = 0; i < 3; ++i) {
        full_best = std::min(full_best, bench(test_config(), t, 30).median_us);
        pass_best = std::min(pass_best, bench(pass, t, 30).median_us);
    }
    EXPECT_GE(full_best, pass_best);
}

} // namespace
} // namespace datum
