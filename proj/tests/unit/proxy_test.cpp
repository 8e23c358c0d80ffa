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

#include "datum/proxy.hpp"
#include "support/config.hpp"
#include "support/live.hpp"

#include <gtest/gtest.h>

#include <filesystem>

namespace datum {
namespace {

using namespace testing;

TEST(Proxy, NoProtocolsIsConfigError)
{
    ProxyConfig c = test_config();
    c.protocols.clear();
    try {
        run_proxy(c);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ConfigError);
    }
}

TEST(Proxy, BindFailure)
{
    UdpSocket taken(Endpoint{"127.0.0.1", 0});
    ProxyConfig c = test_config();
    c.gcs_listen = {"127.0.0.1", taken.local_port()};
    c.uav_endpoint = {"127.0.0.1", 9};
    try {
        run_proxy(c);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::BindFailure);
    }
}

TEST(Proxy, RelaysIrrelevantTraffic)
{
    Trace t;
    for (int i = 0; i < 1000; ++i) {
        const bool up = i % 2 == 0;
        t.records.push_back({up ? Direction{"GCS", "UAV"} : Direction{"UAV", "GCS"}, "HEARTBEAT",
                             {{"type", up ? 6 : 2}, {"autopilot", 3}, {"custom_mode", i}}, 0.0, {}, {}});
    }
    const auto live = run_live(test_config(), t);
    ASSERT_FALSE(live.timed_out);
    ASSERT_TRUE(live.error.empty()) << live.error;
    EXPECT_EQ(live.decisions.size(), 1000u);
    EXPECT_TRUE(std::all_of(live.decisions.begin(), live.decisions.end(),
                            [](const Decision& d) { return d.action == Action::Forward; }));
    EXPECT_EQ(live.at_uav, live.expected_uav);
    EXPECT_EQ(live.at_gcs, live.expected_gcs);
    EXPECT_EQ(live.at_uav.size() + live.at_gcs.size(), 1000u);
}

TEST(Proxy, LiveMatchesReplayAndDropsNothingThrough)
{
    for (const char* s : {"good_mission:100", "stale_buffer:2,1", "out_of_order_request:3"}) {
        const Trace t = generate_scenario(parse_scenario_spec(s));
        const auto offline = replay_trace(t, test_config());
        const auto live = run_live(test_config(), t);
        ASSERT_FALSE(live.timed_out) << s;
        ASSERT_TRUE(live.error.empty()) << live.error;
        EXPECT_EQ(without_timestamps(live.decisions), without_timestamps(offline.decisions)) << s;
        EXPECT_EQ(live.at_uav, live.expected_uav) << s;
        EXPECT_EQ(live.at_gcs, live.expected_gcs) << s;
        for (const auto& bytes : live.dropped) {
            EXPECT_EQ(std::count(live.at_uav.begin(), live.at_uav.end(), bytes), 0);
            EXPECT_EQ(std::count(live.at_gcs.begin(), live.at_gcs.end(), bytes), 0);
        }
    }
}

TEST(Proxy, GarbageDatagramsAreDropped)
{
    ProxyConfig c = test_config();
    UdpSocket uav(Endpoint{"127.0.0.1", 0});
    c.gcs_listen = {"127.0.0.1", 0};
    c.uav_bind = {"127.0.0.1", 0};
    c.uav_endpoint = {"127.0.0.1", uav.local_port()};
    const auto report = std::filesystem::temp_directory_path() / "datum_proxy_report.jsonl";
    c.report_path = report.string();
    std::atomic<bool> stop{false};
    std::atomic<std::uint16_t> port{0};
    std::atomic<int> decisions{0};
    ProxyHooks hooks;
    hooks.stop = &stop;
    hooks.on_ready = [&](std::uint16_t g, std::uint16_t) { port = g; };
    hooks.on_decision = [&](const Direction&, const Decision&) { ++decisions; };
    std::optional<ProxyResult> result;
    std::thread th([&] { result = run_proxy(c, hooks); });
    while (port == 0) std::this_thread::sleep_for(std::chrono::milliseconds(1));

    UdpSocket gcs(Endpoint{"127.0.0.1", 0});
    const auto to = resolve_endpoint({"127.0.0.1", port});
    const std::vector<std::uint8_t> junk = {1, 2, 3, 4, 5};
    gcs.send_to(to, junk);
    auto frames = encode_trace(*c.dialect, generate_scenario({"stale_buffer", {"1", "0"}}));
    for (const auto& f : frames) {
        if (f.direction.from == "GCS") gcs.send_to(to, f.bytes);
    }
    // corrupt copy of the COUNT frame
    auto bad = frames[2].bytes;
    bad[12] ^= 0x10;
    gcs.send_to(to, bad);
    for (int i = 0; i < 200 && decisions < 2; ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    stop = true;
    th.join();
    ASSERT_TRUE(result);
    EXPECT_GE(result->invalid_frames, 2u);
    EXPECT_EQ(decisions.load(), 2); // GCS heartbeat + COUNT
    std::size_t received = 0;
    while (uav.receive(10)) ++received;
    EXPECT_EQ(received, 2u);
}

} // namespace
} // namespace datum
