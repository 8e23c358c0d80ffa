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

#include "datum/cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <thread>

namespace datum {
namespace {

namespace fs = std::filesystem;

const std::string kConfig = std::string(DATUM_SHARE_DIR) + "/config/proxy.json";

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "datum");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override
    {
        dir_ = fs::temp_directory_path() / ("datum_cli_" + std::to_string(::getpid()));
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    std::string scenario(const std::string& spec)
    {
        std::string name = spec;
        std::replace(name.begin(), name.end(), ':', '_');
        std::replace(name.begin(), name.end(), ',', '_');
        const auto p = path(name + ".jsonl");
        EXPECT_EQ(cli({"scenarios", spec, "-o", p}).code, 0) << spec;
        return p;
    }

    fs::path dir_;
};

TEST_F(Cli, UsageErrors)
{
    const auto none = cli({});
    EXPECT_EQ(none.code, 2);
    const auto unknown = cli({"frobnicate"});
    EXPECT_EQ(unknown.code, 2);
    EXPECT_NE((unknown.out + unknown.err).find("Usage"), std::string::npos) << unknown.out << unknown.err;
    EXPECT_EQ(cli({"check"}).code, 2);
    EXPECT_EQ(cli({"dialect", "compile", "/nonexistent.xml", "-o", path("x")}).code, 2);
    EXPECT_EQ(cli({"--help"}).code, 0);
}

TEST_F(Cli, DialectCompile)
{
    const auto out = path("common.schema.json");
    const auto r = cli({"dialect", "compile", std::string(DATUM_SHARE_DIR) + "/dialects/common.xml", "-o", out});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("messages"), std::string::npos);
    const Dialect back = load_dialect_or_schema(out);
    EXPECT_GT(back.messages.size(), 200u);
    const auto again = path("again.json");
    ASSERT_EQ(cli({"-q", "dialect", "compile", std::string(DATUM_SHARE_DIR) + "/dialects/common.xml", "-o", again}).code, 0);
    std::ifstream a(out), b(again);
    EXPECT_EQ(std::string(std::istreambuf_iterator<char>(a), {}), std::string(std::istreambuf_iterator<char>(b), {}));
}

TEST_F(Cli, ScenarioToStdout)
{
    const auto r = cli({"scenarios", "good_mission:2", "--seed", "3"});
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(parse_trace(r.out).records.size(), generate_scenario({"good_mission", {"2"}}, 3).records.size());
    EXPECT_EQ(cli({"scenarios", "good_mission:0"}).code, 2);
}

TEST_F(Cli, CheckGoodMission)
{
    const auto r = cli({"check", scenario("good_mission:100"), "--config", kConfig, "--expect-clean"});
    EXPECT_EQ(r.code, 0) << r.out << r.err;
    EXPECT_NE(r.out.find("0 violations"), std::string::npos);
    EXPECT_NE(r.out.find("mission: Completed"), std::string::npos);
}

TEST_F(Cli, CheckStaleBuffer)
{
    const auto trace = scenario("stale_buffer:2,1");
    const auto clean = cli({"check", trace, "--config", kConfig, "--expect-clean", "--report", path("r.jsonl")});
    EXPECT_EQ(clean.code, 1);
    std::size_t lines = 0;
    for (std::size_t p = clean.out.find("violation at #"); p != std::string::npos;
         p = clean.out.find("violation at #", p + 1)) {
        ++lines;
    }
    EXPECT_EQ(lines, 1u) << clean.out;
    EXPECT_NE(clean.out.find("MISSION_ACK"), std::string::npos);
    EXPECT_NE(clean.out.find("RefinementFalse"), std::string::npos);
    std::ifstream rep(path("r.jsonl"));
    std::string line;
    ASSERT_TRUE(std::getline(rep, line));
    EXPECT_EQ(violation_from_json(nlohmann::json::parse(line)).label, "MISSION_ACK");
    // The trace itself expects that drop.
    EXPECT_EQ(cli({"check", trace, "--config", kConfig}).code, 0);
}

TEST_F(Cli, CheckExpectationMismatch)
{
    Trace t = generate_scenario({"stale_buffer", {"2", "1"}});
    t.expect->index += 1;
    const auto p = path("wrong.jsonl");
    std::ofstream(p) << emit_trace(t);
    const auto r = cli({"check", p, "--config", kConfig});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("MISMATCH"), std::string::npos);
}

TEST_F(Cli, CheckInputErrors)
{
    const auto bad = path("bad.jsonl");
    std::ofstream(bad) << "{nope\n";
    const auto r = cli({"check", bad, "--config", kConfig});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("TraceParseError"), std::string::npos);
    const auto cfg = path("cfg.json");
    std::ofstream(cfg) << R"({"dialect": "missing.xml", "protocols": []})";
    EXPECT_EQ(cli({"check", scenario("good_mission:1"), "--config", cfg}).code, 2);
    EXPECT_EQ(cli({"check", scenario("good_mission:1"), "--config", kConfig, "--mode", "loud"}).code, 2);
}

TEST_F(Cli, JsonOutputRoundTrips)
{
    const auto r = cli({"--json", "check", scenario("param_attack:13"), "--config", kConfig});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    ASSERT_EQ(j.at("violations").size(), 1u);
    const ViolationReport v = violation_from_json(j.at("violations")[0]);
    EXPECT_EQ(to_json(v), j.at("violations")[0]);
    EXPECT_EQ(v.protocol, "param_guard");
    EXPECT_EQ(j.at("matched"), true);
    EXPECT_EQ(j.at("dropped"), 1);
}

TEST_F(Cli, ExitCodesOverCorpus)
{
    std::vector<std::string> specs = {"good_mission:1", "good_mission:3", "out_of_order_request:2", "param_attack:12.99",
                                      "param_attack:13.01"};
    for (const auto& s : parachute_setups()) specs.push_back("parachute_attack:" + s);
    for (int n = 1; n <= 3; ++n) {
        for (int k = 0; k < n; ++k) specs.push_back("stale_buffer:" + std::to_string(n) + "," + std::to_string(k));
    }
    for (const auto& s : specs) {
        const auto trace = scenario(s);
        const bool clean = generate_scenario(parse_scenario_spec(s)).expect->kind == OutcomeKind::AllForwarded;
        EXPECT_EQ(cli({"-q", "check", trace, "--config", kConfig}).code, 0) << s;
        EXPECT_EQ(cli({"-q", "check", trace, "--config", kConfig, "--expect-clean"}).code, clean ? 0 : 1) << s;
    }
}

TEST_F(Cli, Bench)
{
    const auto r = cli({"bench", "--config", kConfig, "--scenario", "good_mission:10", "-o", path("bench.json")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find(" ± "), std::string::npos);
    std::ifstream in(path("bench.json"));
    const auto j = nlohmann::json::parse(in);
    EXPECT_EQ(j.at("repetitions"), 30);
    EXPECT_EQ(cli({"bench", "--config", kConfig, "--reps", "3"}).code, 2);
}

TEST_F(Cli, ProxyStopsOnSignal)
{
    const auto cfg = path("proxy.json");
    std::ofstream(cfg) << nlohmann::json{{"gcs_listen", "127.0.0.1:0"},
                                         {"uav_endpoint", "127.0.0.1:9"},
                                         {"uav_bind", "127.0.0.1:0"},
                                         {"dialect", std::string(DATUM_SHARE_DIR) + "/dialects/common.xml"},
                                         {"protocols", {std::string(DATUM_SHARE_DIR) + "/protocols/mission.json"}}}
                              .dump();
    std::thread stopper([] {
        std::this_thread::sleep_for(std::chrono::milliseconds(300));
        std::raise(SIGTERM);
    });
    const auto r = cli({"--json", "proxy", "--config", cfg});
    stopper.join();
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(nlohmann::json::parse(r.out).at("seen"), 0);
}

} // namespace
} // namespace datum
