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

#ifndef DATUM_CLI_HPP
#define DATUM_CLI_HPP

#include "datum/harness.hpp"
#include "datum/proxy.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <iostream>

namespace datum {

namespace detail {

inline std::atomic<bool>& stop_flag()
{
    static std::atomic<bool> flag{false};
    return flag;
}

extern "C" inline void on_stop_signal(int) { stop_flag() = true; }

struct CliOptions {
    bool quiet = false;
    bool json = false;
    std::string config;
    std::string mode;
    std::string report;
};

inline void write_file(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path);
    out << text;
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path);
}

inline ProxyConfig cli_config(const CliOptions& o)
{
    ProxyConfig c = load_proxy_config(o.config);
    if (o.mode == "warn") c.mode = EnforcementMode::Warn;
    if (o.mode == "enforce") c.mode = EnforcementMode::Enforce;
    if (!o.report.empty()) c.report_path = o.report;
    return c;
}

inline std::string describe(std::size_t index, const ViolationReport& r)
{
    std::string s = "violation at #" + std::to_string(index) + ": " + r.protocol + " " + r.label + " " +
                    r.direction.from + "->" + r.direction.to + " " + std::string(to_string(r.reason));
    if (!r.detail.empty()) s += " (" + r.detail + ")";
    return s;
}

inline int cmd_dialect_compile(const CliOptions& o, const std::string& xml, const std::string& out_path,
                               std::ostream& out)
{
    const Dialect d = load_dialect_file(xml);
    write_file(out_path, emit_schema(d));
    if (o.json) {
        out << nlohmann::json{{"messages", d.messages.size()}, {"enums", d.enums.size()}, {"output", out_path}}.dump()
            << "\n";
    } else if (!o.quiet) {
        out << d.messages.size() << " messages, " << d.enums.size() << " enums -> " << out_path << "\n";
    }
    return 0;
}

inline int cmd_check(const CliOptions& o, const std::string& trace_path, bool expect_clean, std::ostream& out)
{
    const ProxyConfig config = cli_config(o);
    const Trace trace = load_trace(trace_path);
    const ReplayReport r = replay_trace(trace, config);
    if (!config.report_path.empty()) {
        std::ostringstream lines;
        for (const auto& d : r.decisions) write_reports(lines, d);
        write_file(config.report_path, lines.str());
    }
    const bool failed = (expect_clean && !r.violations.empty()) || r.matched == false;
    if (o.json) {
        auto violations = nlohmann::json::array();
        for (const auto& v : r.violations) violations.push_back(to_json(v));
        nlohmann::json statuses = nlohmann::json::object();
        for (const auto& [name, status] : r.statuses) statuses[name] = to_string(status);
        nlohmann::json j{{"messages", r.decisions.size()},
                         {"dropped", std::count_if(r.decisions.begin(), r.decisions.end(),
                                                   [](const Decision& d) { return d.action == Action::Drop; })},
                         {"violations", violations},
                         {"statuses", statuses},
                         {"outcome", outcome_to_json(r.outcome)},
                         {"ok", !failed}};
        if (r.matched) j["matched"] = *r.matched;
        out << j.dump() << "\n";
    } else if (!o.quiet) {
        for (std::size_t i = 0; i < r.decisions.size(); ++i) {
            for (const auto& v : r.decisions[i].reports) out << describe(i, v) << "\n";
        }
        out << r.decisions.size() << " messages, " << r.violations.size() << " violations\n";
        for (const auto& [name, status] : r.statuses) out << "  " << name << ": " << to_string(status) << "\n";
        if (r.matched) {
            out << "expected " << to_string(*trace.expect) << ", observed " << to_string(r.outcome) << ": "
                << (*r.matched ? "match" : "MISMATCH") << "\n";
        }
    }
    return failed ? 1 : 0;
}

inline int cmd_scenarios(const CliOptions& o, const std::string& spec, const std::string& out_path, std::uint64_t seed,
                         std::ostream& out)
{
    const Trace t = generate_scenario(parse_scenario_spec(spec), seed);
    const std::string text = emit_trace(t);
    if (out_path.empty() || out_path == "-") {
        out << text;
        return 0;
    }
    write_file(out_path, text);
    if (o.json) {
        out << nlohmann::json{{"records", t.records.size()}, {"output", out_path}}.dump() << "\n";
    } else if (!o.quiet) {
        out << t.records.size() << " records -> " << out_path << "\n";
    }
    return 0;
}

inline int cmd_proxy(const CliOptions& o, std::ostream& out, std::ostream& err)
{
    const ProxyConfig config = cli_config(o);
    stop_flag() = false;
    std::signal(SIGINT, on_stop_signal);
    std::signal(SIGTERM, on_stop_signal);
    ProxyHooks hooks;
    hooks.stop = &stop_flag();
    hooks.on_ready = [&](std::uint16_t g, std::uint16_t u) {
        if (!o.quiet && !o.json) out << "listening for GCS on port " << g << ", UAV side on port " << u << std::endl;
    };
    hooks.on_decision = [&](const Direction&, const Decision& d) {
        if (o.quiet || o.json) return;
        for (const auto& v : d.reports) err << describe(0, v).substr(std::string("violation at #0: ").size()) << "\n";
    };
    const ProxyResult r = run_proxy(config, hooks);
    std::signal(SIGINT, SIG_DFL);
    std::signal(SIGTERM, SIG_DFL);
    if (o.json) {
        auto j = summary_json(r.router);
        j["invalid_frames"] = r.invalid_frames;
        j["socket_errors"] = r.socket_errors;
        out << j.dump() << "\n";
    } else if (!o.quiet) {
        write_summary(out, r.router);
        out << "invalid frames: " << r.invalid_frames << "\n";
    }
    return 0;
}

inline int cmd_bench(const CliOptions& o, const std::string& scenario, std::size_t reps, const std::string& out_path,
                     std::ostream& out)
{
    const ProxyConfig config = cli_config(o);
    const BenchReport r = bench(config, generate_scenario(parse_scenario_spec(scenario)), reps);
    if (!out_path.empty()) write_file(out_path, to_json(r).dump(2) + "\n");
    if (o.json) {
        out << to_json(r).dump() << "\n";
    } else if (!o.quiet) {
        out << bench_table(r);
    }
    return 0;
}

} // namespace detail

/// Exit codes: 0 success, 1 violations or expectation mismatch, 2 usage, config or input error.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    detail::CliOptions o;
    CLI::App app{"Runtime protocol monitor for MAVLink links", "datum"};
    app.require_subcommand(1);
    app.add_flag("-q,--quiet", o.quiet, "Suppress human-readable output");
    app.add_flag("--json", o.json, "Print a JSON document instead of text");

    auto* dialect = app.add_subcommand("dialect", "Dialect tools");
    dialect->require_subcommand(1);
    auto* compile = dialect->add_subcommand("compile", "Compile a dialect XML into a schema document");
    std::string xml, schema_out;
    compile->add_option("xml", xml, "Dialect XML")->required()->check(CLI::ExistingFile);
    compile->add_option("-o,--output", schema_out, "Schema output path")->required();

    auto add_config = [&](CLI::App* sub) {
        sub->add_option("-c,--config", o.config, "Proxy config file")
            ->envname("DATUM_CONFIG")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--mode", o.mode, "Override enforcement mode")->check(CLI::IsMember({"enforce", "warn"}));
    };

    auto* check = app.add_subcommand("check", "Replay a trace through the monitors");
    std::string trace_path;
    bool expect_clean = false;
    check->add_option("trace", trace_path, "Trace file (JSONL)")->required()->check(CLI::ExistingFile);
    add_config(check);
    check->add_flag("--expect-clean", expect_clean, "Fail when any violation is found");
    check->add_option("--report", o.report, "Write violation reports (JSONL)");

    auto* scenarios = app.add_subcommand("scenarios", "Generate a scenario trace");
    std::string scenario_spec, scenario_out;
    std::uint64_t seed = 1;
    scenarios->add_option("scenario", scenario_spec, "kind:param,param")->required();
    scenarios->add_option("-o,--output", scenario_out, "Trace output path (default stdout)");
    scenarios->add_option("--seed", seed, "Generator seed");

    auto* proxy = app.add_subcommand("proxy", "Run the enforcing UDP proxy until interrupted");
    add_config(proxy);
    proxy->add_option("--report", o.report, "Write violation reports (JSONL)");

    auto* bench_cmd = app.add_subcommand("bench", "Time routing decisions over a scenario");
    std::string bench_scenario = "good_mission:100", bench_out;
    std::size_t reps = 30;
    add_config(bench_cmd);
    bench_cmd->add_option("--scenario", bench_scenario, "Scenario to time");
    bench_cmd->add_option("--reps", reps, "Repetitions (at least 30)");
    bench_cmd->add_option("-o,--output", bench_out, "Write the report as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        if (code == 0) return 0;
        err << app.help();
        return 2;
    }

    try {
        if (compile->parsed()) return detail::cmd_dialect_compile(o, xml, schema_out, out);
        if (check->parsed()) return detail::cmd_check(o, trace_path, expect_clean, out);
        if (scenarios->parsed()) return detail::cmd_scenarios(o, scenario_spec, scenario_out, seed, out);
        if (proxy->parsed()) return detail::cmd_proxy(o, out, err);
        if (bench_cmd->parsed()) return detail::cmd_bench(o, bench_scenario, reps, bench_out, out);
    } catch (const Error& e) {
        err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    err << app.help();
    return 2;
}

} // namespace datum

#endif
