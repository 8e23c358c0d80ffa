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

#ifndef DATUM_SESSION_HPP
#define DATUM_SESSION_HPP

#include "datum/error.hpp"
#include "datum/json_value.hpp"
#include "datum/refinement.hpp"
#include "datum/wire.hpp"

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace datum {

struct Direction {
    std::string from;
    std::string to;

    friend bool operator==(const Direction&, const Direction&) = default;
};

inline std::string to_string(const Direction& d) { return d.from + "->" + d.to; }

/*
 * Protocol AST
 */

struct ProtocolNode;

class Protocol {
public:
    Protocol(); // End

    struct Choice;
    static Protocol offer(std::string from, std::string to, std::vector<Choice> choices);
    static Protocol mu(std::string var, RefExpr bound, RefExpr init, Protocol body);
    static Protocol recur(std::size_t depth, RefExpr update);
    static Protocol end();

    [[nodiscard]] const ProtocolNode& node() const noexcept { return *node_; }
    [[nodiscard]] bool is_end() const noexcept;

private:
    explicit Protocol(std::shared_ptr<const ProtocolNode> n) : node_(std::move(n)) {}
    std::shared_ptr<const ProtocolNode> node_;
};

struct Binder {
    std::string field;
    std::string var;

    friend bool operator==(const Binder&, const Binder&) = default;
};

struct Protocol::Choice {
    std::string label;
    std::vector<Binder> binders;
    RefExpr refinement; // defaults to `true`
    Protocol continuation;
};

using Choice = Protocol::Choice;

struct OfferNode {
    std::string from;
    std::string to;
    std::vector<Choice> choices;
};

struct MuNode {
    std::string var;
    RefExpr bound;
    RefExpr init;
    Protocol body;
};

struct RecurNode {
    std::size_t depth = 0; // 0 = innermost enclosing Mu
    RefExpr update;
};

struct EndNode {};

struct ProtocolNode {
    std::variant<OfferNode, MuNode, RecurNode, EndNode> data;
};

inline Protocol::Protocol() : node_(std::make_shared<const ProtocolNode>(ProtocolNode{EndNode{}})) {}

inline Protocol Protocol::offer(std::string from, std::string to, std::vector<Choice> choices)
{
    return Protocol(std::make_shared<const ProtocolNode>(ProtocolNode{OfferNode{std::move(from), std::move(to), std::move(choices)}}));
}

inline Protocol Protocol::mu(std::string var, RefExpr bound, RefExpr init, Protocol body)
{
    return Protocol(std::make_shared<const ProtocolNode>(
        ProtocolNode{MuNode{std::move(var), std::move(bound), std::move(init), std::move(body)}}));
}

inline Protocol Protocol::recur(std::size_t depth, RefExpr update)
{
    return Protocol(std::make_shared<const ProtocolNode>(ProtocolNode{RecurNode{depth, std::move(update)}}));
}

inline Protocol Protocol::end() { return Protocol(); }

inline bool Protocol::is_end() const noexcept { return std::holds_alternative<EndNode>(node_->data); }

inline bool operator==(const Protocol& a, const Protocol& b);

inline bool operator==(const Choice& a, const Choice& b)
{
    return a.label == b.label && a.binders == b.binders && a.refinement == b.refinement && a.continuation == b.continuation;
}

inline bool operator==(const Protocol& a, const Protocol& b)
{
    if (&a.node() == &b.node()) {
        return true;
    }
    const auto& x = a.node().data;
    const auto& y = b.node().data;
    if (x.index() != y.index()) {
        return false;
    }
    if (auto* o = std::get_if<OfferNode>(&x)) {
        const auto& p = std::get<OfferNode>(y);
        return o->from == p.from && o->to == p.to && o->choices == p.choices;
    }
    if (auto* m = std::get_if<MuNode>(&x)) {
        const auto& n = std::get<MuNode>(y);
        return m->var == n.var && m->bound == n.bound && m->init == n.init && m->body == n.body;
    }
    if (auto* r = std::get_if<RecurNode>(&x)) {
        const auto& s = std::get<RecurNode>(y);
        return r->depth == s.depth && r->update == s.update;
    }
    return true;
}

/// Everything the monitor needs besides the tree itself.
struct ProtocolSpec {
    std::string name;
    std::vector<std::string> roles;              // exactly two
    Protocol root;
    std::optional<std::set<std::string>> relevant; // nullopt = labels mentioned in the tree
    /// Per-label predicates over raw field names deciding whether a message belongs to this protocol.
    std::map<std::string, RefExpr> filters;
    std::set<std::string> externals;             // names supplied by the state context
    Bindings constants;                          // configuration constants (p, q, MISSION_ITEM_LIMIT, ...)
    bool persistent = false;
    bool retransmission = true;
};

namespace detail {

inline void collect_labels(const Protocol& p, std::set<std::string>& out)
{
    const auto& n = p.node().data;
    if (auto* o = std::get_if<OfferNode>(&n)) {
        for (const auto& c : o->choices) {
            out.insert(c.label);
            collect_labels(c.continuation, out);
        }
    } else if (auto* m = std::get_if<MuNode>(&n)) {
        collect_labels(m->body, out);
    }
}

} // namespace detail

inline std::set<std::string> labels_of(const Protocol& p)
{
    std::set<std::string> out;
    detail::collect_labels(p, out);
    return out;
}

inline std::set<std::string> relevant_labels(const ProtocolSpec& spec)
{
    return spec.relevant ? *spec.relevant : labels_of(spec.root);
}

/// Labels that can be accepted first from the root; used to re-arm finished sessions.
inline std::set<std::string> initial_labels(const Protocol& p)
{
    const auto& n = p.node().data;
    if (auto* o = std::get_if<OfferNode>(&n)) {
        std::set<std::string> out;
        for (const auto& c : o->choices) out.insert(c.label);
        return out;
    }
    if (auto* m = std::get_if<MuNode>(&n)) {
        return initial_labels(m->body);
    }
    return {};
}

namespace detail {

class WellFormed {
public:
    explicit WellFormed(const ProtocolSpec& spec) : spec_(spec) {}

    std::vector<std::string> run()
    {
        if (spec_.roles.size() != 2 || spec_.roles[0] == spec_.roles[1]) {
            problems_.push_back("a protocol needs exactly two distinct roles");
        }
        std::set<std::string> base(spec_.externals.begin(), spec_.externals.end());
        for (const auto& [k, v] : spec_.constants) base.insert(k);
        walk(spec_.root, base, 0);
        const auto mentioned = labels_of(spec_.root);
        if (spec_.relevant) {
            for (const auto& l : mentioned) {
                if (!spec_.relevant->count(l)) problems_.push_back("label " + l + " missing from relevant set");
            }
        }
        const auto relevant = relevant_labels(spec_);
        for (const auto& [label, f] : spec_.filters) {
            if (!relevant.count(label)) problems_.push_back("filter for irrelevant label " + label);
        }
        return problems_;
    }

private:
    void check_vars(const RefExpr& e, const std::set<std::string>& scope, const std::string& where)
    {
        for (const auto& v : free_vars(e)) {
            if (!scope.count(v)) problems_.push_back("unbound variable " + v + " in " + where);
        }
    }

    void walk(const Protocol& p, const std::set<std::string>& scope, std::size_t mu_depth)
    {
        const auto& n = p.node().data;
        if (auto* o = std::get_if<OfferNode>(&n)) {
            if (o->from == o->to) problems_.push_back("offer from a role to itself");
            for (const auto& r : {o->from, o->to}) {
                if (std::find(spec_.roles.begin(), spec_.roles.end(), r) == spec_.roles.end()) {
                    problems_.push_back("unknown role " + r);
                }
            }
            if (o->choices.empty()) problems_.push_back("offer without choices");
            std::set<std::string> seen;
            for (const auto& c : o->choices) {
                if (!seen.insert(c.label).second) problems_.push_back("duplicate label " + c.label + " in one offer");
                auto inner = scope;
                for (const auto& b : c.binders) inner.insert(b.var);
                check_vars(c.refinement, inner, c.label + " refinement");
                walk(c.continuation, inner, mu_depth);
            }
        } else if (auto* m = std::get_if<MuNode>(&n)) {
            check_vars(m->init, scope, "mu " + m->var + " init");
            auto inner = scope;
            inner.insert(m->var);
            check_vars(m->bound, inner, "mu " + m->var + " bound");
            walk(m->body, inner, mu_depth + 1);
        } else if (auto* r = std::get_if<RecurNode>(&n)) {
            if (r->depth >= mu_depth) {
                problems_.push_back("recur depth " + std::to_string(r->depth) + " under " + std::to_string(mu_depth) +
                                    " mu binder(s)");
            }
            check_vars(r->update, scope, "recur update");
        }
    }

    const ProtocolSpec& spec_;
    std::vector<std::string> problems_;
};

} // namespace detail

/// Empty when the spec is well formed.
inline std::vector<std::string> check_well_formed(const ProtocolSpec& spec) { return detail::WellFormed(spec).run(); }

/*
 * Monitor
 */

enum class ViolationReason { UnexpectedLabel, WrongDirection, RefinementFalse, EvaluationError, RecursionBoundViolated };

inline std::string_view to_string(ViolationReason r)
{
    switch (r) {
    case ViolationReason::UnexpectedLabel: return "UnexpectedLabel";
    case ViolationReason::WrongDirection: return "WrongDirection";
    case ViolationReason::RefinementFalse: return "RefinementFalse";
    case ViolationReason::EvaluationError: return "EvaluationError";
    case ViolationReason::RecursionBoundViolated: return "RecursionBoundViolated";
    }
    return "?";
}

inline ViolationReason violation_reason_from_string(std::string_view s)
{
    for (auto r : {ViolationReason::UnexpectedLabel, ViolationReason::WrongDirection, ViolationReason::RefinementFalse,
                   ViolationReason::EvaluationError, ViolationReason::RecursionBoundViolated}) {
        if (to_string(r) == s) return r;
    }
    throw Error(ErrorCode::ParseError, "unknown violation reason " + std::string(s));
}

struct ExpectedStep {
    std::string label;
    Direction direction;
    std::string refinement;

    friend bool operator==(const ExpectedStep&, const ExpectedStep&) = default;
};

struct ViolationReport {
    double timestamp = 0;
    std::string protocol;
    std::string label;
    Direction direction;
    std::vector<ExpectedStep> expected;
    std::string refinement; // source text of the failed refinement, empty if none
    Bindings environment;
    ViolationReason reason = ViolationReason::UnexpectedLabel;
    std::string detail;

    friend bool operator==(const ViolationReport&, const ViolationReport&) = default;
};

inline nlohmann::json to_json(const ViolationReport& r)
{
    auto expected = nlohmann::json::array();
    for (const auto& e : r.expected) {
        expected.push_back({{"label", e.label}, {"from", e.direction.from}, {"to", e.direction.to}, {"refinement", e.refinement}});
    }
    return {{"timestamp", r.timestamp},
            {"protocol", r.protocol},
            {"label", r.label},
            {"from", r.direction.from},
            {"to", r.direction.to},
            {"expected", expected},
            {"refinement", r.refinement},
            {"environment", bindings_to_json(r.environment)},
            {"reason", to_string(r.reason)},
            {"detail", r.detail}};
}

inline ViolationReport violation_from_json(const nlohmann::json& j)
{
    try {
        ViolationReport r;
        r.timestamp = j.at("timestamp").get<double>();
        r.protocol = j.at("protocol").get<std::string>();
        r.label = j.at("label").get<std::string>();
        r.direction = {j.at("from").get<std::string>(), j.at("to").get<std::string>()};
        for (const auto& e : j.at("expected")) {
            r.expected.push_back({e.at("label").get<std::string>(),
                                  {e.at("from").get<std::string>(), e.at("to").get<std::string>()},
                                  e.at("refinement").get<std::string>()});
        }
        r.refinement = j.at("refinement").get<std::string>();
        r.environment = bindings_from_json(j.at("environment"));
        r.reason = violation_reason_from_string(j.at("reason").get<std::string>());
        r.detail = j.at("detail").get<std::string>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("violation report: ") + e.what());
    }
}

struct ObservedMessage {
    Direction direction;
    std::string label;
    FieldMap fields;
    double time = 0; // seconds; stamps reports
};

enum class Status { Running, Completed, Violated };

inline std::string_view to_string(Status s)
{
    switch (s) {
    case Status::Running: return "Running";
    case Status::Completed: return "Completed";
    case Status::Violated: return "Violated";
    }
    return "?";
}

struct MuFrame {
    std::string var;
    Value value;
    RefExpr bound;
    Protocol body;
    std::size_t bindings_mark = 0; // path bindings to keep when the loop is re-entered
};

struct MonitorState {
    std::shared_ptr<const ProtocolSpec> spec;
    std::shared_ptr<const std::set<std::string>> relevant;
    Env start_externals;
    Protocol cursor;
    bool normalized = false;
    std::vector<MuFrame> frames;
    std::vector<std::pair<std::string, Value>> bindings;
    Status status = Status::Running;
    std::optional<ViolationReport> violation;

    struct Last {
        Direction direction;
        std::string label;
        std::vector<std::pair<std::string, std::optional<Value>>> bound;
    };
    std::optional<Last> last_accepted;

    /// Value of a loop variable, innermost frame first.
    [[nodiscard]] const Value* frame_value(std::string_view var) const
    {
        for (auto it = frames.rbegin(); it != frames.rend(); ++it) {
            if (it->var == var) return &it->value;
        }
        return nullptr;
    }
};

enum class StepKind { Accepted, Completed, Violation, Irrelevant, Retransmission };

inline std::string_view to_string(StepKind k)
{
    switch (k) {
    case StepKind::Accepted: return "Accepted";
    case StepKind::Completed: return "Completed";
    case StepKind::Violation: return "Violation";
    case StepKind::Irrelevant: return "Irrelevant";
    case StepKind::Retransmission: return "Retransmission";
    }
    return "?";
}

struct StepResult {
    StepKind kind = StepKind::Irrelevant;
    MonitorState state;
    std::optional<ViolationReport> report;
};

namespace detail {

inline Env monitor_env(const MonitorState& s, const Env& externals)
{
    Env env = externals.outer(s.start_externals).outer(s.spec->constants);
    for (const auto& f : s.frames) {
        env = env.inner(Bindings{{f.var, f.value}});
    }
    Bindings path;
    for (const auto& [k, v] : s.bindings) path.insert_or_assign(k, v);
    return env.inner(std::move(path));
}

inline Bindings snapshot(const RefExpr& e, const Env& env)
{
    Bindings out;
    for (const auto& v : free_vars(e)) {
        if (const Value* val = env.lookup(v)) out.emplace(v, *val);
    }
    return out;
}

inline std::vector<ExpectedStep> choices_at(const Protocol& cursor)
{
    std::vector<ExpectedStep> out;
    if (auto* o = std::get_if<OfferNode>(&cursor.node().data)) {
        for (const auto& c : o->choices) out.push_back({c.label, {o->from, o->to}, to_source(c.refinement)});
    }
    return out;
}

/// Pushes/updates Mu frames until the cursor is an Offer or End; returns the failing bound on violation.
inline std::optional<ViolationReport> normalize(MonitorState& s, const Env& externals)
{
    for (;;) {
        const auto& n = s.cursor.node().data;
        if (auto* m = std::get_if<MuNode>(&n)) {
            const Env env = monitor_env(s, externals);
            auto init = eval_expr(m->init, env);
            if (!init.ok()) {
                ViolationReport r;
                r.refinement = to_source(m->init);
                r.environment = snapshot(m->init, env);
                r.reason = ViolationReason::RecursionBoundViolated;
                r.detail = "mu " + m->var + " init: " + init.error().detail;
                return r;
            }
            s.frames.push_back(MuFrame{m->var, init.value(), m->bound, m->body, s.bindings.size()});
        } else if (auto* rec = std::get_if<RecurNode>(&n)) {
            const Env env = monitor_env(s, externals);
            auto upd = eval_expr(rec->update, env);
            const std::size_t target = s.frames.size() - 1 - rec->depth;
            if (!upd.ok()) {
                ViolationReport r;
                r.refinement = to_source(rec->update);
                r.environment = snapshot(rec->update, env);
                r.reason = ViolationReason::RecursionBoundViolated;
                r.detail = "recur " + s.frames[target].var + " update: " + upd.error().detail;
                return r;
            }
            s.frames.resize(target + 1);
            s.frames.back().value = upd.value();
            s.bindings.resize(s.frames.back().bindings_mark);
        } else {
            s.normalized = true;
            return std::nullopt;
        }
        // Both branches leave the frame to (re)enter on top.
        const MuFrame& top = s.frames.back();
        const Env env = monitor_env(s, externals);
        auto held = eval_pred(top.bound, env);
        if (!held) {
            ViolationReport r;
            r.refinement = to_source(top.bound);
            r.environment = snapshot(top.bound, env);
            r.reason = ViolationReason::RecursionBoundViolated;
            r.detail = "bound of " + top.var + (held.error ? ": " + held.error->detail : " is false");
            return r;
        }
        s.cursor = top.body;
    }
}

inline Env field_env(const FieldMap& fields)
{
    Bindings b;
    for (const auto& [k, v] : fields.fields) b.insert_or_assign(k, v);
    return Env(std::move(b));
}

} // namespace detail

/// Throws Error(IllFormedProtocol) when the spec fails the well-formedness check.
inline MonitorState start(std::shared_ptr<const ProtocolSpec> spec, Env externals = {})
{
    if (!spec) {
        throw Error(ErrorCode::IllFormedProtocol, "null protocol");
    }
    if (auto problems = check_well_formed(*spec); !problems.empty()) {
        std::string msg = spec->name + ":";
        for (const auto& p : problems) msg += " " + p + ";";
        throw Error(ErrorCode::IllFormedProtocol, msg);
    }
    MonitorState s;
    s.relevant = std::make_shared<const std::set<std::string>>(relevant_labels(*spec));
    s.cursor = spec->root;
    s.start_externals = std::move(externals);
    s.spec = std::move(spec);
    if (s.cursor.is_end()) {
        s.status = Status::Completed;
        s.normalized = true;
    } else if (std::holds_alternative<OfferNode>(s.cursor.node().data)) {
        s.normalized = true;
    }
    return s;
}

inline MonitorState start(const ProtocolSpec& spec, Env externals = {})
{
    return start(std::make_shared<const ProtocolSpec>(spec), std::move(externals));
}

/// Whether `msg` belongs to the protocol: relevant label and filter not definitely false.
inline bool is_relevant(const MonitorState& s, const ObservedMessage& msg, const Env& externals = {})
{
    if (!s.relevant->count(msg.label)) {
        return false;
    }
    auto f = s.spec->filters.find(msg.label);
    if (f == s.spec->filters.end()) {
        return true;
    }
    const Env env = detail::field_env(msg.fields).outer(externals).outer(s.start_externals).outer(s.spec->constants);
    auto r = eval_pred(f->second, env);
    return r.holds || r.reason == PredReason::EvaluationError;
}

/// The message repeats the last accepted one in direction, label and bound fields.
inline bool is_retransmission(const MonitorState& s, const ObservedMessage& msg)
{
    if (!s.spec->retransmission || s.spec->persistent || !s.last_accepted) {
        return false;
    }
    const auto& last = *s.last_accepted;
    if (last.direction != msg.direction || last.label != msg.label) {
        return false;
    }
    for (const auto& [field, value] : last.bound) {
        const Value* now = msg.fields.get(field);
        if (now == nullptr ? value.has_value() : (!value || !(*now == *value))) return false;
    }
    return true;
}

/// Choices at the normalized cursor; empty when not Running.
inline std::vector<ExpectedStep> expected_next(const MonitorState& s)
{
    if (s.status != Status::Running) {
        return {};
    }
    if (s.normalized) {
        return detail::choices_at(s.cursor);
    }
    MonitorState copy = s;
    if (detail::normalize(copy, {})) {
        return {};
    }
    return detail::choices_at(copy.cursor);
}

inline StepResult step(const MonitorState& state, const ObservedMessage& msg, const Env& externals = {})
{
    StepResult out{StepKind::Irrelevant, state, std::nullopt};
    MonitorState& s = out.state;
    if (s.status == Status::Completed) {
        out.kind = StepKind::Completed;
        return out;
    }
    if (s.status == Status::Violated) {
        out.kind = StepKind::Violation;
        out.report = s.violation;
        return out;
    }
    if (!is_relevant(s, msg, externals)) {
        return out;
    }
    if (is_retransmission(s, msg)) {
        out.kind = StepKind::Retransmission;
        return out;
    }

    auto violate = [&](ViolationReport r, std::vector<ExpectedStep> expected) {
        r.timestamp = msg.time;
        r.protocol = s.spec->name;
        r.label = msg.label;
        r.direction = msg.direction;
        r.expected = std::move(expected);
        s.status = Status::Violated;
        s.violation = r;
        out.kind = StepKind::Violation;
        out.report = std::move(r);
        return out;
    };

    if (!s.normalized) {
        if (auto r = detail::normalize(s, externals)) {
            return violate(std::move(*r), {});
        }
    }
    const auto expected = detail::choices_at(s.cursor);
    const auto* offer = std::get_if<OfferNode>(&s.cursor.node().data);
    if (offer == nullptr) {
        // A normalized Running cursor is always an Offer.
        ViolationReport r;
        r.reason = ViolationReason::UnexpectedLabel;
        r.detail = "protocol already at end";
        return violate(std::move(r), {});
    }
    if (msg.direction != Direction{offer->from, offer->to}) {
        ViolationReport r;
        r.reason = ViolationReason::WrongDirection;
        r.detail = "expected " + offer->from + "->" + offer->to;
        return violate(std::move(r), expected);
    }
    const auto choice = std::find_if(offer->choices.begin(), offer->choices.end(),
                                     [&](const Choice& c) { return c.label == msg.label; });
    if (choice == offer->choices.end()) {
        ViolationReport r;
        r.reason = ViolationReason::UnexpectedLabel;
        r.detail = "label not offered here";
        return violate(std::move(r), expected);
    }

    Bindings local;
    MonitorState::Last last{msg.direction, msg.label, {}};
    for (const auto& b : choice->binders) {
        const Value* v = msg.fields.get(b.field);
        if (v != nullptr) local.insert_or_assign(b.var, *v);
        last.bound.emplace_back(b.field, v ? std::optional<Value>(*v) : std::nullopt);
    }
    const Env env = detail::monitor_env(s, externals).inner(local);
    auto held = eval_pred(choice->refinement, env);
    if (!held) {
        ViolationReport r;
        r.refinement = to_source(choice->refinement);
        r.environment = detail::snapshot(choice->refinement, env);
        r.reason = held.reason == PredReason::EvaluationError ? ViolationReason::EvaluationError
                                                              : ViolationReason::RefinementFalse;
        r.detail = held.error ? std::string(to_string(held.error->kind)) + ": " + held.error->detail
                              : std::string(to_string(held.reason));
        return violate(std::move(r), expected);
    }

    for (const auto& b : choice->binders) {
        if (auto it = local.find(b.var); it != local.end()) s.bindings.emplace_back(b.var, it->second);
    }
    s.cursor = choice->continuation;
    s.normalized = false;
    if (auto r = detail::normalize(s, externals)) {
        return violate(std::move(*r), expected);
    }
    s.last_accepted = std::move(last);
    if (s.cursor.is_end()) {
        s.status = Status::Completed;
        out.kind = StepKind::Completed;
    } else {
        out.kind = StepKind::Accepted;
    }
    return out;
}

/// Re-evaluates every live frame bound; used to assert the frame-guard invariant.
inline bool frames_hold(const MonitorState& s, const Env& externals = {})
{
    MonitorState probe = s;
    while (!probe.frames.empty()) {
        const Env env = detail::monitor_env(probe, externals);
        if (!eval_pred(probe.frames.back().bound, env)) return false;
        probe.frames.pop_back();
    }
    return true;
}

} // namespace datum

#endif
