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

#ifndef DATUM_REFINEMENT_HPP
#define DATUM_REFINEMENT_HPP

#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace datum {

/*
 * Runtime values
 */

struct EnumValue {
    std::string enum_name;
    std::string entry;
    std::int64_t value = 0;

    friend bool operator==(const EnumValue&, const EnumValue&) = default;
};

class Value;
using ValueList = std::vector<Value>;

enum class ValueKind { Int, Float, Bool, Enum, Str, Array };

inline std::string_view to_string(ValueKind kind)
{
    switch (kind) {
    case ValueKind::Int: return "Int";
    case ValueKind::Float: return "Float";
    case ValueKind::Bool: return "Bool";
    case ValueKind::Enum: return "Enum";
    case ValueKind::Str: return "Str";
    case ValueKind::Array: return "Array";
    }
    return "?";
}

/**
 * A typed runtime value: payload fields, loop variables, vehicle state and
 * configuration constants all evaluate to one of these.
 * Arrays are homogeneous; the constructor enforces it.
 */
class Value {
public:
    using Storage = std::variant<std::int64_t, double, bool, EnumValue, std::string, ValueList>;

    Value() : data_(std::int64_t{0}) {}

    static Value integer(std::int64_t v) { return Value(Storage(std::in_place_index<0>, v)); }
    static Value real(double v) { return Value(Storage(std::in_place_index<1>, v)); }
    static Value boolean(bool v) { return Value(Storage(std::in_place_index<2>, v)); }
    static Value enumeration(std::string enum_name, std::string entry, std::int64_t v)
    {
        return Value(Storage(std::in_place_index<3>, EnumValue{std::move(enum_name), std::move(entry), v}));
    }
    static Value string(std::string v) { return Value(Storage(std::in_place_index<4>, std::move(v))); }
    static Value array(ValueList items)
    {
        for (std::size_t i = 1; i < items.size(); ++i) {
            if (items[i].kind() != items[0].kind()) {
                throw std::invalid_argument("array elements must share one variant");
            }
        }
        return Value(Storage(std::in_place_index<5>, std::move(items)));
    }

    [[nodiscard]] ValueKind kind() const noexcept { return static_cast<ValueKind>(data_.index()); }

    [[nodiscard]] bool is_int() const noexcept { return kind() == ValueKind::Int; }
    [[nodiscard]] bool is_float() const noexcept { return kind() == ValueKind::Float; }
    [[nodiscard]] bool is_bool() const noexcept { return kind() == ValueKind::Bool; }
    [[nodiscard]] bool is_enum() const noexcept { return kind() == ValueKind::Enum; }
    [[nodiscard]] bool is_str() const noexcept { return kind() == ValueKind::Str; }
    [[nodiscard]] bool is_array() const noexcept { return kind() == ValueKind::Array; }
    [[nodiscard]] bool is_numeric() const noexcept { return is_int() || is_float() || is_enum(); }

    [[nodiscard]] std::int64_t as_int() const { return std::get<0>(data_); }
    [[nodiscard]] double as_float() const { return std::get<1>(data_); }
    [[nodiscard]] bool as_bool() const { return std::get<2>(data_); }
    [[nodiscard]] const EnumValue& as_enum() const { return std::get<3>(data_); }
    [[nodiscard]] const std::string& as_str() const { return std::get<4>(data_); }
    [[nodiscard]] const ValueList& as_array() const { return std::get<5>(data_); }

    [[nodiscard]] const Storage& storage() const noexcept { return data_; }

    /// Structural identity (same variant, same payload). Not the `==` of the expression language.
    friend bool operator==(const Value& a, const Value& b) { return a.data_ == b.data_; }

private:
    explicit Value(Storage s) : data_(std::move(s)) {}

    Storage data_;
};

/*
 * Expression AST
 */

enum class BinOp { Add, Sub, Mul, Lt, Le, Gt, Ge, Eq, Ne, And, Or };

inline std::string_view symbol(BinOp op)
{
    switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::Lt: return "<";
    case BinOp::Le: return "<=";
    case BinOp::Gt: return ">";
    case BinOp::Ge: return ">=";
    case BinOp::Eq: return "==";
    case BinOp::Ne: return "!=";
    case BinOp::And: return "&&";
    case BinOp::Or: return "||";
    }
    return "?";
}

struct ExprNode;

/// Immutable, cheaply copyable handle to an expression tree.
class RefExpr {
public:
    RefExpr();

    static RefExpr lit(Value v);
    static RefExpr var(std::string name);
    static RefExpr neg(RefExpr operand);
    static RefExpr logical_not(RefExpr operand);
    static RefExpr bin(BinOp op, RefExpr lhs, RefExpr rhs);

    [[nodiscard]] const ExprNode& node() const noexcept { return *node_; }

    friend bool operator==(const RefExpr& a, const RefExpr& b);

private:
    explicit RefExpr(std::shared_ptr<const ExprNode> n) : node_(std::move(n)) {}

    std::shared_ptr<const ExprNode> node_;
};

struct LitExpr {
    Value value;
};
struct VarExpr {
    std::string name;
};
struct NegExpr {
    RefExpr operand;
};
struct NotExpr {
    RefExpr operand;
};
struct BinExpr {
    BinOp op;
    RefExpr lhs;
    RefExpr rhs;
};

struct ExprNode {
    std::variant<LitExpr, VarExpr, NegExpr, NotExpr, BinExpr> data;
};

inline RefExpr::RefExpr() : node_(std::make_shared<const ExprNode>(ExprNode{LitExpr{Value::boolean(true)}})) {}

inline RefExpr RefExpr::lit(Value v) { return RefExpr(std::make_shared<const ExprNode>(ExprNode{LitExpr{std::move(v)}})); }
inline RefExpr RefExpr::var(std::string name)
{
    return RefExpr(std::make_shared<const ExprNode>(ExprNode{VarExpr{std::move(name)}}));
}
inline RefExpr RefExpr::neg(RefExpr operand)
{
    return RefExpr(std::make_shared<const ExprNode>(ExprNode{NegExpr{std::move(operand)}}));
}
inline RefExpr RefExpr::logical_not(RefExpr operand)
{
    return RefExpr(std::make_shared<const ExprNode>(ExprNode{NotExpr{std::move(operand)}}));
}
inline RefExpr RefExpr::bin(BinOp op, RefExpr lhs, RefExpr rhs)
{
    return RefExpr(std::make_shared<const ExprNode>(ExprNode{BinExpr{op, std::move(lhs), std::move(rhs)}}));
}

inline bool operator==(const RefExpr& a, const RefExpr& b)
{
    if (a.node_ == b.node_) {
        return true;
    }
    const auto& x = a.node_->data;
    const auto& y = b.node_->data;
    if (x.index() != y.index()) {
        return false;
    }
    if (auto* l = std::get_if<LitExpr>(&x)) {
        return l->value == std::get<LitExpr>(y).value;
    }
    if (auto* v = std::get_if<VarExpr>(&x)) {
        return v->name == std::get<VarExpr>(y).name;
    }
    if (auto* n = std::get_if<NegExpr>(&x)) {
        return n->operand == std::get<NegExpr>(y).operand;
    }
    if (auto* n = std::get_if<NotExpr>(&x)) {
        return n->operand == std::get<NotExpr>(y).operand;
    }
    const auto& bx = std::get<BinExpr>(x);
    const auto& by = std::get<BinExpr>(y);
    return bx.op == by.op && bx.lhs == by.lhs && bx.rhs == by.rhs;
}

/// Construction shorthands, e.g. `var("N") >= lit(1) && var("N") < var("LIMIT")`.
namespace expr {

inline RefExpr lit(Value v) { return RefExpr::lit(std::move(v)); }
inline RefExpr lit(int v) { return RefExpr::lit(Value::integer(v)); }
inline RefExpr lit(std::int64_t v) { return RefExpr::lit(Value::integer(v)); }
inline RefExpr lit(double v) { return RefExpr::lit(Value::real(v)); }
inline RefExpr lit(bool v) { return RefExpr::lit(Value::boolean(v)); }
inline RefExpr lit(const char* v) { return RefExpr::lit(Value::string(v)); }
inline RefExpr var(std::string name) { return RefExpr::var(std::move(name)); }

inline RefExpr operator+(RefExpr a, RefExpr b) { return RefExpr::bin(BinOp::Add, std::move(a), std::move(b)); }
inline RefExpr operator-(RefExpr a, RefExpr b) { return RefExpr::bin(BinOp::Sub, std::move(a), std::move(b)); }
inline RefExpr operator*(RefExpr a, RefExpr b) { return RefExpr::bin(BinOp::Mul, std::move(a), std::move(b)); }
inline RefExpr operator<(RefExpr a, RefExpr b) { return RefExpr::bin(BinOp::Lt, std::move(a), std::move(b)); }
inline RefExpr operator<=(RefExpr a, RefExpr b) { return RefExpr::bin(BinOp::Le, std::move(a), std::move(b)); }
inline RefExpr operator>(RefExpr a, RefExpr b) { return RefExpr::bin(BinOp::Gt, std::move(a), std::move(b)); }
inline RefExpr operator>=(RefExpr a, RefExpr b) { return RefExpr::bin(BinOp::Ge, std::move(a), std::move(b)); }
inline RefExpr eq(RefExpr a, RefExpr b) { return RefExpr::bin(BinOp::Eq, std::move(a), std::move(b)); }
inline RefExpr ne(RefExpr a, RefExpr b) { return RefExpr::bin(BinOp::Ne, std::move(a), std::move(b)); }
inline RefExpr operator&&(RefExpr a, RefExpr b) { return RefExpr::bin(BinOp::And, std::move(a), std::move(b)); }
inline RefExpr operator||(RefExpr a, RefExpr b) { return RefExpr::bin(BinOp::Or, std::move(a), std::move(b)); }
inline RefExpr operator!(RefExpr a) { return RefExpr::logical_not(std::move(a)); }
inline RefExpr operator-(RefExpr a) { return RefExpr::neg(std::move(a)); }

} // namespace expr

/*
 * Environments
 */

using Bindings = std::map<std::string, Value, std::less<>>;

/**
 * Ordered stack of binding layers, innermost first. Layers are shared and
 * never mutated once pushed, so copying an Env is a handful of pointer copies.
 */
class Env {
public:
    Env() = default;
    Env(std::initializer_list<std::pair<const std::string, Value>> init)
    {
        layers_.push_back(std::make_shared<const Bindings>(init));
    }
    explicit Env(Bindings layer) { layers_.push_back(std::make_shared<const Bindings>(std::move(layer))); }

    /// Returns a new Env with `layer` shadowing every existing layer.
    [[nodiscard]] Env inner(std::shared_ptr<const Bindings> layer) const
    {
        Env out;
        out.layers_.reserve(layers_.size() + 1);
        out.layers_.push_back(std::move(layer));
        out.layers_.insert(out.layers_.end(), layers_.begin(), layers_.end());
        return out;
    }
    [[nodiscard]] Env inner(Bindings layer) const { return inner(std::make_shared<const Bindings>(std::move(layer))); }

    /// Returns a new Env with `layer` below every existing layer.
    [[nodiscard]] Env outer(std::shared_ptr<const Bindings> layer) const
    {
        Env out = *this;
        out.layers_.push_back(std::move(layer));
        return out;
    }
    [[nodiscard]] Env outer(Bindings layer) const { return outer(std::make_shared<const Bindings>(std::move(layer))); }

    /// Appends all layers of `other` below this Env's layers.
    [[nodiscard]] Env outer(const Env& other) const
    {
        Env out = *this;
        out.layers_.insert(out.layers_.end(), other.layers_.begin(), other.layers_.end());
        return out;
    }

    [[nodiscard]] const Value* lookup(std::string_view name) const
    {
        for (const auto& layer : layers_) {
            if (auto it = layer->find(name); it != layer->end()) {
                return &it->second;
            }
        }
        return nullptr;
    }

    [[nodiscard]] bool contains(std::string_view name) const { return lookup(name) != nullptr; }

    /// All visible names (innermost binding wins).
    [[nodiscard]] Bindings flatten() const
    {
        Bindings out;
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
            for (const auto& [k, v] : **it) {
                out.insert_or_assign(k, v);
            }
        }
        return out;
    }

    [[nodiscard]] std::size_t depth() const noexcept { return layers_.size(); }

private:
    std::vector<std::shared_ptr<const Bindings>> layers_;
};

/*
 * Evaluation
 */

enum class EvalErrorKind { UnboundVariable, TypeMismatch, Overflow, PrecisionLoss };

inline std::string_view to_string(EvalErrorKind kind)
{
    switch (kind) {
    case EvalErrorKind::UnboundVariable: return "UnboundVariable";
    case EvalErrorKind::TypeMismatch: return "TypeMismatch";
    case EvalErrorKind::Overflow: return "Overflow";
    case EvalErrorKind::PrecisionLoss: return "PrecisionLoss";
    }
    return "?";
}

struct EvalError {
    EvalErrorKind kind;
    std::string detail;

    friend bool operator==(const EvalError&, const EvalError&) = default;
};

/// Either a value or the reason evaluation stopped.
class EvalResult {
public:
    EvalResult(Value v) : data_(std::move(v)) {}     // NOLINT(google-explicit-constructor)
    EvalResult(EvalError e) : data_(std::move(e)) {} // NOLINT(google-explicit-constructor)

    [[nodiscard]] bool ok() const noexcept { return data_.index() == 0; }
    [[nodiscard]] const Value& value() const { return std::get<0>(data_); }
    [[nodiscard]] const EvalError& error() const { return std::get<1>(data_); }

    friend bool operator==(const EvalResult&, const EvalResult&) = default;

private:
    std::variant<Value, EvalError> data_;
};

namespace detail {

inline constexpr std::int64_t kExactFloatLimit = std::int64_t{1} << 53;

inline EvalError mismatch(BinOp op, const Value& a, const Value& b)
{
    return EvalError{EvalErrorKind::TypeMismatch, std::string(symbol(op)) + " on " + std::string(to_string(a.kind())) +
                                                      "," + std::string(to_string(b.kind()))};
}

inline std::int64_t numeric_int(const Value& v) { return v.is_enum() ? v.as_enum().value : v.as_int(); }

/// Int (or enum ordinal) to double; magnitudes at or beyond 2^53 may not convert exactly.
inline std::optional<double> promote(const Value& v)
{
    if (v.is_float()) {
        return v.as_float();
    }
    const std::int64_t i = numeric_int(v);
    if (i >= kExactFloatLimit || i <= -kExactFloatLimit) {
        return std::nullopt;
    }
    return static_cast<double>(i);
}

template <typename Cmp>
EvalResult compare_numeric(BinOp op, const Value& a, const Value& b, Cmp cmp)
{
    if (!a.is_numeric() || !b.is_numeric()) {
        return mismatch(op, a, b);
    }
    if (!a.is_float() && !b.is_float()) {
        return Value::boolean(cmp(numeric_int(a), numeric_int(b)));
    }
    auto x = promote(a);
    auto y = promote(b);
    if (!x || !y) {
        return EvalError{EvalErrorKind::PrecisionLoss, "integer operand of " + std::string(symbol(op)) +
                                                           " exceeds exact float range"};
    }
    return Value::boolean(cmp(*x, *y));
}

/// Language-level equality: numeric kinds compare by value, others structurally.
inline std::optional<bool> equal_values(const Value& a, const Value& b, bool& precision_lost)
{
    if (a.is_numeric() && b.is_numeric()) {
        if (!a.is_float() && !b.is_float()) {
            return numeric_int(a) == numeric_int(b);
        }
        auto x = promote(a);
        auto y = promote(b);
        if (!x || !y) {
            precision_lost = true;
            return std::nullopt;
        }
        return *x == *y;
    }
    if (a.kind() != b.kind()) {
        return std::nullopt;
    }
    switch (a.kind()) {
    case ValueKind::Bool: return a.as_bool() == b.as_bool();
    case ValueKind::Str: return a.as_str() == b.as_str();
    case ValueKind::Array: {
        const auto& xs = a.as_array();
        const auto& ys = b.as_array();
        if (xs.size() != ys.size()) {
            return false;
        }
        for (std::size_t i = 0; i < xs.size(); ++i) {
            auto r = equal_values(xs[i], ys[i], precision_lost);
            if (!r) {
                return std::nullopt;
            }
            if (!*r) {
                return false;
            }
        }
        return true;
    }
    default: return std::nullopt;
    }
}

inline EvalResult arith(BinOp op, const Value& a, const Value& b)
{
    const bool a_num = a.is_int() || a.is_float();
    const bool b_num = b.is_int() || b.is_float();
    if (!a_num || !b_num) {
        return mismatch(op, a, b);
    }
    if (a.is_int() && b.is_int()) {
        std::int64_t out = 0;
        bool overflow = false;
        switch (op) {
        case BinOp::Add: overflow = __builtin_add_overflow(a.as_int(), b.as_int(), &out); break;
        case BinOp::Sub: overflow = __builtin_sub_overflow(a.as_int(), b.as_int(), &out); break;
        default: overflow = __builtin_mul_overflow(a.as_int(), b.as_int(), &out); break;
        }
        if (overflow) {
            return EvalError{EvalErrorKind::Overflow, "integer overflow in " + std::string(symbol(op))};
        }
        return Value::integer(out);
    }
    auto x = promote(a);
    auto y = promote(b);
    if (!x || !y) {
        return EvalError{EvalErrorKind::PrecisionLoss,
                         "integer operand of " + std::string(symbol(op)) + " exceeds exact float range"};
    }
    switch (op) {
    case BinOp::Add: return Value::real(*x + *y);
    case BinOp::Sub: return Value::real(*x - *y);
    default: return Value::real(*x * *y);
    }
}

} // namespace detail

/**
 * Evaluates `e` over `env`. Total: every failure comes back as an EvalError.
 * `&&` and `||` short-circuit left to right; Int mixed with Float promotes to
 * Float; enum values compare by their numeric ordinal; integer arithmetic is
 * overflow-checked.
 */
inline EvalResult eval_expr(const RefExpr& e, const Env& env)
{
    const auto& n = e.node().data;
    if (auto* lit = std::get_if<LitExpr>(&n)) {
        return lit->value;
    }
    if (auto* v = std::get_if<VarExpr>(&n)) {
        if (const Value* found = env.lookup(v->name)) {
            return *found;
        }
        return EvalError{EvalErrorKind::UnboundVariable, v->name};
    }
    if (auto* neg = std::get_if<NegExpr>(&n)) {
        auto r = eval_expr(neg->operand, env);
        if (!r.ok()) {
            return r;
        }
        const Value& x = r.value();
        if (x.is_int()) {
            if (x.as_int() == std::numeric_limits<std::int64_t>::min()) {
                return EvalError{EvalErrorKind::Overflow, "integer overflow in unary -"};
            }
            return Value::integer(-x.as_int());
        }
        if (x.is_float()) {
            return Value::real(-x.as_float());
        }
        return EvalError{EvalErrorKind::TypeMismatch, "unary - on " + std::string(to_string(x.kind()))};
    }
    if (auto* nt = std::get_if<NotExpr>(&n)) {
        auto r = eval_expr(nt->operand, env);
        if (!r.ok()) {
            return r;
        }
        if (!r.value().is_bool()) {
            return EvalError{EvalErrorKind::TypeMismatch, "! on " + std::string(to_string(r.value().kind()))};
        }
        return Value::boolean(!r.value().as_bool());
    }

    const auto& b = std::get<BinExpr>(n);
    if (b.op == BinOp::And || b.op == BinOp::Or) {
        auto lhs = eval_expr(b.lhs, env);
        if (!lhs.ok()) {
            return lhs;
        }
        if (!lhs.value().is_bool()) {
            return EvalError{EvalErrorKind::TypeMismatch,
                             std::string(symbol(b.op)) + " on " + std::string(to_string(lhs.value().kind()))};
        }
        const bool l = lhs.value().as_bool();
        if (b.op == BinOp::And && !l) {
            return Value::boolean(false);
        }
        if (b.op == BinOp::Or && l) {
            return Value::boolean(true);
        }
        auto rhs = eval_expr(b.rhs, env);
        if (!rhs.ok()) {
            return rhs;
        }
        if (!rhs.value().is_bool()) {
            return EvalError{EvalErrorKind::TypeMismatch,
                             std::string(symbol(b.op)) + " on " + std::string(to_string(rhs.value().kind()))};
        }
        return rhs.value();
    }

    auto lhs = eval_expr(b.lhs, env);
    if (!lhs.ok()) {
        return lhs;
    }
    auto rhs = eval_expr(b.rhs, env);
    if (!rhs.ok()) {
        return rhs;
    }
    const Value& x = lhs.value();
    const Value& y = rhs.value();

    switch (b.op) {
    case BinOp::Add:
    case BinOp::Sub:
    case BinOp::Mul: return detail::arith(b.op, x, y);
    case BinOp::Lt: return detail::compare_numeric(b.op, x, y, [](auto p, auto q) { return p < q; });
    case BinOp::Le: return detail::compare_numeric(b.op, x, y, [](auto p, auto q) { return p <= q; });
    case BinOp::Gt: return detail::compare_numeric(b.op, x, y, [](auto p, auto q) { return p > q; });
    case BinOp::Ge: return detail::compare_numeric(b.op, x, y, [](auto p, auto q) { return p >= q; });
    case BinOp::Eq:
    case BinOp::Ne: {
        bool precision_lost = false;
        auto r = detail::equal_values(x, y, precision_lost);
        if (!r) {
            if (precision_lost) {
                return EvalError{EvalErrorKind::PrecisionLoss, "integer operand of " + std::string(symbol(b.op)) +
                                                                   " exceeds exact float range"};
            }
            return detail::mismatch(b.op, x, y);
        }
        return Value::boolean(b.op == BinOp::Eq ? *r : !*r);
    }
    default: break;
    }
    return detail::mismatch(b.op, x, y);
}

enum class PredReason { Holds, ValueFalse, NonBoolean, EvaluationError };

inline std::string_view to_string(PredReason r)
{
    switch (r) {
    case PredReason::Holds: return "Holds";
    case PredReason::ValueFalse: return "ValueFalse";
    case PredReason::NonBoolean: return "NonBoolean";
    case PredReason::EvaluationError: return "EvaluationError";
    }
    return "?";
}

struct PredResult {
    bool holds = false;
    PredReason reason = PredReason::ValueFalse;
    std::optional<EvalError> error;

    explicit operator bool() const noexcept { return holds; }
};

/// True only when the expression evaluates to BoolV true; anything else fails closed.
inline PredResult eval_pred(const RefExpr& e, const Env& env)
{
    auto r = eval_expr(e, env);
    if (!r.ok()) {
        return PredResult{false, PredReason::EvaluationError, r.error()};
    }
    if (!r.value().is_bool()) {
        return PredResult{false, PredReason::NonBoolean, std::nullopt};
    }
    if (!r.value().as_bool()) {
        return PredResult{false, PredReason::ValueFalse, std::nullopt};
    }
    return PredResult{true, PredReason::Holds, std::nullopt};
}

namespace detail {
inline void collect_vars(const RefExpr& e, std::set<std::string>& out)
{
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, VarExpr>) {
                out.insert(n.name);
            } else if constexpr (std::is_same_v<T, NegExpr> || std::is_same_v<T, NotExpr>) {
                collect_vars(n.operand, out);
            } else if constexpr (std::is_same_v<T, BinExpr>) {
                collect_vars(n.lhs, out);
                collect_vars(n.rhs, out);
            }
        },
        e.node().data);
}
} // namespace detail

inline std::set<std::string> free_vars(const RefExpr& e)
{
    std::set<std::string> out;
    detail::collect_vars(e, out);
    return out;
}

/*
 * Printing
 */

inline std::string format_double(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v < 0 ? "-inf" : "inf";
    }
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    std::string s(buf, end);
    if (s.find_first_of(".e") == std::string::npos) {
        s += ".0";
    }
    return s;
}

inline std::string quote_string(std::string_view s)
{
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') {
            out += '\\';
        }
        out += c;
    }
    out += '"';
    return out;
}

inline std::string to_source(const Value& v)
{
    switch (v.kind()) {
    case ValueKind::Int: return std::to_string(v.as_int());
    case ValueKind::Float: return format_double(v.as_float());
    case ValueKind::Bool: return v.as_bool() ? "true" : "false";
    case ValueKind::Enum: return v.as_enum().enum_name + "." + v.as_enum().entry;
    case ValueKind::Str: return quote_string(v.as_str());
    case ValueKind::Array: {
        std::string out = "[";
        for (std::size_t i = 0; i < v.as_array().size(); ++i) {
            out += (i ? ", " : "") + to_source(v.as_array()[i]);
        }
        return out + "]";
    }
    }
    return "?";
}

namespace detail {

inline int precedence(BinOp op)
{
    switch (op) {
    case BinOp::Or: return 1;
    case BinOp::And: return 2;
    case BinOp::Eq:
    case BinOp::Ne: return 3;
    case BinOp::Lt:
    case BinOp::Le:
    case BinOp::Gt:
    case BinOp::Ge: return 4;
    case BinOp::Add:
    case BinOp::Sub: return 5;
    case BinOp::Mul: return 6;
    }
    return 0;
}

inline constexpr int kUnaryPrecedence = 7;
inline constexpr int kAtomPrecedence = 8;

inline int precedence(const RefExpr& e)
{
    const auto& n = e.node().data;
    if (auto* b = std::get_if<BinExpr>(&n)) {
        return precedence(b->op);
    }
    if (std::holds_alternative<NegExpr>(n) || std::holds_alternative<NotExpr>(n)) {
        return kUnaryPrecedence;
    }
    return kAtomPrecedence;
}

inline std::string print(const RefExpr& e);

inline std::string print_child(const RefExpr& child, int min_prec)
{
    std::string s = print(child);
    return precedence(child) < min_prec ? "(" + s + ")" : s;
}

inline std::string print_unary_operand(const RefExpr& operand)
{
    // A negative literal directly after a prefix operator would re-parse differently.
    if (auto* l = std::get_if<LitExpr>(&operand.node().data)) {
        const auto& v = l->value;
        if ((v.is_int() && v.as_int() < 0) || (v.is_float() && std::signbit(v.as_float()))) {
            return "(" + print(operand) + ")";
        }
    }
    return print_child(operand, kUnaryPrecedence);
}

inline std::string print(const RefExpr& e)
{
    const auto& n = e.node().data;
    if (auto* l = std::get_if<LitExpr>(&n)) {
        return to_source(l->value);
    }
    if (auto* v = std::get_if<VarExpr>(&n)) {
        return v->name;
    }
    if (auto* neg = std::get_if<NegExpr>(&n)) {
        // "-3" parses back as a literal, so a negated literal keeps its parentheses.
        if (std::holds_alternative<LitExpr>(neg->operand.node().data)) {
            return "-(" + print(neg->operand) + ")";
        }
        return "-" + print_unary_operand(neg->operand);
    }
    if (auto* nt = std::get_if<NotExpr>(&n)) {
        return "!" + print_unary_operand(nt->operand);
    }
    const auto& b = std::get<BinExpr>(n);
    const int p = precedence(b.op);
    return print_child(b.lhs, p) + " " + std::string(symbol(b.op)) + " " + print_child(b.rhs, p + 1);
}

} // namespace detail

/// Renders the surface syntax accepted by parse_refinement().
inline std::string to_source(const RefExpr& e) { return detail::print(e); }

} // namespace datum

#endif // DATUM_REFINEMENT_HPP
