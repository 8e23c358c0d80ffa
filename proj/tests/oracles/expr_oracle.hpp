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

// Independent tree interpreter used to cross-check the refinement evaluator.
// It shares no code with include/datum: its own tree, its own value model.

#ifndef DATUM_TESTS_EXPR_ORACLE_HPP
#define DATUM_TESTS_EXPR_ORACLE_HPP

#include <climits>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace oracle {

struct Err {
    bool operator==(const Err&) const { return true; }
};
using OVal = std::variant<long long, double, bool, Err>;

struct Tree {
    std::string op; // "lit", "var", "neg", "not", or a binary symbol
    OVal lit;
    std::string name;
    std::shared_ptr<Tree> a, b;
};
using TreePtr = std::shared_ptr<Tree>;

inline OVal eval(const Tree& t, const std::map<std::string, OVal>& env)
{
    auto num = [](const OVal& v) { return std::holds_alternative<long long>(v) || std::holds_alternative<double>(v); };
    auto as_d = [](const OVal& v) { return std::holds_alternative<double>(v) ? std::get<double>(v) : double(std::get<long long>(v)); };
    if (t.op == "lit") return t.lit;
    if (t.op == "var") {
        auto it = env.find(t.name);
        return it == env.end() ? OVal(Err{}) : it->second;
    }
    if (t.op == "neg") {
        OVal x = eval(*t.a, env);
        if (auto* i = std::get_if<long long>(&x)) return *i == LLONG_MIN ? OVal(Err{}) : OVal(-*i);
        if (auto* d = std::get_if<double>(&x)) return -*d;
        return Err{};
    }
    if (t.op == "not") {
        OVal x = eval(*t.a, env);
        if (auto* b = std::get_if<bool>(&x)) return !*b;
        return Err{};
    }
    if (t.op == "&&" || t.op == "||") {
        OVal x = eval(*t.a, env);
        if (!std::holds_alternative<bool>(x)) return Err{};
        bool l = std::get<bool>(x);
        if (t.op == "&&" && !l) return false;
        if (t.op == "||" && l) return true;
        OVal y = eval(*t.b, env);
        if (!std::holds_alternative<bool>(y)) return Err{};
        return y;
    }
    OVal x = eval(*t.a, env);
    OVal y = eval(*t.b, env);
    if (std::holds_alternative<Err>(x) || std::holds_alternative<Err>(y)) return Err{};
    if (t.op == "==" || t.op == "!=") {
        bool eq;
        if (num(x) && num(y)) {
            if (std::holds_alternative<long long>(x) && std::holds_alternative<long long>(y)) eq = std::get<long long>(x) == std::get<long long>(y);
            else {
                for (const OVal* v : {&x, &y}) {
                    if (auto* i = std::get_if<long long>(v); i && (*i >= (1LL << 53) || *i <= -(1LL << 53))) return Err{};
                }
                eq = as_d(x) == as_d(y);
            }
        } else if (std::holds_alternative<bool>(x) && std::holds_alternative<bool>(y)) {
            eq = std::get<bool>(x) == std::get<bool>(y);
        } else {
            return Err{};
        }
        return t.op == "==" ? eq : !eq;
    }
    if (!num(x) || !num(y)) return Err{};
    const bool ints = std::holds_alternative<long long>(x) && std::holds_alternative<long long>(y);
    if (ints && (t.op == "+" || t.op == "-" || t.op == "*")) {
        long long r = 0;
        bool over = t.op == "+" ? __builtin_add_overflow(std::get<long long>(x), std::get<long long>(y), &r)
                  : t.op == "-" ? __builtin_sub_overflow(std::get<long long>(x), std::get<long long>(y), &r)
                                : __builtin_mul_overflow(std::get<long long>(x), std::get<long long>(y), &r);
        if (over) return Err{};
        return r;
    }
    // Mixed int/float: integers must be exactly representable.
    if (!ints) {
        for (const OVal* v : {&x, &y}) {
            if (auto* i = std::get_if<long long>(v); i && (*i >= (1LL << 53) || *i <= -(1LL << 53))) return Err{};
        }
    }
    if (t.op == "+") return as_d(x) + as_d(y);
    if (t.op == "-") return as_d(x) - as_d(y);
    if (t.op == "*") return as_d(x) * as_d(y);
    if (ints) {
        long long p = std::get<long long>(x), q = std::get<long long>(y);
        if (t.op == "<") return p < q;
        if (t.op == "<=") return p <= q;
        if (t.op == ">") return p > q;
        if (t.op == ">=") return p >= q;
    }
    if (t.op == "<") return as_d(x) < as_d(y);
    if (t.op == "<=") return as_d(x) <= as_d(y);
    if (t.op == ">") return as_d(x) > as_d(y);
    if (t.op == ">=") return as_d(x) >= as_d(y);
    return Err{};
}

inline TreePtr leaf_lit(OVal v)
{
    auto t = std::make_shared<Tree>();
    t->op = "lit";
    t->lit = v;
    return t;
}
inline TreePtr leaf_var(std::string n)
{
    auto t = std::make_shared<Tree>();
    t->op = "var";
    t->name = std::move(n);
    return t;
}
inline TreePtr node(std::string op, TreePtr a, TreePtr b = nullptr)
{
    auto t = std::make_shared<Tree>();
    t->op = std::move(op);
    t->a = std::move(a);
    t->b = std::move(b);
    return t;
}

/// Random tree of depth <= `depth` over small ints, a few floats, bools and variables a..d (some unbound).
inline TreePtr random_tree(std::mt19937& rng, int depth)
{
    std::uniform_int_distribution<int> pick(0, 99);
    if (depth == 0 || pick(rng) < 25) {
        int k = pick(rng);
        if (k < 35) return leaf_lit(static_cast<long long>(pick(rng) % 9 - 4));
        if (k < 45) return leaf_lit(static_cast<double>(pick(rng) % 9 - 4) / 2.0);
        if (k < 55) return leaf_lit(pick(rng) % 2 == 0);
        static const char* names[] = {"a", "b", "c", "d", "p", "q"};
        return leaf_var(names[pick(rng) % 6]);
    }
    static const char* ops[] = {"+", "-", "*", "<", "<=", ">", ">=", "==", "!=", "&&", "||", "neg", "not"};
    std::string op = ops[pick(rng) % 13];
    if (op == "neg" || op == "not") return node(op, random_tree(rng, depth - 1));
    return node(op, random_tree(rng, depth - 1), random_tree(rng, depth - 1));
}

} // namespace oracle

#endif
