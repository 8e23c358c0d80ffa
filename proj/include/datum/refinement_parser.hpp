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

#ifndef DATUM_REFINEMENT_PARSER_HPP
#define DATUM_REFINEMENT_PARSER_HPP

#include "datum/error.hpp"
#include "datum/refinement.hpp"

#include <cctype>
#include <functional>

namespace datum {

/// Resolves `ENUM.ENTRY` literals; returns nullopt for unknown names.
using EnumResolver = std::function<std::optional<Value>(std::string_view enum_name, std::string_view entry)>;

namespace detail {

/*
 * Grammar (lowest to highest binding):
 *   or      := and ("||" and)*
 *   and     := eq ("&&" eq)*
 *   eq      := rel (("==" | "!=") rel)*
 *   rel     := add (("<" | "<=" | ">" | ">=") add)*
 *   add     := mul (("+" | "-") mul)*
 *   mul     := unary ("*" unary)*
 *   unary   := "!" unary | "-" number | "-" unary | primary
 *   primary := number | string | "true" | "false" | IDENT | IDENT "." IDENT | "(" or ")"
 */
class RefinementParser {
public:
    RefinementParser(std::string_view text, const EnumResolver* resolver) : text_(text), resolver_(resolver) {}

    RefExpr parse()
    {
        RefExpr e = parse_or();
        skip_ws();
        if (pos_ != text_.size()) {
            fail("unexpected trailing input");
        }
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& what) const
    {
        throw Error(ErrorCode::ParseError, what + " at offset " + std::to_string(pos_) + " in '" + std::string(text_) + "'");
    }

    void skip_ws()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }

    bool accept(std::string_view tok)
    {
        skip_ws();
        if (text_.substr(pos_, tok.size()) == tok) {
            pos_ += tok.size();
            return true;
        }
        return false;
    }

    /// Accepts a one-char operator only when it is not the prefix of a two-char one.
    bool accept_single(char c, char not_followed_by)
    {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c &&
            (pos_ + 1 >= text_.size() || text_[pos_ + 1] != not_followed_by)) {
            ++pos_;
            return true;
        }
        return false;
    }

    RefExpr parse_or()
    {
        RefExpr lhs = parse_and();
        while (accept("||")) {
            lhs = RefExpr::bin(BinOp::Or, lhs, parse_and());
        }
        return lhs;
    }

    RefExpr parse_and()
    {
        RefExpr lhs = parse_eq();
        while (accept("&&")) {
            lhs = RefExpr::bin(BinOp::And, lhs, parse_eq());
        }
        return lhs;
    }

    RefExpr parse_eq()
    {
        RefExpr lhs = parse_rel();
        for (;;) {
            if (accept("==")) {
                lhs = RefExpr::bin(BinOp::Eq, lhs, parse_rel());
            } else if (accept("!=")) {
                lhs = RefExpr::bin(BinOp::Ne, lhs, parse_rel());
            } else {
                return lhs;
            }
        }
    }

    RefExpr parse_rel()
    {
        RefExpr lhs = parse_add();
        for (;;) {
            if (accept("<=")) {
                lhs = RefExpr::bin(BinOp::Le, lhs, parse_add());
            } else if (accept(">=")) {
                lhs = RefExpr::bin(BinOp::Ge, lhs, parse_add());
            } else if (accept("<")) {
                lhs = RefExpr::bin(BinOp::Lt, lhs, parse_add());
            } else if (accept(">")) {
                lhs = RefExpr::bin(BinOp::Gt, lhs, parse_add());
            } else {
                return lhs;
            }
        }
    }

    RefExpr parse_add()
    {
        RefExpr lhs = parse_mul();
        for (;;) {
            if (accept("+")) {
                lhs = RefExpr::bin(BinOp::Add, lhs, parse_mul());
            } else if (accept("-")) {
                lhs = RefExpr::bin(BinOp::Sub, lhs, parse_mul());
            } else {
                return lhs;
            }
        }
    }

    RefExpr parse_mul()
    {
        RefExpr lhs = parse_unary();
        while (accept("*")) {
            lhs = RefExpr::bin(BinOp::Mul, lhs, parse_unary());
        }
        return lhs;
    }

    RefExpr parse_unary()
    {
        if (accept_single('!', '=')) {
            return RefExpr::logical_not(parse_unary());
        }
        if (accept("-")) {
            if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                return RefExpr::lit(parse_number(true));
            }
            return RefExpr::neg(parse_unary());
        }
        return parse_primary();
    }

    Value parse_number(bool negative)
    {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
        bool is_float = false;
        if (pos_ < text_.size() && text_[pos_] == '.') {
            is_float = true;
            ++pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                ++pos_;
            }
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            is_float = true;
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) {
                ++pos_;
            }
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                ++pos_;
            }
        }
        std::string digits = (negative ? "-" : "") + std::string(text_.substr(start, pos_ - start));
        if (is_float) {
            double v = 0;
            auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
            if (ec != std::errc() || p != digits.data() + digits.size()) {
                fail("bad float literal");
            }
            return Value::real(v);
        }
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
        if (ec != std::errc() || p != digits.data() + digits.size()) {
            fail("integer literal out of range");
        }
        return Value::integer(v);
    }

    std::string parse_ident()
    {
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
            ++pos_;
        }
        return std::string(text_.substr(start, pos_ - start));
    }

    RefExpr parse_primary()
    {
        skip_ws();
        if (pos_ >= text_.size()) {
            fail("unexpected end of input");
        }
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            RefExpr inner = parse_or();
            if (!accept(")")) {
                fail("expected ')'");
            }
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            return RefExpr::lit(parse_number(false));
        }
        if (c == '"') {
            ++pos_;
            std::string s;
            while (pos_ < text_.size() && text_[pos_] != '"') {
                if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) {
                    ++pos_;
                }
                s += text_[pos_++];
            }
            if (pos_ >= text_.size()) {
                fail("unterminated string literal");
            }
            ++pos_;
            return RefExpr::lit(Value::string(std::move(s)));
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::string name = parse_ident();
            if (pos_ < text_.size() && text_[pos_] == '.') {
                ++pos_;
                std::string entry = parse_ident();
                if (entry.empty()) {
                    fail("expected enum entry after '.'");
                }
                if (resolver_ == nullptr || !*resolver_) {
                    fail("enum literal " + name + "." + entry + " without a dialect");
                }
                auto v = (*resolver_)(name, entry);
                if (!v) {
                    fail("unknown enum literal " + name + "." + entry);
                }
                return RefExpr::lit(*v);
            }
            if (name == "true") {
                return RefExpr::lit(Value::boolean(true));
            }
            if (name == "false") {
                return RefExpr::lit(Value::boolean(false));
            }
            return RefExpr::var(std::move(name));
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    std::string_view text_;
    const EnumResolver* resolver_;
    std::size_t pos_ = 0;
};

} // namespace detail

/// Parses the textual refinement syntax (`&&`, `||`, `!`, comparisons, `+ - *`).
/// Throws Error(ParseError) on malformed input.
inline RefExpr parse_refinement(std::string_view text, const EnumResolver& resolver = {})
{
    return detail::RefinementParser(text, &resolver).parse();
}

} // namespace datum

#endif // DATUM_REFINEMENT_PARSER_HPP
