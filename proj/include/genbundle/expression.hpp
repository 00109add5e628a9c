#pragma once

// Tiny arithmetic expression language for declaratively configured atlases,
// sections and metrics: + - * /, unary minus, parentheses, sin, cos, numeric
// constants, pi, and named coordinates.

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace genbundle {

class ExpressionError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

class Expression {
  public:
    /// Parses `text`; identifiers must be "pi" or one of `variables`.
    static Expression parse(std::string_view text, std::span<const std::string> variables) {
        Parser parser{text, variables};
        Expression e;
        e.root_ = parser.parse_all();
        e.text_ = std::string(text);
        return e;
    }

    double operator()(std::span<const double> values) const { return eval(*root_, values); }

    const std::string& text() const noexcept { return text_; }

  private:
    enum class Op { constant, variable, add, sub, mul, div, neg, sin, cos };

    struct Node {
        Op op;
        double value = 0.0;
        std::size_t index = 0;
        std::shared_ptr<const Node> lhs;
        std::shared_ptr<const Node> rhs;
    };
    using NodePtr = std::shared_ptr<const Node>;

    static double eval(const Node& n, std::span<const double> values) {
        switch (n.op) {
            case Op::constant: return n.value;
            case Op::variable:
                if (n.index >= values.size()) throw ExpressionError("expression: missing coordinate value");
                return values[n.index];
            case Op::add: return eval(*n.lhs, values) + eval(*n.rhs, values);
            case Op::sub: return eval(*n.lhs, values) - eval(*n.rhs, values);
            case Op::mul: return eval(*n.lhs, values) * eval(*n.rhs, values);
            case Op::div: return eval(*n.lhs, values) / eval(*n.rhs, values);
            case Op::neg: return -eval(*n.lhs, values);
            case Op::sin: return std::sin(eval(*n.lhs, values));
            case Op::cos: return std::cos(eval(*n.lhs, values));
        }
        return 0.0;
    }

    static NodePtr make(Op op, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
        return std::make_shared<const Node>(Node{op, 0.0, 0, std::move(lhs), std::move(rhs)});
    }

    static NodePtr constant(double v) { return std::make_shared<const Node>(Node{Op::constant, v, 0, nullptr, nullptr}); }

    static NodePtr variable(std::size_t i) {
        return std::make_shared<const Node>(Node{Op::variable, 0.0, i, nullptr, nullptr});
    }

    struct Parser {
        std::string_view text;
        std::span<const std::string> variables;
        std::size_t pos = 0;

        [[noreturn]] void fail(const std::string& what) const {
            throw ExpressionError("expression '" + std::string(text) + "': " + what + " at offset " +
                                  std::to_string(pos));
        }

        void skip_ws() {
            while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
        }

        bool accept(char c) {
            skip_ws();
            if (pos < text.size() && text[pos] == c) {
                ++pos;
                return true;
            }
            return false;
        }

        NodePtr parse_all() {
            NodePtr n = parse_sum();
            skip_ws();
            if (pos != text.size()) fail("unexpected trailing input");
            return n;
        }

        NodePtr parse_sum() {
            NodePtr lhs = parse_product();
            for (;;) {
                if (accept('+'))
                    lhs = make(Op::add, lhs, parse_product());
                else if (accept('-'))
                    lhs = make(Op::sub, lhs, parse_product());
                else
                    return lhs;
            }
        }

        NodePtr parse_product() {
            NodePtr lhs = parse_unary();
            for (;;) {
                if (accept('*'))
                    lhs = make(Op::mul, lhs, parse_unary());
                else if (accept('/'))
                    lhs = make(Op::div, lhs, parse_unary());
                else
                    return lhs;
            }
        }

        NodePtr parse_unary() {
            if (accept('-')) return make(Op::neg, parse_unary());
            if (accept('+')) return parse_unary();
            return parse_primary();
        }

        NodePtr parse_primary() {
            skip_ws();
            if (pos >= text.size()) fail("unexpected end of input");
            if (accept('(')) {
                NodePtr inner = parse_sum();
                if (!accept(')')) fail("expected ')'");
                return inner;
            }
            const char c = text[pos];
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
            fail(std::string("unexpected character '") + c + "'");
        }

        NodePtr parse_number() {
            const std::string rest(text.substr(pos));
            char* end = nullptr;
            const double v = std::strtod(rest.c_str(), &end);
            if (end == rest.c_str()) fail("malformed number");
            pos += static_cast<std::size_t>(end - rest.c_str());
            return constant(v);
        }

        NodePtr parse_identifier() {
            const std::size_t start = pos;
            while (pos < text.size() &&
                   (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
                ++pos;
            const std::string_view name = text.substr(start, pos - start);
            if (name == "sin" || name == "cos") {
                if (!accept('(')) fail("expected '(' after " + std::string(name));
                NodePtr arg = parse_sum();
                if (!accept(')')) fail("expected ')'");
                return make(name == "sin" ? Op::sin : Op::cos, arg);
            }
            if (name == "pi") {
                return constant(std::numbers::pi);
            }
            for (std::size_t i = 0; i < variables.size(); ++i) {
                if (variables[i] == name) {
                    return variable(i);
                }
            }
            pos = start;
            fail("unknown identifier '" + std::string(name) + "'");
        }
    };

    NodePtr root_;
    std::string text_;
};

}  // namespace genbundle
