#include "ddss/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "ddss/error.hpp"

namespace ddss {

enum class Op { Num, Var, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp, Ln };

struct Expr::Node {
    Op op;
    double value = 0.0;
    std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr, double value = 0.0) {
    auto n = std::make_shared<Expr::Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    n->value = value;
    return n;
}

class Parser {
public:
    explicit Parser(std::string_view s) : s_(s) {}

    NodePtr parse() {
        NodePtr e = expr();
        skip_ws();
        if (pos_ != s_.size()) fail("expected operator or end of input");
        return e;
    }

private:
    std::string_view s_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& expected) const {
        throw ParseError(pos_, "syntax error at offset " + std::to_string(pos_) + ": " + expected);
    }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr expr() {
        NodePtr lhs = term();
        for (;;) {
            if (accept('+')) lhs = make(Op::Add, lhs, term());
            else if (accept('-')) lhs = make(Op::Sub, lhs, term());
            else return lhs;
        }
    }

    NodePtr term() {
        NodePtr lhs = unary();
        for (;;) {
            if (accept('*')) lhs = make(Op::Mul, lhs, unary());
            else if (accept('/')) lhs = make(Op::Div, lhs, unary());
            else return lhs;
        }
    }

    NodePtr unary() {
        if (accept('-')) return make(Op::Neg, unary());
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        if (accept('^')) return make(Op::Pow, base, unary());
        return base;
    }

    NodePtr primary() {
        skip_ws();
        if (pos_ >= s_.size()) fail("expected number, 't', function or '('");
        char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr e = expr();
            if (!accept(')')) fail("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t start = pos_;
            while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            std::string_view id = s_.substr(start, pos_ - start);
            if (id == "t") return make(Op::Var);
            if (id == "pi") return make(Op::Num, nullptr, nullptr, 3.14159265358979323846);
            Op op;
            if (id == "sin") op = Op::Sin;
            else if (id == "cos") op = Op::Cos;
            else if (id == "exp") op = Op::Exp;
            else if (id == "ln") op = Op::Ln;
            else {
                pos_ = start;
                fail("unknown identifier '" + std::string(id) + "', expected t, pi, sin, cos, exp or ln");
            }
            if (!accept('(')) fail("expected '(' after function name");
            NodePtr arg = expr();
            if (!accept(')')) fail("expected ')'");
            return make(op, arg);
        }
        fail("expected number, 't', function or '('");
    }

    NodePtr number() {
        std::size_t start = pos_;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        if (pos_ < s_.size() && s_[pos_] == '.') {
            ++pos_;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        }
        if (pos_ == start + 1 && s_[start] == '.') {
            pos_ = start;
            fail("expected digits in numeric literal");
        }
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            std::size_t save = pos_;
            ++pos_;
            if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
            if (pos_ >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
                pos_ = save + 1;
                fail("expected exponent digits");
            }
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        }
        std::string text(s_.substr(start, pos_ - start));
        double v = std::strtod(text.c_str(), nullptr);
        if (!std::isfinite(v)) {
            pos_ = start;
            fail("numeric literal out of range");
        }
        return make(Op::Num, nullptr, nullptr, v);
    }
};

[[noreturn]] void domain(const std::string& what, double t) {
    throw Error(ErrorKind::Domain, what + " at t = " + std::to_string(t));
}

double eval_node(const Expr::Node& n, double t) {
    switch (n.op) {
        case Op::Num: return n.value;
        case Op::Var: return t;
        case Op::Neg: return -eval_node(*n.a, t);
        case Op::Add: return eval_node(*n.a, t) + eval_node(*n.b, t);
        case Op::Sub: return eval_node(*n.a, t) - eval_node(*n.b, t);
        case Op::Mul: return eval_node(*n.a, t) * eval_node(*n.b, t);
        case Op::Div: {
            double d = eval_node(*n.b, t);
            if (d == 0.0) domain("division by zero", t);
            return eval_node(*n.a, t) / d;
        }
        case Op::Pow: {
            double v = std::pow(eval_node(*n.a, t), eval_node(*n.b, t));
            if (!std::isfinite(v)) domain("non-finite power", t);
            return v;
        }
        case Op::Sin: return std::sin(eval_node(*n.a, t));
        case Op::Cos: return std::cos(eval_node(*n.a, t));
        case Op::Exp: {
            double v = std::exp(eval_node(*n.a, t));
            if (!std::isfinite(v)) domain("exp overflow", t);
            return v;
        }
        case Op::Ln: {
            double x = eval_node(*n.a, t);
            if (!(x > 0.0)) domain("ln of non-positive argument", t);
            return std::log(x);
        }
    }
    return 0.0;
}

std::string print_node(const Expr::Node& n) {
    auto bin = [&](const char* op) {
        return "(" + print_node(*n.a) + " " + op + " " + print_node(*n.b) + ")";
    };
    auto fn = [&](const char* name) { return std::string(name) + "(" + print_node(*n.a) + ")"; };
    switch (n.op) {
        case Op::Num: {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", n.value);
            return buf;
        }
        case Op::Var: return "t";
        case Op::Neg: return "(-" + print_node(*n.a) + ")";
        case Op::Add: return bin("+");
        case Op::Sub: return bin("-");
        case Op::Mul: return bin("*");
        case Op::Div: return bin("/");
        case Op::Pow: return bin("^");
        case Op::Sin: return fn("sin");
        case Op::Cos: return fn("cos");
        case Op::Exp: return fn("exp");
        case Op::Ln: return fn("ln");
    }
    return "";
}

bool constant_node(const Expr::Node& n) {
    if (n.op == Op::Var) return false;
    if (n.a && !constant_node(*n.a)) return false;
    if (n.b && !constant_node(*n.b)) return false;
    return true;
}

}  // namespace

Expr::Expr() : Expr(make(Op::Num), "0") {}

Expr::Expr(std::shared_ptr<const Node> root, std::string source)
    : root_(std::move(root)), source_(std::move(source)) {}

Expr Expr::constant(double value) {
    auto node = make(Op::Num, nullptr, nullptr, value);
    return Expr(node, print_node(*node));
}

double Expr::eval(double t) const {
    double v = eval_node(*root_, t);
    if (!std::isfinite(v)) domain("non-finite result of '" + source_ + "'", t);
    return v;
}

std::string Expr::to_string() const { return print_node(*root_); }

bool Expr::is_constant() const { return constant_node(*root_); }

Expr parse_expr(std::string_view source) {
    Parser p(source);
    return Expr(p.parse(), std::string(source));
}

}  // namespace ddss
