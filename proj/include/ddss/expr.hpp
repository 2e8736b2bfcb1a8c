#pragma once

#include <memory>
#include <string>
#include <string_view>

namespace ddss {

// Scalar expression in the variable t and the constant pi over sin, cos,
// exp, ln, + - * / ^.
class Expr {
public:
    // The constant 0.
    Expr();

    static Expr constant(double value);

    double eval(double t) const;

    // Fully parenthesized form that reparses to the same tree.
    std::string to_string() const;

    // Text the expression was parsed from (or to_string() for built values).
    const std::string& source() const { return source_; }

    bool is_constant() const;

    struct Node;

private:
    Expr(std::shared_ptr<const Node> root, std::string source);
    friend Expr parse_expr(std::string_view source);

    std::shared_ptr<const Node> root_;
    std::string source_;
};

Expr parse_expr(std::string_view source);

inline double eval_expr(const Expr& e, double t) { return e.eval(t); }

}  // namespace ddss
