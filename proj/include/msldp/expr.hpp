#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace msldp::expr {

enum class Op { Const, Var, Add, Sub, Mul, Div, Neg, Exp, Log, Sqrt, Abs, Min, Pow, SelectLe };

struct Node;
/// Immutable expression DAG; sharing subtrees is safe.
using Expr = std::shared_ptr<const Node>;

struct Node {
    Op op = Op::Const;
    double value = 0.0;  ///< Const value
    int index = 0;       ///< Var index, or the integer exponent of Pow
    std::vector<Expr> args;
};

Expr constant(double v);
Expr var(int index);

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr exp(const Expr& a);
Expr log(const Expr& a);
Expr sqrt(const Expr& a);
Expr abs(const Expr& a);
Expr min(const Expr& a, const Expr& b);
Expr pow(const Expr& a, int k);
/// a <= b ? t : f (used for derivatives of min)
Expr select_le(const Expr& a, const Expr& b, const Expr& t, const Expr& f);

bool is_const(const Expr& e, double* value = nullptr);
bool is_zero(const Expr& e);
bool depends_on(const Expr& e, int index);

double eval(const Expr& e, std::span<const double> vars);

/// Symbolic partial derivative with respect to variable `index`.
Expr diff(const Expr& e, int index);

/// Replaces every Var(i) by map(i).
Expr substitute(const Expr& e, const std::function<Expr(int)>& map);

/// Canonical text form. `name(i)` renders Var(i).
std::string to_string(const Expr& e, const std::function<std::string(int)>& name);

/// Parses an arithmetic expression: numbers, identifiers, + - * / ^,
/// parentheses and the functions exp, log, sqrt, abs, min.
/// `lookup` maps identifiers to variable indices (returns -1 if unknown).
/// Errors carry the 0-based column of the offending token.
Expr parse(const std::string& text, const std::function<int(const std::string&)>& lookup);

/// Polynomial degree data of a rational function. `rational` is false when
/// transcendental nodes occur. `growth` is numerator minus denominator degree,
/// with min() taking the smaller growth of its arguments.
struct Degree {
    bool rational = true;
    int num = 0;
    int den = 0;
    int growth = 0;
};
Degree degree(const Expr& e, const std::function<bool(int)>& counted);

std::size_t node_count(const Expr& e);

}  // namespace msldp::expr
