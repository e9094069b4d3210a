#include "msldp/expr.hpp"

#include <charconv>
#include <cctype>
#include <cmath>
#include <unordered_set>

#include "msldp/error.hpp"

namespace msldp::expr {

namespace {

Expr make(Op op, std::vector<Expr> args, double value = 0.0, int index = 0) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->args = std::move(args);
    n->value = value;
    n->index = index;
    return n;
}

bool cval(const Expr& e, double& v) {
    if (e->op != Op::Const) return false;
    v = e->value;
    return true;
}

}  // namespace

Expr constant(double v) { return make(Op::Const, {}, v); }
Expr var(int index) { return make(Op::Var, {}, 0.0, index); }

bool is_const(const Expr& e, double* value) {
    if (e->op != Op::Const) return false;
    if (value) *value = e->value;
    return true;
}
bool is_zero(const Expr& e) { return e->op == Op::Const && e->value == 0.0; }

bool depends_on(const Expr& e, int index) {
    if (e->op == Op::Var) return e->index == index;
    for (const auto& a : e->args)
        if (depends_on(a, index)) return true;
    return false;
}

Expr operator+(const Expr& a, const Expr& b) {
    double x = 0, y = 0;
    const bool ca = cval(a, x), cb = cval(b, y);
    if (ca && cb) return constant(x + y);
    if (ca && x == 0.0) return b;
    if (cb && y == 0.0) return a;
    if (b->op == Op::Neg) return a - b->args[0];
    if (cb && y < 0.0) return make(Op::Sub, {a, constant(-y)});
    if (a->op == Op::Neg) return b - a->args[0];
    return make(Op::Add, {a, b});
}

Expr operator-(const Expr& a, const Expr& b) {
    double x = 0, y = 0;
    const bool ca = cval(a, x), cb = cval(b, y);
    if (ca && cb) return constant(x - y);
    if (cb && y == 0.0) return a;
    if (ca && x == 0.0) return -b;
    if (b->op == Op::Neg) return a + b->args[0];
    if (cb && y < 0.0) return make(Op::Add, {a, constant(-y)});
    return make(Op::Sub, {a, b});
}

Expr operator*(const Expr& a, const Expr& b) {
    double x = 0, y = 0;
    const bool ca = cval(a, x), cb = cval(b, y);
    if (ca && cb) return constant(x * y);
    if ((ca && x == 0.0) || (cb && y == 0.0)) return constant(0.0);
    if (ca && x == 1.0) return b;
    if (cb && y == 1.0) return a;
    if (ca && x == -1.0) return -b;
    if (cb && y == -1.0) return -a;
    return make(Op::Mul, {a, b});
}

Expr operator/(const Expr& a, const Expr& b) {
    double x = 0, y = 0;
    const bool ca = cval(a, x), cb = cval(b, y);
    if (ca && cb && y != 0.0) return constant(x / y);
    if (ca && x == 0.0) return constant(0.0);
    if (cb && y == 1.0) return a;
    return make(Op::Div, {a, b});
}

Expr operator-(const Expr& a) {
    double x = 0;
    if (cval(a, x)) return constant(-x);
    if (a->op == Op::Neg) return a->args[0];
    return make(Op::Neg, {a});
}

Expr exp(const Expr& a) {
    double x = 0;
    if (cval(a, x)) return constant(std::exp(x));
    return make(Op::Exp, {a});
}
Expr log(const Expr& a) {
    double x = 0;
    if (cval(a, x) && x > 0) return constant(std::log(x));
    return make(Op::Log, {a});
}
Expr sqrt(const Expr& a) {
    double x = 0;
    if (cval(a, x) && x >= 0) return constant(std::sqrt(x));
    return make(Op::Sqrt, {a});
}
Expr abs(const Expr& a) {
    double x = 0;
    if (cval(a, x)) return constant(std::fabs(x));
    return make(Op::Abs, {a});
}
Expr min(const Expr& a, const Expr& b) {
    double x = 0, y = 0;
    if (cval(a, x) && cval(b, y)) return constant(std::min(x, y));
    return make(Op::Min, {a, b});
}
Expr pow(const Expr& a, int k) {
    double x = 0;
    if (k == 0) return constant(1.0);
    if (k == 1) return a;
    if (cval(a, x)) return constant(std::pow(x, k));
    return make(Op::Pow, {a}, 0.0, k);
}
Expr select_le(const Expr& a, const Expr& b, const Expr& t, const Expr& f) {
    double x = 0, y = 0;
    if (cval(a, x) && cval(b, y)) return x <= y ? t : f;
    double u, w;
    if (cval(t, u) && cval(f, w) && u == w) return t;
    return make(Op::SelectLe, {a, b, t, f});
}

double eval(const Expr& e, std::span<const double> v) {
    const auto& a = e->args;
    switch (e->op) {
        case Op::Const: return e->value;
        case Op::Var:
            if (e->index < 0 || static_cast<std::size_t>(e->index) >= v.size())
                throw Error("DomainError", "expression variable out of range");
            return v[static_cast<std::size_t>(e->index)];
        case Op::Add: return eval(a[0], v) + eval(a[1], v);
        case Op::Sub: return eval(a[0], v) - eval(a[1], v);
        case Op::Mul: return eval(a[0], v) * eval(a[1], v);
        case Op::Div: return eval(a[0], v) / eval(a[1], v);
        case Op::Neg: return -eval(a[0], v);
        case Op::Exp: return std::exp(eval(a[0], v));
        case Op::Log: return std::log(eval(a[0], v));
        case Op::Sqrt: return std::sqrt(eval(a[0], v));
        case Op::Abs: return std::fabs(eval(a[0], v));
        case Op::Min: return std::min(eval(a[0], v), eval(a[1], v));
        case Op::Pow: return std::pow(eval(a[0], v), e->index);
        case Op::SelectLe: return eval(a[0], v) <= eval(a[1], v) ? eval(a[2], v) : eval(a[3], v);
    }
    return 0.0;
}

Expr diff(const Expr& e, int i) {
    const auto& a = e->args;
    switch (e->op) {
        case Op::Const: return constant(0.0);
        case Op::Var: return constant(e->index == i ? 1.0 : 0.0);
        case Op::Add: return diff(a[0], i) + diff(a[1], i);
        case Op::Sub: return diff(a[0], i) - diff(a[1], i);
        case Op::Mul: return diff(a[0], i) * a[1] + a[0] * diff(a[1], i);
        case Op::Div: {
            const Expr db = diff(a[1], i);
            const Expr q = diff(a[0], i) / a[1];
            if (is_zero(db)) return q;
            return q - e * db / a[1];
        }
        case Op::Neg: return -diff(a[0], i);
        case Op::Exp: return e * diff(a[0], i);
        case Op::Log: return diff(a[0], i) / a[0];
        case Op::Sqrt: {
            const Expr d = diff(a[0], i);
            if (is_zero(d)) return d;
            return d / (constant(2.0) * e);
        }
        case Op::Abs: {
            const Expr d = diff(a[0], i);
            return select_le(a[0], constant(0.0), -d, d);
        }
        case Op::Min: return select_le(a[0], a[1], diff(a[0], i), diff(a[1], i));
        case Op::Pow:
            return constant(e->index) * pow(a[0], e->index - 1) * diff(a[0], i);
        case Op::SelectLe: return select_le(a[0], a[1], diff(a[2], i), diff(a[3], i));
    }
    return constant(0.0);
}

Expr substitute(const Expr& e, const std::function<Expr(int)>& map) {
    const auto& a = e->args;
    switch (e->op) {
        case Op::Const: return e;
        case Op::Var: return map(e->index);
        case Op::Add: return substitute(a[0], map) + substitute(a[1], map);
        case Op::Sub: return substitute(a[0], map) - substitute(a[1], map);
        case Op::Mul: return substitute(a[0], map) * substitute(a[1], map);
        case Op::Div: return substitute(a[0], map) / substitute(a[1], map);
        case Op::Neg: return -substitute(a[0], map);
        case Op::Exp: return exp(substitute(a[0], map));
        case Op::Log: return log(substitute(a[0], map));
        case Op::Sqrt: return sqrt(substitute(a[0], map));
        case Op::Abs: return abs(substitute(a[0], map));
        case Op::Min: return min(substitute(a[0], map), substitute(a[1], map));
        case Op::Pow: return pow(substitute(a[0], map), e->index);
        case Op::SelectLe:
            return select_le(substitute(a[0], map), substitute(a[1], map), substitute(a[2], map),
                             substitute(a[3], map));
    }
    return e;
}

namespace {

std::string fmt_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

int precedence(const Expr& e) {
    switch (e->op) {
        case Op::Add:
        case Op::Sub: return 1;
        case Op::Mul:
        case Op::Div: return 2;
        case Op::Neg: return 3;
        case Op::Pow: return 4;
        case Op::Const: return e->value < 0 ? 3 : 5;
        default: return 5;
    }
}

std::string render(const Expr& e, const std::function<std::string(int)>& name);

std::string wrap(const Expr& e, int min_prec, const std::function<std::string(int)>& name) {
    std::string s = render(e, name);
    return precedence(e) < min_prec ? "(" + s + ")" : s;
}

std::string render(const Expr& e, const std::function<std::string(int)>& name) {
    const auto& a = e->args;
    switch (e->op) {
        case Op::Const: return fmt_double(e->value);
        case Op::Var: return name(e->index);
        case Op::Add: return wrap(a[0], 1, name) + " + " + wrap(a[1], 2, name);
        case Op::Sub: return wrap(a[0], 1, name) + " - " + wrap(a[1], 2, name);
        case Op::Mul: return wrap(a[0], 2, name) + "*" + wrap(a[1], 3, name);
        case Op::Div: return wrap(a[0], 2, name) + "/" + wrap(a[1], 3, name);
        case Op::Neg: return "-" + wrap(a[0], 4, name);
        case Op::Pow: return wrap(a[0], 5, name) + "^" + std::to_string(e->index);
        case Op::Exp: return "exp(" + render(a[0], name) + ")";
        case Op::Log: return "log(" + render(a[0], name) + ")";
        case Op::Sqrt: return "sqrt(" + render(a[0], name) + ")";
        case Op::Abs: return "abs(" + render(a[0], name) + ")";
        case Op::Min: return "min(" + render(a[0], name) + ", " + render(a[1], name) + ")";
        case Op::SelectLe:
            return "select_le(" + render(a[0], name) + ", " + render(a[1], name) + ", " +
                   render(a[2], name) + ", " + render(a[3], name) + ")";
    }
    return "?";
}

// Recursive-descent parser.
class Parser {
public:
    Parser(const std::string& s, const std::function<int(const std::string&)>& lookup)
        : s_(s), lookup_(lookup) {}

    Expr run() {
        Expr e = sum();
        skip();
        if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw Error("SyntaxError", "column " + std::to_string(pos_) + ": " + msg);
    }
    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    Expr sum() {
        Expr e = product();
        for (;;) {
            if (accept('+')) e = e + product();
            else if (accept('-')) e = e - product();
            else return e;
        }
    }
    Expr product() {
        Expr e = unary();
        for (;;) {
            if (accept('*')) e = e * unary();
            else if (accept('/')) e = e / unary();
            else return e;
        }
    }
    Expr unary() {
        if (accept('-')) return -unary();
        if (accept('+')) return unary();
        return power();
    }
    Expr power() {
        Expr base = atom();
        if (accept('^')) {
            skip();
            const std::size_t start = pos_;
            bool neg = accept('-');
            skip();
            int k = 0;
            auto [ptr, ec] = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), k);
            if (ec != std::errc() || ptr == s_.data() + pos_) {
                pos_ = start;
                fail("exponent must be an integer literal");
            }
            pos_ = static_cast<std::size_t>(ptr - s_.data());
            if (pos_ < s_.size() && (s_[pos_] == '.' || s_[pos_] == 'e')) fail("exponent must be an integer literal");
            if (neg) k = -k;
            return k >= 0 ? pow(base, k) : constant(1.0) / pow(base, -k);
        }
        return base;
    }
    Expr atom() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end of expression");
        const char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            Expr e = sum();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            double v = 0;
            auto [ptr, ec] = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), v);
            if (ec != std::errc()) fail("bad number");
            pos_ = static_cast<std::size_t>(ptr - s_.data());
            return constant(v);
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < s_.size() &&
                   (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
                ++pos_;
            const std::string id = s_.substr(start, pos_ - start);
            skip();
            if (pos_ < s_.size() && s_[pos_] == '(') {
                ++pos_;
                Expr first = sum();
                if (id == "min") {
                    expect(',');
                    Expr second = sum();
                    expect(')');
                    return min(first, second);
                }
                expect(')');
                if (id == "exp") return exp(first);
                if (id == "log") return log(first);
                if (id == "sqrt") return sqrt(first);
                if (id == "abs") return abs(first);
                pos_ = start;
                fail("unknown function '" + id + "'");
            }
            const int idx = lookup_(id);
            if (idx < 0) {
                pos_ = start;
                fail("unknown symbol '" + id + "'");
            }
            return var(idx);
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    const std::string& s_;
    const std::function<int(const std::string&)>& lookup_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string to_string(const Expr& e, const std::function<std::string(int)>& name) {
    return render(e, name);
}

Expr parse(const std::string& text, const std::function<int(const std::string&)>& lookup) {
    return Parser(text, lookup).run();
}

Degree degree(const Expr& e, const std::function<bool(int)>& counted) {
    const auto& a = e->args;
    auto fin = [](Degree d) {
        d.growth = d.num - d.den;
        return d;
    };
    switch (e->op) {
        case Op::Const: return Degree{};
        case Op::Var: return counted(e->index) ? fin(Degree{true, 1, 0, 0}) : Degree{};
        case Op::Neg: return degree(a[0], counted);
        case Op::Add:
        case Op::Sub: {
            const Degree x = degree(a[0], counted), y = degree(a[1], counted);
            Degree r{x.rational && y.rational, std::max(x.num + y.den, y.num + x.den), x.den + y.den, 0};
            r = fin(r);
            r.growth = std::max(x.growth, y.growth);
            return r;
        }
        case Op::Mul: {
            const Degree x = degree(a[0], counted), y = degree(a[1], counted);
            Degree r{x.rational && y.rational, x.num + y.num, x.den + y.den, 0};
            r.growth = x.growth + y.growth;
            return r;
        }
        case Op::Div: {
            const Degree x = degree(a[0], counted), y = degree(a[1], counted);
            Degree r{x.rational && y.rational, x.num + y.den, x.den + y.num, 0};
            r.growth = x.growth - y.growth;
            return r;
        }
        case Op::Pow: {
            Degree x = degree(a[0], counted);
            const int k = e->index;
            Degree r{x.rational, x.num * k, x.den * k, x.growth * k};
            return r;
        }
        case Op::Min: {
            const Degree x = degree(a[0], counted), y = degree(a[1], counted);
            Degree r = x.growth <= y.growth ? x : y;
            r.rational = false;
            return r;
        }
        default: {
            Degree r;
            r.rational = false;
            for (const auto& s : a) r.growth = std::max(r.growth, degree(s, counted).growth);
            return r;
        }
    }
}

std::size_t node_count(const Expr& e) {
    std::unordered_set<const Node*> seen;
    std::vector<const Node*> stack{e.get()};
    while (!stack.empty()) {
        const Node* n = stack.back();
        stack.pop_back();
        if (!seen.insert(n).second) continue;
        for (const auto& a : n->args) stack.push_back(a.get());
    }
    return seen.size();
}

}  // namespace msldp::expr
