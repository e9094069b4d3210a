#include "msldp/rational.hpp"

#include <numeric>

#include "msldp/error.hpp"

namespace msldp {

Rational::Rational(std::int64_t num, std::int64_t den) {
    if (den == 0) throw Error("DomainError", "rational with zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    const std::int64_t g = std::gcd(num, den);
    num_ = g ? num / g : 0;
    den_ = g ? den / g : 1;
}

std::string Rational::to_string() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
}

Rational Rational::parse(const std::string& text) {
    const auto slash = text.find('/');
    try {
        std::size_t used = 0;
        if (slash == std::string::npos) {
            const auto n = std::stoll(text, &used);
            if (used != text.size()) throw std::invalid_argument(text);
            return Rational(n);
        }
        const std::string a = text.substr(0, slash), b = text.substr(slash + 1);
        const auto n = std::stoll(a, &used);
        if (used != a.size()) throw std::invalid_argument(text);
        const auto d = std::stoll(b, &used);
        if (used != b.size()) throw std::invalid_argument(text);
        return Rational(n, d);
    } catch (const std::logic_error&) {
        throw Error("SyntaxError", "not a rational: '" + text + "'");
    }
}

Rational operator+(Rational a, Rational b) {
    return Rational(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
}
Rational operator-(Rational a, Rational b) { return a + (-b); }
Rational operator*(Rational a, Rational b) { return Rational(a.num_ * b.num_, a.den_ * b.den_); }
Rational operator/(Rational a, Rational b) {
    if (b.num_ == 0) throw Error("DomainError", "division by zero rational");
    return Rational(a.num_ * b.den_, a.den_ * b.num_);
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    return a.num_ * b.den_ <=> b.num_ * a.den_;
}

}  // namespace msldp
