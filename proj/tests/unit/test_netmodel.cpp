#include <catch_amalgamated.hpp>

#include "../common.hpp"
#include "msldp/error.hpp"
#include "msldp/expr.hpp"
#include "msldp/rational.hpp"

using namespace msldp;
using Catch::Matchers::WithinAbs;

namespace {

std::string kind_of(const std::string& text) {
    try {
        parse_network(text);
    } catch (const Error& e) {
        return e.kind();
    }
    return "";
}

}  // namespace

TEST_CASE("rational arithmetic stays reduced") {
    Rational a(2, 3), b(1, 6);
    CHECK(a + b == Rational(5, 6));
    CHECK(a - b == Rational(1, 2));
    CHECK(a * b == Rational(1, 9));
    CHECK(a / b == Rational(4));
    CHECK(Rational(4, -6) == Rational(-2, 3));
    CHECK(Rational::parse("5/3") == Rational(5, 3));
    CHECK(Rational(1, 3) < Rational(1, 2));
    CHECK(Rational(2, 3).to_string() == "2/3");
}

TEST_CASE("expressions differentiate and print") {
    auto lookup = [](const std::string& s) { return s == "x" ? 0 : s == "p" ? 1 : -1; };
    const auto e = expr::parse("x*exp(-p) + sqrt(x) - min(x, 2)", lookup);
    const double v[2] = {1.5, 0.3};
    CHECK_THAT(expr::eval(e, v), WithinAbs(1.5 * std::exp(-0.3) + std::sqrt(1.5) - 1.5, 1e-14));
    // Finite differences against the symbolic derivative.
    for (int i = 0; i < 2; ++i) {
        const auto d = expr::diff(e, i);
        double a[2] = {1.5, 0.3}, b[2] = {1.5, 0.3};
        a[i] += 1e-6;
        b[i] -= 1e-6;
        CHECK_THAT(expr::eval(d, v), WithinAbs((expr::eval(e, a) - expr::eval(e, b)) / 2e-6, 1e-7));
    }
    CHECK_THROWS_AS(expr::parse("x + q", lookup), Error);
}

TEST_CASE("minimal network parses") {
    const auto net = parse_network("species S {scale=1}\nreaction r0: 0 -> S @ ma(k=1, beta=1)\n");
    REQUIRE(net.reactions.size() == 1);
    REQUIRE(net.species.size() + net.passive.size() == 1);
    // S is never consumed, so it is tracked as a passive output with change +1.
    REQUIRE(net.passive.size() == 1);
    CHECK(net.reactions[0].passive_outputs.at(0) == 1);
    CHECK(net.reactions[0].rate.rate_exponent == Rational(1));
}

TEST_CASE("bundled enzyme model") {
    const auto net = test::model("mm");
    CHECK(net.species.size() == 3);
    CHECK(net.reactions.size() == 4);
    REQUIRE(net.passive.size() == 1);
    CHECK(net.passive[0].name == "P");
    const auto sys = classify(net);
    CHECK(sys.dx() == 1);
    CHECK(sys.dy() == 1);
    CHECK(sys.slow_name(0) == "S");
    CHECK(sys.fast_name(0) == "E");
}

TEST_CASE("parse errors carry kinds") {
    CHECK(kind_of("species S {scale=1}\nreaction r: S -> S @ ma(k=1,beta=1)\n") == "ZeroNetChange");
    CHECK(kind_of("species S {scale=1}\nreaction r: S -> 0 @ ma(k=-1,beta=1)\n") == "NonPositiveRate");
    CHECK(kind_of("species S {scale=1}\nspecies S {scale=1}\n") == "DuplicateSpecies");
    CHECK(kind_of("species S {scale=1}\nreaction r: Q -> 0 @ ma(k=1,beta=1)\n") == "UnknownSpecies");
    CHECK(kind_of("species S {scale=1}\nreaction r: S -> 0 @ ma(k=1 beta=1)\n") == "SyntaxError");
}

TEST_CASE("conservation laws") {
    SECTION("enzyme pair") {
        auto net = test::model("mm");
        const auto laws = detect_conservation_laws(net);
        REQUIRE(laws.size() == 1);
        const int e = net.species_index("E"), es = net.species_index("ES"), s = net.species_index("S");
        CHECK(laws[0].weights[static_cast<std::size_t>(e)] == 1);
        CHECK(laws[0].weights[static_cast<std::size_t>(es)] == 1);
        CHECK(laws[0].weights[static_cast<std::size_t>(s)] == 0);
        CHECK(laws[0].pairwise);
    }
    SECTION("gene switch") {
        const auto net = test::model("srg");
        REQUIRE(net.conservation_laws.size() == 1);
        REQUIRE(net.conservation_laws[0].total);
        CHECK(*net.conservation_laws[0].total == 1.0);
    }
    SECTION("down-regulation has none") { CHECK(detect_conservation_laws(test::model("dr")).empty()); }
}

TEST_CASE("validation report") {
    const auto mm = validate_network(test::model("mm"));
    CHECK(mm.linear_in_fast);
    REQUIRE(mm.dropped_passive.size() == 1);
    CHECK(mm.dropped_passive[0] == "P");
    const auto sq = validate_network(parse_network(
        "species X {scale=1}\nspecies Y {scale=0}\nreaction a: 0 -> X @ ma(k=1,beta=1)\n"
        "reaction b: 2 Y -> 0 @ ma(k=1,beta=1)\nreaction c: 0 -> Y @ ma(k=1,beta=1)\nreaction d: X -> 0 @ ma(k=1,beta=1)\n"));
    CHECK_FALSE(sq.linear_in_fast);
    REQUIRE_FALSE(sq.flags.empty());
    CHECK(sq.flags[0] == "b: bimolecular in fast species");
}

TEST_CASE("serialization round-trips") {
    for (const char* m : {"mm", "srg", "dr", "vp"}) {
        const auto net = test::model(m);
        const auto back = parse_network(serialize_network(net));
        CHECK(same_structure(net, back));
        CHECK(serialize_network(back) == serialize_network(net));
    }
}

TEST_CASE("deterministic rates use falling factorials for count species") {
    const auto net = test::model("mm");
    // r1: S + E -> ES, rate S * E with E a count.
    const std::vector<double> z{1.5, 2.0, 0.0};
    CHECK_THAT(net.rate(1, z), WithinAbs(3.0, 1e-14));
}
