#include <catch_amalgamated.hpp>

#include <random>

#include "../common.hpp"
#include "msldp/error.hpp"
#include "msldp/evp.hpp"

using namespace msldp;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double at(const expr::Expr& e, double x, double p) {
    const double v[2] = {x, p};
    return expr::eval(e, v);
}

}  // namespace

TEST_CASE("conversion structure options") {
    SECTION("enzyme: E through the conserved pair") {
        const auto sys = test::scaled("mm");
        const auto st = check_structure(sys);
        const int e = sys.net.species_index("E");
        CHECK(st.J.count(e) == 1);
        CHECK(st.option.at(e).find('i') == 0);
        REQUIRE(st.conserved_pairs.size() == 1);
    }
    SECTION("down-regulation: B through the slow species") {
        const auto sys = test::scaled("dr");
        const auto st = check_structure(sys);
        CHECK(st.option.at(sys.net.species_index("B")) == "ii");
    }
    SECTION("quadratic fast rate is rejected") {
        const auto net = parse_network(
            "species X {scale=1}\nspecies Y {scale=0}\n"
            "reaction a: 0 -> X @ ma(k=1, beta=1)\nreaction b: X + Y -> 0 @ ma(k=1, beta=1)\n"
            "reaction c: 0 -> Y @ ma(k=1, beta=1)\nreaction d: 2 Y -> Y @ ma(k=1, beta=1)\n");
        try {
            check_structure(classify(net));
            FAIL("expected NonlinearFastRate");
        } catch (const Error& e) {
            CHECK(e.kind() == "NonlinearFastRate");
        }
    }
}

TEST_CASE("quadratic for the enzyme model") {
    const auto sys = test::scaled("mm");
    const auto sol = solve_evp(sys);
    REQUIRE(sol.steps.size() == 1);
    const auto& s = sol.steps[0];
    CHECK_FALSE(s.linear);
    // Proportional to (e^p + 1, x - 2, -x e^{-p}) at unit rates.
    for (double x : {0.3, 1.0, 2.5})
        for (double p : {-1.0, 0.0, 0.7}) {
            const double A = at(s.A, x, p), B = at(s.B, x, p), C = at(s.C, x, p);
            const double ref[3] = {std::exp(p) + 1.0, x - 2.0, -x * std::exp(-p)};
            const double k = A / ref[0];
            CHECK_THAT(B, WithinAbs(k * ref[1], 1e-12));
            CHECK_THAT(C, WithinAbs(k * ref[2], 1e-12));
        }
    // 2z^2 - z - 1 at x = 1, p = 0: z = 1.
    CHECK_THAT(at(sol.z[0], 1.0, 0.0), WithinAbs(1.0, 1e-14));
    CHECK_THAT(at(sol.H, 1.0, 0.0), WithinAbs(0.0, 1e-14));
}

TEST_CASE("gene switch quadratic") {
    const auto sys = test::scaled("srg");
    const auto sol = solve_evp(sys);
    REQUIRE(sol.steps.size() == 1);
    const auto& s = sol.steps[0];
    // Proportional to (-k2, k2 - k1 - (e^{p1} - 1), k1) with k1 = 2/(1+P), k2 = 1 + P/2.
    std::mt19937 g(3);
    std::uniform_real_distribution<double> ux(0.1, 5), up(-2, 2);
    for (int t = 0; t < 20; ++t) {
        const double v[4] = {ux(g), ux(g), up(g), up(g)};
        const double P = v[1], k1 = 2 / (1 + P), k2 = 1 + P / 2;
        const double A = expr::eval(s.A, v), B = expr::eval(s.B, v), C = expr::eval(s.C, v);
        const double k = A / -k2;
        CHECK_THAT(B, WithinAbs(k * (k2 - k1 - (std::exp(v[2]) - 1)), 1e-12));
        CHECK_THAT(C, WithinAbs(k * k1, 1e-12));
        CHECK(expr::eval(sol.z[0], v) > 0);
    }
}

TEST_CASE("degenerate quadratic for down-regulation") {
    const auto sys = test::scaled("dr");
    const auto sol = solve_evp(sys);
    REQUIRE(sol.steps.size() == 1);
    CHECK(sol.steps[0].linear);
    for (double x : {0.2, 1.0, 4.0})
        for (double p : {-1.5, 0.3, 1.9})
            CHECK_THAT(at(sol.z[0], x, p), WithinAbs((x * std::exp(-p) + 1) / (x + 1), 1e-13));
}

TEST_CASE("viral model: continuous unknown vanishes") {
    const auto sys = test::scaled("vp");
    const auto sol = solve_evp(sys);
    for (std::size_t j = 0; j < sys.dy(); ++j) {
        if (sys.fast_name(j) == "S") {
            CHECK_THAT(at(sol.u[j], 1.3, 0.4), WithinAbs(0.0, 1e-15));
        } else {
            for (double x : {0.2, 1.0, 4.0})
                for (double p : {-1.5, 0.3, 1.9})
                    CHECK_THAT(at(sol.z[j], x, p), WithinAbs((1 + x * std::exp(-p)) / (1 + x), 1e-13));
        }
    }
}

TEST_CASE("Hamiltonian values") {
    const auto mm = hamiltonian(test::scaled("mm"));
    const auto vp = hamiltonian(test::scaled("vp"));
    const auto dr = hamiltonian(test::scaled("dr"));
    const double x[1] = {1.0}, p[1] = {std::log(2.0)};
    CHECK_THAT(mm.value(x, p), WithinAbs(std::sqrt(7.0) - 2.0, 1e-13));
    CHECK_THAT(vp.value(x, p), WithinAbs(0.375, 1e-13));
    CHECK_THAT(dr.value(x, p), WithinAbs(0.5, 1e-13));

    SECTION("oracle values") {
        CHECK_THAT(Oracles::mm({}, 1.0, std::log(2.0)), WithinAbs(std::sqrt(7.0) - 2.0, 1e-14));
        CHECK_THAT(Oracles::dr({}, 1.0, std::log(2.0)), WithinAbs(0.5, 1e-14));
        CHECK_THAT(Oracles::vp({}, 1.0, std::log(2.0)), WithinAbs(0.375, 1e-14));
        CHECK_THAT(Oracles::srg({}, 1.0, 1.0, std::log(2.0), 0.0), WithinAbs((std::sqrt(5.0) - 2.0) / 2.0, 1e-14));
        for (double xv : {0.3, 2.0}) {
            CHECK(Oracles::mm({}, xv, 0.0) == Catch::Approx(0.0).margin(1e-15));
            CHECK(Oracles::dr({}, xv, 0.0) == Catch::Approx(0.0).margin(1e-15));
            CHECK(Oracles::vp({}, xv, 0.0) == Catch::Approx(0.0).margin(1e-15));
            CHECK(Oracles::srg({}, xv, 1.0, 0.0, 0.0) == Catch::Approx(0.0).margin(1e-15));
        }
    }
    SECTION("p = 0 gives zero for every model") {
        for (const char* m : {"mm", "srg", "dr", "vp"}) {
            const auto sys = test::scaled(m);
            const auto H = hamiltonian(sys);
            const std::vector<double> xs(sys.dx(), 1.7), ps(sys.dx(), 0.0);
            CHECK_THAT(H.value(xs, ps), WithinAbs(0.0, 1e-14));
        }
    }
}

TEST_CASE("Hamiltonian derivatives against finite differences") {
    const auto sys = test::scaled("srg");
    const auto H = hamiltonian(sys);
    const std::vector<double> x{1.3, 0.6}, p{0.4, -0.7};
    const auto gp = H.grad_p(x, p), gx = H.grad_x(x, p);
    const auto hp = H.hess_p(x, p);
    const double h = 1e-5;
    for (std::size_t i = 0; i < 2; ++i) {
        auto pa = p, pb = p, xa = x, xb = x;
        pa[i] += h;
        pb[i] -= h;
        xa[i] += h;
        xb[i] -= h;
        CHECK_THAT(gp[i], WithinAbs((H.value(x, pa) - H.value(x, pb)) / (2 * h), 1e-8));
        CHECK_THAT(gx[i], WithinAbs((H.value(xa, p) - H.value(xb, p)) / (2 * h), 1e-8));
        const auto ga = H.grad_p(x, pa), gb = H.grad_p(x, pb);
        for (std::size_t j = 0; j < 2; ++j) CHECK_THAT(hp[j][i], WithinAbs((ga[j] - gb[j]) / (2 * h), 1e-7));
    }
    const std::vector<double> bad{-0.1, 1.0};
    CHECK_THROWS_AS(H.value(bad, p), Error);
}

TEST_CASE("eigen identity holds on every truncated state") {
    std::mt19937 g(11);
    std::uniform_real_distribution<double> ux(0.1, 5), up(-2, 2);
    for (const char* m : {"mm", "srg", "dr", "vp"}) {
        const auto sys = test::scaled(m);
        const auto sol = solve_evp(sys);
        for (int t = 0; t < 10; ++t) {
            std::vector<double> x(sys.dx()), p(sys.dx());
            for (auto& v : x) v = ux(g);
            for (auto& v : p) v = up(g);
            CHECK(eigen_identity_residual(sys, sol, x, p, 60) < 1e-9);
        }
    }
}
