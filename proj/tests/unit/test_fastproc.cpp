#include <catch_amalgamated.hpp>

#include "../common.hpp"
#include "msldp/error.hpp"
#include "msldp/evp.hpp"
#include "msldp/fastproc.hpp"

using namespace msldp;
using Catch::Matchers::WithinAbs;

namespace {

double q(const FastOperator& op, std::size_t i, std::size_t j) { return op.Q.coeff(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)); }

std::size_t state_of(const FastStateSpace& s, int e) { return s.index.at({e}); }

}  // namespace

TEST_CASE("enzyme fast generator") {
    const auto sys = test::scaled("mm");
    const auto space = make_fast_space(sys, 10);
    REQUIRE(space.size() == 3);
    const double x[1] = {1.0};
    SECTION("p = 0") {
        const double p[1] = {0.0};
        const auto op = build_fast_operator(sys, x, p, space);
        for (int y = 0; y <= 2; ++y) {
            const auto s = state_of(space, y);
            CHECK_THAT(op.V[static_cast<Eigen::Index>(s)], WithinAbs(0.0, 1e-15));
            if (y < 2) CHECK_THAT(q(op, s, state_of(space, y + 1)), WithinAbs(2.0 * (2 - y), 1e-14));
            if (y > 0) CHECK_THAT(q(op, s, state_of(space, y - 1)), WithinAbs(1.0 * y, 1e-14));
        }
    }
    SECTION("p = ln 2 tilts the shared reactions") {
        const double p[1] = {std::log(2.0)};
        const auto op = build_fast_operator(sys, x, p, space);
        for (int y = 0; y <= 2; ++y) {
            const auto s = state_of(space, y);
            if (y < 2) CHECK_THAT(q(op, s, state_of(space, y + 1)), WithinAbs(3.0 * (2 - y), 1e-14));
            if (y > 0) CHECK_THAT(q(op, s, state_of(space, y - 1)), WithinAbs(0.5 * y, 1e-14));
        }
    }
}

TEST_CASE("down-regulation fast generator") {
    const auto sys = test::scaled("dr");
    const auto space = make_fast_space(sys, 30);
    const double x[1] = {1.0}, p[1] = {0.0};
    const auto op = build_fast_operator(sys, x, p, space);
    for (int y = 0; y < 30; ++y) {
        CHECK_THAT(q(op, state_of(space, y), state_of(space, y + 1)), WithinAbs(2.0, 1e-14));
        if (y > 0) CHECK_THAT(q(op, state_of(space, y), state_of(space, y - 1)), WithinAbs(2.0 * y, 1e-14));
    }
}

TEST_CASE("stationary distributions") {
    SECTION("enzyme binomial") {
        const auto sys = test::scaled("mm");
        const auto space = make_fast_space(sys, 10);
        const double x[1] = {1.0}, p[1] = {0.0};
        const auto st = stationary_distribution(build_fast_operator(sys, x, p, space));
        const double expect[3] = {1.0 / 9, 4.0 / 9, 4.0 / 9};
        for (int y = 0; y <= 2; ++y)
            CHECK_THAT(st.pi[static_cast<Eigen::Index>(state_of(space, y))], WithinAbs(expect[y], 1e-12));
        CHECK(st.residual < 1e-12);
    }
    SECTION("gene switch with constant rates") {
        const auto net = parse_network(
            "species G0 {scale=0}\nspecies G1 {scale=0}\nspecies P {scale=1}\n"
            "reaction r1: G0 -> G1 @ ma(k=1, beta=1)\nreaction r2: G1 -> G0 @ ma(k=1, beta=1)\n"
            "reaction r3: G1 -> G1 + P @ ma(k=1, beta=1)\nreaction r6: P -> 0 @ ma(k=1, beta=1)\n"
            "conserve: G0 + G1 = 1\n");
        const auto sys = classify(net);
        const auto space = make_fast_space(sys, 5);
        REQUIRE(space.size() == 2);
        const double x[1] = {0.7}, p[1] = {0.0};
        const auto st = stationary_distribution(build_fast_operator(sys, x, p, space));
        CHECK_THAT(st.pi[0], WithinAbs(0.5, 1e-12));
        CHECK_THAT(st.pi[1], WithinAbs(0.5, 1e-12));
    }
    SECTION("one state") {
        FastOperator op;
        op.V = Eigen::VectorXd::Zero(1);
        op.Q.resize(1, 1);
        const auto st = stationary_distribution(op);
        CHECK_THAT(st.pi[0], WithinAbs(1.0, 1e-15));
    }
    SECTION("entries nonnegative and normalized on a truncated chain") {
        const auto sys = test::scaled("dr");
        const auto space = make_fast_space(sys, 60);
        const double x[1] = {2.3}, p[1] = {0.0};
        const auto st = stationary_distribution(build_fast_operator(sys, x, p, space));
        CHECK(st.pi.minCoeff() >= 0);
        CHECK_THAT(st.pi.sum(), WithinAbs(1.0, 1e-12));
    }
}

TEST_CASE("irreducibility") {
    const auto sys = test::scaled("mm");
    const auto space = make_fast_space(sys, 10);
    const double x[1] = {1.0}, p[1] = {0.0};
    CHECK(check_irreducibility(build_fast_operator(sys, x, p, space)).irreducible);
    CHECK(check_irreducibility(build_fast_operator(test::scaled("dr"), x, p, make_fast_space(test::scaled("dr"), 20)))
              .irreducible);

    // Enzyme chain with the release reactions switched off: E = 0 is absorbing.
    FastOperator op;
    op.V = Eigen::VectorXd::Zero(3);
    std::vector<Eigen::Triplet<double>> t{{1, 0, 1.0}, {1, 1, -1.0}, {2, 1, 2.0}, {2, 2, -2.0}};
    Eigen::SparseMatrix<double, Eigen::RowMajor> Q(3, 3);
    Q.setFromTriplets(t.begin(), t.end());
    op.Q = Q;
    const auto irr = check_irreducibility(op);
    CHECK_FALSE(irr.irreducible);
    CHECK(irr.components.size() == 3);
    CHECK_THROWS_AS(stationary_distribution(op), Error);
}

TEST_CASE("effective drift closed forms") {
    for (double x : {0.2, 1.0, 3.7}) {
        const double xv[1] = {x};
        {
            const auto sys = test::scaled("mm");
            const auto d = effective_drift(sys, xv, make_fast_space(sys, 10));
            CHECK_THAT(d[0], WithinAbs(1.0 - 2.0 * x / (2.0 + x), 1e-10));
        }
        {
            const auto sys = test::scaled("dr");
            const auto d = effective_drift(sys, xv, make_fast_space(sys, 120));
            CHECK_THAT(d[0], WithinAbs(1.0 - x * (x + 1.0) / (x + 1.0), 1e-9));
        }
        {
            const auto sys = test::scaled("vp");
            const auto d = effective_drift(sys, xv, make_fast_space(sys, 120));
            CHECK_THAT(d[0], WithinAbs(1.0 - x - x * x / (1.0 + x), 1e-9));
        }
    }
}

TEST_CASE("LLN integration") {
    SECTION("zero field") {
        const double x0[2] = {0.3, 2.0};
        const auto tr = integrate_lln([](std::span<const double>) { return std::vector<double>{0.0, 0.0}; }, x0, 2.0, 0.5);
        for (const auto& x : tr.x) {
            CHECK(x[0] == 0.3);
            CHECK(x[1] == 2.0);
        }
    }
    SECTION("constant field is exact") {
        const double x0[1] = {0.5};
        const auto tr = integrate_lln([](std::span<const double>) { return std::vector<double>{1.0}; }, x0, 3.0, 0.25);
        for (std::size_t i = 0; i < tr.t.size(); ++i) CHECK_THAT(tr.x[i][0], WithinAbs(0.5 + tr.t[i], 1e-12));
    }
    SECTION("enzyme model against a fine reference") {
        // Reference: RK4 with h = 1e-4 on x' = 1 - 2x / (2 + x).
        auto f = [](double x) { return 1.0 - 2.0 * x / (2.0 + x); };
        double x = 1.0;
        const int n = 10000;
        const double h = 1.0 / n;
        for (int i = 0; i < n; ++i) {
            const double k1 = f(x), k2 = f(x + h / 2 * k1), k3 = f(x + h / 2 * k2), k4 = f(x + h * k3);
            x += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
        }
        const auto sys = test::scaled("mm");
        const double x0[1] = {1.0};
        const auto tr = integrate_lln(sys, x0, 1.0, 0.1, make_fast_space(sys, 10));
        CHECK_THAT(tr.x.back()[0], WithinAbs(x, 1e-7));
    }
    SECTION("blow-up is reported") {
        const double x0[1] = {1.0};
        CHECK_THROWS_AS(
            integrate_lln([](std::span<const double> x) { return std::vector<double>{x[0] * x[0]}; }, x0, 2.0, 0.1), Error);
    }
}

TEST_CASE("Perron root") {
    const auto mm = test::scaled("mm");
    const auto space = make_fast_space(mm, 10);
    const double x[1] = {1.0};
    const double p0[1] = {0.0}, p1[1] = {std::log(2.0)};
    CHECK_THAT(principal_eigenvalue_numeric(mm, x, p0, space).lambda, WithinAbs(0.0, 1e-12));
    const auto r = principal_eigenvalue_numeric(mm, x, p1, space);
    CHECK_THAT(r.lambda, WithinAbs(std::sqrt(7.0) - 2.0, 1e-12));
    CHECK(r.eigenvector.minCoeff() > 0);

    SECTION("truncation sweep converges monotonically") {
        const auto dr = test::scaled("dr");
        const double exact = Oracles::dr({}, 1.0, std::log(2.0));
        double prev = -1e300;
        for (int ymax : {50, 100, 150, 200}) {
            const double lam = principal_eigenvalue_numeric(dr, x, p1, make_fast_space(dr, ymax)).lambda;
            CHECK(lam >= prev - 1e-12);
            prev = lam;
        }
        CHECK_THAT(prev, WithinAbs(exact, 1e-6));
    }
    SECTION("strong negative tilt: eigenvector grows geometrically in y") {
        const auto dr = test::scaled("dr");
        const double xs[1] = {5.0}, pn[1] = {-2.0};
        for (int ymax : {50, 200})
            CHECK_THAT(principal_eigenvalue_numeric(dr, xs, pn, make_fast_space(dr, ymax)).lambda,
                       WithinAbs(Oracles::dr({}, 5.0, -2.0), 1e-8));
    }
    SECTION("power iteration agrees with the dense path") {
        const auto dr = test::scaled("dr");
        PerronOptions opt;
        opt.dense_below = 0;
        const auto it = principal_eigenvalue_numeric(dr, x, p1, make_fast_space(dr, 80), opt);
        const auto dense = principal_eigenvalue_numeric(dr, x, p1, make_fast_space(dr, 80));
        CHECK_FALSE(it.dense);
        CHECK_THAT(it.lambda, WithinAbs(dense.lambda, 1e-8));
    }
}
