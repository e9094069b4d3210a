#include <catch_amalgamated.hpp>

#include "../common.hpp"
#include "msldp/error.hpp"
#include "msldp/fastproc.hpp"
#include "msldp/ssa.hpp"

using namespace msldp;
using Catch::Matchers::WithinAbs;

namespace {

const char* kBirth = "species S {scale=1}\nreaction r0: 0 -> S @ ma(k=1, beta=1)\n";

std::vector<std::int64_t> replay_final(const Trajectory& tr) {
    auto n = tr.initial;
    for (auto k : tr.jump_reactions)
        for (std::size_t s = 0; s < n.size(); ++s) n[s] += tr.change[k][s];
    return n;
}

}  // namespace

TEST_CASE("negligible rates give a constant path") {
    const auto net = parse_network(
        "species X {scale=1}\nspecies Y {scale=0}\n"
        "reaction a: X -> 0 @ ma(k=1e-30, beta=1)\nreaction b: Y -> 0 @ ma(k=1e-30, beta=1)\n"
        "init: X=1, Y=3\n");
    SimConfig cfg;
    cfg.N = 100;
    cfg.T = 2;
    cfg.record = {0.5, 1.0, 2.0};
    const auto tr = simulate(net, cfg);
    CHECK(tr.jump_times.empty());
    CHECK(tr.final_counts == tr.initial);
    CHECK(tr.initial[0] == 100);
    CHECK(tr.initial[1] == 3);
    REQUIRE(tr.recorded.size() == 3);
    for (const auto& r : tr.recorded) CHECK(r == tr.initial);
}

TEST_CASE("pure birth counts are Poisson") {
    const auto net = parse_network(kBirth);
    double sum = 0;
    const int seeds = 200;
    for (int s = 0; s < seeds; ++s) {
        SimConfig cfg;
        cfg.N = 1000;
        cfg.T = 1;
        cfg.seed = 1000 + s;
        cfg.keep_jumps = false;
        const auto tr = simulate(net, cfg);
        sum += static_cast<double>(tr.jump_counts[0]);
        CHECK(tr.final_counts[0] == static_cast<std::int64_t>(tr.jump_counts[0]));
    }
    const double mean = sum / seeds;
    CHECK(std::fabs(mean - 1000) < 3.5 * std::sqrt(1000.0));
    CHECK(std::fabs(mean - 1000) < 3.5 * std::sqrt(1000.0 / seeds));
}

TEST_CASE("enzyme empirical mean follows the LLN") {
    const auto net = test::model("mm");
    const auto sys = classify(net);
    const double x0[1] = {1.0};
    const auto lln = integrate_lln(sys, x0, 1.0, 0.1, make_fast_space(sys, 10));
    const double N = 1000;
    std::vector<double> mean(lln.t.size(), 0.0);
    const int seeds = 100;
    for (int s = 0; s < seeds; ++s) {
        SimConfig cfg;
        cfg.N = N;
        cfg.T = 1;
        cfg.seed = 77 + s;
        cfg.record = lln.t;
        cfg.keep_jumps = false;
        const auto tr = simulate(net, cfg);
        REQUIRE(tr.recorded.size() == lln.t.size());
        for (std::size_t i = 0; i < lln.t.size(); ++i) mean[i] += static_cast<double>(tr.recorded[i][0]) / N / seeds;
    }
    double sup = 0;
    for (std::size_t i = 0; i < lln.t.size(); ++i) sup = std::max(sup, std::fabs(mean[i] - lln.x[i][0]));
    CHECK(sup < 5 / std::sqrt(N));
}

TEST_CASE("occupation measure") {
    const auto net = test::model("mm");
    const int e = net.species_index("E");
    auto by_e = [e](const std::vector<std::int64_t>& n) { return static_cast<int>(n[static_cast<std::size_t>(e)]); };
    SimConfig cfg;
    cfg.N = 2000;
    cfg.T = 5;
    cfg.seed = 9;
    const auto tr = simulate(net, cfg);

    SECTION("empty window") {
        const auto om = occupation_measure(tr, 3, by_e, {0.0, 0.0});
        for (double m : om.total()) CHECK(m == 0.0);
    }
    SECTION("one cell holds all the time") {
        const auto om = occupation_measure(tr, 1, [](const std::vector<std::int64_t>&) { return 0; }, {0.0, 2.5, 5.0});
        CHECK_THAT(om.total()[0], WithinAbs(5.0, 1e-12));
        CHECK_THAT(om.mass[0][0], WithinAbs(2.5, 1e-12));
    }
    SECTION("time averages match the averaged binomial") {
        // E is Binomial(2, 2/(2+x)) given the slow value; average that along the LLN path.
        const auto sys = classify(net);
        const double x0[1] = {1.0};
        const auto lln = integrate_lln(sys, x0, 5.0, 0.01, make_fast_space(sys, 10));
        std::vector<double> ref(3, 0.0);
        for (std::size_t i = 0; i + 1 < lln.t.size(); ++i) {
            const double xm = 0.5 * (lln.x[i][0] + lln.x[i + 1][0]);
            const double q = 2 / (2 + xm), w = lln.t[i + 1] - lln.t[i];
            ref[0] += w * (1 - q) * (1 - q);
            ref[1] += w * 2 * q * (1 - q);
            ref[2] += w * q * q;
        }
        const auto tot = occupation_measure(tr, 3, by_e, {0.0, 5.0}).total();
        for (int c = 0; c < 3; ++c) CHECK_THAT(tot[static_cast<std::size_t>(c)] / 5, WithinAbs(ref[static_cast<std::size_t>(c)] / 5, 0.05));

        // Over a short opening window the slow value is still near 1: Binomial(2, 2/3).
        double early[3] = {0, 0, 0};
        const int seeds = 20;
        for (int s = 0; s < seeds; ++s) {
            SimConfig c2 = cfg;
            c2.T = 0.05;
            c2.seed = 500 + s;
            const auto om = occupation_measure(simulate(net, c2), 3, by_e, {0.0, 0.05});
            for (int c = 0; c < 3; ++c) early[c] += om.mass[0][static_cast<std::size_t>(c)] / 0.05 / seeds;
        }
        const double pmf[3] = {1.0 / 9, 4.0 / 9, 4.0 / 9};
        for (int c = 0; c < 3; ++c) CHECK_THAT(early[c], WithinAbs(pmf[c], 0.05));
    }
}

TEST_CASE("paths are reproducible and consistent") {
    for (const char* m : {"mm", "srg", "dr", "vp"}) {
        const auto net = test::model(m);
        SimConfig cfg;
        cfg.N = 200;
        cfg.T = 1;
        cfg.seed = 31;
        const auto a = simulate(net, cfg), b = simulate(net, cfg);
        CHECK(a.jump_times == b.jump_times);
        CHECK(a.jump_reactions == b.jump_reactions);
        CHECK(replay_final(a) == a.final_counts);
        auto n = a.initial;
        for (std::size_t k = 0; k < a.jump_counts.size(); ++k)
            for (std::size_t s = 0; s < n.size(); ++s)
                n[s] += static_cast<std::int64_t>(a.jump_counts[k]) * a.change[k][s];
        CHECK(n == a.final_counts);
        cfg.seed = 32;
        CHECK(simulate(net, cfg).jump_times != a.jump_times);
    }
}

TEST_CASE("conservation holds along every path") {
    for (const char* m : {"mm", "srg"}) {
        const auto net = test::model(m);
        REQUIRE(net.conservation_laws.size() == 1);
        const auto& law = net.conservation_laws[0];
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            SimConfig cfg;
            cfg.N = 300;
            cfg.T = 2;
            cfg.seed = seed;
            const auto tr = simulate(net, cfg);
            auto n = tr.initial;
            auto total = [&] {
                std::int64_t v = 0;
                for (std::size_t s = 0; s < law.weights.size(); ++s) v += law.weights[s] * n[s];
                return v;
            };
            const auto t0 = total();
            bool ok = true;
            for (auto k : tr.jump_reactions) {
                for (std::size_t s = 0; s < n.size(); ++s) n[s] += tr.change[k][s];
                ok = ok && total() == t0;
            }
            CHECK(ok);
        }
    }
}

TEST_CASE("Monte Carlo edge cases") {
    const auto net = parse_network(kBirth);
    McTarget t;
    t.species = {0};
    t.T = 1;
    SECTION("certain event has zero rate") {
        t.center = {1.0};
        t.eps = 1e9;
        const auto r = mc_log_prob(net, t, {10, 20, 40}, 50, 1);
        for (const auto& pt : r.points) {
            CHECK(pt.hits == 50);
            REQUIRE(pt.rate);
            CHECK(*pt.rate == 0.0);
        }
        REQUIRE(r.slope);
        CHECK_THAT(*r.slope, WithinAbs(0.0, 1e-15));
    }
    SECTION("unreachable target") {
        t.center = {10.0};
        t.eps = 0.01;
        try {
            mc_log_prob(net, t, {50}, 100, 1);
            FAIL("expected AllCensored");
        } catch (const Error& e) {
            CHECK(e.kind() == "AllCensored");
        }
        CHECK(mc_estimate(net, t, {50}, 100, 1).censored == 1);
    }
    SECTION("worker count does not change the estimate") {
        t.center = {1.2};
        t.eps = 0.1;
        const auto a = mc_estimate(net, t, {50, 100}, 400, 5, 1);
        const auto b = mc_estimate(net, t, {50, 100}, 400, 5, 3);
        for (std::size_t i = 0; i < 2; ++i) CHECK(a.points[i].hits == b.points[i].hits);
    }
}
