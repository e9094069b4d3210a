// Acceptance run: one PASS/FAIL line per criterion.
// Usage: acceptance [n ...]   (no arguments: all criteria)

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <string>

#include "../common.hpp"
#include "msldp/error.hpp"
#include "msldp/evp.hpp"
#include "msldp/fastproc.hpp"
#include "msldp/ldp.hpp"
#include "msldp/lyapunov.hpp"
#include "msldp/ssa.hpp"

using namespace msldp;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
    char buf[1024];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

const char* kModels[] = {"mm", "srg", "dr", "vp"};

Oracles::SRG srg_rates() {
    Oracles::SRG c;
    c.k1 = [](double P) { return 2 / (1 + P); };
    c.k2 = [](double P) { return 1 + P / 2; };
    return c;
}

double oracle(const std::string& m, std::span<const double> x, std::span<const double> p) {
    if (m == "mm") return Oracles::mm({}, x[0], p[0]);
    if (m == "dr") return Oracles::dr({}, x[0], p[0]);
    if (m == "vp") return Oracles::vp({}, x[0], p[0]);
    return Oracles::srg(srg_rates(), x[0], x[1], p[0], p[1]);
}

/// Fast truncation wide enough for the slow range used below.
int ymax_for(const std::string& m) { return m == "mm" || m == "srg" ? 10 : 200; }

std::vector<double> draw(std::mt19937_64& g, std::size_t d, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(d);
    for (auto& e : v) e = u(g);
    return v;
}

Verdict c1() {
    std::mt19937_64 g(101);
    double worst = 0;
    for (const char* m : kModels) {
        const auto H = hamiltonian(test::scaled(m));
        for (int s = 0; s < 100; ++s) {
            const auto x = draw(g, H.dim(), 0.1, 5), p = draw(g, H.dim(), -2, 2);
            const double a = H.value(x, p), b = oracle(m, x, p);
            worst = std::max(worst, std::fabs(a - b) / std::fabs(b));
        }
    }
    return {worst <= 1e-10, fmt("max_rel=%.3g over 4x100 samples", worst)};
}

Verdict c2() {
    double mm_err = 0, dr_err = 0;
    {
        const auto sys = test::scaled("mm");
        const auto H = hamiltonian(sys);
        const auto space = make_fast_space(sys, 2);
        for (int i = 0; i < 10; ++i)
            for (int j = 0; j < 10; ++j) {
                const double x[1] = {0.1 + 4.9 * i / 9}, p[1] = {-2 + 4.0 * j / 9};
                mm_err = std::max(mm_err, std::fabs(H.value(x, p) - principal_eigenvalue_numeric(sys, x, p, space).lambda));
            }
    }
    {
        const auto sys = test::scaled("dr");
        const auto H = hamiltonian(sys);
        const auto space = make_fast_space(sys, 200);
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j) {
                const double x[1] = {0.1 + 4.9 * i / 4}, p[1] = {-2 + 4.0 * j / 4};
                dr_err = std::max(dr_err, std::fabs(H.value(x, p) - principal_eigenvalue_numeric(sys, x, p, space).lambda));
            }
    }
    return {mm_err <= 1e-8 && dr_err <= 1e-6, fmt("mm_max=%.3g dr_max=%.3g", mm_err, dr_err)};
}

Verdict c3() {
    std::mt19937_64 g(303);
    double h0 = 0, res = 0;
    for (const char* m : kModels) {
        const auto sys = test::scaled(m);
        const auto sol = solve_evp(sys);
        const auto H = hamiltonian(sys);
        const std::vector<double> zero(sys.dx(), 0.0);
        for (int s = 0; s < 20; ++s) {
            const auto x = draw(g, sys.dx(), 0.1, 5);
            h0 = std::max(h0, std::fabs(H.value(x, zero)));
            res = std::max(res, eigen_identity_residual(sys, sol, x, draw(g, sys.dx(), -2, 2), ymax_for(m)));
        }
    }
    return {h0 <= 1e-12 && res < 1e-9, fmt("max|H(x,0)|=%.3g max_residual=%.3g", h0, res)};
}

Verdict c4() {
    std::mt19937_64 g(404);
    double fd = 0;
    for (const char* m : kModels) {
        const auto sys = test::scaled(m);
        const auto H = hamiltonian(sys);
        const auto space = make_fast_space(sys, ymax_for(m));
        for (int s = 0; s < 20; ++s) {
            const auto x = draw(g, sys.dx(), 0.1, 5);
            const auto b = effective_drift(sys, x, space);
            for (std::size_t i = 0; i < sys.dx(); ++i) {
                std::vector<double> pp(sys.dx(), 0.0), pm(sys.dx(), 0.0);
                const double h = 1e-5;
                pp[i] = h;
                pm[i] = -h;
                fd = std::max(fd, std::fabs((H.value(x, pp) - H.value(x, pm)) / (2 * h) - b[i]));
            }
        }
    }
    double mm = 0;
    const auto sys = test::scaled("mm");
    const auto space = make_fast_space(sys, 2);
    for (int s = 0; s < 20; ++s) {
        const double x[1] = {0.1 + 4.9 * s / 19};
        mm = std::max(mm, std::fabs(effective_drift(sys, x, space)[0] - (1 - 2 * x[0] / (2 + x[0]))));
    }
    return {fd <= 1e-4 && mm <= 1e-10, fmt("fd_max=%.3g mm_formula_max=%.3g", fd, mm)};
}

Verdict c5() {
    const Hamiltonian birth(expr::exp(expr::var(1)) - expr::constant(1), 1);
    double cr = 0;
    const double x0[1] = {0.0};
    for (double a : {1.5, 2.0, 3.0}) {
        const double x1[1] = {a};
        cr = std::max(cr, std::fabs(minimize_action(birth, x0, x1, 1.0).action - (a * std::log(a) - a + 1)));
    }
    std::mt19937_64 g(505);
    double lb = 0;
    for (const char* m : kModels) {
        const auto sys = test::scaled(m);
        const auto H = hamiltonian(sys);
        const auto space = make_fast_space(sys, ymax_for(m));
        for (int s = 0; s < 10; ++s) {
            const auto x = draw(g, sys.dx(), 0.2, 4);
            lb = std::max(lb, std::fabs(legendre(H, x, effective_drift(sys, x, space)).L));
        }
    }
    return {cr <= 1e-4 && lb <= 1e-8, fmt("cramer_max=%.3g max|L(x,b(x))|=%.3g", cr, lb)};
}

Verdict c6() {
    const auto H = hamiltonian(test::scaled("mm"));
    HJBGrid grid;
    grid.x_lo = 0;
    grid.x_hi = 3;
    grid.n = 400;
    const double x0 = 1, T = 1;
    double worst = 0;
    std::string rows;
    for (auto [c, xs] : {std::pair{1.0, 2.0}, {3.0, 2.0}, {-2.0, 0.7}}) {
        auto f = [c = c, xs = xs](double x) { return std::min(0.0, c * (x - xs)); };
        const double u = hjb_solve(H, f, grid, T).at(T, x0);
        const double d = dual_value(H, f, x0, T, 0.05, 2.95).value;
        worst = std::max(worst, std::fabs(u - d));
        rows += fmt(" (c=%g,x*=%g):u=%.5f,dual=%.5f", c, xs, u, d);
    }
    return {worst <= 2e-2, fmt("max_gap=%.4f%s", worst, rows.c_str())};
}

/// P(|Poisson(N)/N - a| <= eps), summed in log space.
double poisson_ball(double N, double a, double eps) {
    double s = 0;
    for (long k = static_cast<long>(std::ceil(N * (a - eps) - 1e-9)); k <= static_cast<long>(std::floor(N * (a + eps) + 1e-9)); ++k)
        s += std::exp(k * std::log(N) - N - std::lgamma(k + 1.0));
    return s;
}

Verdict c7() {
    const std::vector<double> Ns{50, 100, 200, 400};
    std::string out;
    bool birth_ok = false;
    {
        const auto net = parse_network("species S {scale=1}\nreaction r0: 0 -> S @ ma(k=1, beta=1)\n");
        McTarget t;
        t.species = {0};
        t.center = {2.0};
        t.eps = 0.1;
        t.T = 1;
        const auto r = mc_estimate(net, t, Ns, 1000000, 777);
        const double target = 2 * std::log(2.0) - 1;
        out += "birth:";
        for (const auto& pt : r.points)
            out += fmt(" N=%g hits=%llu exact_p=%.2e", pt.N, static_cast<unsigned long long>(pt.hits), poisson_ball(pt.N, 2, 0.1));
        if (r.slope) {
            birth_ok = std::fabs(*r.slope - target) <= 0.25 * target;
            out += fmt(" slope=%.4f", *r.slope);
        } else {
            out += " slope=censored";
        }
    }
    bool dr_ok = false;
    {
        const auto net = test::model("dr");
        const auto H = hamiltonian(classify(net));
        McTarget t;
        t.species = {0};
        t.center = {1.25};
        t.eps = 0.05;
        t.T = 1;
        t.z0 = {1.0, 1.0};
        const double x0[1] = {1.0}, edge[1] = {1.2};
        const double I = minimize_action(H, x0, edge, 1.0).action;
        const auto r = mc_estimate(net, t, Ns, 200000, 20240601);
        out += " | dr:";
        for (const auto& pt : r.points) out += fmt(" N=%g hits=%llu", pt.N, static_cast<unsigned long long>(pt.hits));
        if (r.slope) {
            dr_ok = std::fabs(*r.slope - I) <= 0.3 * I;
            out += fmt(" slope=%.4f action=%.4f", *r.slope, I);
        } else {
            out += " slope=censored";
        }
    }
    return {birth_ok && dr_ok, out + fmt(" (birth %s, dr %s)", birth_ok ? "ok" : "fail", dr_ok ? "ok" : "fail")};
}

bool same_path(const Trajectory& a, const Trajectory& b) {
    return a.jump_times == b.jump_times && a.jump_reactions == b.jump_reactions && a.final_counts == b.final_counts;
}

Verdict c8() {
    const auto mm = test::model("mm");
    bool identical = true;
    for (double level : {2.0, 3.0, 5.0}) {
        const auto t = truncate(mm, level);
        for (std::uint64_t s = 1; s <= 100; ++s) {
            SimConfig cfg;
            cfg.N = 100;
            cfg.T = 2;
            cfg.seed = s;
            identical = identical && same_path(simulate(mm, cfg), simulate(t.net, cfg));
        }
    }
    const auto dr = test::model("dr");
    std::vector<double> frac;
    for (double level : {2.0, 4.0, 8.0}) {
        const auto t = truncate(dr, level);
        int div = 0;
        const int seeds = 1000;
        for (int s = 1; s <= seeds; ++s) {
            SimConfig cfg;
            cfg.N = 2;
            cfg.T = 5;
            cfg.seed = static_cast<std::uint64_t>(s);
            if (!same_path(simulate(dr, cfg), simulate(t.net, cfg))) ++div;
        }
        frac.push_back(static_cast<double>(div) / seeds);
    }
    const bool mono = frac[0] >= frac[1] && frac[1] >= frac[2] && frac[0] > frac[2];
    return {identical && mono, fmt("mm_identical=%s dr_divergence(2,4,8)=%.3f,%.3f,%.3f", identical ? "yes" : "no",
                                   frac[0], frac[1], frac[2])};
}

Verdict c9() {
    // Eight bins of roughly equal Poisson(1000) mass.
    const double lam = 1000;
    const int seeds = 200, bins = 8;
    std::vector<long> cut;
    double acc = 0;
    std::vector<double> mass(bins, 0.0);
    long k = 0;
    for (int b = 0; b + 1 < bins; ++b) {
        while (acc < (b + 1.0) / bins) {
            const double pk = std::exp(k * std::log(lam) - lam - std::lgamma(k + 1.0));
            acc += pk;
            mass[static_cast<std::size_t>(b)] += pk;
            ++k;
        }
        cut.push_back(k);  // bin b holds counts < k
    }
    mass[bins - 1] = 1 - acc;
    const auto net = parse_network("species S {scale=1}\nreaction r0: 0 -> S @ ma(k=1, beta=1)\n");
    std::vector<int> obs(bins, 0);
    for (int s = 0; s < seeds; ++s) {
        SimConfig cfg;
        cfg.N = lam;
        cfg.T = 1;
        cfg.seed = 9000 + static_cast<std::uint64_t>(s);
        cfg.keep_jumps = false;
        const auto n = static_cast<long>(simulate(net, cfg).jump_counts[0]);
        std::size_t b = 0;
        while (b < cut.size() && n >= cut[b]) ++b;
        ++obs[b];
    }
    double chi2 = 0;
    for (int b = 0; b < bins; ++b) {
        const double e = seeds * mass[static_cast<std::size_t>(b)];
        chi2 += (obs[static_cast<std::size_t>(b)] - e) * (obs[static_cast<std::size_t>(b)] - e) / e;
    }
    const double crit = 24.3219;  // chi-square, 7 degrees of freedom, upper 1e-3 point

    bool conserved = true;
    std::size_t paths = 0;
    for (const char* m : {"mm", "srg"}) {
        const auto net2 = test::model(m);
        const auto& w = net2.conservation_laws.at(0).weights;
        for (std::uint64_t s = 1; s <= 100; ++s) {
            SimConfig cfg;
            cfg.N = 200;
            cfg.T = 2;
            cfg.seed = s;
            const auto tr = simulate(net2, cfg);
            auto n = tr.initial;
            auto total = [&] {
                std::int64_t v = 0;
                for (std::size_t i = 0; i < w.size(); ++i) v += w[i] * n[i];
                return v;
            };
            const auto t0 = total();
            for (auto r : tr.jump_reactions) {
                for (std::size_t i = 0; i < n.size(); ++i) n[i] += tr.change[r][i];
                conserved = conserved && total() == t0;
            }
            ++paths;
        }
    }
    return {chi2 < crit && conserved,
            fmt("chi2=%.3f (crit %.3f, df 7) conservation=%s on %zu paths", chi2, crit, conserved ? "exact" : "broken", paths)};
}

LyapunovGrid box(std::size_t d, double xlo, double xhi, double plo, double phi, int n, int ymax) {
    std::vector<std::vector<double>> xs{{}}, ps{{}};
    for (std::size_t k = 0; k < d; ++k) {
        std::vector<std::vector<double>> nx, np;
        for (const auto& h : xs)
            for (int i = 0; i < n; ++i) {
                auto v = h;
                v.push_back(xlo + (xhi - xlo) * i / (n - 1));
                nx.push_back(v);
            }
        for (const auto& h : ps)
            for (int i = 0; i < n; ++i) {
                auto v = h;
                v.push_back(plo + (phi - plo) * i / (n - 1));
                np.push_back(v);
            }
        xs = nx;
        ps = np;
    }
    LyapunovGrid g;
    g.x = xs;
    g.p = ps;
    g.y_max = ymax;
    return g;
}

Verdict c10() {
    std::string out;
    bool ok = true;
    for (const char* m : {"dr", "vp"}) {
        const auto sys = test::scaled(m);
        const auto rep = verify_condition(sys, linear_candidate(sys, 1.5), box(1, 0.5, 2, -1, 1, 5, 200),
                                          LyapunovCondition::Tilted);
        const bool pass = rep.pass && rep.max_violation <= 1e-9;
        ok = ok && pass;
        out += fmt("%s:%s(violation_built=%.2g, no_coefficient_at=%zu/%zu", m, pass ? "PASS" : "FAIL",
                   rep.max_violation_built, rep.errors.size(), rep.points);
        if (!rep.errors.empty()) out += " first: " + rep.errors.front();
        out += ") ";
    }
    for (const char* m : {"mm", "srg"}) {
        const auto sys = test::scaled(m);
        const auto rep = verify_condition(sys, zero_candidate(sys, 1.5, 10), box(sys.dx(), 0.5, 2, -1, 1, 5, 10),
                                          LyapunovCondition::Tilted);
        ok = ok && rep.pass;
        out += fmt("%s:%s ", m, rep.pass ? "PASS" : "FAIL");
    }
    return {ok, out};
}

Verdict c11() {
    std::string out;
    bool ok = true;
    for (const char* m : kModels) {
        const auto H = hamiltonian(test::scaled(m));
        ComparisonRegion reg;
        reg.x_lo.assign(H.dim(), 0.1);
        reg.x_hi.assign(H.dim(), 5.0);
        reg.samples = H.dim() == 1 ? 9 : 5;
        const auto r = check_comparison_conditions(H, reg);
        ok = ok && r.coercive && r.a_pass;
        out += fmt("%s:coercive=%s,min_ratio@40=%.3g,convex=%s ", m, r.coercive ? "yes" : "no",
                   r.coercivity.empty() ? 0.0 : r.coercivity.back().min_ratio, r.a_pass ? "yes" : "no");
    }
    ComparisonRegion reg{{0.1}, {5.0}};
    const auto lin = check_comparison_conditions(Hamiltonian(expr::var(1), 1), reg);
    ok = ok && !lin.coercive;
    out += fmt("linear:coercive=%s", lin.coercive ? "yes" : "no");
    return {ok, out};
}

}  // namespace

int main(int argc, char** argv) {
    struct Criterion {
        const char* name;
        std::function<Verdict()> run;
        double limit;  // seconds, 0: none
    };
    const std::vector<Criterion> all{
        {"symbolic-vs-closed-form", c1, 10}, {"symbolic-vs-spectral", c2, 60}, {"normalization", c3, 0},
        {"lln-consistency", c4, 0},          {"legendre-cramer", c5, 0},       {"hjb-duality", c6, 120},
        {"monte-carlo-slope", c7, 600},      {"truncation", c8, 0},            {"simulation-exactness", c9, 0},
        {"lyapunov", c10, 0},                {"audits", c11, 0}};
    std::set<int> pick;
    for (int i = 1; i < argc; ++i) pick.insert(std::atoi(argv[i]));
    int failed = 0;
    for (std::size_t i = 0; i < all.size(); ++i) {
        const int n = static_cast<int>(i) + 1;
        if (!pick.empty() && !pick.count(n)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = all[i].run();
        } catch (const Error& e) {
            v = {false, std::string("error ") + e.what()};
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (all[i].limit > 0 && s > all[i].limit) {
            v.pass = false;
            v.detail += fmt(" over the %.0fs budget", all[i].limit);
        }
        std::printf("%s %d %s %s time=%.1fs\n", v.pass ? "PASS" : "FAIL", n, all[i].name, v.detail.c_str(), s);
        std::fflush(stdout);
        if (!v.pass) ++failed;
    }
    return failed ? 1 : 0;
}
