#include "msldp/ldp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>

#include "msldp/error.hpp"

namespace msldp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Three-point Gauss-Legendre rule on [0, 1].
constexpr double kGaussT[3] = {0.11270166537925831, 0.5, 0.8872983346207417};
constexpr double kGaussW[3] = {5.0 / 18, 8.0 / 18, 5.0 / 18};

double inf_norm(std::span<const double> v) {
    double m = 0;
    for (double a : v) m = std::max(m, std::fabs(a));
    return m;
}

LegendreResult legendre_from(const Hamiltonian& H, std::span<const double> x, std::span<const double> v,
                             std::vector<double> p, const LegendreOptions& opt) {
    const std::size_t d = H.dim();
    if (v.size() != d) throw Error("DomainError", "velocity dimension mismatch");
    auto objective = [&](const std::vector<double>& q) {
        double s = 0;
        for (std::size_t i = 0; i < d; ++i) s += q[i] * v[i];
        try {
            const double h = H.value(x, q);
            return std::isfinite(h) ? s - h : -kInf;
        } catch (const Error&) {
            return -kInf;
        }
    };
    LegendreResult res;
    double f = objective(p);
    if (!std::isfinite(f)) {
        p.assign(d, 0.0);
        f = objective(p);
    }
    const double scale = std::max(1.0, inf_norm(v));
    for (int it = 0; it < opt.max_iter; ++it) {
        res.iterations = it + 1;
        const auto gH = H.grad_p(x, p);
        Eigen::VectorXd g(static_cast<Eigen::Index>(d));
        for (std::size_t i = 0; i < d; ++i) g[static_cast<Eigen::Index>(i)] = v[i] - gH[i];
        if (g.cwiseAbs().maxCoeff() <= opt.tol * scale) break;
        const auto hs = H.hess_p(x, p);
        Eigen::MatrixXd Hm(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) Hm(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = hs[i][j];
        Eigen::LDLT<Eigen::MatrixXd> ldlt(Hm);
        Eigen::VectorXd step;
        if (ldlt.info() == Eigen::Success && ldlt.isPositive() && (ldlt.vectorD().array() > 1e-300).all())
            step = ldlt.solve(g);
        else
            step = g;
        double a = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 60; ++ls, a *= 0.5) {
            std::vector<double> q(p);
            for (std::size_t i = 0; i < d; ++i) q[i] += a * step[static_cast<Eigen::Index>(i)];
            const double fq = objective(q);
            if (fq >= f - 1e-15 * std::max(1.0, std::fabs(f))) {
                p = std::move(q);
                moved = fq > f || a * step.cwiseAbs().maxCoeff() > 0;
                f = fq;
                break;
            }
        }
        if (inf_norm(p) > opt.p_bound)
            throw Error("NotCoercive", "the Legendre supremum is not attained (|p| > " + std::to_string(opt.p_bound) +
                                           "); velocity outside the attainable cone");
        if (!moved) {
            if (g.cwiseAbs().maxCoeff() <= 1e-7 * scale) break;
            throw Error("NotCoercive", "Newton iteration stalled in the Legendre transform");
        }
    }
    res.L = f;
    res.p = p;
    return res;
}

/// Minimal L-BFGS with backtracking; infinite objective values shrink the step.
struct LbfgsResult {
    double f = kInf;
    int iterations = 0;
    bool converged = false;
};

LbfgsResult lbfgs(std::vector<double>& z, const std::function<double(const std::vector<double>&, std::vector<double>&)>& fg,
                  double grad_tol, int max_iter) {
    const std::size_t n = z.size();
    LbfgsResult res;
    std::vector<double> g(n), gn(n), zn(n);
    double f = fg(z, g);
    if (!std::isfinite(f)) throw Error("DomainError", "initial path has infinite action");
    if (n == 0) {
        res.f = f;
        res.converged = true;
        return res;
    }
    std::deque<std::vector<double>> S, Y;
    std::deque<double> rho;
    int stall = 0;
    for (int it = 0; it < max_iter; ++it) {
        res.iterations = it + 1;
        if (inf_norm(g) <= grad_tol) {
            res.converged = true;
            break;
        }
        // Two-loop recursion.
        std::vector<double> q(g);
        std::vector<double> alpha(S.size());
        for (std::size_t i = S.size(); i-- > 0;) {
            double s = 0;
            for (std::size_t k = 0; k < n; ++k) s += S[i][k] * q[k];
            alpha[i] = rho[i] * s;
            for (std::size_t k = 0; k < n; ++k) q[k] -= alpha[i] * Y[i][k];
        }
        double gamma = 1.0;
        if (!S.empty()) {
            double sy = 0, yy = 0;
            for (std::size_t k = 0; k < n; ++k) {
                sy += S.back()[k] * Y.back()[k];
                yy += Y.back()[k] * Y.back()[k];
            }
            gamma = sy / yy;
        } else {
            gamma = 1e-2 / std::max(1e-12, inf_norm(g));
        }
        for (auto& v : q) v *= gamma;
        for (std::size_t i = 0; i < S.size(); ++i) {
            double s = 0;
            for (std::size_t k = 0; k < n; ++k) s += Y[i][k] * q[k];
            const double b = rho[i] * s;
            for (std::size_t k = 0; k < n; ++k) q[k] += S[i][k] * (alpha[i] - b);
        }
        double slope = 0;
        for (std::size_t k = 0; k < n; ++k) slope -= g[k] * q[k];
        if (slope >= 0) {
            for (std::size_t k = 0; k < n; ++k) q[k] = g[k] * 1e-3;
            slope = 0;
            for (std::size_t k = 0; k < n; ++k) slope -= g[k] * q[k];
            S.clear();
            Y.clear();
            rho.clear();
        }
        double a = 1.0, fn = kInf;
        bool ok = false;
        for (int ls = 0; ls < 60; ++ls, a *= 0.5) {
            for (std::size_t k = 0; k < n; ++k) zn[k] = z[k] - a * q[k];
            fn = fg(zn, gn);
            if (std::isfinite(fn) && fn <= f + 1e-4 * a * slope) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            if (S.empty()) break;
            S.clear();
            Y.clear();
            rho.clear();
            continue;
        }
        std::vector<double> s(n), y(n);
        double sy = 0;
        for (std::size_t k = 0; k < n; ++k) {
            s[k] = zn[k] - z[k];
            y[k] = gn[k] - g[k];
            sy += s[k] * y[k];
        }
        if (sy > 1e-300) {
            S.push_back(s);
            Y.push_back(y);
            rho.push_back(1.0 / sy);
            if (S.size() > 10) {
                S.pop_front();
                Y.pop_front();
                rho.pop_front();
            }
        }
        const double change = f - fn;
        z = zn;
        g = gn;
        f = fn;
        if (change <= 1e-16 * std::max(1.0, std::fabs(f))) {
            if (++stall >= 5) {
                res.converged = inf_norm(g) <= 1e3 * grad_tol;
                break;
            }
        } else {
            stall = 0;
        }
    }
    res.f = f;
    return res;
}

}  // namespace

LegendreResult legendre(const Hamiltonian& H, std::span<const double> x, std::span<const double> v,
                        const LegendreOptions& opt) {
    // Standard convex duality L = sup_p (p.v - H). The control-form display with
    // -v.p describes the same function after p -> -p.
    return legendre_from(H, x, v, std::vector<double>(H.dim(), 0.0), opt);
}

double path_action(const Hamiltonian& H, const std::vector<std::vector<double>>& path, double T,
                   const LegendreOptions& opt) {
    if (path.size() < 2) return 0.0;
    const std::size_t K = path.size() - 1, d = H.dim();
    const double dt = T / static_cast<double>(K);
    double S = 0;
    std::vector<double> m(d), v(d);
    for (std::size_t i = 0; i < K; ++i) {
        for (std::size_t j = 0; j < d; ++j) v[j] = (path[i + 1][j] - path[i][j]) / dt;
        for (std::size_t q = 0; q < 3; ++q) {
            for (std::size_t j = 0; j < d; ++j) m[j] = (1 - kGaussT[q]) * path[i][j] + kGaussT[q] * path[i + 1][j];
            S += kGaussW[q] * legendre(H, m, v, opt).L * dt;
        }
    }
    return S;
}

ActionResult minimize_action(const Hamiltonian& H, std::span<const double> x0, std::span<const double> x1, double T,
                             const ActionOptions& opt) {
    const std::size_t d = H.dim();
    if (x0.size() != d || x1.size() != d) throw Error("DomainError", "endpoint dimension mismatch");
    if (opt.K < 8) throw Error("DomainError", "minimize_action needs K >= 8");
    if (!(T > 0)) throw Error("DomainError", "T must be positive");

    std::vector<std::vector<double>> warm_p;
    auto make_fg = [&](std::size_t K) {
        warm_p.assign(3 * K, std::vector<double>(d, 0.0));
        return [&, K](const std::vector<double>& z, std::vector<double>& grad) -> double {
            const double dt = T / static_cast<double>(K);
            auto node = [&](std::size_t i, std::size_t j) {
                if (i == 0) return x0[j];
                if (i == K) return x1[j];
                return z[(i - 1) * d + j];
            };
            std::fill(grad.begin(), grad.end(), 0.0);
            double S = 0;
            std::vector<double> m(d), v(d);
            for (std::size_t i = 0; i < K; ++i) {
                for (std::size_t j = 0; j < d; ++j) v[j] = (node(i + 1, j) - node(i, j)) / dt;
                for (std::size_t q = 0; q < 3; ++q) {
                    const double th = kGaussT[q], w = kGaussW[q] * dt;
                    for (std::size_t j = 0; j < d; ++j) {
                        m[j] = (1 - th) * node(i, j) + th * node(i + 1, j);
                        if (m[j] < 0) return kInf;
                    }
                    LegendreResult lr;
                    try {
                        lr = legendre_from(H, m, v, warm_p[3 * i + q], opt.legendre);
                    } catch (const Error&) {
                        return kInf;
                    }
                    warm_p[3 * i + q] = lr.p;
                    S += lr.L * w;
                    // Envelope derivatives: dL/dv = p*, dL/dx = -H_x(x, p*).
                    const auto hx = H.grad_x(m, lr.p);
                    for (std::size_t j = 0; j < d; ++j) {
                        const double gv = lr.p[j];
                        if (i >= 1) grad[(i - 1) * d + j] += w * (-(1 - th) * hx[j]) - kGaussW[q] * gv;
                        if (i + 1 <= K - 1) grad[i * d + j] += w * (-th * hx[j]) + kGaussW[q] * gv;
                    }
                }
            }
            return S;
        };
    };

    auto flatten = [&](const std::vector<std::vector<double>>& path) {
        std::vector<double> z;
        for (std::size_t i = 1; i + 1 < path.size(); ++i) z.insert(z.end(), path[i].begin(), path[i].end());
        return z;
    };
    auto unflatten = [&](const std::vector<double>& z, std::size_t K) {
        std::vector<std::vector<double>> path(K + 1, std::vector<double>(d));
        for (std::size_t j = 0; j < d; ++j) {
            path[0][j] = x0[j];
            path[K][j] = x1[j];
        }
        for (std::size_t i = 1; i < K; ++i)
            for (std::size_t j = 0; j < d; ++j) path[i][j] = z[(i - 1) * d + j];
        return path;
    };

    ActionResult best;
    std::size_t K = opt.K;
    std::vector<std::vector<std::vector<double>>> starts;
    {
        std::vector<std::vector<double>> line(K + 1, std::vector<double>(d));
        for (std::size_t i = 0; i <= K; ++i)
            for (std::size_t j = 0; j < d; ++j)
                line[i][j] = x0[j] + (x1[j] - x0[j]) * static_cast<double>(i) / static_cast<double>(K);
        starts.push_back(line);
        if (opt.drift) {
            // LLN flow from x0, bent linearly onto x1.
            std::vector<std::vector<double>> flow(K + 1, std::vector<double>(x0.begin(), x0.end()));
            const double h = T / static_cast<double>(K);
            bool ok = true;
            for (std::size_t i = 0; i < K && ok; ++i) {
                auto& y = flow[i];
                auto k1 = opt.drift(y);
                std::vector<double> t1(d), t2(d), t3(d);
                for (std::size_t j = 0; j < d; ++j) t1[j] = std::max(0.0, y[j] + 0.5 * h * k1[j]);
                auto k2 = opt.drift(t1);
                for (std::size_t j = 0; j < d; ++j) t2[j] = std::max(0.0, y[j] + 0.5 * h * k2[j]);
                auto k3 = opt.drift(t2);
                for (std::size_t j = 0; j < d; ++j) t3[j] = std::max(0.0, y[j] + h * k3[j]);
                auto k4 = opt.drift(t3);
                for (std::size_t j = 0; j < d; ++j) {
                    flow[i + 1][j] = y[j] + h / 6 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
                    ok = ok && std::isfinite(flow[i + 1][j]);
                }
            }
            if (ok) {
                const auto end = flow[K];
                for (std::size_t i = 0; i <= K; ++i) {
                    const double s = static_cast<double>(i) / static_cast<double>(K);
                    for (std::size_t j = 0; j < d; ++j) flow[i][j] = std::max(0.0, flow[i][j] + s * (x1[j] - end[j]));
                }
                starts.push_back(flow);
            }
        }
    }

    std::vector<std::vector<double>> path;
    double prev = kInf;
    int total_iter = 0;
    for (;;) {
        auto fg = make_fg(K);
        double bestf = kInf;
        std::vector<double> bestz;
        bool conv = false;
        for (const auto& s : starts) {
            std::vector<double> z = flatten(s);
            std::vector<double> g(z.size());
            if (!std::isfinite(fg(z, g))) continue;
            warm_p.assign(3 * K, std::vector<double>(d, 0.0));
            LbfgsResult r = lbfgs(z, fg, opt.grad_tol, opt.max_iter);
            total_iter += r.iterations;
            if (r.f < bestf) {
                bestf = r.f;
                bestz = z;
                conv = r.converged;
            }
        }
        if (!std::isfinite(bestf))
            throw Error("NonConvergence", "no start produced a finite action at K = " + std::to_string(K));
        path = unflatten(bestz, K);
        best.history.push_back(bestf);
        best.action = bestf;
        best.K = K;
        best.converged = conv;
        const double change = std::fabs(bestf - prev);
        if (change <= opt.rel_tol * std::max(std::fabs(bestf), 1e-3)) break;
        if (2 * K > opt.K_max) {
            best.converged = false;
            break;
        }
        prev = bestf;
        // Refine: insert midpoints.
        std::vector<std::vector<double>> fine(2 * K + 1, std::vector<double>(d));
        for (std::size_t i = 0; i <= K; ++i) fine[2 * i] = path[i];
        for (std::size_t i = 0; i < K; ++i)
            for (std::size_t j = 0; j < d; ++j) fine[2 * i + 1][j] = 0.5 * (path[i][j] + path[i + 1][j]);
        K *= 2;
        starts = {fine};
    }
    best.path = path;
    best.iterations = total_iter;
    if (best.action < 0 && best.action > -1e-9) best.action = 0.0;
    return best;
}

double HJBResult::at(double t_query, double x_query) const {
    if (u.empty()) throw Error("DomainError", "empty HJB result");
    std::size_t s = 0;
    for (std::size_t i = 1; i < t.size(); ++i)
        if (std::fabs(t[i] - t_query) < std::fabs(t[s] - t_query)) s = i;
    const auto& row = u[s];
    if (x_query <= x.front()) return row.front();
    if (x_query >= x.back()) return row.back();
    const double dx = x[1] - x[0];
    const auto j = static_cast<std::size_t>((x_query - x.front()) / dx);
    const double w = (x_query - x[j]) / dx;
    return (1 - w) * row[j] + w * row[std::min(j + 1, row.size() - 1)];
}

HJBResult hjb_solve(const Hamiltonian& H, const std::function<double(double)>& f, const HJBGrid& grid, double T,
                    std::size_t snapshots) {
    if (H.dim() != 1) throw Error("DomainError", "hjb_solve handles one slow dimension");
    if (grid.n < 3 || !(grid.x_hi > grid.x_lo)) throw Error("DomainError", "invalid HJB grid");
    HJBResult res;
    const std::size_t n = grid.n;
    const double dx = (grid.x_hi - grid.x_lo) / static_cast<double>(n - 1);
    res.x.resize(n);
    std::vector<double> u(n), un(n);
    for (std::size_t j = 0; j < n; ++j) {
        res.x[j] = grid.x_lo + dx * static_cast<double>(j);
        u[j] = f(res.x[j]);
        if (!std::isfinite(u[j])) throw Error("NonFiniteValue", "initial data is not finite");
    }
    double P = 0;
    for (std::size_t j = 0; j + 1 < n; ++j) P = std::max(P, std::fabs(u[j + 1] - u[j]) / dx);
    P = 1.1 * P + 0.1;
    double alpha = 0;
    for (std::size_t j = 0; j < n; j += std::max<std::size_t>(1, n / 100))
        for (int k = 0; k <= 40; ++k) {
            const double xv[1] = {res.x[j]}, pv[1] = {-P + 2 * P * k / 40.0};
            alpha = std::max(alpha, std::fabs(H.grad_p(xv, pv)[0]));
        }
    {
        const double xv[1] = {res.x.back()};
        for (int k = 0; k <= 40; ++k) {
            const double pv[1] = {-P + 2 * P * k / 40.0};
            alpha = std::max(alpha, std::fabs(H.grad_p(xv, pv)[0]));
        }
    }
    alpha = std::max(alpha, 1e-12);
    double dt = grid.dt;
    std::size_t steps = 0;
    if (dt <= 0) {
        steps = static_cast<std::size_t>(std::ceil(T / (grid.cfl * dx / alpha)));
        steps = std::max<std::size_t>(steps, 1);
        dt = T / static_cast<double>(steps);
    } else {
        if (dt * alpha / dx > 1.0)
            throw Error("CFLViolation", "dt * max|H_p| / dx = " + std::to_string(dt * alpha / dx) + " exceeds 1");
        steps = static_cast<std::size_t>(std::llround(T / dt));
        if (std::fabs(static_cast<double>(steps) * dt - T) > 1e-9 * std::max(1.0, T))
            steps = static_cast<std::size_t>(std::ceil(T / dt));
        dt = T / static_cast<double>(steps);
    }
    res.dt = dt;
    res.alpha = alpha;
    res.steps = steps;
    snapshots = std::max<std::size_t>(snapshots, 1);
    std::size_t next_snap = 1;
    res.t.push_back(0.0);
    res.u.push_back(u);
    for (std::size_t s = 1; s <= steps; ++s) {
        for (std::size_t j = 0; j < n; ++j) {
            double pm = j > 0 ? (u[j] - u[j - 1]) / dx : (u[1] - u[0]) / dx;
            double pp = j + 1 < n ? (u[j + 1] - u[j]) / dx : (u[j] - u[j - 1]) / dx;
            const double xv[1] = {res.x[j]}, pv[1] = {0.5 * (pm + pp)}, lo[1] = {pm}, hi[1] = {pp};
            // H is convex in p, so max |H_p| over [pm, pp] sits at an endpoint.
            const double a = std::max(std::fabs(H.grad_p(xv, lo)[0]), std::fabs(H.grad_p(xv, hi)[0]));
            if (a * dt > dx) throw Error("CFLViolation", "gradient left the sampled range; dt * |H_p| / dx > 1");
            un[j] = u[j] + dt * (H.value(xv, pv) + 0.5 * a * (pp - pm));
            if (!std::isfinite(un[j])) throw Error("NonFiniteValue", "HJB solution became non-finite");
        }
        std::swap(u, un);
        while (next_snap <= snapshots && s * snapshots >= next_snap * steps) {
            res.t.push_back(T * static_cast<double>(next_snap) / static_cast<double>(snapshots));
            res.u.push_back(u);
            ++next_snap;
        }
    }
    return res;
}

DualResult dual_value(const Hamiltonian& H, const std::function<double(double)>& f, double x0, double T, double lo,
                      double hi, const ActionOptions& opt) {
    DualResult res;
    auto objective = [&](double x) {
        const double a[1] = {x0}, b[1] = {x};
        const double I = minimize_action(H, a, b, T, opt).action;
        ++res.evaluations;
        return std::pair{f(x) - I, I};
    };
    const double g = 0.5 * (std::sqrt(5.0) - 1);
    double a = lo, b = hi;
    double c = b - g * (b - a), d = a + g * (b - a);
    auto fc = objective(c), fd = objective(d);
    while (b - a > 1e-4) {
        if (fc.first > fd.first) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = objective(d);
        }
    }
    const auto& w = fc.first > fd.first ? fc : fd;
    res.value = w.first;
    res.action = w.second;
    res.argmax = fc.first > fd.first ? c : d;
    return res;
}

ComparisonReport check_comparison_conditions(const Hamiltonian& H, const ComparisonRegion& region) {
    const std::size_t d = H.dim();
    if (region.x_lo.size() != d || region.x_hi.size() != d) throw Error("DomainError", "region dimension mismatch");
    ComparisonReport rep;

    // Slow sample points.
    std::vector<std::vector<double>> xs;
    {
        const int s = std::max(2, region.samples);
        std::vector<int> idx(d, 0);
        for (;;) {
            std::vector<double> x(d);
            for (std::size_t i = 0; i < d; ++i)
                x[i] = region.x_lo[i] + (region.x_hi[i] - region.x_lo[i]) * idx[i] / (s - 1);
            xs.push_back(x);
            std::size_t i = 0;
            while (i < d && idx[i] == s - 1) idx[i++] = 0;
            if (i == d) break;
            ++idx[i];
        }
    }
    // Unit directions: +-e_i and +-(e_i +- e_j)/sqrt 2.
    std::vector<std::vector<double>> dirs;
    for (std::size_t i = 0; i < d; ++i)
        for (double sg : {1.0, -1.0}) {
            std::vector<double> e(d, 0.0);
            e[i] = sg;
            dirs.push_back(e);
        }
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j)
            for (double si : {1.0, -1.0})
                for (double sj : {1.0, -1.0}) {
                    std::vector<double> e(d, 0.0);
                    e[i] = si / std::sqrt(2.0);
                    e[j] = sj / std::sqrt(2.0);
                    dirs.push_back(e);
                }

    rep.coercive = true;
    for (double r : {10.0, 20.0, 40.0}) {
        double mn = kInf;
        for (const auto& x : xs)
            for (const auto& e : dirs) {
                std::vector<double> p(d);
                for (std::size_t i = 0; i < d; ++i) p[i] = r * e[i];
                mn = std::min(mn, H.value(x, p) / r);
                ++rep.samples;
            }
        rep.coercivity.push_back({r, mn});
        if (!(mn > 1)) rep.coercive = false;
    }
    rep.b_pass = rep.coercive && rep.coercivity.back().min_ratio > rep.coercivity.front().min_ratio;

    // (a), (c), (d), (e) on a p grid plus the radial samples.
    std::vector<std::vector<double>> ps;
    {
        const int s = 9;
        std::vector<int> idx(d, 0);
        for (;;) {
            std::vector<double> p(d);
            for (std::size_t i = 0; i < d; ++i) p[i] = -2.0 + 4.0 * idx[i] / (s - 1);
            ps.push_back(p);
            std::size_t i = 0;
            while (i < d && idx[i] == s - 1) idx[i++] = 0;
            if (i == d) break;
            ++idx[i];
        }
        for (double r : {3.0, 5.0, 10.0, 20.0, 40.0})
            for (const auto& e : dirs) {
                std::vector<double> p(d);
                for (std::size_t i = 0; i < d; ++i) p[i] = r * e[i];
                ps.push_back(p);
            }
    }
    rep.min_hess_eig = kInf;
    rep.min_legendre_gap = kInf;
    rep.min_H = kInf;
    rep.c1 = 0;
    std::vector<std::tuple<double, double, double, double>> pts;  // gap, |Hx|, |Hp|, |p|
    for (const auto& x : xs) {
        const std::vector<double> zero(d, 0.0);
        rep.c1 = std::max(rep.c1, std::fabs(H.value(x, zero)));
        for (const auto& p : ps) {
            const double h = H.value(x, p);
            const auto gp = H.grad_p(x, p);
            const auto gx = H.grad_x(x, p);
            double gap = -h, hp = 0, hx = 0, pn = 0;
            for (std::size_t i = 0; i < d; ++i) {
                gap += p[i] * gp[i];
                hp += gp[i] * gp[i];
                hx += gx[i] * gx[i];
                pn += p[i] * p[i];
            }
            pts.emplace_back(gap, std::sqrt(hx), std::sqrt(hp), std::sqrt(pn));
            rep.min_legendre_gap = std::min(rep.min_legendre_gap, gap);
            rep.min_H = std::min(rep.min_H, h);
            if (std::sqrt(pn) <= 5.0) {
                const auto hs = H.hess_p(x, p);
                Eigen::MatrixXd M(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
                for (std::size_t i = 0; i < d; ++i)
                    for (std::size_t j = 0; j < d; ++j) M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = hs[i][j];
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()));
                rep.min_hess_eig = std::min(rep.min_hess_eig, es.eigenvalues().minCoeff());
            }
            ++rep.samples;
        }
    }
    rep.a_pass = rep.min_hess_eig > 0;
    rep.c_pass = rep.min_legendre_gap >= -1e-9;
    rep.d_pass = rep.c1 <= 1e-9 && std::isfinite(rep.min_H);
    rep.c2 = 0;
    for (auto [gap, hx, hp, pn] : pts)
        if (gap > 1.0) rep.c2 = std::max(rep.c2, hx / gap);
    rep.c3 = 0;
    for (auto [gap, hx, hp, pn] : pts) rep.c3 = std::max(rep.c3, hx - rep.c2 * gap);
    double max_radius = 0;
    for (auto [gap, hx, hp, pn] : pts) max_radius = std::max(max_radius, pn);
    bool bounded = true;
    for (double R : {1.0, 10.0, 100.0}) {
        double mp = 0;
        for (auto [gap, hx, hp, pn] : pts)
            if (hp <= R) mp = std::max(mp, pn);
        rep.p_for_grad.emplace_back(R, mp);
        if (mp >= max_radius - 1e-9) bounded = false;
    }
    rep.e_pass = std::isfinite(rep.c2) && std::isfinite(rep.c3) && bounded;

    // Sampled modulus for the doubling-variables inequality.
    std::mt19937_64 rng(region.seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const double ell = 5.0;
    for (double delta : {1e-1, 1e-2, 1e-3, 1e-4}) {
        ComparisonReport::H2Sample hs;
        hs.delta = delta;
        for (int s = 0; s < 400; ++s) {
            std::vector<double> x(d), y(d), p(d), q(d), shift(d);
            const double lambda = std::pow(10.0, 3 * U(rng));
            // |x - y| chosen so that |x-y| + lambda |x-y|^2 <= delta and lambda |x-y| <= ell.
            double r = delta * U(rng);
            r = std::min(r, (std::sqrt(1 + 4 * lambda * delta) - 1) / (2 * lambda));
            r = std::min(r, ell / lambda);
            for (std::size_t i = 0; i < d; ++i) {
                x[i] = region.x_lo[i] + (region.x_hi[i] - region.x_lo[i]) * U(rng);
                const double sgn = U(rng) < 0.5 ? -1.0 : 1.0;
                y[i] = std::clamp(x[i] + sgn * r / std::sqrt(static_cast<double>(d)), region.x_lo[i], region.x_hi[i]);
                p[i] = -2 + 4 * U(rng);
                q[i] = p[i] + delta * (2 * U(rng) - 1) / std::sqrt(static_cast<double>(d));
            }
            for (std::size_t i = 0; i < d; ++i) shift[i] = lambda * (x[i] - y[i]);
            std::vector<double> a(d), b(d);
            for (std::size_t i = 0; i < d; ++i) {
                a[i] = shift[i] + p[i];
                b[i] = shift[i] + q[i];
            }
            const double lhs = H.value(x, a) - H.value(y, b);
            hs.max_lhs = std::max(hs.max_lhs, std::fabs(lhs));
            ++hs.count;
        }
        rep.h2.push_back(hs);
    }
    rep.h2_vanishes = rep.h2.back().max_lhs < 1e-2 * std::max(rep.h2.front().max_lhs, 1e-12);
    return rep;
}

std::vector<RateRow> rate_function(const Hamiltonian& H, std::span<const double> x0, double T,
                                   const std::vector<std::vector<double>>& targets, const ActionOptions& opt) {
    std::vector<RateRow> rows;
    for (const auto& t : targets) {
        const auto r = minimize_action(H, x0, t, T, opt);
        rows.push_back({t, r.action, r.K});
    }
    return rows;
}

}  // namespace msldp
