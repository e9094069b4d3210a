#include "msldp/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "msldp/error.hpp"
#include "msldp/fastproc.hpp"

namespace msldp {

namespace {

double tilt(const ScaledSystem& sys, std::size_t k, std::span<const double> p) {
    double t = 0;
    for (std::size_t i = 0; i < sys.dx(); ++i) t += sys.zeta_x[k][i] * p[i];
    return t;
}

std::string describe(std::span<const double> x, std::span<const double> p, std::span<const double> y) {
    std::ostringstream os;
    auto put = [&](const char* tag, std::span<const double> v) {
        os << tag << "=(";
        for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
        os << ") ";
    };
    put("x", x);
    put("p", p);
    put("y", y);
    return os.str();
}

}  // namespace

double potential(const ScaledSystem& sys, std::span<const double> x, std::span<const double> p, std::span<const double> y) {
    double V = 0;
    for (std::size_t k = 0; k < sys.net.reactions.size(); ++k) {
        if (sys.tag[k] == Timescale::Slow) continue;
        const double t = tilt(sys, k, p);
        if (t == 0.0) continue;
        const double lam = sys.rate(k, x, y);
        V += sys.tag[k] == Timescale::Jump ? lam * std::expm1(t) : lam * t;
    }
    return V;
}

double tilted_generator(const ScaledSystem& sys, const PhiFn& phi, std::span<const double> x, std::span<const double> p,
                        std::span<const double> y) {
    const double f0 = phi(x, p, y);
    std::vector<double> yy(y.begin(), y.end());
    double acc = 0;
    for (std::size_t k = 0; k < sys.net.reactions.size(); ++k) {
        if (sys.tag[k] == Timescale::Slow) continue;
        const double lam = sys.rate(k, x, y);
        if (lam == 0.0) continue;
        if (sys.tag[k] == Timescale::Jump) {
            bool moves = false;
            for (std::size_t j = 0; j < sys.dy(); ++j) {
                yy[j] = y[j] + sys.zeta_y[k][j];
                moves = moves || sys.zeta_y[k][j] != 0;
            }
            if (moves) acc += lam * std::exp(tilt(sys, k, p)) * std::expm1(phi(x, p, yy) - f0);
            for (std::size_t j = 0; j < sys.dy(); ++j) yy[j] = y[j];
        } else {
            for (std::size_t j = 0; j < sys.dy(); ++j) {
                if (sys.zeta_y[k][j] == 0) continue;
                const double h = 1e-5 * std::max(1.0, std::fabs(y[j]));
                yy[j] = y[j] + h;
                const double up = phi(x, p, yy);
                yy[j] = y[j] - h;
                const double dn = phi(x, p, yy);
                yy[j] = y[j];
                acc += lam * sys.zeta_y[k][j] * (up - dn) / (2 * h);
            }
        }
    }
    return acc;
}

LinearAnsatz solve_linear_ansatz(const ScaledSystem& sys, std::span<const double> x, std::span<const double> p, double c) {
    if (!(c > 1)) throw Error("DomainError", "multiplier c must exceed 1");
    const std::size_t dy = sys.dy(), m = sys.net.reactions.size();
    // Affine data of every fast-scale rate in the reduced fast coordinates.
    std::vector<double> zero_y(dy, 0.0);
    std::vector<double> c0(m, 0.0);
    std::vector<std::vector<double>> cj(m, std::vector<double>(dy, 0.0));
    std::vector<double> t(m, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
        if (sys.tag[k] == Timescale::Slow) continue;
        t[k] = tilt(sys, k, p);
        c0[k] = sys.rate(k, x, zero_y);
        std::vector<double> e(dy, 0.0);
        for (std::size_t j = 0; j < dy; ++j) {
            e[j] = 1.0;
            cj[k][j] = sys.rate(k, x, e) - c0[k];
            e[j] = 0.0;
        }
    }
    auto vpart = [&](std::size_t k) { return sys.tag[k] == Timescale::Jump ? std::expm1(t[k]) : t[k]; };
    std::vector<double> Vj(dy, 0.0);
    double V0 = 0;
    for (std::size_t k = 0; k < m; ++k) {
        if (sys.tag[k] == Timescale::Slow) continue;
        V0 += c0[k] * vpart(k);
        for (std::size_t j = 0; j < dy; ++j) Vj[j] += cj[k][j] * vpart(k);
    }

    LinearAnsatz res;
    res.c = c;
    res.a.assign(dy, 0.0);
    std::vector<bool> done(dy, false);
    std::vector<double> w(dy, 1.0);  // e^{a_j} for discrete coordinates

    auto involved = [&](std::size_t i) {
        std::vector<std::size_t> u;
        for (std::size_t j = 0; j < dy; ++j)
            for (std::size_t k = 0; k < m; ++k)
                if (sys.tag[k] != Timescale::Slow && cj[k][i] != 0.0 && sys.zeta_y[k][j] != 0) {
                    u.push_back(j);
                    break;
                }
        return u;
    };

    for (bool progress = true; progress;) {
        progress = false;
        for (std::size_t i = 0; i < dy; ++i) {
            std::vector<std::size_t> open;
            for (std::size_t j : involved(i))
                if (!done[j]) open.push_back(j);
            if (open.size() != 1) continue;
            const std::size_t j = open[0];
            double A = 0, B = c * std::fabs(Vj[i]), C = 0;
            for (std::size_t k = 0; k < m; ++k) {
                if (sys.tag[k] == Timescale::Slow || cj[k][i] == 0.0) continue;
                const double ck = cj[k][i];
                if (sys.tag[k] == Timescale::Jump) {
                    double prod = std::exp(t[k]);
                    for (std::size_t l = 0; l < dy; ++l)
                        if (l != j && sys.zeta_y[k][l] != 0) prod *= std::pow(w[l], sys.zeta_y[k][l]);
                    const int zj = sys.zeta_y[k][j];
                    if (sys.fast_kind[j] == FastKind::Discrete) {
                        if (zj == 1) A += ck * prod;
                        else if (zj == -1) C += ck * prod;
                        else B += ck * prod;
                        B -= ck * std::exp(t[k]);
                    } else {
                        C += ck * (prod - std::exp(t[k]));
                    }
                } else {
                    double known = 0;
                    for (std::size_t l = 0; l < dy; ++l)
                        if (l != j) known += sys.zeta_y[k][l] * res.a[l];
                    if (sys.fast_kind[j] == FastKind::Discrete) {
                        B += ck * known;
                    } else {
                        A += ck * sys.zeta_y[k][j];
                        C += ck * known;
                    }
                }
            }
            if (sys.fast_kind[j] == FastKind::Continuous) {
                // A b + (C + B) = 0, B holding the c|V_i| term.
                if (A == 0.0) throw Error("NoValidCoefficient", "no flow term fixes " + sys.fast_name(j));
                res.a[j] = -(C + B) / A;
            } else {
                double root = -1;
                if (std::fabs(A) < 1e-300) {
                    if (B != 0.0) root = -C / B;
                } else {
                    const double D = B * B - 4 * A * C;
                    if (D >= 0) {
                        const double s = std::sqrt(D);
                        const double r1 = (-B + s) / (2 * A), r2 = (-B - s) / (2 * A);
                        root = std::max(r1, r2);
                    }
                }
                if (!(root > 0) || !std::isfinite(root))
                    throw Error("NoValidCoefficient", "no positive multiplier for " + sys.fast_name(j) +
                                                          " at c = " + std::to_string(c));
                w[j] = root;
                res.a[j] = std::log(root);
            }
            done[j] = true;
            progress = true;
        }
    }

    double d = c * std::fabs(V0);
    for (std::size_t k = 0; k < m; ++k) {
        if (sys.tag[k] == Timescale::Slow || c0[k] == 0.0) continue;
        if (sys.tag[k] == Timescale::Jump) {
            double s = 0;
            for (std::size_t l = 0; l < dy; ++l) s += sys.zeta_y[k][l] * res.a[l];
            d += c0[k] * std::exp(t[k]) * std::expm1(s);
        } else {
            double s = 0;
            for (std::size_t l = 0; l < dy; ++l) s += sys.zeta_y[k][l] * res.a[l];
            d += c0[k] * s;
        }
    }
    res.d = d;
    return res;
}

LyapunovCandidate linear_candidate(const ScaledSystem& sys, double c) {
    LyapunovCandidate cand;
    cand.c = c;
    cand.phi = [&sys, c](std::span<const double> x, std::span<const double> p, std::span<const double> y) {
        const auto a = solve_linear_ansatz(sys, x, p, c);
        double v = 0;
        for (std::size_t j = 0; j < y.size(); ++j) v += a.a[j] * y[j];
        return v;
    };
    cand.d = [&sys, c](std::span<const double> x, std::span<const double> p) { return solve_linear_ansatz(sys, x, p, c).d; };
    return cand;
}

LyapunovCandidate zero_candidate(const ScaledSystem& sys, double c, int y_max) {
    LyapunovCandidate cand;
    cand.c = c;
    cand.phi = [](std::span<const double>, std::span<const double>, std::span<const double>) { return 0.0; };
    cand.d = [&sys, c, y_max](std::span<const double> x, std::span<const double> p) {
        const auto space = make_fast_space(sys, y_max);
        double mx = 0;
        for (std::size_t s = 0; s < space.size(); ++s)
            mx = std::max(mx, std::fabs(potential(sys, x, p, space.fast_vector(s, sys.dy(), 0.0))));
        return c * mx;
    };
    return cand;
}

LyapunovReport verify_condition(const ScaledSystem& sys, const LyapunovCandidate& cand, const LyapunovGrid& grid,
                                LyapunovCondition which) {
    LyapunovReport rep;
    rep.condition = which == LyapunovCondition::Tilted ? "tilted" : "uniform";
    const FastStateSpace space = make_fast_space(sys, grid.y_max);
    rep.compact_space = make_fast_space(sys, 2 * grid.y_max + 1).size() == space.size();

    std::vector<std::size_t> cont;
    for (std::size_t j = 0; j < sys.dy(); ++j)
        if (sys.fast_kind[j] == FastKind::Continuous) cont.push_back(j);

    // All y points: discrete states times continuous samples.
    std::vector<std::vector<double>> ys;
    for (std::size_t s = 0; s < space.size(); ++s) {
        std::vector<std::size_t> idx(cont.size(), 0);
        for (;;) {
            auto y = space.fast_vector(s, sys.dy(), 0.0);
            for (std::size_t q = 0; q < cont.size(); ++q) y[cont[q]] = grid.cont[idx[q]];
            ys.push_back(std::move(y));
            std::size_t q = 0;
            while (q < cont.size() && idx[q] + 1 == grid.cont.size()) idx[q++] = 0;
            if (q == cont.size()) break;
            ++idx[q];
        }
    }

    if (which == LyapunovCondition::Tilted) {
        rep.max_violation = -std::numeric_limits<double>::infinity();
        rep.max_violation_built = -std::numeric_limits<double>::infinity();
        for (const auto& x : grid.x)
            for (const auto& p : grid.p) {
                double d = 0;
                try {
                    d = cand.d(x, p);
                } catch (const Error& e) {
                    rep.errors.push_back(describe(x, p, {}) + e.what());
                    rep.max_violation = std::numeric_limits<double>::infinity();
                    rep.worst_point = rep.errors.back();
                    continue;
                }
                for (const auto& y : ys) {
                    const double lhs = tilted_generator(sys, cand.phi, x, p, y);
                    const double rhs = -cand.c * std::fabs(potential(sys, x, p, y)) + d;
                    const double v = lhs - rhs;
                    ++rep.points;
                    rep.max_violation_built = std::max(rep.max_violation_built, v);
                    if (v > rep.max_violation || std::isnan(v)) {
                        rep.max_violation = v;
                        rep.worst_point = describe(x, p, y);
                    }
                }
            }
        rep.pass = rep.max_violation <= 1e-9;
        return rep;
    }

    // Uniform form: sublevel sets of -theta e^{-phi} L e^{phi} - |V| must stay
    // inside a common box; on a truncated grid, away from the cut.
    const double levels[] = {0.0, 10.0, 100.0};
    const double thetas[] = {1.0, 0.5};
    rep.pass = true;
    const double edge = grid.y_max;
    for (double l : levels) {
        double extent = 0;
        bool touches = false;
        for (const auto& x : grid.x)
            for (const auto& p : grid.p)
                for (double th : thetas)
                    for (const auto& y : ys) {
                        ++rep.points;
                        const double g = -th * tilted_generator(sys, cand.phi, x, p, y) - std::fabs(potential(sys, x, p, y));
                        if (g > l) continue;
                        double r = 0;
                        for (double v : y) r = std::max(r, std::fabs(v));
                        extent = std::max(extent, r);
                        for (std::size_t j = 0; j < sys.dy(); ++j)
                            if (sys.fast_kind[j] == FastKind::Discrete && y[j] >= edge) touches = true;
                        for (std::size_t q : cont)
                            if (y[q] >= grid.cont.back()) touches = true;
                    }
        rep.level_extent.push_back(extent);
        if (touches && !rep.compact_space) rep.pass = false;
    }
    return rep;
}

}  // namespace msldp
