#include "msldp/evp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "msldp/error.hpp"
#include "msldp/fastproc.hpp"

namespace msldp {

using expr::Expr;

namespace {

Expr one() { return expr::constant(1.0); }
Expr zero() { return expr::constant(0.0); }

bool is_fast_species(const ScaledSystem& sys, int s) {
    if (sys.fast_coord(s) >= 0) return true;
    return std::any_of(sys.eliminated.begin(), sys.eliminated.end(), [&](const Elimination& e) { return e.species == s; });
}

bool is_discrete_species(const ScaledSystem& sys, int s) {
    return is_fast_species(sys, s) && sys.net.species[static_cast<std::size_t>(s)].scale == Rational(0);
}

/// Effective change of species s in reaction k on the fast time scale.
int fast_change(const ScaledSystem& sys, std::size_t k, int s) {
    if (sys.tag[k] == Timescale::Slow) return 0;
    const Rational a = sys.alpha[static_cast<std::size_t>(s)];
    if (sys.beta[k] != Rational(1) + a) return 0;
    return sys.net.reactions[k].net_change(sys.net.species.size())[static_cast<std::size_t>(s)];
}

/// Species amounts as expressions in [x..., p..., y...].
std::vector<Expr> species_exprs(const ScaledSystem& sys) {
    const int dx = static_cast<int>(sys.dx());
    std::vector<Expr> sp(sys.net.species.size());
    for (std::size_t i = 0; i < sys.dx(); ++i) sp[static_cast<std::size_t>(sys.slow[i])] = expr::var(static_cast<int>(i));
    for (std::size_t j = 0; j < sys.dy(); ++j)
        sp[static_cast<std::size_t>(sys.fast[j])] = expr::var(2 * dx + static_cast<int>(j));
    for (const auto& e : sys.eliminated) {
        Expr rest = expr::constant(e.total);
        for (std::size_t i = 0; i < sp.size(); ++i)
            if (static_cast<int>(i) != e.species && e.weights[i] != 0 && sp[i])
                rest = rest - expr::constant(static_cast<double>(e.weights[i])) * sp[i];
        sp[static_cast<std::size_t>(e.species)] =
            rest / expr::constant(static_cast<double>(e.weights[static_cast<std::size_t>(e.species)]));
    }
    for (auto& s : sp)
        if (!s) s = zero();
    return sp;
}

Expr rate_expr(const ScaledSystem& sys, std::size_t k, const std::vector<Expr>& sp) {
    const Reaction& r = sys.net.reactions[k];
    Expr v = expr::substitute(r.rate.constant, [&](int i) { return sp[static_cast<std::size_t>(i)]; });
    for (auto [i, nu] : r.inputs) {
        const int excluded = static_cast<int>(std::count(r.rate_excluded.begin(), r.rate_excluded.end(), i));
        const int order = nu - excluded;
        if (order <= 0) continue;
        Expr a = sp[static_cast<std::size_t>(i)];
        if (auto c = r.rate.caps.find(i); c != r.rate.caps.end()) a = expr::min(a, expr::constant(c->second));
        if (sys.net.species[static_cast<std::size_t>(i)].scale == Rational(0)) {
            for (int m = 0; m < order; ++m) v = v * (a - expr::constant(m));
        } else {
            v = v * expr::pow(a, order);
        }
    }
    return v;
}

Expr tilt(const ScaledSystem& sys, std::size_t k) {
    const int dx = static_cast<int>(sys.dx());
    Expr s = zero();
    for (int i = 0; i < dx; ++i) {
        const int z = sys.zeta_x[k][static_cast<std::size_t>(i)];
        if (z != 0) s = s + expr::constant(z) * expr::var(dx + i);
    }
    return s;
}

Expr ipow(const Expr& e, int n) {
    if (n == 0) return one();
    if (n == 1) return e;
    if (n == -1) return one() / e;
    return expr::pow(e, n);
}

std::vector<std::vector<double>> sample_grid(std::size_t dx, const EVPOptions& opt) {
    const int g = std::max(2, opt.grid);
    std::vector<std::vector<double>> pts;
    const std::size_t dims = 2 * dx;
    std::vector<int> idx(dims, 0);
    for (;;) {
        std::vector<double> v(dims);
        for (std::size_t i = 0; i < dims; ++i) {
            const double lo = i < dx ? opt.x_lo : opt.p_lo;
            const double hi = i < dx ? opt.x_hi : opt.p_hi;
            v[i] = lo + (hi - lo) * idx[i] / (g - 1);
        }
        pts.push_back(std::move(v));
        std::size_t i = 0;
        while (i < dims && idx[i] == g - 1) idx[i++] = 0;
        if (i == dims) break;
        ++idx[i];
    }
    return pts;
}

std::string point_string(std::span<const double> v, std::size_t dx) {
    std::ostringstream os;
    os << "x=(";
    for (std::size_t i = 0; i < dx; ++i) os << (i ? "," : "") << v[i];
    os << ") p=(";
    for (std::size_t i = 0; i < dx; ++i) os << (i ? "," : "") << v[dx + i];
    os << ")";
    return os.str();
}

}  // namespace

EVPStructure check_structure(const ScaledSystem& sys) {
    EVPStructure st;
    const std::size_t m = sys.net.reactions.size();
    const std::size_t n = sys.net.species.size();
    st.theta.assign(m, -1);

    for (std::size_t k = 0; k < m; ++k) {
        if (sys.tag[k] == Timescale::Slow) continue;
        const Reaction& r = sys.net.reactions[k];
        for (std::size_t s = 0; s < n; ++s)
            if (is_fast_species(sys, static_cast<int>(s)) && expr::depends_on(r.rate.constant, static_cast<int>(s)))
                throw Error("NonlinearFastRate", r.name + ": rate constant depends on fast species " + sys.net.species[s].name);
        int order = 0;
        for (auto [i, nu] : r.inputs) {
            if (!is_fast_species(sys, i)) continue;
            const int excluded = static_cast<int>(std::count(r.rate_excluded.begin(), r.rate_excluded.end(), i));
            const int o = nu - excluded;
            if (o <= 0) continue;
            if (r.rate.caps.count(i))
                throw Error("NonlinearFastRate", r.name + ": capped fast factor " + sys.net.species[static_cast<std::size_t>(i)].name);
            order += o;
            st.theta[k] = i;
        }
        if (order > 1) throw Error("NonlinearFastRate", r.name + ": rate is not linear in the fast species");
        for (std::size_t s = 0; s < n; ++s) {
            const int z = fast_change(sys, k, static_cast<int>(s));
            if (is_discrete_species(sys, static_cast<int>(s)) && std::abs(z) > 1)
                throw Error("UnsupportedJumpSize", r.name + ": jump of size " + std::to_string(z) + " in " + sys.net.species[s].name);
        }
    }

    for (const auto& e : sys.eliminated) {
        int other = -1, support = 0;
        for (std::size_t i = 0; i < e.weights.size(); ++i)
            if (e.weights[i] != 0) {
                ++support;
                if (static_cast<int>(i) != e.species) other = static_cast<int>(i);
            }
        if (support == 2) st.conserved_pairs.emplace_back(other, e.species);
    }
    auto conserved_with = [&](int a, int b) {
        return std::any_of(st.conserved_pairs.begin(), st.conserved_pairs.end(), [&](auto pr) {
            return (pr.first == a && pr.second == b) || (pr.first == b && pr.second == a);
        });
    };

    std::vector<int> fast_species;
    for (std::size_t s = 0; s < n; ++s)
        if (is_fast_species(sys, static_cast<int>(s))) fast_species.push_back(static_cast<int>(s));

    for (std::size_t k = 0; k < m; ++k)
        for (int j : fast_species)
            if (is_discrete_species(sys, j) && fast_change(sys, k, j) == -1) {
                st.J.insert(j);
                if (st.theta[k] >= 0) {
                    st.I.insert(st.theta[k]);
                    st.I_j[j].insert(st.theta[k]);
                }
            }
    for (int s : fast_species) {
        if (!st.I.count(s)) st.I_c.insert(s);
        if (is_discrete_species(sys, s) && !st.J.count(s)) st.J_c.insert(s);
    }

    for (const auto& [j, Ij] : st.I_j) {
        std::set<std::string> opts;
        for (int i : Ij)
            for (std::size_t k = 0; k < m; ++k) {
                if (st.theta[k] != i) continue;
                const auto change = sys.net.reactions[k].net_change(n);
                for (std::size_t s = 0; s < n; ++s) {
                    if (static_cast<int>(s) == j || change[s] == 0) continue;
                    const int js = static_cast<int>(s);
                    if (conserved_with(j, js)) opts.insert("i");
                    else if (sys.slow_coord(js) >= 0) opts.insert("ii");
                    else if (is_fast_species(sys, js) && !is_discrete_species(sys, js)) opts.insert("iii");
                    else
                        throw Error("NoValidOption", "species " + sys.net.species[static_cast<std::size_t>(j)].name +
                                                         ": successor " + sys.net.species[s].name + " via " +
                                                         sys.net.reactions[k].name + " satisfies none of (i), (ii), (iii)");
                }
            }
        std::string label;
        for (const auto& o : opts) label += (label.empty() ? "" : "+") + o;
        st.option[j] = label.empty() ? "vacuous" : label;
    }
    return st;
}

EVPCoefficients assemble_coefficients(const EVPStructure&, const ScaledSystem& sys) {
    const auto sp = species_exprs(sys);
    const int dx = static_cast<int>(sys.dx());
    const int dy = static_cast<int>(sys.dy());
    EVPCoefficients co;
    for (std::size_t k = 0; k < sys.net.reactions.size(); ++k) {
        const Expr lam = rate_expr(sys, k, sp);
        std::vector<Expr> cj(static_cast<std::size_t>(dy));
        for (int j = 0; j < dy; ++j) {
            cj[static_cast<std::size_t>(j)] = expr::diff(lam, 2 * dx + j);
            if (sys.tag[k] == Timescale::Slow) continue;
            for (int l = 0; l < dy; ++l)
                if (expr::depends_on(cj[static_cast<std::size_t>(j)], 2 * dx + l))
                    throw Error("NonlinearFastRate", sys.net.reactions[k].name + ": rate is not linear in the fast species");
        }
        co.c0.push_back(expr::substitute(lam, [&](int v) { return v >= 2 * dx ? zero() : expr::var(v); }));
        co.c.push_back(std::move(cj));
    }
    return co;
}

EVPSolution solve_evp(const ScaledSystem& sys, const EVPOptions& opt) {
    const EVPStructure st = check_structure(sys);
    const EVPCoefficients co = assemble_coefficients(st, sys);
    const std::size_t dx = sys.dx(), dy = sys.dy();
    const std::size_t m = sys.net.reactions.size();
    const auto grid = sample_grid(dx, opt);

    std::vector<std::size_t> active;  // reactions on the fast time scale
    for (std::size_t k = 0; k < m; ++k)
        if (sys.tag[k] != Timescale::Slow) active.push_back(k);
    std::vector<Expr> tilts(m);
    for (std::size_t k : active) tilts[k] = tilt(sys, k);

    EVPSolution sol;
    sol.z.assign(dy, nullptr);
    sol.u.assign(dy, nullptr);
    for (std::size_t j = 0; j < dy; ++j) {
        if (sys.fast_kind[j] == FastKind::Discrete) sol.u[j] = zero();
        else sol.z[j] = one();
    }
    auto solved = [&](std::size_t j) {
        return sys.fast_kind[j] == FastKind::Discrete ? sol.z[j] != nullptr : sol.u[j] != nullptr;
    };

    // Unknowns appearing in equation i.
    auto involved = [&](std::size_t i) {
        std::set<std::size_t> u;
        for (std::size_t k : active) {
            if (expr::is_zero(co.c[k][i])) continue;
            for (std::size_t j = 0; j < dy; ++j)
                if (sys.zeta_y[k][j] != 0) u.insert(j);
        }
        return u;
    };
    // F_k with all unknowns except `skip` substituted; `skip` contributes via the caller.
    auto jump_product = [&](std::size_t k, std::size_t skip) {
        Expr e = expr::exp(tilts[k]);
        for (std::size_t j = 0; j < dy; ++j)
            if (j != skip && sys.fast_kind[j] == FastKind::Discrete) e = e * ipow(sol.z[j], sys.zeta_y[k][j]);
        return e;
    };
    auto flow_value = [&](std::size_t k, std::size_t skip) {
        Expr e = tilts[k];
        for (std::size_t j = 0; j < dy; ++j)
            if (j != skip && sys.fast_kind[j] == FastKind::Continuous && sys.zeta_y[k][j] != 0)
                e = e + expr::constant(sys.zeta_y[k][j]) * sol.u[j];
        return e;
    };
    auto factor = [&](std::size_t k) {
        return sys.tag[k] == Timescale::Jump ? jump_product(k, dy) - one() : flow_value(k, dy);
    };

    std::vector<bool> used(dy, false);
    std::vector<std::size_t> equations;
    for (std::size_t i = 0; i < dy; ++i) {
        bool any = false;
        for (std::size_t k : active) any = any || !expr::is_zero(co.c[k][i]);
        if (any) equations.push_back(i);
    }

    auto certify_discrete = [&](EVPStep& step) {
        std::size_t tiny = 0, total = 0;
        bool c_pos = false, c_neg = false, b_pos = false, b_neg = false;
        for (const auto& v : grid) {
            const double A = expr::eval(step.A, v), B = expr::eval(step.B, v), C = expr::eval(step.C, v);
            ++total;
            if (std::fabs(A) < 1e-14) ++tiny;
            if (C > 0) c_pos = true;
            if (C < 0) c_neg = true;
            if (B > 0) b_pos = true;
            if (B < 0) b_neg = true;
        }
        if (!expr::is_zero(step.A) && tiny > 0 && tiny < total)
            throw Error("TwoRegimes", "quadratic coefficient vanishes on part of the sample grid for " + sys.fast_name(step.unknown));
        step.linear = expr::is_zero(step.A) || tiny == total;
        Expr z;
        if (step.linear) {
            z = -step.C / step.B;
        } else {
            const Expr D = expr::sqrt(step.B * step.B - expr::constant(4.0) * step.A * step.C);
            // Each root has two algebraic forms; pick the one without cancellation
            // for the sign of B so that C -> 0 stays finite.
            auto by_b = [&](const Expr& le, const Expr& gt) {
                if (!b_pos) return le;
                if (!b_neg) return gt;
                return expr::select_le(step.B, zero(), le, gt);
            };
            const Expr pos = by_b(expr::constant(2.0) * step.C / (D - step.B), (step.B + D) / (expr::constant(-2.0) * step.A));
            const Expr neg = by_b((D - step.B) / (expr::constant(2.0) * step.A), expr::constant(-2.0) * step.C / (D + step.B));
            if (!c_neg) z = pos;
            else if (!c_pos) z = neg;
            else z = expr::select_le(step.C, zero(), neg, pos);
        }
        for (const auto& v : grid) {
            const double A = expr::eval(step.A, v), B = expr::eval(step.B, v), C = expr::eval(step.C, v);
            if (!step.linear) {
                const double D = B * B - 4 * A * C;
                if (A * C > 0) {
                    if (D >= 0 && -B / A > 0)
                        throw Error("TwoPositiveRoots", sys.fast_name(step.unknown) + " at " + point_string(v, dx));
                    throw Error("NoPositiveRoot", sys.fast_name(step.unknown) + " at " + point_string(v, dx));
                }
            }
            const double zv = expr::eval(z, v);
            if (!(zv > 0) || !std::isfinite(zv))
                throw Error("NoPositiveRoot", sys.fast_name(step.unknown) + " at " + point_string(v, dx));
        }
        sol.certified_points = grid.size();
        sol.z[step.unknown] = z;
    };

    for (;;) {
        bool progress = false;
        for (std::size_t i : equations) {
            if (used[i]) continue;
            std::vector<std::size_t> open;
            for (std::size_t j : involved(i))
                if (!solved(j)) open.push_back(j);
            if (open.size() != 1) continue;
            const std::size_t j = open[0];
            EVPStep step;
            step.coord = i;
            step.unknown = j;
            step.continuous = sys.fast_kind[j] == FastKind::Continuous;
            Expr A = zero(), B = zero(), C = zero();
            for (std::size_t k : active) {
                const Expr& c = co.c[k][i];
                if (expr::is_zero(c)) continue;
                const int zj = sys.zeta_y[k][j];
                if (!step.continuous) {
                    if (sys.tag[k] == Timescale::Jump) {
                        const Expr prod = c * jump_product(k, j);
                        if (zj == 1) A = A + prod;
                        else if (zj == -1) C = C + prod;
                        else B = B + prod;
                        B = B - c;
                    } else {
                        B = B + c * flow_value(k, dy);
                    }
                } else {
                    if (sys.tag[k] == Timescale::Flow) {
                        if (zj != 0) B = B + c * expr::constant(zj);
                        C = C + c * flow_value(k, j);
                    } else {
                        C = C + c * (jump_product(k, dy) - one());
                    }
                }
            }
            step.A = A;
            step.B = B;
            step.C = C;
            if (!step.continuous) {
                certify_discrete(step);
            } else {
                for (const auto& v : grid)
                    if (std::fabs(expr::eval(B, v)) < 1e-14)
                        throw Error("SingularLinearSystem", "coefficient of " + sys.fast_name(j) + " vanishes at " + point_string(v, dx));
                step.linear = true;
                sol.u[j] = -C / B;
            }
            sol.steps.push_back(step);
            used[i] = true;
            progress = true;
        }
        if (progress) continue;

        std::vector<std::size_t> rem_eq;
        std::set<std::size_t> rem_unk;
        for (std::size_t i : equations) {
            if (used[i]) continue;
            bool open = false;
            for (std::size_t j : involved(i))
                if (!solved(j)) {
                    rem_unk.insert(j);
                    open = true;
                }
            if (open) rem_eq.push_back(i);
        }
        if (rem_unk.empty()) break;
        if (rem_eq.size() < rem_unk.size())
            throw Error("Underdetermined", std::to_string(rem_unk.size()) + " unknowns but " + std::to_string(rem_eq.size()) +
                                               " equations remain");
        for (std::size_t j : rem_unk)
            if (sys.fast_kind[j] == FastKind::Discrete)
                throw Error("NoValidOption", "discrete unknown " + sys.fast_name(j) + " is coupled to other unknowns");
        // Joint linear solve for continuous unknowns by Cramer's rule.
        const std::vector<std::size_t> unk(rem_unk.begin(), rem_unk.end());
        const std::size_t q = unk.size();
        if (q > 3) throw Error("Underdetermined", "joint linear systems above size 3 are not supported");
        std::vector<std::vector<Expr>> M(q, std::vector<Expr>(q, zero()));
        std::vector<Expr> rhs(q, zero());
        for (std::size_t r = 0; r < q; ++r) {
            const std::size_t i = rem_eq[r];
            for (std::size_t k : active) {
                const Expr& c = co.c[k][i];
                if (expr::is_zero(c)) continue;
                if (sys.tag[k] == Timescale::Jump) {
                    rhs[r] = rhs[r] - c * (jump_product(k, dy) - one());
                    continue;
                }
                Expr known = tilts[k];
                for (std::size_t j = 0; j < dy; ++j) {
                    if (sys.fast_kind[j] != FastKind::Continuous || sys.zeta_y[k][j] == 0) continue;
                    auto pos = std::find(unk.begin(), unk.end(), j);
                    if (pos != unk.end())
                        M[r][static_cast<std::size_t>(pos - unk.begin())] =
                            M[r][static_cast<std::size_t>(pos - unk.begin())] + c * expr::constant(sys.zeta_y[k][j]);
                    else
                        known = known + expr::constant(sys.zeta_y[k][j]) * sol.u[j];
                }
                rhs[r] = rhs[r] - c * known;
            }
        }
        std::function<Expr(const std::vector<std::vector<Expr>>&)> det = [&](const std::vector<std::vector<Expr>>& a) {
            if (a.size() == 1) return a[0][0];
            Expr s = zero();
            for (std::size_t c = 0; c < a.size(); ++c) {
                std::vector<std::vector<Expr>> minor;
                for (std::size_t r = 1; r < a.size(); ++r) {
                    std::vector<Expr> row;
                    for (std::size_t cc = 0; cc < a.size(); ++cc)
                        if (cc != c) row.push_back(a[r][cc]);
                    minor.push_back(row);
                }
                const Expr t = a[0][c] * det(minor);
                s = c % 2 ? s - t : s + t;
            }
            return s;
        };
        const Expr D = det(M);
        for (const auto& v : grid)
            if (std::fabs(expr::eval(D, v)) < 1e-14)
                throw Error("SingularLinearSystem", "joint system is singular at " + point_string(v, dx));
        for (std::size_t c = 0; c < q; ++c) {
            auto Mc = M;
            for (std::size_t r = 0; r < q; ++r) Mc[r][c] = rhs[r];
            sol.u[unk[c]] = det(Mc) / D;
        }
        for (std::size_t r = 0; r < q; ++r) used[rem_eq[r]] = true;
    }

    // Unknowns left open must not influence H.
    for (std::size_t j = 0; j < dy; ++j) {
        if (solved(j)) continue;
        for (std::size_t k : active)
            if (sys.zeta_y[k][j] != 0 && !expr::is_zero(co.c0[k]))
                throw Error("Underdetermined", "unknown for " + sys.fast_name(j) + " is not fixed by the system");
        if (sys.fast_kind[j] == FastKind::Discrete) sol.z[j] = one();
        else sol.u[j] = zero();
    }

    // Equations not used for solving must hold identically.
    for (std::size_t i : equations) {
        Expr e = zero();
        for (std::size_t k : active)
            if (!expr::is_zero(co.c[k][i])) e = e + co.c[k][i] * factor(k);
        for (const auto& v : grid) {
            const double r = expr::eval(e, v);
            if (!(std::fabs(r) < 1e-8))
                throw Error("InconsistentSystem", "coefficient of " + sys.fast_name(i) + " does not vanish at " + point_string(v, dx));
        }
    }

    Expr H = zero();
    for (std::size_t k : active)
        if (!expr::is_zero(co.c0[k])) H = H + co.c0[k] * factor(k);
    sol.H = H;
    if (sol.certified_points == 0) sol.certified_points = grid.size();
    return sol;
}

double eigen_identity_residual(const ScaledSystem& sys, const EVPSolution& sol, std::span<const double> x,
                               std::span<const double> p, int y_max) {
    const std::size_t dx = sys.dx(), dy = sys.dy();
    std::vector<double> v(x.begin(), x.end());
    v.insert(v.end(), p.begin(), p.end());
    const double H = expr::eval(sol.H, v);
    std::vector<double> z(dy), u(dy);
    for (std::size_t j = 0; j < dy; ++j) {
        z[j] = expr::eval(sol.z[j], v);
        u[j] = expr::eval(sol.u[j], v);
    }
    const std::size_t m = sys.net.reactions.size();
    std::vector<double> F(m, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
        if (sys.tag[k] == Timescale::Slow) continue;
        double t = 0;
        for (std::size_t i = 0; i < dx; ++i) t += sys.zeta_x[k][i] * p[i];
        if (sys.tag[k] == Timescale::Jump) {
            double prod = std::exp(t);
            for (std::size_t j = 0; j < dy; ++j)
                if (sys.zeta_y[k][j] != 0) prod *= std::pow(z[j], sys.zeta_y[k][j]);
            F[k] = prod - 1.0;
        } else {
            for (std::size_t j = 0; j < dy; ++j) t += sys.zeta_y[k][j] * u[j];
            F[k] = t;
        }
    }
    const FastStateSpace space = make_fast_space(sys, y_max);
    const double cont_values[] = {0.0, 1.5, 7.0};
    double worst = 0;
    for (std::size_t s = 0; s < space.size(); ++s)
        for (double c : cont_values) {
            const auto y = space.fast_vector(s, dy, c);
            double acc = 0;
            for (std::size_t k = 0; k < m; ++k)
                if (sys.tag[k] != Timescale::Slow) acc += sys.rate(k, x, y) * F[k];
            worst = std::max(worst, std::fabs(acc - H));
        }
    return worst;
}

Hamiltonian::Hamiltonian(Expr H, std::size_t dim, std::vector<std::string> names)
    : H_(std::move(H)), d_(dim), names_(std::move(names)) {
    const int d = static_cast<int>(dim);
    for (int i = 0; i < d; ++i) {
        gp_.push_back(expr::diff(H_, d + i));
        gx_.push_back(expr::diff(H_, i));
    }
    hp_.assign(dim, std::vector<Expr>(dim));
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) hp_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = expr::diff(gp_[static_cast<std::size_t>(i)], d + j);
}

std::vector<double> Hamiltonian::pack(std::span<const double> x, std::span<const double> p) const {
    if (x.size() != d_ || p.size() != d_) throw Error("DomainError", "Hamiltonian expects dimension " + std::to_string(d_));
    std::vector<double> v(x.begin(), x.end());
    v.insert(v.end(), p.begin(), p.end());
    for (std::size_t i = 0; i < d_; ++i)
        if (!std::isfinite(v[i]) || v[i] < 0 || !std::isfinite(v[d_ + i]))
            throw Error("DomainError", "point outside the Hamiltonian domain");
    return v;
}

double Hamiltonian::value(std::span<const double> x, std::span<const double> p) const {
    const double h = expr::eval(H_, pack(x, p));
    if (!std::isfinite(h)) throw Error("DomainError", "Hamiltonian is not finite at this point");
    return h;
}

std::vector<double> Hamiltonian::grad_p(std::span<const double> x, std::span<const double> p) const {
    const auto v = pack(x, p);
    std::vector<double> g(d_);
    for (std::size_t i = 0; i < d_; ++i) g[i] = expr::eval(gp_[i], v);
    return g;
}

std::vector<double> Hamiltonian::grad_x(std::span<const double> x, std::span<const double> p) const {
    const auto v = pack(x, p);
    std::vector<double> g(d_);
    for (std::size_t i = 0; i < d_; ++i) g[i] = expr::eval(gx_[i], v);
    return g;
}

std::vector<std::vector<double>> Hamiltonian::hess_p(std::span<const double> x, std::span<const double> p) const {
    const auto v = pack(x, p);
    std::vector<std::vector<double>> h(d_, std::vector<double>(d_));
    for (std::size_t i = 0; i < d_; ++i)
        for (std::size_t j = 0; j < d_; ++j) h[i][j] = expr::eval(hp_[i][j], v);
    return h;
}

std::string Hamiltonian::to_string() const {
    return expr::to_string(H_, [&](int i) {
        const auto k = static_cast<std::size_t>(i);
        if (k < d_) return k < names_.size() ? names_[k] : "x" + std::to_string(k);
        const std::size_t j = k - d_;
        return "p_" + (j < names_.size() ? names_[j] : std::to_string(j));
    });
}

Hamiltonian hamiltonian(const ScaledSystem& sys, const EVPOptions& opt) {
    const EVPSolution sol = solve_evp(sys, opt);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < sys.dx(); ++i) names.push_back(sys.slow_name(i));
    return Hamiltonian(sol.H, sys.dx(), names);
}

double Oracles::mm(const MM& c, double x, double p) {
    const double s = c.k2 + c.k3;
    return c.M / 2 * (-s - c.k1 * x + std::sqrt((s - c.k1 * x) * (s - c.k1 * x) + 4 * (c.k2 + c.k3 * std::exp(-p)) * c.k1 * x)) +
           c.k0 * (std::exp(p) - 1);
}

double Oracles::dr(const DR& c, double x, double p) {
    return c.k0 * (std::exp(p) - 1) + (c.k2 * x + c.k4) * ((c.k1 * x * std::exp(-p) + c.k3) / (c.k1 * x + c.k3) - 1);
}

double Oracles::vp(const VP& c, double x, double p) {
    return c.k1 * (std::exp(p) - 1) +
           c.k2 * x * (std::exp(-p) - 1) * (1 + c.k6 * x * std::exp(-p) / (c.k4 + c.k6 * x));
}

double Oracles::srg(const SRG& c, double x1, double x2, double p1, double p2) {
    const double a = c.k1(x2), b = c.k2(x2);
    const double t = c.k3 * (std::exp(p1) - 1);
    return (-b - a + t + std::sqrt((b - a - t) * (b - a - t) + 4 * a * b)) / 2 + c.k4 * x1 * (std::exp(p2) - 1) +
           c.k5 * x1 * (std::exp(-p1) - 1) + c.k6 * x2 * (std::exp(-p2) - 1);
}

}  // namespace msldp
