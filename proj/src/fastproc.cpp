#include "msldp/fastproc.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>

#include "msldp/error.hpp"

namespace msldp {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

std::vector<double> FastStateSpace::fast_vector(std::size_t s, std::size_t dy, double cont) const {
    std::vector<double> y(dy, cont);
    for (std::size_t d = 0; d < discrete.size(); ++d) y[discrete[d]] = states[s][d];
    return y;
}

FastStateSpace make_fast_space(const ScaledSystem& sys, int y_max) {
    FastStateSpace space;
    space.y_max = y_max;
    for (std::size_t j = 0; j < sys.dy(); ++j)
        if (sys.fast_kind[j] == FastKind::Discrete) space.discrete.push_back(j);
    const std::size_t d = space.discrete.size();
    double total = 1;
    for (std::size_t i = 0; i < d; ++i) total *= (y_max + 1);
    if (total > 5e6) throw Error("DomainError", "fast state space too large; lower y_max");

    std::vector<double> x(sys.dx(), 1.0);
    std::vector<int> cur(d, 0);
    for (;;) {
        std::vector<double> y(sys.dy(), 0.0);
        for (std::size_t i = 0; i < d; ++i) y[space.discrete[i]] = cur[i];
        const auto z = sys.full_state(x, y);
        bool ok = true;
        for (const auto& e : sys.eliminated) {
            const double v = z[static_cast<std::size_t>(e.species)];
            if (v < -1e-9 || std::fabs(v - std::round(v)) > 1e-9) ok = false;
        }
        if (ok) {
            space.index.emplace(cur, space.states.size());
            space.states.push_back(cur);
        }
        std::size_t i = 0;
        while (i < d && cur[i] == y_max) cur[i++] = 0;
        if (i == d) break;
        ++cur[i];
    }
    if (space.states.empty()) throw Error("EmptySpace", "no fast state satisfies the conservation slices");
    return space;
}

FastOperator build_fast_operator(const ScaledSystem& sys, std::span<const double> x, std::span<const double> p,
                                 const FastStateSpace& space) {
    const std::size_t n = space.size();
    if (n == 0) throw Error("EmptySpace", "fast state space is empty");
    const std::size_t m = sys.net.reactions.size();
    FastOperator op;
    op.V = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    op.drift.assign(n, std::vector<double>(sys.dy(), 0.0));
    std::vector<Eigen::Triplet<double>> trip;
    std::vector<double> diag(n, 0.0);

    std::vector<double> tilt_exp(m, 0.0);
    for (std::size_t k = 0; k < m; ++k)
        for (std::size_t i = 0; i < sys.dx(); ++i) tilt_exp[k] += sys.zeta_x[k][i] * p[i];

    for (std::size_t s = 0; s < n; ++s) {
        const auto y = space.fast_vector(s, sys.dy(), kNaN);
        for (std::size_t k = 0; k < m; ++k) {
            if (sys.tag[k] == Timescale::Slow) continue;
            const double lam = sys.rate(k, x, y);
            if (sys.tag[k] == Timescale::Jump) {
                if (std::isnan(lam))
                    throw Error("ContinuousDependence",
                                "rate of " + sys.net.reactions[k].name + " depends on a continuous fast species");
                if (!std::isfinite(lam)) throw Error("NonFiniteRate", "rate of " + sys.net.reactions[k].name);
                if (lam == 0.0) continue;
                const double tilt = std::exp(tilt_exp[k]);
                op.V[static_cast<Eigen::Index>(s)] += lam * (tilt - 1.0);
                std::vector<int> target = space.states[s];
                bool moves = false;
                for (std::size_t d = 0; d < space.discrete.size(); ++d) {
                    const int dz = sys.zeta_y[k][space.discrete[d]];
                    target[d] += dz;
                    moves = moves || dz != 0;
                }
                if (!moves) continue;
                auto it = space.index.find(target);
                if (it == space.index.end()) continue;  // clipped at the box boundary
                trip.emplace_back(static_cast<int>(s), static_cast<int>(it->second), lam * tilt);
                diag[s] -= lam * tilt;
            } else {
                if (tilt_exp[k] != 0.0) {
                    if (std::isnan(lam))
                        throw Error("ContinuousDependence",
                                    "rate of " + sys.net.reactions[k].name + " depends on a continuous fast species");
                    op.V[static_cast<Eigen::Index>(s)] += lam * tilt_exp[k];
                }
                // Flow on continuous coordinates, recorded with continuous coordinates at 0.
                const auto y0 = space.fast_vector(s, sys.dy(), 0.0);
                const double lam0 = sys.rate(k, x, y0);
                for (std::size_t j = 0; j < sys.dy(); ++j) op.drift[s][j] += lam0 * sys.zeta_y[k][j];
            }
        }
    }
    for (std::size_t s = 0; s < n; ++s) trip.emplace_back(static_cast<int>(s), static_cast<int>(s), diag[s]);
    op.Q.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    op.Q.setFromTriplets(trip.begin(), trip.end());
    for (Eigen::Index i = 0; i < op.V.size(); ++i)
        if (!std::isfinite(op.V[i])) throw Error("NonFiniteRate", "potential is not finite");
    return op;
}

Irreducibility check_irreducibility(const FastOperator& op) {
    const auto n = static_cast<std::size_t>(op.Q.rows());
    std::vector<std::vector<std::size_t>> fwd(n), bwd(n);
    for (Eigen::Index r = 0; r < op.Q.outerSize(); ++r)
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(op.Q, r); it; ++it)
            if (it.row() != it.col() && it.value() > 0) {
                fwd[static_cast<std::size_t>(it.row())].push_back(static_cast<std::size_t>(it.col()));
                bwd[static_cast<std::size_t>(it.col())].push_back(static_cast<std::size_t>(it.row()));
            }
    // Kosaraju with explicit stacks.
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> order;
    for (std::size_t s = 0; s < n; ++s) {
        if (seen[s]) continue;
        std::vector<std::pair<std::size_t, std::size_t>> stack{{s, 0}};
        seen[s] = 1;
        while (!stack.empty()) {
            auto& [v, i] = stack.back();
            if (i < fwd[v].size()) {
                const std::size_t w = fwd[v][i++];
                if (!seen[w]) {
                    seen[w] = 1;
                    stack.emplace_back(w, 0);
                }
            } else {
                order.push_back(v);
                stack.pop_back();
            }
        }
    }
    std::vector<long> comp(n, -1);
    Irreducibility res;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if (comp[*it] >= 0) continue;
        const long c = static_cast<long>(res.components.size());
        res.components.emplace_back();
        std::vector<std::size_t> stack{*it};
        comp[*it] = c;
        while (!stack.empty()) {
            const std::size_t v = stack.back();
            stack.pop_back();
            res.components.back().push_back(v);
            for (std::size_t w : bwd[v])
                if (comp[w] < 0) {
                    comp[w] = c;
                    stack.push_back(w);
                }
        }
        std::sort(res.components.back().begin(), res.components.back().end());
    }
    res.irreducible = res.components.size() <= 1;
    return res;
}

namespace {

[[noreturn]] void throw_reducible(const Irreducibility& irr) {
    std::string msg = std::to_string(irr.components.size()) + " communicating classes:";
    for (const auto& c : irr.components) {
        msg += " {";
        for (std::size_t i = 0; i < c.size() && i < 8; ++i) msg += (i ? "," : "") + std::to_string(c[i]);
        if (c.size() > 8) msg += ",...";
        msg += "}";
    }
    throw Error("Reducible", msg);
}

}  // namespace

StationaryDist stationary_distribution(const FastOperator& op) {
    const Eigen::Index n = op.Q.rows();
    StationaryDist res;
    if (n == 1) {
        res.pi = Eigen::VectorXd::Ones(1);
        return res;
    }
    const auto irr = check_irreducibility(op);
    if (!irr.irreducible) throw_reducible(irr);
    // Solve Q^T pi = 0 with the last equation replaced by sum(pi) = 1.
    Eigen::SparseMatrix<double> A = op.Q.transpose();
    std::vector<Eigen::Triplet<double>> trip;
    for (Eigen::Index c = 0; c < A.outerSize(); ++c)
        for (Eigen::SparseMatrix<double>::InnerIterator it(A, c); it; ++it)
            if (it.row() != n - 1) trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    for (Eigen::Index c = 0; c < n; ++c) trip.emplace_back(static_cast<int>(n - 1), static_cast<int>(c), 1.0);
    Eigen::SparseMatrix<double> B(n, n);
    B.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(B);
    if (lu.info() != Eigen::Success) throw Error("SingularLinearSystem", "stationary system is singular");
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs[n - 1] = 1.0;
    res.pi = lu.solve(rhs);
    for (Eigen::Index i = 0; i < n; ++i) res.pi[i] = std::max(res.pi[i], 0.0);
    res.pi /= res.pi.sum();
    const Eigen::VectorXd r = op.Q.transpose() * res.pi;
    res.residual = r.cwiseAbs().maxCoeff();
    return res;
}

std::vector<double> effective_drift(const ScaledSystem& sys, std::span<const double> x, const FastStateSpace& space) {
    const std::vector<double> p0(sys.dx(), 0.0);
    const FastOperator op = build_fast_operator(sys, x, p0, space);
    const StationaryDist st = stationary_distribution(op);
    const std::size_t m = sys.net.reactions.size();
    const std::size_t n = space.size();

    // Means of continuous coordinates from the stationary balance of their
    // (affine) flows, needed only when a slow-changing rate depends on them.
    std::vector<std::size_t> cont;
    for (std::size_t j = 0; j < sys.dy(); ++j)
        if (sys.fast_kind[j] == FastKind::Continuous) cont.push_back(j);
    std::vector<double> mean(sys.dy(), 0.0);
    bool need_mean = false;
    for (std::size_t k = 0; k < m && !need_mean; ++k) {
        if (std::all_of(sys.zeta_x[k].begin(), sys.zeta_x[k].end(), [](int v) { return v == 0; })) continue;
        if (std::isnan(sys.rate(k, x, space.fast_vector(0, sys.dy(), kNaN)))) need_mean = true;
    }
    if (need_mean && !cont.empty()) {
        const auto c = static_cast<Eigen::Index>(cont.size());
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(c, c);
        Eigen::VectorXd b = Eigen::VectorXd::Zero(c);
        for (std::size_t k = 0; k < m; ++k) {
            if (sys.tag[k] != Timescale::Flow) continue;
            double base = 0;
            std::vector<double> slope(cont.size(), 0.0);
            for (std::size_t s = 0; s < n; ++s) {
                auto y = space.fast_vector(s, sys.dy(), 0.0);
                const double a0 = sys.rate(k, x, y);
                base += st.pi[static_cast<Eigen::Index>(s)] * a0;
                for (std::size_t q = 0; q < cont.size(); ++q) {
                    y[cont[q]] = 1.0;
                    slope[q] += st.pi[static_cast<Eigen::Index>(s)] * (sys.rate(k, x, y) - a0);
                    y[cont[q]] = 0.0;
                }
            }
            for (std::size_t r = 0; r < cont.size(); ++r) {
                const int zc = sys.zeta_y[k][cont[r]];
                if (zc == 0) continue;
                b[static_cast<Eigen::Index>(r)] -= zc * base;
                for (std::size_t q = 0; q < cont.size(); ++q)
                    A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(q)) += zc * slope[q];
            }
        }
        const Eigen::VectorXd sol = A.fullPivLu().solve(b);
        for (std::size_t q = 0; q < cont.size(); ++q) mean[cont[q]] = sol[static_cast<Eigen::Index>(q)];
    }

    std::vector<double> drift(sys.dx(), 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        auto y = space.fast_vector(s, sys.dy(), 0.0);
        for (std::size_t j : cont) y[j] = mean[j];
        const double w = st.pi[static_cast<Eigen::Index>(s)];
        if (w == 0.0) continue;
        for (std::size_t k = 0; k < m; ++k) {
            bool touches = false;
            for (std::size_t i = 0; i < sys.dx(); ++i) touches = touches || sys.zeta_x[k][i] != 0;
            if (!touches) continue;
            const double lam = sys.rate(k, x, y);
            for (std::size_t i = 0; i < sys.dx(); ++i) drift[i] += w * lam * sys.zeta_x[k][i];
        }
    }
    return drift;
}

LLNTrajectory integrate_lln(const std::function<std::vector<double>(std::span<const double>)>& b,
                            std::span<const double> x0, double T, double dt, const LLNOptions& opt) {
    if (!(dt > 0) || !(T >= 0)) throw Error("DomainError", "integrate_lln needs dt > 0 and T >= 0");
    const auto records = static_cast<std::size_t>(std::ceil(T / dt - 1e-12));
    const std::size_t d = x0.size();

    auto run = [&](std::size_t sub) {
        LLNTrajectory tr;
        std::vector<double> x(x0.begin(), x0.end());
        tr.t.push_back(0.0);
        tr.x.push_back(x);
        std::vector<double> tmp(d);
        for (std::size_t r = 0; r < records; ++r) {
            const double t0 = r * dt;
            const double t1 = std::min(T, (r + 1) * dt);
            const double h = (t1 - t0) / static_cast<double>(sub);
            for (std::size_t s = 0; s < sub; ++s) {
                const auto k1 = b(x);
                for (std::size_t i = 0; i < d; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
                const auto k2 = b(tmp);
                for (std::size_t i = 0; i < d; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
                const auto k3 = b(tmp);
                for (std::size_t i = 0; i < d; ++i) tmp[i] = x[i] + h * k3[i];
                const auto k4 = b(tmp);
                for (std::size_t i = 0; i < d; ++i) {
                    x[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
                    if (!std::isfinite(x[i]) || std::fabs(x[i]) > opt.blowup)
                        throw Error("BlowUp", "trajectory left the bound at t = " + std::to_string(t0));
                }
            }
            tr.t.push_back(t1);
            tr.x.push_back(x);
        }
        tr.dt_used = records ? (T / static_cast<double>(records)) / static_cast<double>(sub) : dt;
        return tr;
    };

    std::size_t sub = 1;
    LLNTrajectory coarse = run(sub);
    for (int h = 0; h < opt.max_halvings; ++h) {
        sub *= 2;
        LLNTrajectory fine = run(sub);
        double diff = 0;
        for (std::size_t r = 0; r < fine.x.size(); ++r)
            for (std::size_t i = 0; i < d; ++i) diff = std::max(diff, std::fabs(fine.x[r][i] - coarse.x[r][i]));
        if (diff < opt.tol) return fine;
        coarse = std::move(fine);
    }
    throw Error("NonConvergence", "RK4 step halving did not reach the tolerance");
}

LLNTrajectory integrate_lln(const ScaledSystem& sys, std::span<const double> x0, double T, double dt,
                            const FastStateSpace& space, const LLNOptions& opt) {
    return integrate_lln([&](std::span<const double> x) { return effective_drift(sys, x, space); }, x0, T, dt, opt);
}

namespace {

/// Radix-2 row/column balancing in place; returns d with A_in = diag(d) A_out diag(d)^{-1}.
Eigen::VectorXd balance(Eigen::MatrixXd& A) {
    const Eigen::Index n = A.rows();
    Eigen::VectorXd d = Eigen::VectorXd::Ones(n);
    for (bool again = true; again;) {
        again = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            double c = 0, r = 0;
            for (Eigen::Index j = 0; j < n; ++j)
                if (j != i) {
                    c += std::fabs(A(j, i));
                    r += std::fabs(A(i, j));
                }
            if (c == 0.0 || r == 0.0) continue;
            const double total = c + r;
            double f = 1;
            while (c < r / 2) {
                c *= 2;
                r /= 2;
                f *= 2;
            }
            while (c >= r * 2) {
                c /= 2;
                r *= 2;
                f /= 2;
            }
            if (c + r < 0.95 * total) {
                again = true;
                d[i] *= f;
                A.row(i) /= f;
                A.col(i) *= f;
            }
        }
    }
    return d;
}

/// For a reversible chain (pi_i A_ij = pi_j A_ji on every edge) returns log sqrt(pi),
/// so that diag(s) A diag(s)^{-1} is symmetric. Empty when no such pi exists.
std::vector<double> reversible_scaling(const Eigen::MatrixXd& A) {
    const Eigen::Index n = A.rows();
    std::vector<double> logpi(static_cast<std::size_t>(n), 0.0);
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    std::vector<Eigen::Index> queue{0};
    seen[0] = true;
    for (std::size_t q = 0; q < queue.size(); ++q) {
        const Eigen::Index i = queue[q];
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i || A(i, j) == 0.0) continue;
            if (A(j, i) == 0.0) return {};
            const double lj = logpi[static_cast<std::size_t>(i)] + std::log(A(i, j)) - std::log(A(j, i));
            if (!seen[static_cast<std::size_t>(j)]) {
                seen[static_cast<std::size_t>(j)] = true;
                logpi[static_cast<std::size_t>(j)] = lj;
                queue.push_back(j);
            } else if (std::fabs(logpi[static_cast<std::size_t>(j)] - lj) > 1e-9 * std::max(1.0, std::fabs(lj))) {
                return {};
            }
        }
    }
    for (auto& v : logpi) v *= 0.5;
    return logpi;
}

}  // namespace

PerronResult principal_eigenvalue(const FastOperator& op, const PerronOptions& opt) {
    const Eigen::Index n = op.Q.rows();
    PerronResult res;
    if (n > 1) {
        const auto irr = check_irreducibility(op);
        if (!irr.irreducible) throw_reducible(irr);
    }
    Eigen::SparseMatrix<double, Eigen::RowMajor> A = op.Q;
    for (Eigen::Index i = 0; i < n; ++i) A.coeffRef(i, i) += op.V[i];

    auto finish = [&](Eigen::VectorXd v) {
        v /= v.cwiseAbs().maxCoeff();
        if (v.sum() < 0) v = -v;
        res.eigenvector = v;
        const Eigen::VectorXd r = A * v - res.lambda * v;
        res.residual = r.cwiseAbs().maxCoeff() / v.cwiseAbs().maxCoeff();
    };

    if (static_cast<std::size_t>(n) < opt.dense_below) {
        // Tilted chains are strongly non-normal (down rates grow with y, up
        // rates do not). Reversible ones are symmetrized exactly; others are balanced.
        Eigen::MatrixXd D = Eigen::MatrixXd(A);
        if (const auto ls = reversible_scaling(D); !ls.empty() && n > 1) {
            Eigen::MatrixXd B = D;
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < n; ++j)
                    if (i != j && D(i, j) != 0.0) B(i, j) = std::sqrt(D(i, j) * D(j, i));
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B);
            if (es.info() != Eigen::Success) throw Error("NoConvergence", "symmetric eigensolver failed");
            res.lambda = es.eigenvalues()[n - 1];
            // Right eigenvector of A is diag(s)^{-1} w; work in logs, the entries span many decades.
            const Eigen::VectorXd w = es.eigenvectors().col(n - 1);
            std::vector<double> lg(static_cast<std::size_t>(n));
            double top = -std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < n; ++i) {
                lg[static_cast<std::size_t>(i)] = std::log(std::fabs(w[i])) - ls[static_cast<std::size_t>(i)];
                top = std::max(top, lg[static_cast<std::size_t>(i)]);
            }
            Eigen::VectorXd v(n);
            for (Eigen::Index i = 0; i < n; ++i) v[i] = std::exp(lg[static_cast<std::size_t>(i)] - top);
            res.dense = true;
            finish(v);
            return res;
        }
        const Eigen::VectorXd scale_d = balance(D);
        Eigen::EigenSolver<Eigen::MatrixXd> es(D, true);
        if (es.info() != Eigen::Success) throw Error("NoConvergence", "dense eigensolver failed");
        Eigen::Index best = 0;
        for (Eigen::Index i = 1; i < n; ++i)
            if (es.eigenvalues()[i].real() > es.eigenvalues()[best].real()) best = i;
        res.lambda = es.eigenvalues()[best].real();
        Eigen::VectorXd v = es.eigenvectors().col(best).real();
        // One step of inverse iteration sharpens the eigenvector.
        const double scale = std::max(1.0, D.cwiseAbs().maxCoeff());
        Eigen::MatrixXd S = D - (res.lambda + 1e-12 * scale) * Eigen::MatrixXd::Identity(n, n);
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(S);
        Eigen::VectorXd w = lu.solve(v);
        if (w.allFinite() && w.norm() > 0) v = w / w.norm();
        res.dense = true;
        finish(scale_d.cwiseProduct(v));
        return res;
    }

    double shift = op.V.cwiseAbs().maxCoeff();
    double rowmax = 0;
    for (Eigen::Index i = 0; i < n; ++i) rowmax = std::max(rowmax, std::fabs(op.Q.coeff(i, i)));
    shift += rowmax;
    Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
    double lam_prev = 0;
    for (std::size_t it = 1; it <= opt.max_iter; ++it) {
        Eigen::VectorXd w = A * v + shift * v;
        const double norm = w.cwiseAbs().maxCoeff();
        w /= norm;
        const double lam = norm - shift;
        const double change = (w - v).cwiseAbs().maxCoeff();
        v = w;
        res.iterations = it;
        if (it > 2 && std::fabs(lam - lam_prev) <= opt.rel_tol * std::max(1.0, std::fabs(lam)) &&
            change <= opt.rel_tol) {
            res.lambda = lam;
            finish(v);
            return res;
        }
        lam_prev = lam;
    }
    throw Error("NoConvergence", "power iteration did not converge");
}

PerronResult principal_eigenvalue_numeric(const ScaledSystem& sys, std::span<const double> x,
                                          std::span<const double> p, const FastStateSpace& space,
                                          const PerronOptions& opt) {
    return principal_eigenvalue(build_fast_operator(sys, x, p, space), opt);
}

}  // namespace msldp
