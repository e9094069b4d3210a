#include "msldp/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>

#include "msldp/error.hpp"

namespace msldp {

std::vector<double> ScaledSystem::full_state(std::span<const double> x, std::span<const double> y) const {
    std::vector<double> z(net.species.size(), 0.0);
    for (std::size_t i = 0; i < slow.size(); ++i) z[static_cast<std::size_t>(slow[i])] = x[i];
    for (std::size_t j = 0; j < fast.size(); ++j) z[static_cast<std::size_t>(fast[j])] = y[j];
    for (const auto& e : eliminated) {
        double rest = e.total;
        for (std::size_t i = 0; i < z.size(); ++i)
            if (static_cast<int>(i) != e.species) rest -= static_cast<double>(e.weights[i]) * z[i];
        z[static_cast<std::size_t>(e.species)] = rest / static_cast<double>(e.weights[static_cast<std::size_t>(e.species)]);
    }
    return z;
}

double ScaledSystem::rate(std::size_t k, std::span<const double> x, std::span<const double> y) const {
    const auto z = full_state(x, y);
    return net.rate(k, z);
}

int ScaledSystem::slow_coord(int species) const {
    for (std::size_t i = 0; i < slow.size(); ++i)
        if (slow[i] == species) return static_cast<int>(i);
    return -1;
}

int ScaledSystem::fast_coord(int species) const {
    for (std::size_t j = 0; j < fast.size(); ++j)
        if (fast[j] == species) return static_cast<int>(j);
    return -1;
}

ScaledSystem classify(const ReactionNetwork& net, ThresholdPolicy policy) {
    const std::size_t n = net.species.size();
    const std::size_t m = net.reactions.size();
    const auto stoich = net.stoichiometry();

    // beta(i): fastest reaction changing species i.
    std::vector<std::optional<Rational>> beta_of(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < m; ++k)
            if (stoich[i][k] != 0 && (!beta_of[i] || net.reactions[k].rate.rate_exponent > *beta_of[i]))
                beta_of[i] = net.reactions[k].rate.rate_exponent;

    std::vector<bool> is_slow(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        const Species& s = net.species[i];
        const bool fits = !beta_of[i] || *beta_of[i] <= s.scale;
        if (s.kind == SpeciesKind::Slow) {
            if (!fits)
                throw Error("ScalingViolation", "slow species " + s.name + ": beta(i) = " + beta_of[i]->to_string() +
                                                    " exceeds alpha_i = " + s.scale.to_string());
            if (s.scale == Rational(0))
                throw Error("ScalingViolation", "slow species " + s.name + " has alpha_i = 0");
            is_slow[i] = true;
        } else if (s.kind == SpeciesKind::Unspecified) {
            is_slow[i] = s.scale > Rational(0) && fits;
        }
    }
    std::optional<Rational> speed;
    for (std::size_t i = 0; i < n; ++i)
        if (is_slow[i] && (!speed || net.species[i].scale < *speed)) speed = net.species[i].scale;
    if (!speed) throw Error("NoSlowSpecies", "no species satisfies the slow-scale inequalities");

    ScaledSystem sys;
    sys.net = net;
    sys.speed = *speed;
    for (const auto& s : net.species) sys.alpha.push_back(s.scale / *speed);
    for (const auto& r : net.reactions) sys.beta.push_back(r.rate.rate_exponent / *speed);

    // Eliminate fast discrete species through conservation laws with known totals.
    std::vector<bool> eliminated(n, false);
    for (std::size_t l = 0; l < net.conservation_laws.size(); ++l) {
        const auto& law = net.conservation_laws[l];
        if (!law.total) continue;
        bool all_fast_discrete = true;
        int last = -1;
        for (std::size_t i = 0; i < n; ++i) {
            if (law.weights[i] == 0) continue;
            if (is_slow[i] || sys.alpha[i] != Rational(0)) all_fast_discrete = false;
            if (!eliminated[i]) last = static_cast<int>(i);
        }
        if (!all_fast_discrete || last < 0) continue;
        eliminated[static_cast<std::size_t>(last)] = true;
        sys.eliminated.push_back(Elimination{last, l, law.weights, *law.total});
    }

    bool has_fast_at_threshold = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (is_slow[i]) {
            sys.slow.push_back(static_cast<int>(i));
            continue;
        }
        const Rational limit = Rational(1) + sys.alpha[i];
        if (beta_of[i]) {
            const Rational b = *beta_of[i] / *speed;
            if (b > limit)
                throw Error("ScalingViolation", "fast species " + net.species[i].name + ": beta(j)/s = " +
                                                    b.to_string() + " exceeds 1 + alpha_j/s = " + limit.to_string());
            if (b == limit) has_fast_at_threshold = true;
        }
        if (eliminated[i]) continue;
        sys.fast.push_back(static_cast<int>(i));
        sys.fast_kind.push_back(sys.alpha[i] == Rational(0) ? FastKind::Discrete : FastKind::Continuous);
    }
    const bool any_fast = sys.fast.size() + sys.eliminated.size() > 0;
    if (!any_fast && !policy.allow_no_fast) throw Error("NoFastSpecies", "every species is slow");
    if (any_fast && !has_fast_at_threshold)
        throw Error("ScalingViolation", "no fast species has beta(j) = s + alpha_j");

    sys.tag.resize(m);
    sys.zeta_x.assign(m, std::vector<int>(sys.slow.size(), 0));
    sys.zeta_y.assign(m, std::vector<int>(sys.fast.size(), 0));
    for (std::size_t k = 0; k < m; ++k) {
        const Rational b = sys.beta[k];
        sys.tag[k] = b == Rational(1) ? Timescale::Jump : (b > Rational(1) ? Timescale::Flow : Timescale::Slow);
        for (std::size_t i = 0; i < sys.slow.size(); ++i) {
            const auto s = static_cast<std::size_t>(sys.slow[i]);
            if (b == sys.alpha[s]) sys.zeta_x[k][i] = stoich[s][k];
        }
        for (std::size_t j = 0; j < sys.fast.size(); ++j) {
            const auto f = static_cast<std::size_t>(sys.fast[j]);
            if (b == Rational(1) + sys.alpha[f]) sys.zeta_y[k][j] = stoich[f][k];
        }
    }
    return sys;
}

EffectiveChanges effective_changes(const ScaledSystem& sys) { return {sys.zeta_x, sys.zeta_y}; }

namespace {

/// Growth degree of a rate law, treating capped factors as bounded.
int rate_growth(const ReactionNetwork& net, const Reaction& r, bool ignore_caps) {
    int g = expr::degree(r.rate.constant, [](int) { return true; }).growth;
    for (auto [i, nu] : r.inputs) {
        const int excl = static_cast<int>(std::count(r.rate_excluded.begin(), r.rate_excluded.end(), i));
        if (!ignore_caps && r.rate.caps.count(i)) continue;
        g += nu - excl;
    }
    (void)net;
    return g;
}

bool constant_rate(const Reaction& r) {
    if (!expr::is_const(r.rate.constant)) return false;
    for (auto [i, nu] : r.inputs) {
        const int excl = static_cast<int>(std::count(r.rate_excluded.begin(), r.rate_excluded.end(), i));
        if (nu - excl > 0) return false;
    }
    return true;
}

std::vector<std::vector<double>> fast_grid(const ScaledSystem& sys, int y_max) {
    std::vector<std::vector<double>> states{{}};
    for (std::size_t j = 0; j < sys.dy(); ++j) {
        std::vector<std::vector<double>> next;
        const bool disc = sys.fast_kind[j] == FastKind::Discrete;
        const int steps = disc ? y_max : 8;
        for (const auto& s : states)
            for (int v = 0; v <= steps; ++v) {
                auto t = s;
                t.push_back(disc ? v : y_max * static_cast<double>(v) / steps);
                next.push_back(t);
            }
        states = std::move(next);
    }
    // Respect eliminated species: keep states where they stay nonnegative.
    std::vector<std::vector<double>> kept;
    std::vector<double> x0(sys.dx(), 1.0);
    for (const auto& s : states) {
        const auto z = sys.full_state(x0, s);
        bool ok = true;
        for (const auto& e : sys.eliminated)
            if (z[static_cast<std::size_t>(e.species)] < -1e-12) ok = false;
        if (ok) kept.push_back(s);
    }
    return kept;
}

}  // namespace

GrowthReport check_growth(const ScaledSystem& sys, const GrowthBox& box) {
    GrowthReport rep;
    const std::size_t dx = sys.dx();
    if (box.x_lo.size() != dx || box.x_hi.size() != dx)
        throw Error("DomainError", "growth box dimension does not match the slow dimension");
    // Log-spaced slow grid (linear when the box touches zero).
    const int per_dim = 9;
    std::vector<std::vector<double>> axes(dx);
    for (std::size_t i = 0; i < dx; ++i) {
        const double lo = box.x_lo[i], hi = box.x_hi[i];
        for (int t = 0; t < per_dim; ++t) {
            const double u = static_cast<double>(t) / (per_dim - 1);
            axes[i].push_back(lo > 0 ? lo * std::pow(hi / lo, u) : lo + (hi - lo) * u);
        }
    }
    std::vector<std::vector<double>> xs{{}};
    for (std::size_t i = 0; i < dx; ++i) {
        std::vector<std::vector<double>> next;
        for (const auto& s : xs)
            for (double v : axes[i]) {
                auto t = s;
                t.push_back(v);
                next.push_back(t);
            }
        xs = std::move(next);
    }
    const auto ys = fast_grid(sys, box.y_max);

    struct Sample {
        std::vector<double> z;
        std::vector<double> b0, b1;
        double c = 0;
    };
    std::vector<Sample> samples;
    const std::size_t m = sys.net.reactions.size();
    for (const auto& x : xs)
        for (const auto& y : ys) {
            Sample s;
            s.z = x;
            s.z.insert(s.z.end(), y.begin(), y.end());
            s.b0.assign(dx, 0.0);
            s.b1.assign(sys.dy(), 0.0);
            for (std::size_t k = 0; k < m; ++k) {
                const double lam = sys.rate(k, x, y);
                for (std::size_t i = 0; i < dx; ++i) s.b0[i] += lam * sys.zeta_x[k][i];
                if (sys.tag[k] == Timescale::Flow)
                    for (std::size_t j = 0; j < sys.dy(); ++j) s.b1[j] += lam * sys.zeta_y[k][j];
                if (sys.tag[k] == Timescale::Jump)
                    for (std::size_t j = 0; j < sys.dy(); ++j) s.c += lam * std::abs(sys.zeta_y[k][j]);
            }
            samples.push_back(std::move(s));
        }
    auto norm = [](const std::vector<double>& v) {
        double s = 0;
        for (double a : v) s += a * a;
        return std::sqrt(s);
    };
    for (const auto& s : samples) {
        rep.b0_bound = std::max(rep.b0_bound, norm(s.b0));
        rep.b1_bound = std::max(rep.b1_bound, norm(s.b1));
        rep.c_bound = std::max(rep.c_bound, s.c);
    }
    // Lipschitz estimates over pairs of grid neighbours (differ in one coordinate).
    for (std::size_t a = 0; a < samples.size(); ++a) {
        for (std::size_t b = a + 1; b < samples.size(); ++b) {
            const auto& p = samples[a].z;
            const auto& q = samples[b].z;
            int differ = 0;
            double dist = 0;
            for (std::size_t i = 0; i < p.size(); ++i)
                if (p[i] != q[i]) {
                    ++differ;
                    dist = std::fabs(p[i] - q[i]);
                }
            if (differ != 1) continue;
            std::vector<double> d0(dx), d1(sys.dy());
            for (std::size_t i = 0; i < dx; ++i) d0[i] = samples[a].b0[i] - samples[b].b0[i];
            for (std::size_t j = 0; j < sys.dy(); ++j) d1[j] = samples[a].b1[j] - samples[b].b1[j];
            rep.b0_lip = std::max(rep.b0_lip, norm(d0) / dist);
            rep.b1_lip = std::max(rep.b1_lip, norm(d1) / dist);
            rep.c_lip = std::max(rep.c_lip, std::fabs(samples[a].c - samples[b].c) / dist);
        }
    }
    rep.samples = samples.size();
    for (std::size_t k = 0; k < m; ++k) {
        const bool linear = rate_growth(sys.net, sys.net.reactions[k], false) <= 1;
        const bool in_b0 = std::any_of(sys.zeta_x[k].begin(), sys.zeta_x[k].end(), [](int v) { return v != 0; });
        const bool in_y = std::any_of(sys.zeta_y[k].begin(), sys.zeta_y[k].end(), [](int v) { return v != 0; });
        if (in_b0 && !linear) rep.b0_global = false;
        if (in_y && sys.tag[k] == Timescale::Flow && !linear) rep.b1_global = false;
        if (in_y && sys.tag[k] == Timescale::Jump && !linear) rep.c_global = false;
    }
    return rep;
}

std::vector<BinaryVerdict> check_binary_bound(const ReactionNetwork& net, const ScaledSystem& sys) {
    std::vector<BinaryVerdict> out;
    const std::size_t n = net.species.size();
    const auto stoich = net.stoichiometry();
    auto conserved = [&](int i) {
        for (const auto& law : net.conservation_laws)
            if (law.total && law.weights[static_cast<std::size_t>(i)] > 0) return true;
        return false;
    };
    auto constant_production = [&](int i) {
        if (sys.slow_coord(i) < 0) return false;
        for (std::size_t k = 0; k < net.reactions.size(); ++k)
            if (stoich[static_cast<std::size_t>(i)][k] > 0 && !constant_rate(net.reactions[k])) return false;
        return true;
    };
    for (std::size_t k = 0; k < net.reactions.size(); ++k) {
        const Reaction& r = net.reactions[k];
        if (rate_growth(net, r, true) < 2) continue;
        BinaryVerdict v;
        v.reaction = r.name;
        v.index = k;
        for (auto [i, nu] : r.inputs) {
            const int excl = static_cast<int>(std::count(r.rate_excluded.begin(), r.rate_excluded.end(), i));
            if (nu - excl <= 0) continue;
            if (conserved(i)) {
                v.verdict = BinaryCase::Conservation;
                v.factor = i;
                break;
            }
        }
        if (v.verdict == BinaryCase::Unbounded) {
            for (auto [i, nu] : r.inputs) {
                const int excl = static_cast<int>(std::count(r.rate_excluded.begin(), r.rate_excluded.end(), i));
                if (nu - excl == 1 && constant_production(i)) {
                    v.verdict = BinaryCase::SlowFactor;
                    v.factor = i;
                    break;
                }
            }
        }
        // A single bounded factor only helps when the remaining degree is at most one.
        if (v.verdict != BinaryCase::Unbounded) {
            const int excl = static_cast<int>(std::count(r.rate_excluded.begin(), r.rate_excluded.end(), v.factor));
            const int order = r.inputs.at(v.factor) - excl;
            if (rate_growth(net, r, true) - order > 1) v.verdict = BinaryCase::Unbounded;
        }
        (void)n;
        out.push_back(v);
    }
    return out;
}

TruncationResult truncate(const ReactionNetwork& net, double level) {
    if (!(level > 0)) throw Error("DomainError", "truncation level must be positive");
    const ScaledSystem sys = classify(net, ThresholdPolicy{true});
    TruncationResult res;
    res.net = net;
    res.level = level;
    for (const auto& v : check_binary_bound(net, sys)) {
        if (v.verdict == BinaryCase::Unbounded)
            throw Error("UnboundedRate", "reaction " + v.reaction + " has no bounded factor");
        res.net.reactions[v.index].rate.caps[v.factor] = level;
        res.affected.push_back(v.reaction);
        if (v.verdict == BinaryCase::Conservation) {
            for (const auto& law : net.conservation_laws) {
                const auto w = law.weights[static_cast<std::size_t>(v.factor)];
                if (!law.total || w <= 0) continue;
                const double reach = *law.total / static_cast<double>(w);
                if (level < reach)
                    res.warnings.push_back("TruncationBelowConservedTotal: " + v.reaction + " caps " +
                                           net.species[static_cast<std::size_t>(v.factor)].name +
                                           " below its conserved bound");
            }
        }
    }
    res.bound_shape = "limsup (1/N) log P(truncated and original paths differ on [0,t]) <= c(t) - M'";
    return res;
}

std::string to_string(BinaryCase c) {
    switch (c) {
        case BinaryCase::Conservation: return "conservation";
        case BinaryCase::SlowFactor: return "slow-factor";
        case BinaryCase::Unbounded: return "unbounded";
    }
    return "?";
}

}  // namespace msldp
