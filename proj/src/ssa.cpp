#include "msldp/ssa.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "msldp/error.hpp"

namespace msldp {

std::vector<double> Trajectory::scaled(const std::vector<std::int64_t>& counts) const {
    std::vector<double> z(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) z[i] = static_cast<double>(counts[i]) / scale[i];
    return z;
}

namespace {

struct Input {
    std::size_t species;
    int order;     ///< factors entering the rate
    int required;  ///< molecules consumed (availability)
    bool discrete;
    std::optional<double> cap;
};

/// Precomputed rate data for one network at one scale N.
class Engine {
public:
    Engine(const ReactionNetwork& net, double N) : net_(net), N_(N) {
        const std::size_t na = net.species.size(), np = net.passive.size();
        scale_.resize(na + np);
        for (std::size_t i = 0; i < na; ++i) scale_[i] = std::pow(N, net.species[i].scale.to_double());
        for (std::size_t i = 0; i < np; ++i) scale_[na + i] = std::pow(N, net.passive[i].scale.to_double());
        const std::size_t m = net.reactions.size();
        inputs_.resize(m);
        delta_.resize(m);
        factor_.resize(m);
        kconst_.resize(m);
        for (std::size_t k = 0; k < m; ++k) {
            const Reaction& r = net.reactions[k];
            factor_[k] = std::pow(N, r.rate.rate_exponent.to_double());
            double v = 0;
            if (expr::is_const(r.rate.constant, &v)) kconst_[k] = v;
            for (auto [i, nu] : r.inputs) {
                const int excluded = static_cast<int>(std::count(r.rate_excluded.begin(), r.rate_excluded.end(), i));
                Input in;
                in.species = static_cast<std::size_t>(i);
                in.order = nu - excluded;
                in.required = nu;
                in.discrete = net.species[in.species].scale == Rational(0);
                if (auto c = r.rate.caps.find(i); c != r.rate.caps.end()) in.cap = c->second;
                inputs_[k].push_back(in);
            }
            std::vector<std::int64_t> d(na + np, 0);
            for (auto [i, nu] : r.inputs) d[static_cast<std::size_t>(i)] -= nu;
            for (auto [i, nu] : r.outputs) d[static_cast<std::size_t>(i)] += nu;
            for (auto [i, nu] : r.passive_outputs) d[na + static_cast<std::size_t>(i)] += nu;
            delta_[k] = d;
            for (std::size_t s = 0; s < d.size(); ++s)
                if (d[s] != 0) sparse_.push_back({k, s, d[s]});
        }
        for (std::size_t k = 0; k < m; ++k) {
            std::vector<std::pair<std::size_t, std::int64_t>> e;
            for (const auto& t : sparse_)
                if (t.k == k) e.emplace_back(t.s, t.d);
            sparse_by_k_.push_back(std::move(e));
        }
    }

    std::size_t n_total() const { return scale_.size(); }
    const std::vector<double>& scale() const { return scale_; }
    const std::vector<std::vector<std::int64_t>>& delta() const { return delta_; }

    std::vector<std::int64_t> initial_counts(const SimConfig& cfg) const {
        const std::size_t na = net_.species.size(), np = net_.passive.size();
        std::vector<std::int64_t> n(na + np, 0);
        for (std::size_t i = 0; i < na; ++i) {
            double z = 0;
            if (!cfg.z0.empty()) z = cfg.z0.at(i);
            else if (net_.init[i]) z = *net_.init[i];
            n[i] = std::llround(z * scale_[i]);
        }
        for (std::size_t i = 0; i < np; ++i) {
            double z = 0;
            if (!cfg.passive0.empty()) z = cfg.passive0.at(i);
            else if (i < net_.passive_init.size() && net_.passive_init[i]) z = *net_.passive_init[i];
            n[na + i] = std::llround(z * scale_[na + i]);
        }
        return n;
    }

    double rate(std::size_t k, const std::vector<std::int64_t>& n, std::vector<double>& z) const {
        for (const auto& in : inputs_[k])
            if (n[in.species] < in.required) return 0.0;
        double v = kconst_[k] ? *kconst_[k] : expr::eval(net_.reactions[k].rate.constant, z);
        for (const auto& in : inputs_[k]) {
            if (in.order <= 0) continue;
            double a = z[in.species];
            if (in.cap) a = std::min(a, *in.cap);
            if (in.discrete) {
                for (int m = 0; m < in.order; ++m) v *= std::max(a - m, 0.0);
            } else {
                for (int m = 0; m < in.order; ++m) v *= a;
            }
        }
        return factor_[k] * v;
    }

    /// Runs one path. Calls `on_jump(t, k)` after each jump when provided.
    template <class OnJump, class OnRecord>
    void run(std::vector<std::int64_t>& n, double T, CounterRng& rng, double rate_cap, const std::vector<double>& record,
             OnJump&& on_jump, OnRecord&& on_record) const {
        const std::size_t m = inputs_.size();
        const std::size_t na = net_.species.size();
        std::vector<double> z(na);
        for (std::size_t i = 0; i < na; ++i) z[i] = static_cast<double>(n[i]) / scale_[i];
        std::vector<double> a(m);
        std::size_t ri = 0;
        double t = 0;
        for (;;) {
            double a0 = 0;
            for (std::size_t k = 0; k < m; ++k) {
                a[k] = rate(k, n, z);
                a0 += a[k];
            }
            if (!std::isfinite(a0) || a0 > rate_cap)
                throw Error("RateOverflow", "total rate " + std::to_string(a0) + " at t = " + std::to_string(t) +
                                                "; consider truncating the network");
            const double u1 = rng.uniform();
            const double u2 = rng.uniform();
            const double dt = a0 > 0 ? -std::log(u1) / a0 : std::numeric_limits<double>::infinity();
            const double tn = t + dt;
            while (ri < record.size() && record[ri] <= T && record[ri] < tn) on_record(ri++, n);
            if (tn > T) break;
            double target = u2 * a0, acc = 0;
            std::size_t k = 0;
            for (; k + 1 < m; ++k) {
                acc += a[k];
                if (target < acc) break;
            }
            while (a[k] == 0.0 && k > 0) --k;  // guard against rounding past the last positive rate
            for (auto [s, d] : sparse_by_k_[k]) {
                n[s] += d;
                if (n[s] < 0) throw Error("NegativeState", "count of species " + std::to_string(s) + " went negative");
                if (s < na) z[s] = static_cast<double>(n[s]) / scale_[s];
            }
            t = tn;
            on_jump(t, k);
        }
    }

private:
    struct Sparse {
        std::size_t k, s;
        std::int64_t d;
    };
    const ReactionNetwork& net_;
    double N_;
    std::vector<double> scale_;
    std::vector<std::vector<Input>> inputs_;
    std::vector<std::vector<std::int64_t>> delta_;
    std::vector<Sparse> sparse_;
    std::vector<std::vector<std::pair<std::size_t, std::int64_t>>> sparse_by_k_;
    std::vector<double> factor_;
    std::vector<std::optional<double>> kconst_;
};

}  // namespace

Trajectory simulate(const ReactionNetwork& net, const SimConfig& cfg) {
    if (!(cfg.N > 0) || !(cfg.T >= 0)) throw Error("DomainError", "simulate needs N > 0 and T >= 0");
    const Engine eng(net, cfg.N);
    Trajectory tr;
    tr.N = cfg.N;
    tr.T = cfg.T;
    tr.scale = eng.scale();
    tr.change = eng.delta();
    tr.initial = eng.initial_counts(cfg);
    for (auto v : tr.initial)
        if (v < 0) throw Error("NegativeState", "initial state has a negative count");
    tr.jump_counts.assign(net.reactions.size(), 0);
    std::vector<double> record = cfg.record;
    std::sort(record.begin(), record.end());
    tr.record_times = record;
    std::vector<std::int64_t> n = tr.initial;
    CounterRng rng(cfg.seed);
    eng.run(
        n, cfg.T, rng, cfg.rate_cap, record,
        [&](double t, std::size_t k) {
            ++tr.jump_counts[k];
            if (cfg.keep_jumps) {
                tr.jump_times.push_back(t);
                tr.jump_reactions.push_back(static_cast<std::uint32_t>(k));
            }
        },
        [&](std::size_t, const std::vector<std::int64_t>& s) { tr.recorded.push_back(s); });
    // Record times exactly at or after the last jump but within T.
    while (tr.recorded.size() < record.size() && record[tr.recorded.size()] <= cfg.T) tr.recorded.push_back(n);
    tr.record_times.resize(tr.recorded.size());
    tr.final_counts = n;
    return tr;
}

std::vector<double> OccupationMeasure::total() const {
    std::vector<double> t(mass.empty() ? 0 : mass[0].size(), 0.0);
    for (const auto& row : mass)
        for (std::size_t c = 0; c < row.size(); ++c) t[c] += row[c];
    return t;
}

OccupationMeasure occupation_measure(const Trajectory& traj, std::size_t cells,
                                     const std::function<int(const std::vector<std::int64_t>&)>& cell,
                                     const std::vector<double>& edges) {
    OccupationMeasure om;
    om.edges = edges;
    if (edges.size() < 2) return om;
    om.mass.assign(edges.size() - 1, std::vector<double>(cells, 0.0));
    if (traj.jump_times.size() != traj.jump_reactions.size())
        throw Error("DomainError", "trajectory has inconsistent jump records");
    std::vector<std::int64_t> n = traj.initial;
    auto add = [&](double a, double b) {
        if (b <= a) return;
        const int c = cell(n);
        if (c < 0 || static_cast<std::size_t>(c) >= cells) return;
        for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
            const double lo = std::max(a, edges[i]), hi = std::min(b, edges[i + 1]);
            if (hi > lo) om.mass[i][static_cast<std::size_t>(c)] += hi - lo;
        }
    };
    double t = 0;
    for (std::size_t j = 0; j < traj.jump_times.size(); ++j) {
        add(t, traj.jump_times[j]);
        const auto& d = traj.change[traj.jump_reactions[j]];
        for (std::size_t s = 0; s < n.size(); ++s) n[s] += d[s];
        t = traj.jump_times[j];
    }
    add(t, traj.T);
    return om;
}

McResult mc_estimate(const ReactionNetwork& net, const McTarget& target, const std::vector<double>& Ns,
                     std::uint64_t replicas, std::uint64_t seed, unsigned jobs) {
    if (target.species.size() != target.center.size()) throw Error("DomainError", "target species and center differ in size");
    if (replicas == 0) throw Error("DomainError", "need at least one replica");
    jobs = std::max(1u, jobs);
    McResult res;
    for (std::size_t ni = 0; ni < Ns.size(); ++ni) {
        const double N = Ns[ni];
        const Engine eng(net, N);
        SimConfig cfg;
        cfg.N = N;
        cfg.z0 = target.z0;
        const auto n0 = eng.initial_counts(cfg);
        std::vector<std::uint64_t> hits(jobs, 0);
        auto worker = [&](unsigned w) {
            const std::vector<double> none;
            std::vector<std::int64_t> n;
            for (std::uint64_t r = w; r < replicas; r += jobs) {
                n = n0;
                CounterRng rng(seed ^ (static_cast<std::uint64_t>(ni) << 40) ^ r);
                eng.run(n, target.T, rng, 1e12, none, [](double, std::size_t) {},
                        [](std::size_t, const std::vector<std::int64_t>&) {});
                bool in = true;
                for (std::size_t q = 0; q < target.species.size() && in; ++q) {
                    const auto s = static_cast<std::size_t>(target.species[q]);
                    const double x = static_cast<double>(n[s]) / eng.scale()[s];
                    in = std::fabs(x - target.center[q]) <= target.eps + 1e-12;
                }
                if (in) ++hits[w];
            }
        };
        if (jobs == 1) {
            worker(0);
        } else {
            std::vector<std::thread> pool;
            for (unsigned w = 0; w < jobs; ++w) pool.emplace_back(worker, w);
            for (auto& th : pool) th.join();
        }
        McPoint pt;
        pt.N = N;
        pt.replicas = replicas;
        for (auto h : hits) pt.hits += h;
        const double R = static_cast<double>(replicas);
        pt.p_hat = static_cast<double>(pt.hits) / R;
        const double zq = 1.959963984540054;
        const double den = 1 + zq * zq / R;
        const double mid = (pt.p_hat + zq * zq / (2 * R)) / den;
        const double half = zq * std::sqrt(pt.p_hat * (1 - pt.p_hat) / R + zq * zq / (4 * R * R)) / den;
        pt.ci_lo = std::max(0.0, mid - half);
        pt.ci_hi = std::min(1.0, mid + half);
        if (pt.hits > 0) {
            pt.rate = -std::log(pt.p_hat) / N;
            pt.rate_lo = -std::log(pt.ci_hi) / N;
            if (pt.ci_lo > 0) pt.rate_hi = -std::log(pt.ci_lo) / N;
        } else {
            ++res.censored;
        }
        res.points.push_back(pt);
    }

    // Weighted least squares of rate = a + b / N over uncensored points.
    double Sw = 0, Su = 0, Sy = 0, Suu = 0, Suy = 0;
    std::size_t used = 0;
    for (const auto& pt : res.points) {
        if (!pt.rate) continue;
        const double R = static_cast<double>(pt.replicas);
        const double var = std::max((1 - pt.p_hat) / (R * pt.p_hat), 1.0 / R) / (pt.N * pt.N);
        const double w = 1 / var, u = 1 / pt.N, y = *pt.rate;
        Sw += w;
        Su += w * u;
        Sy += w * y;
        Suu += w * u * u;
        Suy += w * u * y;
        ++used;
    }
    if (used == 1) {
        res.slope = Sy / Sw;
    } else if (used >= 2) {
        const double det = Sw * Suu - Su * Su;
        res.fit_b = (Sw * Suy - Su * Sy) / det;
        res.slope = (Sy - *res.fit_b * Su) / Sw;
    }
    return res;
}

McResult mc_log_prob(const ReactionNetwork& net, const McTarget& target, const std::vector<double>& Ns,
                     std::uint64_t replicas, std::uint64_t seed, unsigned jobs) {
    McResult res = mc_estimate(net, target, Ns, replicas, seed, jobs);
    if (res.censored == res.points.size())
        throw Error("AllCensored", "the event was never hit; use smaller N or a larger eps");
    return res;
}

}  // namespace msldp
