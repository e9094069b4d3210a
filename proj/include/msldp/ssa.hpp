#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "msldp/netmodel.hpp"

namespace msldp {

/// Counter-based generator: output i of stream `key` is a SplitMix64
/// finalization of (key, i). Streams for replicas are keyed by seed ^ r.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t key) : key_(mix(key ^ 0x9E3779B97F4A7C15ULL)) {}
    std::uint64_t next() { return mix(key_ + mix(++ctr_)); }
    /// Uniform on (0, 1).
    double uniform() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t key_;
    std::uint64_t ctr_ = 0;
};

struct SimConfig {
    double N = 100;
    double T = 1;
    std::vector<double> z0;          ///< per active species, scaled units (empty: network init)
    std::vector<double> passive0;    ///< per passive species (empty: network init or 0)
    std::uint64_t seed = 12345;
    std::vector<double> record;      ///< times at which the state is recorded
    double rate_cap = 1e12;
    bool keep_jumps = true;
};

struct Trajectory {
    double N = 0;
    std::vector<double> scale;                  ///< N^{alpha} per species (active then passive)
    std::vector<std::int64_t> initial;          ///< counts, active then passive
    std::vector<std::vector<std::int64_t>> change;  ///< per reaction
    std::vector<double> jump_times;
    std::vector<std::uint32_t> jump_reactions;
    std::vector<double> record_times;
    std::vector<std::vector<std::int64_t>> recorded;
    std::vector<std::uint64_t> jump_counts;     ///< per reaction
    std::vector<std::int64_t> final_counts;
    double T = 0;

    std::vector<double> scaled(const std::vector<std::int64_t>& counts) const;
};

/// Direct-method simulation of the chain with rates N^beta lambda(N^{-alpha} n).
/// Errors: RateOverflow, NegativeState.
Trajectory simulate(const ReactionNetwork& net, const SimConfig& cfg);

struct OccupationMeasure {
    std::vector<double> edges;               ///< interval boundaries in time
    std::vector<std::vector<double>> mass;   ///< [interval][cell]
    std::vector<double> total() const;       ///< summed over intervals
};

/// Sojourn time of the replayed path in each cell. `cell` maps full counts to a
/// cell index in [0, cells) or -1 (ignored).
OccupationMeasure occupation_measure(const Trajectory& traj, std::size_t cells,
                                     const std::function<int(const std::vector<std::int64_t>&)>& cell,
                                     const std::vector<double>& edges);

struct McTarget {
    std::vector<int> species;    ///< active species constrained by the ball
    std::vector<double> center;
    double eps = 0.1;
    double T = 1;
    std::vector<double> z0;      ///< empty: network init
};

struct McPoint {
    double N = 0;
    std::uint64_t hits = 0, replicas = 0;
    double p_hat = 0, ci_lo = 0, ci_hi = 0;    ///< Wilson 95% interval
    std::optional<double> rate;                ///< -(1/N) log p_hat, absent when censored
    std::optional<double> rate_lo, rate_hi;
};

struct McResult {
    std::vector<McPoint> points;
    std::optional<double> slope;   ///< intercept of the weighted fit rate = a + b/N
    std::optional<double> fit_b;
    std::size_t censored = 0;
};

/// Direct sampling. Replica r of scale N uses stream seed ^ (N-index << 40) ^ r.
McResult mc_estimate(const ReactionNetwork& net, const McTarget& target, const std::vector<double>& Ns,
                     std::uint64_t replicas, std::uint64_t seed, unsigned jobs = 1);
/// As mc_estimate. Errors: AllCensored.
McResult mc_log_prob(const ReactionNetwork& net, const McTarget& target, const std::vector<double>& Ns,
                     std::uint64_t replicas, std::uint64_t seed, unsigned jobs = 1);

}  // namespace msldp
