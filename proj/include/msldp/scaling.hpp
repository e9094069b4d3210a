#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "msldp/netmodel.hpp"

namespace msldp {

enum class FastKind { Discrete, Continuous };

/// Time-scale tag of a reaction after normalizing by the speed exponent.
enum class Timescale {
    Slow,  ///< beta < s: no effective change in the limit
    Jump,  ///< beta = s: jump term of the fast generator
    Flow,  ///< beta > s: flow term on continuous fast species
};

/// A fast species removed through a conservation law: its amount is
/// (total - sum of the other weighted amounts) / weight.
struct Elimination {
    int species = -1;
    std::size_t law = 0;
    std::vector<std::int64_t> weights;
    double total = 0;
};

struct ThresholdPolicy {
    bool allow_no_fast = false;  ///< accept single-scale networks such as a pure birth process
};

struct ScaledSystem {
    ReactionNetwork net;
    Rational speed;                   ///< s, in the original exponent units
    std::vector<Rational> alpha;      ///< per active species, divided by s
    std::vector<Rational> beta;       ///< per reaction, divided by s
    std::vector<int> slow;            ///< species index of each slow coordinate
    std::vector<int> fast;            ///< species index of each fast coordinate
    std::vector<FastKind> fast_kind;  ///< per fast coordinate
    std::vector<Elimination> eliminated;
    std::vector<std::vector<int>> zeta_x;  ///< [reaction][slow coordinate]
    std::vector<std::vector<int>> zeta_y;  ///< [reaction][fast coordinate]
    std::vector<Timescale> tag;            ///< per reaction

    std::size_t dx() const { return slow.size(); }
    std::size_t dy() const { return fast.size(); }

    /// Amounts of all active species from slow and fast coordinates.
    std::vector<double> full_state(std::span<const double> x, std::span<const double> y) const;
    double rate(std::size_t k, std::span<const double> x, std::span<const double> y) const;

    std::string slow_name(std::size_t i) const { return net.species[static_cast<std::size_t>(slow[i])].name; }
    std::string fast_name(std::size_t j) const { return net.species[static_cast<std::size_t>(fast[j])].name; }
    /// -1 when the species is not a slow coordinate.
    int slow_coord(int species) const;
    int fast_coord(int species) const;
};

/// Classifies species, normalizes exponents by the speed s and computes the
/// effective changes. Errors: ScalingViolation, NoSlowSpecies, NoFastSpecies.
ScaledSystem classify(const ReactionNetwork& net, ThresholdPolicy policy = {});

struct EffectiveChanges {
    std::vector<std::vector<int>> zeta_x;
    std::vector<std::vector<int>> zeta_y;
};
EffectiveChanges effective_changes(const ScaledSystem& sys);

struct GrowthBox {
    std::vector<double> x_lo, x_hi;  ///< slow box
    int y_max = 20;                  ///< bound for each discrete fast coordinate
};

struct GrowthReport {
    double b0_bound = 0, b1_bound = 0, c_bound = 0;  ///< sup over the grid
    double b0_lip = 0, b1_lip = 0, c_lip = 0;        ///< finite-difference Lipschitz estimates
    bool b0_global = true, b1_global = true, c_global = true;
    std::size_t samples = 0;
};
GrowthReport check_growth(const ScaledSystem& sys, const GrowthBox& box);

enum class BinaryCase { Conservation, SlowFactor, Unbounded };

struct BinaryVerdict {
    std::string reaction;
    std::size_t index = 0;
    BinaryCase verdict = BinaryCase::Unbounded;
    int factor = -1;  ///< bounded factor species
};

/// Verdict for each reaction whose rate has degree >= 2 in species amounts.
std::vector<BinaryVerdict> check_binary_bound(const ReactionNetwork& net, const ScaledSystem& sys);

struct TruncationResult {
    ReactionNetwork net;
    double level = 0;
    std::vector<std::string> affected;
    std::vector<std::string> warnings;  ///< e.g. TruncationBelowConservedTotal
    std::string bound_shape;
};

/// Caps the bounded factor of each quadratic rate at M'. Errors: UnboundedRate.
TruncationResult truncate(const ReactionNetwork& net, double level);

std::string to_string(BinaryCase c);

}  // namespace msldp
