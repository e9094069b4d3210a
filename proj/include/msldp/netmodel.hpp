#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "msldp/expr.hpp"
#include "msldp/rational.hpp"

namespace msldp {

enum class SpeciesKind { Unspecified, Slow, Fast };

struct Species {
    std::string name;
    Rational scale;  ///< alpha: the amount is of order N^alpha
    SpeciesKind kind = SpeciesKind::Unspecified;
};

/// Mass-action rate kappa(z) * prod_i f_i(z_i)^{nu'_i} with rate exponent beta.
/// kappa is an expression over species indices (constant for plain mass action).
struct RateLaw {
    expr::Expr constant;
    Rational rate_exponent;
    std::map<int, double> caps;  ///< species -> truncation level M' applied to that factor
};

struct Reaction {
    std::string name;
    std::map<int, int> inputs;        ///< active species -> nu'
    std::map<int, int> outputs;       ///< active species -> nu
    std::vector<int> rate_excluded;   ///< inputs consumed without entering the rate, written "(S)"
    std::map<int, int> passive_outputs;  ///< passive species -> count produced
    RateLaw rate;

    /// zeta_k over active species.
    std::vector<int> net_change(std::size_t n_species) const;
};

struct ConservationLaw {
    std::vector<std::int64_t> weights;  ///< per active species, nonnegative
    std::optional<double> total;        ///< from init values, if available
    bool pairwise = false;              ///< exactly two nonzero weights
};

class ReactionNetwork {
public:
    std::vector<Species> species;   ///< active species (each is an input somewhere)
    std::vector<Species> passive;   ///< species that never appear as inputs
    std::vector<Reaction> reactions;
    std::vector<ConservationLaw> conservation_laws;  ///< declared or detected
    std::vector<std::optional<double>> init;          ///< per active species (scaled units)
    std::vector<std::optional<double>> passive_init;

    int species_index(const std::string& name) const;  ///< -1 when absent
    std::size_t n_species() const { return species.size(); }

    /// Stoichiometric matrix: rows species, columns reactions.
    std::vector<std::vector<int>> stoichiometry() const;

    /// Deterministic rate at scaled amounts z (active species). Species with
    /// alpha = 0 use falling factorials of their counts.
    double rate(std::size_t k, std::span<const double> z) const;
};

/// Parses DSL text. Throws Error with kinds SyntaxError, UnknownSpecies,
/// NonPositiveRate, DuplicateSpecies, ZeroNetChange.
ReactionNetwork parse_network(const std::string& text);

/// Canonical DSL text; parse_network(serialize_network(n)) reproduces n.
std::string serialize_network(const ReactionNetwork& net);

/// Nonnegative integer generating set of {theta >= 0 : theta . zeta_k = 0 for all k}.
std::vector<ConservationLaw> detect_conservation_laws(const ReactionNetwork& net);

struct RateReport {
    std::string reaction;
    int degree = 0;       ///< total polynomial degree of the rate in species amounts
    int fast_degree = 0;  ///< degree in fast species (conservation-eliminated species count as fast)
};

struct ValidationReport {
    std::vector<std::string> dropped_passive;
    std::vector<RateReport> rates;
    bool linear_in_fast = true;
    std::vector<std::string> flags;  ///< e.g. "r1: bimolecular in fast species"
};

ValidationReport validate_network(const ReactionNetwork& net);

/// True when two networks have identical structure (species, scales, kinds,
/// stoichiometry, rate expressions, exponents, caps, laws, init values).
bool same_structure(const ReactionNetwork& a, const ReactionNetwork& b);

/// Species name lookup function for expressions over species indices.
std::string species_symbol(const ReactionNetwork& net, int index);

}  // namespace msldp
