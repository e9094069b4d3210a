#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "msldp/scaling.hpp"

namespace msldp {

/// Discrete fast states: the box [0, y_max]^d cut by the conservation slices.
/// Continuous fast coordinates are not enumerated.
struct FastStateSpace {
    std::vector<std::size_t> discrete;       ///< fast coordinates that are enumerated
    std::vector<std::vector<int>> states;    ///< values of the discrete coordinates
    std::map<std::vector<int>, std::size_t> index;
    int y_max = 0;

    std::size_t size() const { return states.size(); }
    /// Full fast coordinate vector (continuous coordinates filled with `cont`).
    std::vector<double> fast_vector(std::size_t s, std::size_t dy, double cont = 0.0) const;
};

/// Errors: EmptySpace.
FastStateSpace make_fast_space(const ScaledSystem& sys, int y_max);

struct FastOperator {
    Eigen::VectorXd V;                      ///< potential per state
    Eigen::SparseMatrix<double, Eigen::RowMajor> Q;  ///< perturbed jump generator
    std::vector<std::vector<double>> drift; ///< flow on continuous coordinates, per state
};

/// Errors: EmptySpace, NonFiniteRate, ContinuousDependence (a jump rate that
/// depends on a continuous fast species cannot be assembled on this space).
FastOperator build_fast_operator(const ScaledSystem& sys, std::span<const double> x, std::span<const double> p,
                                 const FastStateSpace& space);

struct StationaryDist {
    Eigen::VectorXd pi;
    double residual = 0;  ///< max |pi Q|
};

/// Errors: Reducible.
StationaryDist stationary_distribution(const FastOperator& op);

struct Irreducibility {
    bool irreducible = true;
    std::vector<std::vector<std::size_t>> components;  ///< strongly connected components
};
Irreducibility check_irreducibility(const FastOperator& op);

/// Averaged slow drift at x, using the stationary law of the fast process.
std::vector<double> effective_drift(const ScaledSystem& sys, std::span<const double> x, const FastStateSpace& space);

struct LLNOptions {
    double tol = 1e-8;         ///< sup-norm agreement between successive step halvings
    double blowup = 1e6;       ///< |x| bound
    int max_halvings = 14;
};

struct LLNTrajectory {
    std::vector<double> t;
    std::vector<std::vector<double>> x;
    double dt_used = 0;
};

/// Classical RK4 on the field `b`, halving the step until two refinements agree.
/// Errors: BlowUp, NonConvergence.
LLNTrajectory integrate_lln(const std::function<std::vector<double>(std::span<const double>)>& b,
                            std::span<const double> x0, double T, double dt, const LLNOptions& opt = {});
LLNTrajectory integrate_lln(const ScaledSystem& sys, std::span<const double> x0, double T, double dt,
                            const FastStateSpace& space, const LLNOptions& opt = {});

struct PerronResult {
    double lambda = 0;
    Eigen::VectorXd eigenvector;  ///< positive, max entry 1
    double residual = 0;          ///< |(diag V + Q) v - lambda v|_inf / |v|_inf
    std::size_t iterations = 0;
    bool dense = false;
};

struct PerronOptions {
    double rel_tol = 1e-10;
    std::size_t max_iter = 2000000;
    std::size_t dense_below = 2000;
};

/// Principal eigenvalue of diag(V) + Q. Errors: Reducible, NoConvergence.
PerronResult principal_eigenvalue_numeric(const ScaledSystem& sys, std::span<const double> x,
                                          std::span<const double> p, const FastStateSpace& space,
                                          const PerronOptions& opt = {});
PerronResult principal_eigenvalue(const FastOperator& op, const PerronOptions& opt = {});

}  // namespace msldp
