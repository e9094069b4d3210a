#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "msldp/evp.hpp"

namespace msldp {

struct LegendreOptions {
    double tol = 1e-12;     ///< on |v - grad_p H|
    double p_bound = 40.0;  ///< |p| beyond this is reported as NotCoercive
    int max_iter = 200;
};

struct LegendreResult {
    double L = 0;
    std::vector<double> p;  ///< maximizer
    int iterations = 0;
};

/// L(x,v) = sup_p (p.v - H(x,p)) by damped Newton. Errors: NotCoercive.
LegendreResult legendre(const Hamiltonian& H, std::span<const double> x, std::span<const double> v,
                        const LegendreOptions& opt = {});

using DriftFn = std::function<std::vector<double>(std::span<const double>)>;

struct ActionOptions {
    std::size_t K = 16;         ///< initial number of segments (>= 8)
    std::size_t K_max = 256;
    double rel_tol = 1e-4;      ///< K doubling stops when the action changes less than this
    double grad_tol = 1e-9;
    int max_iter = 2000;
    DriftFn drift;              ///< optional LLN field for a second start
    LegendreOptions legendre;
};

struct ActionResult {
    double action = 0;
    std::vector<std::vector<double>> path;  ///< K + 1 nodes
    std::size_t K = 0;
    std::vector<double> history;            ///< action per K
    int iterations = 0;
    bool converged = false;
};

/// Action of the piecewise-linear path, three Gauss points per segment.
double path_action(const Hamiltonian& H, const std::vector<std::vector<double>>& path, double T,
                   const LegendreOptions& opt = {});

/// Minimizes the discrete action over interior nodes (L-BFGS, multi-start,
/// K doubling). Errors: NonConvergence, DomainError.
ActionResult minimize_action(const Hamiltonian& H, std::span<const double> x0, std::span<const double> x1, double T,
                             const ActionOptions& opt = {});

struct HJBGrid {
    double x_lo = 0, x_hi = 1;
    std::size_t n = 400;
    double dt = 0;    ///< 0: chosen from the CFL bound
    double cfl = 0.9;
};

struct HJBResult {
    std::vector<double> x;
    std::vector<double> t;                 ///< snapshot times
    std::vector<std::vector<double>> u;    ///< u at snapshot times
    double dt = 0, alpha = 0;
    std::size_t steps = 0;

    double at(double t_query, double x_query) const;  ///< linear interpolation in x at the nearest snapshot
};

/// Explicit Lax-Friedrichs scheme for u_t = H(x, u_x), u(0) = f, on one slow
/// dimension. Errors: CFLViolation, NonFiniteValue, DomainError.
HJBResult hjb_solve(const Hamiltonian& H, const std::function<double(double)>& f, const HJBGrid& grid, double T,
                    std::size_t snapshots = 1);

/// sup_x {f(x) - I(x, x0, T)} over [lo, hi] by golden section, with I from minimize_action.
struct DualResult {
    double value = 0;
    double argmax = 0;
    double action = 0;
    std::size_t evaluations = 0;
};
DualResult dual_value(const Hamiltonian& H, const std::function<double(double)>& f, double x0, double T, double lo,
                      double hi, const ActionOptions& opt = {});

struct ComparisonRegion {
    std::vector<double> x_lo, x_hi;
    int samples = 9;  ///< per slow coordinate
    std::uint64_t seed = 2024;
};

struct ComparisonReport {
    struct Coercivity {
        double radius = 0;
        double min_ratio = 0;  ///< min over x and directions of H/|p|
    };
    std::vector<Coercivity> coercivity;
    bool coercive = false;

    struct H2Sample {
        double delta = 0;     ///< both arguments below this
        double max_lhs = 0;   ///< max |lhs| among such samples
        std::size_t count = 0;
    };
    std::vector<H2Sample> h2;
    bool h2_vanishes = false;

    double min_hess_eig = 0;                 ///< (a)
    bool a_pass = false;
    bool b_pass = false;                     ///< (b) superlinear growth
    double min_legendre_gap = 0;             ///< (c) min of p.H_p - H
    bool c_pass = false;
    double c1 = 0;                           ///< (d) sup |H(x,0)|
    double min_H = 0;                        ///< (d) sampled inf of H
    bool d_pass = false;
    double c2 = 0, c3 = 0;                   ///< (e) fitted constants
    std::vector<std::pair<double, double>> p_for_grad;  ///< (e) R -> max |p| with |H_p| <= R
    bool e_pass = false;
    std::size_t samples = 0;
    std::string verdict = "audit";
};

/// Sampled checks of the comparison-principle conditions; report only.
ComparisonReport check_comparison_conditions(const Hamiltonian& H, const ComparisonRegion& region);

struct RateRow {
    std::vector<double> target;
    double I = 0;
    std::size_t K = 0;
};
std::vector<RateRow> rate_function(const Hamiltonian& H, std::span<const double> x0, double T,
                                   const std::vector<std::vector<double>>& targets, const ActionOptions& opt = {});

}  // namespace msldp
