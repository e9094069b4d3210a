#pragma once

#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "msldp/expr.hpp"
#include "msldp/scaling.hpp"

namespace msldp {

/// Index sets of the conversion structure, over active species indices.
struct EVPStructure {
    std::vector<int> theta;              ///< per reaction: fast species entering the rate linearly, -1 for none
    std::set<int> I, J, I_c, J_c;
    std::map<int, std::set<int>> I_j;
    std::vector<std::pair<int, int>> conserved_pairs;
    std::map<int, std::string> option;   ///< j in J -> "i", "ii", "iii" (joined with '+') or "vacuous"
};

/// Errors: NonlinearFastRate, UnsupportedJumpSize, NoValidOption.
EVPStructure check_structure(const ScaledSystem& sys);

/// Symbolic rates lambda_k = c0_k(x) + sum_j c_kj(x) y_j in the reduced fast
/// coordinates. Variables are laid out [x..., p...].
struct EVPCoefficients {
    std::vector<expr::Expr> c0;
    std::vector<std::vector<expr::Expr>> c;  ///< [reaction][fast coordinate]
};
EVPCoefficients assemble_coefficients(const EVPStructure& st, const ScaledSystem& sys);

/// One solved equation: the y_coord coefficient, solved for one unknown.
/// Discrete unknowns satisfy A z^2 + B z + C = 0, continuous ones B u + C = 0.
struct EVPStep {
    std::size_t coord = 0;
    std::size_t unknown = 0;
    bool continuous = false;
    bool linear = false;  ///< A vanishes identically
    expr::Expr A, B, C;
};

struct EVPSolution {
    std::vector<expr::Expr> z;  ///< per fast coordinate (1 for continuous)
    std::vector<expr::Expr> u;  ///< per fast coordinate (0 for discrete)
    expr::Expr H;
    std::vector<EVPStep> steps;
    std::size_t certified_points = 0;
};

struct EVPOptions {
    double x_lo = 0.1, x_hi = 5.0, p_lo = -2.0, p_hi = 2.0;
    int grid = 7;  ///< certification points per coordinate
};

/// Errors: structure errors, NoPositiveRoot, TwoPositiveRoots, TwoRegimes,
/// SingularLinearSystem, Underdetermined.
EVPSolution solve_evp(const ScaledSystem& sys, const EVPOptions& opt = {});

/// max over fast states of |sum_k lambda_k F_k - H| for the solved eigenfunction.
double eigen_identity_residual(const ScaledSystem& sys, const EVPSolution& sol, std::span<const double> x,
                               std::span<const double> p, int y_max);

/// H(x,p) with symbolic derivatives. Variables [x..., p...].
class Hamiltonian {
public:
    Hamiltonian() = default;
    Hamiltonian(expr::Expr H, std::size_t dim, std::vector<std::string> names = {});

    std::size_t dim() const { return d_; }
    double value(std::span<const double> x, std::span<const double> p) const;
    std::vector<double> grad_p(std::span<const double> x, std::span<const double> p) const;
    std::vector<double> grad_x(std::span<const double> x, std::span<const double> p) const;
    std::vector<std::vector<double>> hess_p(std::span<const double> x, std::span<const double> p) const;
    const expr::Expr& expression() const { return H_; }
    std::string to_string() const;

private:
    std::vector<double> pack(std::span<const double> x, std::span<const double> p) const;
    expr::Expr H_;
    std::size_t d_ = 0;
    std::vector<std::string> names_;
    std::vector<expr::Expr> gp_, gx_;
    std::vector<std::vector<expr::Expr>> hp_;
};

Hamiltonian hamiltonian(const ScaledSystem& sys, const EVPOptions& opt = {});

/// Closed-form Hamiltonians for the bundled models (test oracles only).
struct Oracles {
    struct MM { double k0 = 1, k1 = 1, k2 = 1, k3 = 1, M = 2; };
    struct DR { double k0 = 1, k1 = 1, k2 = 1, k3 = 1, k4 = 1; };
    struct VP { double k1 = 1, k2 = 1, k4 = 1, k6 = 1; };
    struct SRG {
        std::function<double(double)> k1 = [](double) { return 1.0; };
        std::function<double(double)> k2 = [](double) { return 1.0; };
        double k3 = 1, k4 = 1, k5 = 1, k6 = 1;
    };
    static double mm(const MM& c, double x, double p);
    static double dr(const DR& c, double x, double p);
    static double vp(const VP& c, double x, double p);
    static double srg(const SRG& c, double x1, double x2, double p1, double p2);
};

}  // namespace msldp
