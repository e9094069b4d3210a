#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "msldp/scaling.hpp"

namespace msldp {

/// phi(y) = sum_j a_j y_j at a fixed (x, p).
struct LinearAnsatz {
    std::vector<double> a;  ///< per fast coordinate
    double c = 0;
    double d = 0;
};

/// Chooses a so that the y-linear part of e^{-phi} L e^{phi} + c|V| vanishes,
/// bounding |V| by |V_0| + sum |V_j| y_j. Errors: NoValidCoefficient.
LinearAnsatz solve_linear_ansatz(const ScaledSystem& sys, std::span<const double> x, std::span<const double> p, double c);

using PhiFn = std::function<double(std::span<const double> x, std::span<const double> p, std::span<const double> y)>;
using OffsetFn = std::function<double(std::span<const double> x, std::span<const double> p)>;

struct LyapunovCandidate {
    PhiFn phi;
    OffsetFn d;
    double c = 1.5;
};

/// phi_{x,p} from solve_linear_ansatz at every (x, p).
LyapunovCandidate linear_candidate(const ScaledSystem& sys, double c);
/// phi = 0 with d = c max|V| over the fast box (compact fast spaces).
LyapunovCandidate zero_candidate(const ScaledSystem& sys, double c, int y_max);

struct LyapunovGrid {
    std::vector<std::vector<double>> x;
    std::vector<std::vector<double>> p;
    int y_max = 50;
    std::vector<double> cont = {0.0, 1.0, 5.0, 25.0};  ///< values for continuous fast coordinates
};

enum class LyapunovCondition { Uniform, Tilted };  ///< level-set form, and the per-(x,p) form

struct LyapunovReport {
    std::string condition;
    double max_violation = 0;  ///< Tilted: max of lhs - rhs
    double max_violation_built = 0;  ///< same, restricted to points where the candidate exists
    std::string worst_point;
    std::size_t points = 0;
    bool compact_space = false;
    std::vector<std::string> errors;   ///< (x,p) points where the candidate could not be built
    std::vector<double> level_extent;  ///< Uniform: max |y| in each sublevel set
    bool pass = false;
};

/// Pointwise check over the grid product; report only.
LyapunovReport verify_condition(const ScaledSystem& sys, const LyapunovCandidate& cand, const LyapunovGrid& grid,
                                LyapunovCondition which);

/// e^{-phi} L_1^{x,p} e^{phi}(y) and V(y; x, p) at one point.
double tilted_generator(const ScaledSystem& sys, const PhiFn& phi, std::span<const double> x, std::span<const double> p,
                        std::span<const double> y);
double potential(const ScaledSystem& sys, std::span<const double> x, std::span<const double> p, std::span<const double> y);

}  // namespace msldp
