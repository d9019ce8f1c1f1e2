#pragma once

// Exponentially weighted L2 and Sobolev norms on the half line, the Plancherel
// identity for the forcing library, and the solvability-estimate report.

#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "vklab/forcing.hpp"
#include "vklab/solver.hpp"
#include "vklab/symbol.hpp"

namespace vklab {

/// Trapezoid rule with fourth-order Gregory end corrections on a uniform grid
/// (plain trapezoid below 8 samples).
double gregory_integral(std::span<const double> f, double h);

struct NormResult {
    double norm = 0.0;          ///< sqrt(integral)
    double integral = 0.0;      ///< int_0^T exp(-2 gamma t) (...) dt
    double tail_estimate = 0.0; ///< exp(-2 gamma T) max_{late t} (...) / (2 gamma)
    bool horizon_warning = false;  ///< tail_estimate > 1% of integral
};

/// (int_0^T exp(-2 gamma t) (||u''||^2 + ||A^2 u||^2) dt)^(1/2).
NormResult sobolev_norm(const Trajectory& traj, const OperatorSpectrum& spec, double gamma_w);

enum class Component { u, du, ddu };

/// (int_0^T exp(-2 gamma t) ||A^beta x(t)||^2 dt)^(1/2) for x = u, u' or u''.
NormResult weighted_l2_norm(const Trajectory& traj, const OperatorSpectrum& spec, double beta, double gamma_w,
                            Component which = Component::u);

/// Closed form over (0, inf) for library forcings, one per mode.
double weighted_l2_norm(const std::vector<Forcing>& f, const OperatorSpectrum& spec, double beta, double gamma_w);

/// Same quantity sampled on `grid` (uniform, starting at 0); used to cross-check the closed form.
NormResult weighted_l2_norm_sampled(const std::vector<Forcing>& f, const OperatorSpectrum& spec, double beta,
                                    double gamma_w, const std::vector<double>& grid);

struct PlancherelResult {
    double time_side = 0.0;       ///< int_0^inf exp(-2 gamma t) f^2 dt (closed form)
    double frequency_side = 0.0;  ///< int |f^(gamma + i y)|^2 dy over the span, f^ with 1/sqrt(2 pi)
    double gap = 0.0;             ///< |time - frequency| / time (absolute when time == 0)
    double tail_estimate = 0.0;   ///< estimated mass outside |y| <= y_span
    bool span_warning = false;    ///< tail_estimate > 1% of frequency_side
    bool sup_at_gamma = true;     ///< frequency side decreases in x on the probes gamma, gamma + 1, gamma + 2
};

/// y_span = inf integrates over the whole line.
PlancherelResult plancherel_check(const Forcing& f, double gamma_w,
                                  double y_span = std::numeric_limits<double>::infinity());

struct NormCheck {
    double lhs = 0.0, rhs = 0.0;
    bool pass() const { return lhs <= rhs; }
};

struct EstimateReport {
    int branch = 1;                   ///< 1: sum c_k finite certified; 2: otherwise
    double gamma = 0.0;
    double xi = 0.0;
    std::size_t modes = 0;
    NormResult lhs;                   ///< ||u||_{W^2_{2,gamma}(A^2)}
    double rhs_forcing = 0.0;         ///< ||A^(2-xi) f||_{L2,gamma}
    double rhs_phi0 = 0.0;            ///< ||A^2 phi0|| (branch 1) or ||A^(2+xi) phi0|| (branch 2)
    double rhs_phi1 = 0.0;            ///< ||A phi1|| or ||A^(1+xi) phi1||
    double rhs_sum = 0.0;
    std::optional<double> empirical_d;   ///< lhs / rhs_sum
    bool homogeneous = false;
    TheoreticalBound bound;
    double d1 = 0.0, d2 = 0.0;
    NormCheck d1_check;               ///< ||A^2 u|| vs d1 ||A^(2-xi) f||
    NormCheck d2_check;               ///< ||u''|| vs d2 ||A^(2-xi) f||
};

/// Branch from the kernel's certificate unless forced. RegimeError for branch 2 with xi = 0.
EstimateReport verify_estimate(const Problem& p, const Trajectory& traj, std::optional<int> branch = std::nullopt);

void write_estimate_json(std::ostream& os, const EstimateReport& r);
/// quantity, lhs, rhs, pass
void write_estimate_csv(std::ostream& os, const EstimateReport& r);

}  // namespace vklab
