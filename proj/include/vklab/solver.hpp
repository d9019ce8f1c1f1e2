#pragma once

// Mode-by-mode time integration of u'' + a^2 u - a^(2 xi) int K(t-s) u(s) ds = f
// through the auxiliary states w_k' = u - gamma_k w_k, plus the residue oracle.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vklab/forcing.hpp"
#include "vklab/kernel.hpp"
#include "vklab/spectral_operator.hpp"
#include "vklab/spectrum.hpp"

namespace vklab {

/// gamma_1 + 1 for a nonempty kernel, else 1.
double default_gamma_w(const PronyKernel& kernel);

struct Problem {
    /// gamma_w starts at default_gamma_w(kernel).
    Problem(PronyKernel kernel, OperatorSpectrum spec, double xi);

    PronyKernel kernel;
    OperatorSpectrum spec;
    double xi = 0.0;
    ModeVector phi0, phi1;           ///< real coordinates; empty means zero
    std::vector<Forcing> forcing;    ///< one per mode; empty means f = 0
    double gamma_w = 1.0;
    std::optional<double> horizon;   ///< T; chosen adaptively when unset
    double samples_per_period = 40;  ///< output samples per 2 pi / a_M
    double tol_ode = 1e-9;
    double max_horizon = 400.0;      ///< cap for the adaptive horizon
    unsigned threads = 1;

    /// Throws InvalidInput for inconsistent sizes, complex data, gamma_w <= 0, bad tolerances.
    void validate() const;
    std::size_t modes() const { return spec.size(); }
    double phi0_at(std::size_t i) const;
    double phi1_at(std::size_t i) const;
    const Forcing& forcing_at(std::size_t i) const;
};

/// Per-mode integrator counters.
struct SolveStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t exponential_steps = 0;  ///< steps taken with exact w propagation
    double min_step = 0.0;
};

/// Solution of one mode on a time grid.
struct ModeTrajectory {
    std::vector<double> u, du, ddu;
    std::vector<std::vector<double>> w;  ///< [k][i]
};

struct Trajectory {
    std::vector<double> t;
    std::vector<double> a;               ///< eigenvalues of the solved modes
    double xi = 0.0;
    std::size_t N = 0;
    std::vector<ModeTrajectory> modes;
    std::vector<SolveStats> stats;       ///< empty for oracle trajectories
    bool horizon_capped = false;         ///< adaptive horizon stopped at max_horizon

    std::size_t M() const { return modes.size(); }
    std::size_t size() const { return t.size(); }
};

/// Uniform grid 0 = t_0 < ... covering [0, T] with spacing at most dt.
std::vector<double> uniform_grid(double T, double dt);

/// Output spacing 2 pi / (samples_per_period a_M).
double output_spacing(const Problem& p);

/// Adaptive explicit integration of every mode. DOP853 with embedded 5th/3rd order
/// error control; when gamma_N h exceeds 0.5 the step switches to an exponential
/// RK4 (exact exp(-gamma_k h) propagation of w) with step-doubling error control.
/// StiffnessFailure on step underflow.
Trajectory integrate(const Problem& p);

/// Same, on a caller-supplied grid starting at 0.
Trajectory integrate(const Problem& p, const std::vector<double>& grid);

/// Residue-sum solution of mode i (0-based) on `times`. Symbol zeros come from the
/// spectrum module. OracleUnavailable when two poles lie within 1e-6 a of each other.
ModeTrajectory residue_solution(const Problem& p, std::size_t i, const std::vector<double>& times,
                                const RootOptions& opt = {});

/// All modes on `times`.
Trajectory residue_solution(const Problem& p, const std::vector<double>& times, const RootOptions& opt = {});

/// int_0^t exp(-gamma (t-s)) cos(a s) ds.
double conv_cos(double gamma, double a, double t);
/// int_0^t exp(-gamma (t-s)) sin(a s) ds.
double conv_sin(double gamma, double a, double t);

/// h_n(t) = sum_k c_k [a^(2 xi) conv_cos phi0_n + a^(2 xi - 1) conv_sin phi1_n].
ModeVector h_forcing(const PronyKernel& kernel, const OperatorSpectrum& spec, double xi, const ModeVector& phi0,
                     const ModeVector& phi1, double t);

/// h_n as library terms (cos, sin and exp(-gamma_k t) pieces), one Forcing per mode.
std::vector<Forcing> h_forcing_terms(const PronyKernel& kernel, const OperatorSpectrum& spec, double xi,
                                     const ModeVector& phi0, const ModeVector& phi1);

/// u = v + omega with v = cos(A t) phi0 + A^-1 sin(A t) phi1; omega solves the
/// homogeneous-IC problem with forcing f + h.
struct IcShift {
    Problem shifted;
    std::vector<double> a, phi0, phi1;
    std::vector<double> gammas;

    double v(std::size_t i, double t) const;
    double dv(std::size_t i, double t) const;
    double ddv(std::size_t i, double t) const;
    /// w-states of v: int_0^t exp(-gamma_k (t-s)) v(s) ds.
    double wv(std::size_t i, std::size_t k, double t) const;
    /// Adds the free part to an omega trajectory.
    Trajectory recombine(const Trajectory& omega) const;
};

IcShift ic_shift(const Problem& p);

struct ResidualReport {
    std::vector<double> residual;  ///< per mode, max_i |r_n(t_i)|
    std::vector<double> scale;     ///< per mode, a_n^2 max_i |u_n(t_i)|
    double max_relative() const;   ///< max residual/scale (0/0 counted as 0)
};

ResidualReport equation_residual(const Trajectory& traj, const Problem& p);

/// Rows t, n, u, du, ddu with 17 significant digits; n is 1-based.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

/// Little-endian binary dump: "VKTR", uint32 version, uint64 M, N, grid size, then
/// t, and per mode u, du, ddu, w_1..w_N as binary64 arrays.
void write_trajectory_binary(std::ostream& os, const Trajectory& traj);
Trajectory read_trajectory_binary(std::istream& is);

}  // namespace vklab
