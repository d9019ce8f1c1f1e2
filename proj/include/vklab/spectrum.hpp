#pragma once

// Zeros of the truncated symbol: N real zeros bracketed between the poles, the
// companion zeros of f_{n,N}, and the complex-conjugate pair near +-i a_n.

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "vklab/kernel.hpp"
#include "vklab/symbol.hpp"

namespace vklab {

struct RootOptions {
    double tol_root = 1e-12;   ///< residual tolerance relative to the local symbol scale
    double pole_eps = 1e-9;    ///< initial endpoint offset, relative to the interval length
    int max_iter = 200;
    /// Kernels up to this size get the pair from deflation of the real zeros;
    /// larger ones start Newton from the asymptotic prediction.
    std::size_t deflation_max_N = 256;
    std::size_t companion_max_N = 60;  ///< companion-matrix fallback limit
};

/// A real zero located in (-gamma_k, -gamma_{k-1}), gamma_0 = 0. The value is held
/// as an offset from the nearer end of the interval so that zeros pressed against
/// a pole keep full relative precision.
struct RealRoot {
    std::size_t k = 0;         ///< 1-based interval index
    double value = 0.0;        ///< zeta
    std::size_t anchor = 0;    ///< value = -gamma_anchor + offset (gamma_0 = 0); anchor is k or k-1
    double offset = 0.0;
    double bracket_lo = 0.0;   ///< -gamma_k
    double bracket_hi = 0.0;   ///< -gamma_{k-1}
    double residual = 0.0;     ///< |l(mu)| or |f(x)|
    double scale = 0.0;        ///< a^2 + mu^2 (symbol) or 1 (companion function)
    double derivative = 0.0;   ///< |d/dz| at the root
    bool simple = true;        ///< derivative clearly nonzero
    int iterations = 0;
    /// mu + gamma_k, accurate even when tiny.
    double pole_offset(std::span<const KernelTerm> terms) const;
};

struct ComplexPair {
    cplx plus{};               ///< Im > 0; the other zero is conj(plus)
    cplx delta{};              ///< plus - i a, solved for directly (full relative precision)
    double residual = 0.0;     ///< |l(plus)|, equal to |l(conj plus)|
    int iterations = 0;
    bool from_companion = false;
    std::string start;         ///< "harmonic", "deflation", "asymptotic" or "companion"
};

struct VietaCheck {
    /// |sum (mu_k + gamma_k) + 2 Re mu+| / (sum |mu_k + gamma_k| + 2 |Re mu+|)
    double sum_rel = 0.0;
    /// |(|mu+|^2 prod(-mu_k)) / (prod gamma_k (a^2 - a^(2 xi) sum c/gamma)) - 1|
    double product_rel = 0.0;
    std::size_t zero_count = 0;  ///< real zeros + 2
};

struct SpectrumResult {
    std::size_t n = 0;  ///< 1-based mode index (0 when unspecified)
    double a = 0.0, xi = 0.0;
    std::size_t N = 0;
    std::vector<RealRoot> real_zeros;
    std::vector<RealRoot> companion_zeros;
    ComplexPair pair;
    VietaCheck vieta;
};

/// One zero of l_{n,N} per interval, k = 1..N. BracketingFailure when an interval
/// shows no sign change, ConvergenceFailure when the iteration stalls.
std::vector<RealRoot> find_real_zeros(const SymbolContext& ctx, const RootOptions& opt = {});

/// One zero of f_{n,N} per interval, k = 1..N.
std::vector<RealRoot> find_companion_zeros(const SymbolContext& ctx, const RootOptions& opt = {});

/// Newton on l_{n,N}; start from deflation of `real_zeros` when given, else from the
/// asymptotic prediction; companion-matrix fallback for small N.
ComplexPair find_complex_pair(const SymbolContext& ctx, const std::vector<RealRoot>* real_zeros = nullptr,
                              const RootOptions& opt = {});

VietaCheck vieta_check(const SymbolContext& ctx, const std::vector<RealRoot>& real_zeros, const ComplexPair& pair);

/// All of the above for one mode.
SpectrumResult compute_spectrum(const SymbolContext& ctx, std::size_t n = 0, const RootOptions& opt = {});

/// Every root of the cleared polynomial by the companion matrix in long double.
std::vector<std::complex<long double>> companion_matrix_roots(const SymbolContext& ctx);

// ---- asymptotics ---------------------------------------------------------

enum class PairRegime { xi_below_half, xi_half, xi_above_half, r_below_half, r_half_to_one, r_one };

struct AsymptoticPrediction {
    cplx value{};                ///< predicted mu+
    cplx delta{};                ///< predicted mu+ - i a
    PairRegime regime{};
    /// Orders of the remainder terms: Re error O(a^-re_order), Im error O(a^-im_order).
    double re_order = 0.0;
    double im_order = 0.0;
    /// Size of the stated remainder terms at this a (a^-re_order, a^-im_order).
    double re_correction = 0.0;
    double im_correction = 0.0;
    /// Infinite-kernel case, r < 1: the value with the signs printed in the source
    /// formula (positive real part), kept for comparison.
    std::optional<cplx> literal_value;
    std::optional<cplx> D;       ///< D(r) for r < 1
};

const char* to_string(PairRegime r);

/// Leading-order pair for a finite kernel: -1/2 a^(-2(1-xi)) sum c + i a.
AsymptoticPrediction predict_pair_finite(const SymbolContext& ctx);

/// Pair asymptotics for the power-law family. For r < 1,
/// mu+ ~ i a - A D B^(r-1) / (beta a^(r+1-2 xi)); for r = 1,
/// Re mu+ ~ -1/2 (A/beta) ln a / a^(2(1-xi)), Im mu+ ~ a.
AsymptoticPrediction predict_pair_infinite(const KernelFamily& family, double a, double xi);

/// (pi/2) exp(i pi (1-r)/2) / sin(pi r); DivergenceError outside (0, 1).
cplx constant_D(double r);

/// The two real integrals of the defining display, by tanh-sinh quadrature:
/// 1/2 (int_0^inf t^-r/(1+t^2) dt + i int_0^inf t^(1-r)/(1+t^2) dt).
cplx constant_D_quadrature(double r);

// ---- interleaving and rates ----------------------------------------------

struct InterleavingReport {
    /// Per k: -gamma_k < mu_k, mu_k < x_k, x_k < -gamma_{k-1}.
    std::vector<bool> pole_below_mu, mu_below_x, x_below_pole;
    bool all() const;
};

InterleavingReport verify_interleaving(const SpectrumResult& result, const PronyKernel& kernel);

/// mu_k - x_k computed in offset coordinates (negative).
double zero_gap(const RealRoot& mu, const RealRoot& x, std::span<const KernelTerm> terms);

struct LimitApproach {
    std::size_t k = 0;
    std::vector<double> offsets;  ///< mu_{n,k} + gamma_k over the sweep
    bool monotone = false;        ///< strictly decreasing
    double final_offset = 0.0;
};

/// For each k, mu_{n,k} + gamma_k along an increasing sweep of a_n.
std::vector<LimitApproach> limit_approach(const PronyKernel& kernel, std::span<const double> a_values, double xi,
                                          const RootOptions& opt = {});

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    std::size_t points = 0;
    bool aborted = false;         ///< precision floor hit
    std::string note;
};

/// Least squares of log|y| against log x.
SlopeFit loglog_fit(std::span<const double> x, std::span<const double> y);

/// Expected slope of the real-zero gap stated by the lemma: -2(1-xi), -1, -2 xi.
double stated_gap_slope(double xi);

struct GapRateFit {
    std::vector<double> a_values;
    std::vector<std::vector<double>> gaps;   ///< [k][sweep index], |mu_k - x_k|
    std::vector<SlopeFit> gap_fits;          ///< per k
    std::vector<double> pair_re_error, pair_im_error;
    SlopeFit pair_re_fit, pair_im_fit;       ///< decay of |found - predicted|
    double expected_gap_slope = 0.0;
};

/// Gap and pair-error slopes over a sweep of at least six a_n values. A point whose
/// gap is below 100 eps times its pole offset is dropped; fewer than three points
/// remaining aborts the fit.
GapRateFit gap_rate_fit(const PronyKernel& kernel, std::span<const double> a_values, double xi,
                        const RootOptions& opt = {});

}  // namespace vklab
