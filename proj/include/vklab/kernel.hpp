#pragma once

// Exponential-sum (Prony series) memory kernels K(t) = sum_k c_k exp(-gamma_k t).

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace vklab {

struct KernelTerm {
    double c;      ///< amplitude, > 0
    double gamma;  ///< decay rate, > 0
};

/// Power-law kernel family: c_k = amp_A / k^alpha, gamma_k = rate_B * k^beta.
struct KernelFamily {
    double amp_A = 1.0;
    double rate_B = 1.0;
    double alpha = 1.0;  ///< in (0, 1]
    double beta = 2.0;   ///< alpha + beta > 1

    /// Throws RegimeError when the parameters leave the admissible family.
    void validate() const;

    /// Exponent (alpha + beta - 1) / beta classifying the pair asymptotics.
    double r() const { return (alpha + beta - 1.0) / beta; }

    /// Upper bound on sum_{k>N} c_k / gamma_k (integral comparison).
    double tail_bound(std::size_t N) const;

    /// Smallest N whose tail bound is below `tail`.
    std::size_t terms_for_tail(double tail) const;
};

enum class KernelProvenance { explicit_terms, family };

/// Record of how a family-generated kernel was produced.
struct FamilyOrigin {
    KernelFamily family;         ///< parameters actually used (after any rescale)
    KernelFamily requested;      ///< parameters as requested
    double rescale_factor = 1.0; ///< amp_A multiplier applied to restore sum c/gamma < 1
    double tail_bound = 0.0;     ///< bound on the discarded tail sum_{k>N} c_k/gamma_k
};

class PronyKernel {
public:
    /// The empty kernel K = 0 (pure wave equation).
    PronyKernel() = default;

    /// Throws InvalidKernel unless every c_k > 0 and 0 < gamma_1 < gamma_2 < ...
    explicit PronyKernel(std::vector<KernelTerm> terms);

    std::span<const KernelTerm> terms() const { return terms_; }
    std::size_t size() const { return terms_.size(); }
    bool empty() const { return terms_.empty(); }
    const KernelTerm& operator[](std::size_t k) const { return terms_[k]; }

    KernelProvenance provenance() const { return origin_ ? KernelProvenance::family : KernelProvenance::explicit_terms; }
    const std::optional<FamilyOrigin>& origin() const { return origin_; }

    /// First N terms; keeps the provenance record.
    PronyKernel truncated(std::size_t N) const;

    double sum_c() const;
    double sum_c_over_gamma() const;

private:
    friend PronyKernel generate_family(const KernelFamily&, std::size_t, bool);

    std::vector<KernelTerm> terms_;
    std::optional<FamilyOrigin> origin_;
};

struct IvanovDiagnostic {
    std::vector<double> values;       ///< gamma_k (gamma_{k+1} - gamma_k), k = 1..N-1
    bool increasing = false;          ///< strictly increasing over the stored window
    std::optional<bool> family_holds; ///< analytic verdict for power-law families
};

struct KernelValidationReport {
    double sum_c_over_gamma = 0.0;
    bool condition4_ok = false;
    double sum_c = 0.0;               ///< over stored terms
    bool sum_c_infinite = false;      ///< limit of the generating family diverges
    bool condition5_ok = false;
    std::vector<double> ivanov_diagnostic;
    std::optional<double> tail_bound;         ///< families only
    std::optional<bool> condition4_limit_ok;  ///< stored sum + tail bound < 1
};

KernelValidationReport validate_kernel(const PronyKernel& kernel);

/// K(t); throws DomainError for t < 0.
double eval_kernel(const PronyKernel& kernel, double t);

/// Relative pole guard used by psi and the symbol.
inline constexpr double kPoleGuard = 1e-12;

/// Psi(zeta) = sum_k c_k / (zeta + gamma_k); throws PoleError within the guard of a pole.
std::complex<double> psi(std::span<const KernelTerm> terms, std::complex<double> zeta);
inline std::complex<double> psi(const PronyKernel& kernel, std::complex<double> zeta) {
    return psi(kernel.terms(), zeta);
}

/// Target of sum c/gamma (stored + tail bound) after an automatic amp_A rescale.
inline constexpr double kFamilyRescaleTarget = 0.9;

/// First N terms of a power-law family with the O(.) remainders set to zero.
/// When stored sum + tail bound >= 1 the amplitude is rescaled (recorded in the
/// origin) or, with allow_rescale == false, FamilyInfeasible is thrown.
PronyKernel generate_family(const KernelFamily& family, std::size_t N, bool allow_rescale = true);

/// Throws InvalidKernel for fewer than two terms.
IvanovDiagnostic ivanov_condition_diagnostic(const PronyKernel& kernel);

}  // namespace vklab
