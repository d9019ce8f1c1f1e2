#pragma once

// Per-mode symbol l_n(z) = z^2 + a_n^2 - a_n^(2 xi) Psi_N(z) and the
// half-plane bounds on a_n^xi / |l_n|.

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "vklab/kernel.hpp"
#include "vklab/spectral_operator.hpp"

namespace vklab {

using cplx = std::complex<double>;

class SymbolContext {
public:
    /// Uses the first N kernel terms (all when N is omitted). Throws DomainError
    /// for xi outside [0, 1], a <= 0 or N larger than the kernel.
    SymbolContext(const PronyKernel& kernel, double a, double xi, std::optional<std::size_t> N = std::nullopt);

    const PronyKernel& kernel() const { return kernel_; }
    std::span<const KernelTerm> terms() const { return kernel_.terms(); }
    std::size_t N() const { return kernel_.size(); }
    double a() const { return a_; }
    double xi() const { return xi_; }
    /// a^(2 xi), the memory coupling.
    double coupling() const { return coupling_; }
    /// a^(-2(1 - xi)), the factor in f_{n,N}.
    double f_scale() const { return f_scale_; }

private:
    PronyKernel kernel_;
    double a_, xi_, coupling_, f_scale_;
};

/// l_{n,N}(z); throws PoleError near -gamma_k.
cplx symbol_eval(const SymbolContext& ctx, cplx zeta);

/// d/dz l_{n,N}(z) = 2 z + a^(2 xi) sum c_k / (z + gamma_k)^2.
cplx symbol_derivative(const SymbolContext& ctx, cplx zeta);

/// m_n(z) = l_n(z) / a_n^2, with real and imaginary parts assembled from the
/// separated expressions (no cancellation in the imaginary part).
cplx normalized_symbol(const SymbolContext& ctx, cplx zeta);

/// f_{n,N}(z) = 1 - a^(-2(1-xi)) Psi_N(z).
cplx f_companion(const SymbolContext& ctx, cplx zeta);

/// c_1 / ((1 + gamma_1/gamma)^2 + 1); RegimeError unless gamma > gamma_1.
double k0(double gamma, const PronyKernel& kernel);

struct TheoreticalBound {
    double gamma = 0.0;
    double k0 = 0.0;                 ///< 0 for the empty kernel
    double sector_branch = 0.0;      ///< sqrt(2 gamma k0)
    double real_branch = 0.0;        ///< a_1^(2-xi) |1 - a_1^(-2(1-xi)) sum c/gamma|
    double bound = 0.0;              ///< 1 / min(sector_branch, real_branch)
    bool real_branch_binds = false;  ///< real_branch < sector_branch
    bool real_branch_valid = true;   ///< a_1^(2(1-xi)) > sum c/gamma
    bool harmonic = false;           ///< empty kernel: exact harmonic value used
};

/// Right-hand side of the half-plane estimate. For the empty kernel the bound is
/// max(1/a_1^(2-xi), sup_n exact harmonic sup). Throws RegimeError for
/// gamma <= gamma_1 or sum c/gamma >= 1, DegenerateBound when the real branch vanishes.
TheoreticalBound theoretical_bound(double gamma, const PronyKernel& kernel, const OperatorSpectrum& spec, double xi);

struct GridConfig {
    std::size_t x_slices = 3;        ///< Re z = gamma + span * j/(x_slices-1)
    double x_span = 2.0;
    std::size_t log_nodes = 500;     ///< log-spaced y in [y_min, 4 a_M]
    double y_min = 1e-3;
    std::size_t resonance_nodes = 500;  ///< linear y nodes in a_n +- 4 (gamma + 1)
    bool polish = true;              ///< golden-section refinement around each per-mode maximum
    bool keep_samples = false;       ///< fill BoundReport::samples (grid dump)
};

struct GridSample {
    std::size_t n;  ///< 1-based mode index
    double re, im, value;
};

struct BoundReport {
    double gamma = 0.0;
    double k0 = 0.0;
    TheoreticalBound theoretical;
    double empirical_sup = 0.0;
    std::size_t arg_n = 0;           ///< 1-based mode
    cplx arg_zeta{};
    std::vector<double> per_n_sup;
    std::size_t skipped = 0;         ///< pole-adjacent nodes
    std::size_t evaluated = 0;
    std::vector<GridSample> samples;
    bool holds() const { return empirical_sup <= theoretical.bound; }
};

/// Grid supremum of a_n^xi / |l_n(z)| over Re z >= gamma, n = 1..M. Only y >= 0 is
/// sampled (conjugate symmetry). Deterministic for any thread count.
BoundReport empirical_sup(double gamma, const PronyKernel& kernel, const OperatorSpectrum& spec, double xi,
                          const GridConfig& grid = {}, unsigned threads = 1);

/// max over samples and modes of |1 - Psi(z) a_n^(-2(1-xi))|. DomainError when a
/// sample has Re z <= gamma or gamma <= gamma_1.
double psi_deviation_check(const PronyKernel& kernel, const OperatorSpectrum& spec, double xi, double gamma,
                           std::span<const cplx> samples);

/// Random points with Re z in (gamma, gamma + x_span], |Im z| <= y_span.
std::vector<cplx> sample_half_plane(double gamma, std::size_t count, std::uint64_t seed, double x_span = 10.0,
                                    double y_span = 100.0);

}  // namespace vklab
