#pragma once

// Diagonal realization of the positive self-adjoint operator A through its
// eigenvalue sequence, and coordinate vectors in the eigenbasis.

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace vklab {

enum class SpectrumGenerator { explicit_list, power_law, custom };

class OperatorSpectrum {
public:
    /// Throws InvalidInput unless 0 < a_1 <= a_2 <= ... (multiplicity by repetition).
    explicit OperatorSpectrum(std::vector<double> eigenvalues,
                              SpectrumGenerator tag = SpectrumGenerator::explicit_list);

    /// a_n = (n pi / L)^p, n = 1..M, p in {1, 2}.
    static OperatorSpectrum power_law(double L, int p, std::size_t M);

    /// Default realization a_n = n pi (square root of the Dirichlet Laplacian on (0, 1)).
    static OperatorSpectrum dirichlet_sqrt(std::size_t M) { return power_law(1.0, 1, M); }

    std::span<const double> eigenvalues() const { return a_; }
    std::size_t size() const { return a_.size(); }
    double operator[](std::size_t n) const { return a_[n]; }
    double first() const { return a_.front(); }
    double last() const { return a_.back(); }
    SpectrumGenerator generator() const { return tag_; }

    /// Power-law parameters when generator() == power_law.
    double length() const { return L_; }
    int power() const { return p_; }

    /// First M eigenvalues.
    OperatorSpectrum truncated(std::size_t M) const;

private:
    std::vector<double> a_;
    SpectrumGenerator tag_;
    double L_ = 0.0;
    int p_ = 0;
};

/// Coordinates v_n of a vector of H in the eigenbasis e_n.
struct ModeVector {
    std::vector<std::complex<double>> coords;

    ModeVector() = default;
    explicit ModeVector(std::vector<std::complex<double>> c) : coords(std::move(c)) {}
    static ModeVector real(std::span<const double> v);
    static ModeVector zeros(std::size_t M) { return ModeVector(std::vector<std::complex<double>>(M)); }

    std::size_t size() const { return coords.size(); }
    std::complex<double>& operator[](std::size_t n) { return coords[n]; }
    const std::complex<double>& operator[](std::size_t n) const { return coords[n]; }

    /// Euclidean norm (sum |v_n|^2)^(1/2).
    double norm() const;
};

/// Coordinates a_n^beta v_n. Throws InvalidInput on a size mismatch.
ModeVector frac_power_apply(const OperatorSpectrum& spec, double beta, const ModeVector& v);

/// ||A^beta v|| = (sum (a_n^beta |v_n|)^2)^(1/2).
double h_beta_norm(const OperatorSpectrum& spec, double beta, const ModeVector& v);

}  // namespace vklab
