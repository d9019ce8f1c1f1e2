#pragma once

// Cleared polynomial of the truncated symbol and companion-matrix roots.
// Templated on the scalar so tests can run the same code in multiprecision.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <complex>
#include <span>
#include <vector>

#include "vklab/kernel.hpp"

namespace vklab {

/// Ascending coefficients of p(z) * q(z) where both are ascending.
template <class T>
std::vector<T> poly_mul(const std::vector<T>& p, const std::vector<T>& q) {
    std::vector<T> r(p.size() + q.size() - 1, T(0));
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = 0; j < q.size(); ++j) r[i + j] += p[i] * q[j];
    return r;
}

/// Ascending coefficients of (z^2 + a^2) prod_k (z + gamma_k) - w sum_k c_k prod_{j != k} (z + gamma_j),
/// where w = a^(2 xi). Degree N + 2, monic.
template <class T>
std::vector<T> cleared_polynomial(std::span<const KernelTerm> terms, const T& a, const T& w) {
    const std::size_t N = terms.size();
    std::vector<T> full{a * a, T(0), T(1)};
    for (const auto& t : terms) full = poly_mul(full, std::vector<T>{T(t.gamma), T(1)});
    for (std::size_t k = 0; k < N; ++k) {
        std::vector<T> part{T(1)};
        for (std::size_t j = 0; j < N; ++j)
            if (j != k) part = poly_mul(part, std::vector<T>{T(terms[j].gamma), T(1)});
        for (std::size_t i = 0; i < part.size(); ++i) full[i] -= w * T(terms[k].c) * part[i];
    }
    return full;
}

/// All roots of the monic polynomial with ascending coefficients `coeffs`.
template <class T>
std::vector<std::complex<T>> companion_roots(const std::vector<T>& coeffs) {
    using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
    const Eigen::Index n = static_cast<Eigen::Index>(coeffs.size()) - 1;
    std::vector<std::complex<T>> out;
    if (n < 1) return out;
    const T lead = coeffs.back();
    Mat C = Mat::Zero(n, n);
    for (Eigen::Index i = 1; i < n; ++i) C(i, i - 1) = T(1);
    for (Eigen::Index i = 0; i < n; ++i) C(i, n - 1) = -coeffs[static_cast<std::size_t>(i)] / lead;
    Eigen::EigenSolver<Mat> es(C, false);
    const auto ev = es.eigenvalues();
    out.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) out.emplace_back(ev(i).real(), ev(i).imag());
    return out;
}

}  // namespace vklab
