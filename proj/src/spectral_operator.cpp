#include "vklab/spectral_operator.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "vklab/errors.hpp"

namespace vklab {

OperatorSpectrum::OperatorSpectrum(std::vector<double> eigenvalues, SpectrumGenerator tag)
    : a_(std::move(eigenvalues)), tag_(tag) {
    if (a_.empty()) throw InvalidInput("operator spectrum: no eigenvalues");
    for (std::size_t n = 0; n < a_.size(); ++n) {
        if (!(a_[n] > 0.0) || !std::isfinite(a_[n])) {
            std::ostringstream os;
            os << "operator spectrum: a_" << n + 1 << " = " << a_[n] << " is not positive";
            throw InvalidInput(os.str());
        }
        if (n > 0 && a_[n] < a_[n - 1]) {
            std::ostringstream os;
            os << "operator spectrum: eigenvalues decrease at n = " << n + 1;
            throw InvalidInput(os.str());
        }
    }
}

OperatorSpectrum OperatorSpectrum::power_law(double L, int p, std::size_t M) {
    if (!(L > 0.0)) throw InvalidInput("power-law spectrum: L must be positive");
    if (p != 1 && p != 2) throw InvalidInput("power-law spectrum: p must be 1 or 2");
    if (M == 0) throw InvalidInput("power-law spectrum: M must be positive");
    std::vector<double> a(M);
    for (std::size_t n = 1; n <= M; ++n) a[n - 1] = std::pow(static_cast<double>(n) * std::numbers::pi / L, p);
    OperatorSpectrum s(std::move(a), SpectrumGenerator::power_law);
    s.L_ = L;
    s.p_ = p;
    return s;
}

OperatorSpectrum OperatorSpectrum::truncated(std::size_t M) const {
    if (M == 0 || M > a_.size()) throw InvalidInput("operator spectrum: bad truncation");
    OperatorSpectrum s(std::vector<double>(a_.begin(), a_.begin() + static_cast<std::ptrdiff_t>(M)), tag_);
    s.L_ = L_;
    s.p_ = p_;
    return s;
}

ModeVector ModeVector::real(std::span<const double> v) {
    ModeVector out;
    out.coords.assign(v.begin(), v.end());
    return out;
}

double ModeVector::norm() const {
    double s = 0.0;
    for (const auto& c : coords) s += std::norm(c);
    return std::sqrt(s);
}

namespace {
void check_size(const OperatorSpectrum& spec, const ModeVector& v) {
    if (spec.size() != v.size()) {
        std::ostringstream os;
        os << "mode vector has " << v.size() << " coordinates, spectrum has " << spec.size();
        throw InvalidInput(os.str());
    }
}
}  // namespace

ModeVector frac_power_apply(const OperatorSpectrum& spec, double beta, const ModeVector& v) {
    check_size(spec, v);
    ModeVector out = v;
    if (beta == 0.0) return out;
    for (std::size_t n = 0; n < v.size(); ++n) out[n] *= std::pow(spec[n], beta);
    return out;
}

double h_beta_norm(const OperatorSpectrum& spec, double beta, const ModeVector& v) {
    check_size(spec, v);
    double s = 0.0;
    for (std::size_t n = 0; n < v.size(); ++n) {
        const double x = std::pow(spec[n], beta) * std::abs(v[n]);
        s += x * x;
    }
    return std::sqrt(s);
}

}  // namespace vklab
