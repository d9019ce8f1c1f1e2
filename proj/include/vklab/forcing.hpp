#pragma once

// Scalar forcing functions with rational Laplace transforms:
// amp * t^m * exp(-sigma t) * {1, cos(omega t), sin(omega t)}.

#include <complex>
#include <vector>

namespace vklab {

using cplx = std::complex<double>;

enum class Trig { none, cos, sin };

struct ForcingTerm {
    double amp = 0.0;
    double sigma = 0.0;  ///< decay rate, may be 0 for undamped cos/sin
    double omega = 0.0;
    unsigned power = 0;  ///< t^power
    Trig trig = Trig::none;
};

ForcingTerm exp_term(double amp, double sigma);
ForcingTerm cos_term(double amp, double sigma, double omega);
ForcingTerm sin_term(double amp, double sigma, double omega);
ForcingTerm polyexp_term(double amp, unsigned power, double sigma);

/// coef * t^m * exp(lambda t); a real forcing expands into conjugate pairs of these.
struct ExpPolyTerm {
    cplx coef;
    cplx lambda;
    unsigned m = 0;
};

/// Sum of library terms for one mode.
struct Forcing {
    std::vector<ForcingTerm> terms;

    Forcing() = default;
    Forcing(std::initializer_list<ForcingTerm> t) : terms(t) {}
    explicit Forcing(std::vector<ForcingTerm> t) : terms(std::move(t)) {}

    bool zero() const { return terms.empty(); }
    double operator()(double t) const;
    /// Complex exponential-polynomial expansion (conjugates included).
    std::vector<ExpPolyTerm> expand() const;
    /// Unnormalized transform int_0^inf exp(-z t) f(t) dt.
    cplx laplace(cplx z) const;
    /// Sum of |amp| (crude magnitude used for step-size scaling).
    double magnitude() const;
    /// Largest Re lambda over the expansion (growth abscissa); -inf when zero.
    double abscissa() const;
    Forcing scaled(double s) const;
    Forcing operator+(const Forcing& o) const;
};

/// Closed form of int_0^inf exp(-2 gamma t) f(t)^2 dt; DomainError when gamma is not
/// above half the growth abscissa.
double weighted_l2_squared(const Forcing& f, double gamma);

}  // namespace vklab
