#include "vklab/forcing.hpp"

#include <cmath>
#include <limits>

#include "vklab/errors.hpp"

namespace vklab {

namespace {

double factorial(unsigned k) {
    double f = 1.0;
    for (unsigned i = 2; i <= k; ++i) f *= i;
    return f;
}

void check_term(const ForcingTerm& t) {
    if (!std::isfinite(t.amp) || !std::isfinite(t.sigma) || !std::isfinite(t.omega))
        throw InvalidInput("forcing term: non-finite parameter");
}

}  // namespace

ForcingTerm exp_term(double amp, double sigma) { return {amp, sigma, 0.0, 0, Trig::none}; }
ForcingTerm cos_term(double amp, double sigma, double omega) { return {amp, sigma, omega, 0, Trig::cos}; }
ForcingTerm sin_term(double amp, double sigma, double omega) { return {amp, sigma, omega, 0, Trig::sin}; }
ForcingTerm polyexp_term(double amp, unsigned power, double sigma) { return {amp, sigma, 0.0, power, Trig::none}; }

double Forcing::operator()(double t) const {
    double s = 0.0;
    for (const auto& term : terms) {
        double v = term.amp * std::exp(-term.sigma * t);
        if (term.power > 0) v *= std::pow(t, static_cast<double>(term.power));
        if (term.trig == Trig::cos)
            v *= std::cos(term.omega * t);
        else if (term.trig == Trig::sin)
            v *= std::sin(term.omega * t);
        s += v;
    }
    return s;
}

std::vector<ExpPolyTerm> Forcing::expand() const {
    std::vector<ExpPolyTerm> out;
    for (const auto& t : terms) {
        check_term(t);
        if (t.amp == 0.0) continue;
        if (t.trig == Trig::none || t.omega == 0.0) {
            if (t.trig == Trig::sin) continue;  // sin(0 t) = 0
            out.push_back({t.amp, -t.sigma, t.power});
        } else if (t.trig == Trig::cos) {
            out.push_back({0.5 * t.amp, cplx(-t.sigma, t.omega), t.power});
            out.push_back({0.5 * t.amp, cplx(-t.sigma, -t.omega), t.power});
        } else {
            out.push_back({cplx(0.0, -0.5 * t.amp), cplx(-t.sigma, t.omega), t.power});
            out.push_back({cplx(0.0, 0.5 * t.amp), cplx(-t.sigma, -t.omega), t.power});
        }
    }
    return out;
}

cplx Forcing::laplace(cplx z) const {
    cplx s = 0.0;
    for (const auto& e : expand()) s += e.coef * factorial(e.m) / std::pow(z - e.lambda, static_cast<int>(e.m + 1));
    return s;
}

double Forcing::magnitude() const {
    double s = 0.0;
    for (const auto& t : terms) s += std::abs(t.amp);
    return s;
}

double Forcing::abscissa() const {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& t : terms)
        if (t.amp != 0.0) m = std::max(m, -t.sigma);
    return m;
}

Forcing Forcing::scaled(double s) const {
    Forcing f = *this;
    for (auto& t : f.terms) t.amp *= s;
    return f;
}

Forcing Forcing::operator+(const Forcing& o) const {
    Forcing f = *this;
    f.terms.insert(f.terms.end(), o.terms.begin(), o.terms.end());
    return f;
}

double weighted_l2_squared(const Forcing& f, double gamma) {
    const auto e = f.expand();
    if (e.empty()) return 0.0;
    if (!(2.0 * gamma > 2.0 * f.abscissa()))
        throw DomainError("weighted_l2_squared: weight does not dominate the forcing growth");
    // f^2 = sum_ij coef_i coef_j t^(m_i+m_j) exp((lambda_i+lambda_j) t)
    cplx s = 0.0;
    for (const auto& p : e)
        for (const auto& q : e) {
            const unsigned k = p.m + q.m;
            const cplx rate = 2.0 * gamma - p.lambda - q.lambda;
            s += p.coef * q.coef * factorial(k) / std::pow(rate, static_cast<int>(k + 1));
        }
    return s.real();
}

}  // namespace vklab
