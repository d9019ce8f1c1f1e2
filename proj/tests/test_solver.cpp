#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "vklab/errors.hpp"
#include "vklab/solver.hpp"

using namespace vklab;

namespace {

double linf_diff(const std::vector<double>& x, const std::vector<double>& y) {
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) d = std::max(d, std::abs(x[i] - y[i]));
    return d;
}

double linf(const std::vector<double>& x) {
    double d = 0.0;
    for (double v : x) d = std::max(d, std::abs(v));
    return d;
}

ModeVector real_modes(std::vector<double> v) { return ModeVector::real(v); }

}  // namespace

TEST_CASE("harmonic oscillator") {
    Problem p(PronyKernel(), OperatorSpectrum({2.0}), 0.5);
    p.phi0 = real_modes({1.0});
    p.horizon = 10.0;
    p.tol_ode = 1e-10;
    const auto tr = integrate(p);
    double err = 0.0;
    for (std::size_t i = 0; i < tr.size(); ++i) err = std::max(err, std::abs(tr.modes[0].u[i] - std::cos(2 * tr.t[i])));
    CHECK(err <= 1e-8);
}

TEST_CASE("Duhamel solution for exponential forcing") {
    Problem p(PronyKernel(), OperatorSpectrum({1.0}), 0.0);
    p.forcing = {Forcing{exp_term(1.0, 1.0)}};
    p.horizon = 12.0;
    const auto tr = integrate(p);
    const auto rs = residue_solution(p, 0, tr.t);
    double e1 = 0.0, e2 = 0.0;
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const double t = tr.t[i], ref = 0.5 * (std::exp(-t) - std::cos(t) + std::sin(t));
        e1 = std::max(e1, std::abs(tr.modes[0].u[i] - ref));
        e2 = std::max(e2, std::abs(rs.u[i] - ref));
    }
    CHECK(e1 <= 1e-8);
    CHECK(e2 <= 1e-13);
}

TEST_CASE("integrator agrees with the residue oracle") {
    const PronyKernel k({{1.0, 2.0}});
    for (double xi : {0.0, 0.5, 1.0})
        for (double a : {10.0, 100.0, 1000.0}) {
            Problem p(k, OperatorSpectrum({a}), xi);
            p.phi0 = real_modes({1.0});
            p.phi1 = real_modes({0.5 * a});
            p.forcing = {Forcing{exp_term(3.0, 0.7), cos_term(1.0, 0.0, 2.0)}};
            p.horizon = 6.0;
            const auto tr = integrate(p);
            const auto rs = residue_solution(p, 0, tr.t);
            INFO("xi " << xi << " a " << a);
            CHECK(linf_diff(tr.modes[0].u, rs.u) <= 1e-6 * linf(rs.u));
            CHECK(std::abs(rs.u[0] - 1.0) <= 1e-9);
            CHECK(equation_residual(tr, p).max_relative() <= 10 * p.tol_ode);
        }
}

TEST_CASE("residue oracle with four poles") {
    // three symbol zeros plus the forcing pole
    Problem p(PronyKernel({{1.0, 2.0}}), OperatorSpectrum({10.0}), 0.5);
    p.forcing = {Forcing{exp_term(1.0, 1.0)}};
    const std::vector<double> t{0.0, 0.5, 1.0, 2.0};
    const auto rs = residue_solution(p, 0, t);
    CHECK(std::abs(rs.u[0]) <= 1e-15);
    CHECK(std::abs(rs.du[0]) <= 1e-13);
    // u'' at t = 0 equals f(0) for zero data
    CHECK(rs.ddu[0] == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("residue oracle rejects clustered poles") {
    // a forcing pole on top of the single real zero of l at a = 1, xi = 1 (mu = -1)
    Problem p(PronyKernel({{1.0, 2.0}}), OperatorSpectrum({1.0}), 1.0);
    const double mu = find_real_zeros(SymbolContext(p.kernel, 1.0, 1.0))[0].value;
    p.forcing = {Forcing{exp_term(1.0, -mu)}};
    CHECK_THROWS_AS(residue_solution(p, 0, std::vector<double>{0.0, 1.0}), OracleUnavailable);
}

TEST_CASE("zero problem stays zero") {
    Problem p(PronyKernel({{1, 2}, {1, 5}}), OperatorSpectrum::dirichlet_sqrt(3), 0.5);
    p.horizon = 3.0;
    const auto tr = integrate(p);
    for (const auto& m : tr.modes) CHECK(linf(m.u) == 0.0);
    const auto r = equation_residual(tr, p);
    for (double x : r.residual) CHECK(x == 0.0);
}

TEST_CASE("stiff multi-term kernel") {
    Problem p(PronyKernel({{0.3, 1}, {0.3, 9}, {0.2, 81}, {0.2, 729}, {0.1, 6561}}), OperatorSpectrum({3.0, 40.0}),
              0.75);
    p.phi0 = real_modes({1.0, 0.1});
    p.forcing = {Forcing{polyexp_term(1.0, 2, 1.5)}, Forcing{cos_term(0.5, 0.2, 7.0)}};
    p.horizon = 5.0;
    const auto tr = integrate(p);
    const auto rs = residue_solution(p, tr.t);
    for (std::size_t n = 0; n < 2; ++n) {
        CHECK(linf_diff(tr.modes[n].u, rs.modes[n].u) <= 1e-6 * linf(rs.modes[n].u));
        CHECK(tr.stats[n].exponential_steps > 0);
    }
}

TEST_CASE("step underflow raises StiffnessFailure") {
    Problem p(PronyKernel({{1, 2}}), OperatorSpectrum({10.0}), 0.5);
    p.forcing = {Forcing{exp_term(1.0, -1e4)}};  // grows like exp(1e4 t)
    p.horizon = 1.0;
    CHECK_THROWS_AS(integrate(p), StiffnessFailure);
}

TEST_CASE("dissipation of the free oscillation") {
    // with memory, the energy of a free mode decays like exp(2 Re mu+ t)
    const PronyKernel k({{2.0, 1.0}});
    const double a = 20.0, xi = 0.5;
    Problem p(k, OperatorSpectrum({a}), xi);
    p.phi0 = real_modes({1.0});
    p.horizon = 40.0;
    const auto tr = integrate(p);
    const double re = find_complex_pair(SymbolContext(k, a, xi)).plus.real();
    REQUIRE(re < 0.0);
    auto envelope = [&](double t0) {
        double e = 0.0;
        for (std::size_t i = 0; i < tr.size(); ++i)
            if (tr.t[i] >= t0 && tr.t[i] <= t0 + 1.0) e = std::max(e, std::abs(tr.modes[0].u[i]));
        return e;
    };
    const double measured = std::log(envelope(30.0) / envelope(10.0)) / 20.0;
    CHECK(measured == doctest::Approx(re).epsilon(0.05));
}

TEST_CASE("convolution identity for the memory states") {
    const PronyKernel k({{0.4, 1.5}, {0.6, 12.0}});
    Problem p(k, OperatorSpectrum({6.0}), 0.5);
    p.phi1 = real_modes({3.0});
    p.forcing = {Forcing{sin_term(1.0, 0.3, 2.0)}};
    p.horizon = 4.0;
    p.samples_per_period = 400;
    const auto tr = integrate(p);
    const auto& m = tr.modes[0];
        // cubic Hermite interpolant of u from (u, u') on each output cell, integrated against K
    for (std::size_t i : {tr.size() / 3, tr.size() / 2, tr.size() - 1}) {
        const double t = tr.t[i];
        double conv = 0.0;
        for (std::size_t j = 0; j < i; ++j) {
            const double t0 = tr.t[j], hj = tr.t[j + 1] - t0;
            auto cell = [&](double s) {
                const double x = (s - t0) / hj, x2 = x * x, x3 = x2 * x;
                const double u = (2 * x3 - 3 * x2 + 1) * m.u[j] + (x3 - 2 * x2 + x) * hj * m.du[j] +
                                 (-2 * x3 + 3 * x2) * m.u[j + 1] + (x3 - x2) * hj * m.du[j + 1];
                return eval_kernel(k, t - s) * u;
            };
            conv += boost::math::quadrature::gauss<double, 7>::integrate(cell, t0, tr.t[j + 1]);
        }
        const double w = 0.4 * m.w[0][i] + 0.6 * m.w[1][i];
        CHECK(std::abs(w - conv) <= 1e-7 * linf(m.u));
    }
}

TEST_CASE("closed-form convolutions") {
    CHECK(conv_cos(1.0, 1.0, 0.0) == 0.0);
    CHECK(conv_sin(1.0, 1.0, 0.0) == 0.0);
    const double pi = std::acos(-1.0);
    CHECK(conv_cos(1.0, 1.0, pi) == doctest::Approx(0.5 * (-1 - std::exp(-pi))).epsilon(1e-14));
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 25; ++rep) {
        const double g = std::pow(10.0, -1 + 3 * u(rng)), a = std::pow(10.0, -1 + 3 * u(rng)), t = 10 * u(rng);
        auto fc = [&](double s) { return std::exp(-g * (t - s)) * std::cos(a * s); };
        auto fs = [&](double s) { return std::exp(-g * (t - s)) * std::sin(a * s); };
        const double scale = 1.0 / std::hypot(g, a);
        const std::size_t pieces = 1 + static_cast<std::size_t>((a + g) * t);
        CHECK(std::abs(conv_cos(g, a, t) - oracle::gauss_pieces(fc, 0, t, pieces)) <= 1e-12 * std::max(scale, 1e-3));
        CHECK(std::abs(conv_sin(g, a, t) - oracle::gauss_pieces(fs, 0, t, pieces)) <= 1e-12 * std::max(scale, 1e-3));
        const double dt = 1e-5, fd = (conv_cos(g, a, t + dt) - conv_cos(g, a, t - dt)) / (2 * dt);
        if (t > dt) CHECK(std::abs(fd - (std::cos(a * t) - g * conv_cos(g, a, t))) <= 1e-8 * (1 + a * a + g * g));
    }
    CHECK_THROWS_AS(conv_cos(0.0, 1.0, 1.0), DomainError);
    CHECK_THROWS_AS(conv_sin(1.0, 1.0, -1.0), DomainError);
}

TEST_CASE("h forcing") {
    const PronyKernel k({{0.5, 2.0}});
    const OperatorSpectrum s({4.0});
    const double xi = 0.25;
    CHECK(h_forcing(k, s, xi, ModeVector::zeros(1), ModeVector::zeros(1), 2.0)[0] == 0.0);
    const auto phi0 = real_modes({1.0}), phi1 = real_modes({2.0});
    const double t = 1.7;
    auto integrand = [&](double r) {
        const double v = std::cos(4 * r) + 0.5 * std::sin(4 * r);
        return eval_kernel(k, t - r) * std::pow(4.0, 2 * xi) * v;
    };
    CHECK(h_forcing(k, s, xi, phi0, phi1, t)[0].real() == doctest::Approx(oracle::quad(integrand, 0, t, 8)).epsilon(1e-9));
    const auto terms = h_forcing_terms(k, s, xi, phi0, phi1);
    CHECK(terms[0](t) == doctest::Approx(h_forcing(k, s, xi, phi0, phi1, t)[0].real()).epsilon(1e-13));
    CHECK(h_forcing_terms(PronyKernel(), s, xi, phi0, phi1)[0].zero());
}

TEST_CASE("initial-data shift") {
    Problem p(PronyKernel({{0.5, 2.0}, {0.3, 30.0}}), OperatorSpectrum::dirichlet_sqrt(4), 0.5);
    p.phi0 = real_modes({1.0, 0.5, 0.2, 0.1});
    p.phi1 = real_modes({0.0, 1.0, 0.0, 2.0});
    p.forcing = std::vector<Forcing>(4, Forcing{exp_term(1.0, 0.5)});
    p.horizon = 5.0;
    p.tol_ode = 1e-10;
    const IcShift sh = ic_shift(p);
    CHECK(sh.v(0, 0.0) == 1.0);
    CHECK(sh.dv(0, 0.0) == 0.0);
    const auto direct = integrate(p);
    const auto omega = integrate(sh.shifted, direct.t);
    for (const auto& m : omega.modes) {
        CHECK(std::abs(m.u[0]) <= 1e-9);
        CHECK(std::abs(m.du[0]) <= 1e-9);
    }
    const auto rec = sh.recombine(omega);
    for (std::size_t n = 0; n < 4; ++n) CHECK(linf_diff(rec.modes[n].u, direct.modes[n].u) <= 1e-7);

    const IcShift free = ic_shift([] {
        Problem q(PronyKernel(), OperatorSpectrum({2.0}), 0.0);
        q.phi0 = ModeVector::real(std::vector<double>{1.0});
        return q;
    }());
    CHECK(free.shifted.forcing_at(0).zero());
}

TEST_CASE("adaptive horizon") {
    Problem p(PronyKernel({{1, 2}}), OperatorSpectrum::dirichlet_sqrt(5), 0.5);
    p.phi0 = ModeVector::real(std::vector<double>{1, 0.5, 0.3, 0.2, 0.1});
    p.gamma_w = 1.0;
    const auto tr = integrate(p);
    CHECK(tr.t.back() >= std::log(1e6) / 2.0);
    CHECK_FALSE(tr.horizon_capped);
    p.max_horizon = 2.0;
    CHECK(integrate(p).horizon_capped);
}

TEST_CASE("trajectory binary round trip") {
    Problem p(PronyKernel({{1, 2}, {2, 7}}), OperatorSpectrum({1.0, 3.0}), 0.5);
    p.phi0 = real_modes({1.0, -1.0});
    p.horizon = 1.0;
    const auto tr = integrate(p);
    std::stringstream ss;
    write_trajectory_binary(ss, tr);
    const auto back = read_trajectory_binary(ss);
    CHECK(back.t == tr.t);
    CHECK(back.a == tr.a);
    CHECK(back.xi == tr.xi);
    CHECK(back.N == 2);
    for (std::size_t n = 0; n < 2; ++n) {
        CHECK(back.modes[n].u == tr.modes[n].u);
        CHECK(back.modes[n].ddu == tr.modes[n].ddu);
        CHECK(back.modes[n].w == tr.modes[n].w);
    }
    std::stringstream bad("XXXX");
    CHECK_THROWS_AS(read_trajectory_binary(bad), InvalidInput);
}

TEST_CASE("problem validation") {
    Problem p(PronyKernel({{1, 2}}), OperatorSpectrum({1.0, 2.0}), 0.5);
    p.phi0 = real_modes({1.0});
    CHECK_THROWS_AS(p.validate(), InvalidInput);
    p.phi0 = ModeVector();
    p.tol_ode = -1;
    CHECK_THROWS_AS(p.validate(), InvalidInput);
}
