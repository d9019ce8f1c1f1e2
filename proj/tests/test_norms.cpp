#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "oracles.hpp"
#include "vklab/errors.hpp"
#include "vklab/norms.hpp"

using namespace vklab;

TEST_CASE("gregory integral is exact for cubics") {
    const double h = 0.1;
    std::vector<double> f;
    for (int i = 0; i <= 30; ++i) {
        const double t = i * h;
        f.push_back(1 + t - 2 * t * t + t * t * t);
    }
    const double T = 3.0, exact = T + T * T / 2 - 2 * T * T * T / 3 + T * T * T * T / 4;
    CHECK(gregory_integral(f, h) == doctest::Approx(exact).epsilon(1e-13));
    CHECK(gregory_integral(std::vector<double>{1.0, 1.0, 1.0}, 0.5) == 1.0);
}

TEST_CASE("weighted L2 of library forcings") {
    const OperatorSpectrum s({3.0});
    const std::vector<Forcing> f{Forcing{exp_term(1.0, 1.0)}};
    CHECK(weighted_l2_norm(f, s, 0.0, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(weighted_l2_norm(f, s, 2.0, 1.0) == doctest::Approx(9 * 0.5).epsilon(1e-15));
    const auto grid = uniform_grid(30.0, 1e-3);
    const auto sampled = weighted_l2_norm_sampled(f, s, 0.0, 1.0, grid);
    CHECK(sampled.norm == doctest::Approx(0.5).epsilon(1e-6));

    const Forcing g{cos_term(2.0, 0.2, 3.0), polyexp_term(1.0, 3, 0.5), sin_term(-1.0, 0.0, 1.0)};
    auto sq = [&](double t) { return std::exp(-2.0 * t) * g(t) * g(t); };
    const double ref = oracle::quad(sq, 0, 60, 60);
    CHECK(weighted_l2_squared(g, 1.0) == doctest::Approx(ref).epsilon(1e-12));
    CHECK_THROWS_AS(weighted_l2_squared(Forcing{exp_term(1.0, -2.0)}, 1.0), DomainError);
}

TEST_CASE("sobolev norm of a harmonic mode") {
    const double a = 2.0, gamma = 1.0;
    Problem p(PronyKernel(), OperatorSpectrum({a}), 0.0);
    p.phi0 = ModeVector::real(std::vector<double>{1.0});
    p.horizon = 12.0;
    p.samples_per_period = 200;
    const auto tr = integrate(p);
    // u = cos(a t): u''^2 + a^4 u^2 = 2 a^4 cos^2(a t)
    const double exact = 2 * std::pow(a, 4) * (1.0 / (4 * gamma) + gamma / (4 * gamma * gamma + 4 * a * a));
    const auto n = sobolev_norm(tr, p.spec, gamma);
    CHECK(n.integral == doctest::Approx(exact).epsilon(1e-6));
    CHECK_FALSE(n.horizon_warning);
    CHECK(sobolev_norm(tr, p.spec, 2.0).norm < n.norm);

    p.horizon = 0.5;
    CHECK(sobolev_norm(integrate(p), p.spec, gamma).horizon_warning);
}

TEST_CASE("zero trajectory has zero norm") {
    Problem p(PronyKernel({{1, 2}}), OperatorSpectrum({1.0, 2.0}), 0.5);
    p.horizon = 2.0;
    const auto tr = integrate(p);
    CHECK(sobolev_norm(tr, p.spec, 1.0).norm == 0.0);
    CHECK(weighted_l2_norm(tr, p.spec, 1.0, 1.0, Component::ddu).norm == 0.0);
}

TEST_CASE("plancherel identity") {
    const auto r = plancherel_check(Forcing{exp_term(1.0, 1.0)}, 1e-9);
    CHECK(r.time_side == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(r.gap <= 1e-10);
    CHECK(r.sup_at_gamma);
    const auto z = plancherel_check(Forcing{}, 1.0);
    CHECK(z.time_side == 0.0);
    CHECK(z.frequency_side == 0.0);
    const Forcing g{cos_term(1.0, 0.5, 3.0), polyexp_term(2.0, 2, 2.0)};
    CHECK(plancherel_check(g, 0.7).gap <= 1e-4);
    const auto cut = plancherel_check(Forcing{exp_term(1.0, 1.0)}, 0.1, 2.0);
    CHECK(cut.span_warning);
    CHECK(cut.tail_estimate > 0.0);
}

TEST_CASE("estimate report for the empty kernel") {
    Problem p(PronyKernel(), OperatorSpectrum::dirichlet_sqrt(5), 0.5);
    p.forcing = std::vector<Forcing>(5, Forcing{exp_term(1.0, 0.5)});
    p.gamma_w = 1.0;
    const auto tr = integrate(p);
    const auto r = verify_estimate(p, tr);
    CHECK(r.homogeneous);
    CHECK(r.bound.harmonic);
    CHECK(r.d1_check.pass());
    CHECK(r.d2_check.pass());
    CHECK(r.d2 == doctest::Approx(1.0 / std::pow(std::numbers::pi, 1.5) + 2 * r.d1));
}

TEST_CASE("estimate with a single-term kernel over mode refinement") {
    std::vector<double> d;
    for (std::size_t M : {10u, 20u, 40u}) {
        Problem p(PronyKernel({{1, 2}}), OperatorSpectrum::dirichlet_sqrt(M), 1.0);
        std::vector<Forcing> f;
        for (std::size_t n = 0; n < M; ++n) f.push_back(Forcing{exp_term(std::pow(n + 1.0, -3.0), 1.0)});
        p.forcing = f;
        p.gamma_w = 3.0;
        const auto r = verify_estimate(p, integrate(p));
        CHECK(r.branch == 1);
        CHECK(r.d1_check.pass());
        CHECK(r.d2_check.pass());
        REQUIRE(r.empirical_d);
        d.push_back(*r.empirical_d);
    }
    CHECK(*std::max_element(d.begin(), d.end()) <= 2 * *std::min_element(d.begin(), d.end()));
}

TEST_CASE("branch 2 needs positive xi") {
    Problem p(PronyKernel({{1, 2}}), OperatorSpectrum({1.0}), 0.0);
    p.horizon = 1.0;
    const auto tr = integrate(p);
    CHECK_THROWS_AS(verify_estimate(p, tr, 2), RegimeError);
    std::ostringstream os;
    write_estimate_csv(os, verify_estimate(p, tr, 1));
    CHECK(os.str().rfind("quantity,lhs,rhs,pass\n", 0) == 0);
}
