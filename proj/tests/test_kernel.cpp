#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "vklab/errors.hpp"
#include "vklab/kernel.hpp"

using namespace vklab;

TEST_CASE("validate_kernel on a single term") {
    const PronyKernel k({{1.0, 2.0}});
    const auto r = validate_kernel(k);
    CHECK(r.sum_c_over_gamma == 0.5);
    CHECK(r.condition4_ok);
    CHECK(r.condition5_ok);
    CHECK(r.sum_c == 1.0);
}

TEST_CASE("kernel construction rejects bad terms") {
    CHECK_THROWS_AS(PronyKernel({{1.0, 2.0}, {1.0, 1.0}}), InvalidKernel);
    CHECK_THROWS_AS(PronyKernel({{1.0, 2.0}, {1.0, 2.0}}), InvalidKernel);
    CHECK_THROWS_AS(PronyKernel({{-1.0, 2.0}}), InvalidKernel);
    CHECK_THROWS_AS(PronyKernel({{1.0, 0.0}}), InvalidKernel);
    CHECK_NOTHROW(PronyKernel());
}

TEST_CASE("family with amp_A = 1, beta = 2, N = 50 needs a rescale") {
    oracle::mp s = 0;
    for (int k = 1; k <= 50; ++k) s += 1 / oracle::mp(k * k * k);
    CHECK(s > 1);  // the unscaled stored sum already violates condition (4)

    const PronyKernel k = generate_family({1.0, 1.0, 1.0, 2.0}, 50);
    REQUIRE(k.origin());
    CHECK(k.origin()->rescale_factor < 1.0);
    const auto r = validate_kernel(k);
    CHECK(r.condition4_ok);
    CHECK(r.condition4_limit_ok.value());
    CHECK(r.sum_c_over_gamma + *r.tail_bound == doctest::Approx(kFamilyRescaleTarget).epsilon(1e-12));
    CHECK_THROWS_AS(generate_family({1.0, 1.0, 1.0, 2.0}, 50, false), FamilyInfeasible);
}

TEST_CASE("family terms and r") {
    const PronyKernel k = generate_family({0.5, 1.0, 1.0, 2.0}, 3);
    REQUIRE(k.size() == 3);
    CHECK(k[0].c == doctest::Approx(0.5));
    CHECK(k[0].gamma == doctest::Approx(1.0));
    CHECK(k[1].c == doctest::Approx(0.25));
    CHECK(k[1].gamma == doctest::Approx(4.0));
    CHECK(k[2].c == doctest::Approx(0.5 / 3));
    CHECK(k[2].gamma == doctest::Approx(9.0));
    CHECK(KernelFamily{1.0, 1.0, 1.0, 2.0}.r() == 1.0);
    CHECK(KernelFamily{1.0, 1.0, 0.5, 1.0}.r() == 0.5);
    CHECK_THROWS_AS((KernelFamily{1.0, 1.0, 0.5, 0.4}.validate()), RegimeError);
}

TEST_CASE("family tail bound dominates the true tail") {
    const KernelFamily f{0.7, 1.3, 0.8, 1.5};
    const std::size_t N = 40;
    oracle::mp tail = 0;
    for (int k = N + 1; k < 2000000; ++k) {
        const double kk = k;
        tail += oracle::mp(f.amp_A * std::pow(kk, -f.alpha)) / (f.rate_B * std::pow(kk, f.beta));
    }
    CHECK(f.tail_bound(N) >= static_cast<double>(tail));
    CHECK(f.tail_bound(f.terms_for_tail(1e-8)) < 1e-8);
}

TEST_CASE("eval_kernel") {
    const PronyKernel k({{1.0, 2.0}});
    CHECK(eval_kernel(k, 0.0) == 1.0);
    CHECK(eval_kernel(k, std::log(2.0) / 2) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK_THROWS_AS(eval_kernel(k, -1e-3), DomainError);
    const PronyKernel k2({{2.0, 1.0}, {3.0, 4.0}});
    const oracle::mp ref = 2 * exp(oracle::mp("-0.7")) + 3 * exp(oracle::mp("-2.8"));
    CHECK(std::abs(eval_kernel(k2, 0.7) - static_cast<double>(ref)) <= 2e-16 * static_cast<double>(ref));
    CHECK(eval_kernel(PronyKernel(), 3.0) == 0.0);
}

TEST_CASE("psi") {
    const PronyKernel k({{1.0, 2.0}});
    CHECK(psi(k, 0.0) == std::complex<double>(0.5, 0.0));
    const auto v = psi(k, {0.0, 2.0});
    CHECK(v.real() == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(v.imag() == doctest::Approx(-0.25).epsilon(1e-15));
    const PronyKernel k2({{1.0, 1.0}, {2.0, 4.0}});
    const std::complex<double> z(1.0, 1.0);
    CHECK(std::abs(psi(k2, z) - oracle::psi50(k2.terms(), z)) <= 1e-15 * std::abs(psi(k2, z)));
    CHECK_THROWS_AS(psi(k, -2.0), PoleError);
    CHECK_THROWS_AS(psi(k, {-2.0, 1e-14}), PoleError);
}

TEST_CASE("ivanov diagnostic") {
    const auto d = ivanov_condition_diagnostic(PronyKernel({{1, 1}, {1, 2}, {1, 3}}));
    REQUIRE(d.values.size() == 2);
    CHECK(d.values[0] == 1.0);
    CHECK(d.values[1] == 2.0);

    const auto fam = ivanov_condition_diagnostic(generate_family({0.1, 1.0, 1.0, 2.0}, 4));
    REQUIRE(fam.values.size() == 3);
    CHECK(fam.values[0] == doctest::Approx(3.0));
    CHECK(fam.values[1] == doctest::Approx(20.0));
    CHECK(fam.values[2] == doctest::Approx(63.0));
    CHECK(fam.increasing);
    CHECK(fam.family_holds.value());

    std::vector<KernelTerm> t;
    double g = 1.0, step = 0.5;
    for (int k = 0; k < 30; ++k, g += step, step /= 2) t.push_back({1e-3, g});
    const auto b = ivanov_condition_diagnostic(PronyKernel(t));
    CHECK_FALSE(b.increasing);
    CHECK(b.values.back() < 1e-6);
}

TEST_CASE("sum c diverges for families with alpha <= 1") {
    const auto r = validate_kernel(generate_family({0.5, 1.0, 1.0, 2.0}, 10));
    CHECK(r.sum_c_infinite);
    CHECK_FALSE(r.condition5_ok);
    CHECK(validate_kernel(PronyKernel({{1, 1}, {2, 3}})).condition5_ok);
}
