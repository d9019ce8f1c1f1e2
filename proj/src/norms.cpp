#include "vklab/norms.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <json.hpp>

#include "vklab/errors.hpp"
#include "vklab/kernel.hpp"

namespace vklab {

namespace {

constexpr double kHorizonFraction = 0.01;

void check_gamma(double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw DomainError("norms: gamma_w must be positive");
}

double uniform_step(const std::vector<double>& t) {
    if (t.size() < 2) throw InvalidInput("norms: need at least two samples");
    const double h = t[1] - t[0];
    for (std::size_t i = 2; i < t.size(); ++i)
        if (std::abs((t[i] - t[i - 1]) - h) > 1e-9 * std::max(1.0, std::abs(t[i])))
            throw InvalidInput("norms: time grid must be uniform");
    if (t.front() != 0.0) throw InvalidInput("norms: time grid must start at 0");
    return h;
}

// Weighted integrand samples -> NormResult.
NormResult finish(std::vector<double>& g, const std::vector<double>& t, double gamma) {
    const double h = uniform_step(t);
    NormResult r;
    r.integral = gregory_integral(g, h);
    const std::size_t window = std::max<std::size_t>(1, g.size() / 10);
    double late = 0.0;
    for (std::size_t i = g.size() - window; i < g.size(); ++i) late = std::max(late, g[i]);
    r.tail_estimate = late / (2.0 * gamma);
    r.horizon_warning = r.tail_estimate > kHorizonFraction * r.integral;
    r.norm = std::sqrt(std::max(0.0, r.integral));
    return r;
}

}  // namespace

double gregory_integral(std::span<const double> f, double h) {
    const std::size_t n = f.size();
    if (n < 2) return 0.0;
    if (n < 8) {
        double s = 0.5 * (f[0] + f[n - 1]);
        for (std::size_t i = 1; i + 1 < n; ++i) s += f[i];
        return h * s;
    }
    static constexpr double w[3] = {3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0};
    double s = 0.0;
    for (std::size_t i = 3; i + 3 < n; ++i) s += f[i];
    for (std::size_t i = 0; i < 3; ++i) s += w[i] * (f[i] + f[n - 1 - i]);
    return h * s;
}

NormResult weighted_l2_norm(const Trajectory& traj, const OperatorSpectrum& spec, double beta, double gamma_w,
                            Component which) {
    check_gamma(gamma_w);
    if (traj.M() != spec.size()) throw InvalidInput("weighted_l2_norm: mode count mismatch");
    std::vector<double> g(traj.size(), 0.0);
    for (std::size_t n = 0; n < traj.M(); ++n) {
        const double s = std::pow(spec[n], 2.0 * beta);
        const auto& m = traj.modes[n];
        const auto& x = which == Component::u ? m.u : which == Component::du ? m.du : m.ddu;
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * x[i] * x[i];
    }
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= std::exp(-2.0 * gamma_w * traj.t[i]);
    return finish(g, traj.t, gamma_w);
}

NormResult sobolev_norm(const Trajectory& traj, const OperatorSpectrum& spec, double gamma_w) {
    check_gamma(gamma_w);
    if (traj.M() != spec.size()) throw InvalidInput("sobolev_norm: mode count mismatch");
    std::vector<double> g(traj.size(), 0.0);
    for (std::size_t n = 0; n < traj.M(); ++n) {
        const double a4 = std::pow(spec[n], 4.0);
        const auto& m = traj.modes[n];
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += m.ddu[i] * m.ddu[i] + a4 * m.u[i] * m.u[i];
    }
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= std::exp(-2.0 * gamma_w * traj.t[i]);
    return finish(g, traj.t, gamma_w);
}

double weighted_l2_norm(const std::vector<Forcing>& f, const OperatorSpectrum& spec, double beta, double gamma_w) {
    check_gamma(gamma_w);
    if (f.empty()) return 0.0;
    if (f.size() != spec.size()) throw InvalidInput("weighted_l2_norm: forcing size differs from the mode count");
    double s = 0.0;
    for (std::size_t n = 0; n < f.size(); ++n) s += std::pow(spec[n], 2.0 * beta) * weighted_l2_squared(f[n], gamma_w);
    return std::sqrt(std::max(0.0, s));
}

NormResult weighted_l2_norm_sampled(const std::vector<Forcing>& f, const OperatorSpectrum& spec, double beta,
                                    double gamma_w, const std::vector<double>& grid) {
    check_gamma(gamma_w);
    if (!f.empty() && f.size() != spec.size())
        throw InvalidInput("weighted_l2_norm: forcing size differs from the mode count");
    std::vector<double> g(grid.size(), 0.0);
    for (std::size_t n = 0; n < f.size(); ++n) {
        const double s = std::pow(spec[n], 2.0 * beta);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double v = f[n](grid[i]);
            g[i] += s * v * v;
        }
    }
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= std::exp(-2.0 * gamma_w * grid[i]);
    return finish(g, grid, gamma_w);
}

PlancherelResult plancherel_check(const Forcing& f, double gamma_w, double y_span) {
    check_gamma(gamma_w);
    if (!(y_span > 0.0)) throw InvalidInput("plancherel_check: y_span must be positive");
    PlancherelResult r;
    r.time_side = weighted_l2_squared(f, gamma_w);
    const auto terms = f.expand();
    if (terms.empty()) return r;

    using boost::math::quadrature::gauss_kronrod;
    const double inv2pi = 1.0 / (2.0 * std::numbers::pi);
    // Breakpoints at the resonances |Im lambda| split the half line y >= 0 (the
    // integrand is even for real f).
    std::vector<double> breaks{0.0};
    for (const auto& e : terms) {
        const double w = std::abs(e.lambda.imag());
        const double width = std::abs(e.lambda.real()) + gamma_w;
        for (double b : {w - width, w, w + width})
            if (b > 0.0 && b < y_span) breaks.push_back(b);
    }
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    auto side = [&](double x) {
        auto g = [&](double y) { return std::norm(f.laplace(cplx(x, y))) * inv2pi; };
        double s = 0.0;
        for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
            s += gauss_kronrod<double, 61>::integrate(g, breaks[i], breaks[i + 1], 15, 1e-13);
        s += gauss_kronrod<double, 61>::integrate(g, breaks.back(), y_span, 15, 1e-13);
        return 2.0 * s;
    };
    r.frequency_side = side(gamma_w);
    if (std::isfinite(y_span)) {
        unsigned m_min = terms.front().m;
        for (const auto& e : terms) m_min = std::min(m_min, e.m);
        const double edge = std::norm(f.laplace(cplx(gamma_w, y_span))) * inv2pi;
        r.tail_estimate = 2.0 * edge * y_span / (2.0 * m_min + 1.0);
        r.span_warning = r.tail_estimate > 0.01 * r.frequency_side;
    }
    r.sup_at_gamma = side(gamma_w + 1.0) <= r.frequency_side && side(gamma_w + 2.0) <= side(gamma_w + 1.0);
    r.gap = r.time_side != 0.0 ? std::abs(r.time_side - r.frequency_side) / r.time_side
                               : std::abs(r.frequency_side);
    return r;
}

EstimateReport verify_estimate(const Problem& p, const Trajectory& traj, std::optional<int> branch) {
    p.validate();
    if (traj.M() != p.modes()) throw InvalidInput("verify_estimate: trajectory does not match the problem");
    EstimateReport r;
    r.branch = branch ? *branch : (p.kernel.empty() || validate_kernel(p.kernel).condition5_ok ? 1 : 2);
    if (r.branch != 1 && r.branch != 2) throw InvalidInput("verify_estimate: branch must be 1 or 2");
    if (r.branch == 2 && p.xi == 0.0)
        throw RegimeError("verify_estimate: the estimate without a finite sum c_k needs xi in (0, 1]");
    r.gamma = p.gamma_w;
    r.xi = p.xi;
    r.modes = p.modes();

    r.lhs = sobolev_norm(traj, p.spec, p.gamma_w);
    r.rhs_forcing = weighted_l2_norm(p.forcing, p.spec, 2.0 - p.xi, p.gamma_w);
    const ModeVector phi0 = p.phi0.coords.empty() ? ModeVector::zeros(p.modes()) : p.phi0;
    const ModeVector phi1 = p.phi1.coords.empty() ? ModeVector::zeros(p.modes()) : p.phi1;
    const double shift = r.branch == 1 ? 0.0 : p.xi;
    r.rhs_phi0 = h_beta_norm(p.spec, 2.0 + shift, phi0);
    r.rhs_phi1 = h_beta_norm(p.spec, 1.0 + shift, phi1);
    r.rhs_sum = r.rhs_forcing + r.rhs_phi0 + r.rhs_phi1;
    if (r.rhs_sum > 0.0) r.empirical_d = r.lhs.norm / r.rhs_sum;
    r.homogeneous = phi0.norm() == 0.0 && phi1.norm() == 0.0;

    r.bound = theoretical_bound(p.gamma_w, p.kernel, p.spec, p.xi);
    r.d1 = r.bound.bound;
    r.d2 = 1.0 / std::pow(p.spec.first(), 2.0 - p.xi) + 2.0 * r.d1;
    r.d1_check = {weighted_l2_norm(traj, p.spec, 2.0, p.gamma_w, Component::u).norm, r.d1 * r.rhs_forcing};
    r.d2_check = {weighted_l2_norm(traj, p.spec, 0.0, p.gamma_w, Component::ddu).norm, r.d2 * r.rhs_forcing};
    return r;
}

void write_estimate_json(std::ostream& os, const EstimateReport& r) {
    nlohmann::ordered_json j;
    j["branch"] = r.branch;
    j["gamma_w"] = r.gamma;
    j["xi"] = r.xi;
    j["modes"] = r.modes;
    j["lhs"] = {{"norm", r.lhs.norm},
                {"integral", r.lhs.integral},
                {"tail_estimate", r.lhs.tail_estimate},
                {"horizon_warning", r.lhs.horizon_warning}};
    j["rhs_components"] = {{"forcing", r.rhs_forcing}, {"phi0", r.rhs_phi0}, {"phi1", r.rhs_phi1}};
    j["rhs_sum"] = r.rhs_sum;
    j["empirical_d"] = r.empirical_d ? nlohmann::ordered_json(*r.empirical_d) : nlohmann::ordered_json(nullptr);
    j["homogeneous"] = r.homogeneous;
    j["d1"] = r.d1;
    j["d2"] = r.d2;
    j["bound"] = {{"k0", r.bound.k0},
                  {"sector_branch", r.bound.sector_branch},
                  {"real_branch", r.bound.real_branch},
                  {"real_branch_binds", r.bound.real_branch_binds},
                  {"real_branch_valid", r.bound.real_branch_valid},
                  {"harmonic", r.bound.harmonic}};
    j["d1_check"] = {{"lhs", r.d1_check.lhs}, {"rhs", r.d1_check.rhs}, {"pass", r.d1_check.pass()}};
    j["d2_check"] = {{"lhs", r.d2_check.lhs}, {"rhs", r.d2_check.rhs}, {"pass", r.d2_check.pass()}};
    os << j.dump(2) << '\n';
}

void write_estimate_csv(std::ostream& os, const EstimateReport& r) {
    char buf[160];
    os << "quantity,lhs,rhs,pass\n";
    auto row = [&](const char* name, double l, double rr, bool pass) {
        std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%d\n", name, l, rr, pass ? 1 : 0);
        os << buf;
    };
    if (r.empirical_d) row("estimate", r.lhs.norm, *r.empirical_d * r.rhs_sum, true);
    if (!r.homogeneous) return;  // d1, d2 bound the zero-data solution only
    row("d1", r.d1_check.lhs, r.d1_check.rhs, r.d1_check.pass());
    row("d2", r.d2_check.lhs, r.d2_check.rhs, r.d2_check.pass());
}

}  // namespace vklab
