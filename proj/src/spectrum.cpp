#include "vklab/spectrum.hpp"

#include <algorithm>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "vklab/errors.hpp"
#include "vklab/polynomial.hpp"

namespace vklab {

namespace {

using ld = long double;

double gamma_at(std::span<const KernelTerm> terms, std::size_t j) { return j == 0 ? 0.0 : terms[j - 1].gamma; }

// l or f on the real axis at z = -gamma_j + d, with z + gamma_i formed as
// (gamma_i - gamma_j) + d so that the anchor term is exactly d.
struct RealAxis {
    std::span<const KernelTerm> terms;
    ld a2, w, s;
    bool companion;

    void eval(std::size_t j, ld d, ld& F, ld& dF) const {
        const ld gj = gamma_at(terms, j);
        ld sum = 0, sum2 = 0;
        for (std::size_t i = 0; i < terms.size(); ++i) {
            const ld u = i + 1 == j ? d : (static_cast<ld>(terms[i].gamma) - gj) + d;
            const ld q = static_cast<ld>(terms[i].c) / u;
            sum += q;
            sum2 += q / u;
        }
        const ld z = d - gj;
        if (companion) {
            F = 1 - s * sum;
            dF = s * sum2;
        } else {
            F = z * z + a2 - w * sum;
            dF = 2 * z + w * sum2;
        }
    }
    ld value(std::size_t j, ld d) const {
        ld F, dF;
        eval(j, d, F, dF);
        return F;
    }
};

ld bisect_point(ld lo, ld hi) {
    if (lo > 0 && hi > 0 && hi > 4 * lo) return std::sqrt(lo) * std::sqrt(hi);
    if (lo < 0 && hi < 0 && -lo > 4 * -hi) return -std::sqrt(-lo) * std::sqrt(-hi);
    return lo + (hi - lo) / 2;
}

[[noreturn]] void bracket_fail(const char* what, std::size_t k, ld lo, ld hi, ld flo, ld fhi) {
    std::ostringstream os;
    os << what << ": no sign change in interval k = " << k << " (endpoint values " << static_cast<double>(flo)
       << ", " << static_cast<double>(fhi) << ")";
    throw BracketingFailure(os.str(), static_cast<double>(lo), static_cast<double>(hi), static_cast<double>(flo),
                            static_cast<double>(fhi));
}

RealRoot solve_interval(const RealAxis& ax, std::size_t k, const RootOptions& opt, const char* what) {
    const auto terms = ax.terms;
    const ld gk = terms[k - 1].gamma;
    const ld gprev = gamma_at(terms, k - 1);
    const ld g = gk - gprev;
    const bool right_is_pole = k > 1;

    RealRoot root;
    root.k = k;
    root.bracket_lo = -terms[k - 1].gamma;
    root.bracket_hi = -gamma_at(terms, k - 1);

    const ld fmid = ax.value(k, g / 2);
    std::size_t anchor;
    ld lo, hi;
    if (fmid == 0) {
        anchor = k;
        lo = hi = g / 2;
    } else if (fmid > 0) {
        anchor = k;
        hi = g / 2;
        ld eps = static_cast<ld>(opt.pole_eps) * g;
        while (ax.value(k, eps) >= 0) {
            eps *= 1e-4L;
            if (eps < 1e-300L * g) bracket_fail(what, k, root.bracket_lo, root.bracket_hi, ax.value(k, eps), fmid);
        }
        lo = eps;
    } else {
        anchor = k - 1;
        lo = -g / 2;
        if (right_is_pole) {
            ld eps = static_cast<ld>(opt.pole_eps) * g;
            while (ax.value(k - 1, -eps) <= 0) {
                eps *= 1e-4L;
                if (eps < 1e-300L * g) bracket_fail(what, k, root.bracket_lo, root.bracket_hi, fmid, ax.value(k - 1, -eps));
            }
            hi = -eps;
        } else {
            hi = 0;
            const ld f0 = ax.value(0, 0);
            if (!(f0 > 0)) bracket_fail(what, k, root.bracket_lo, root.bracket_hi, fmid, f0);
        }
    }

    ld x = bisect_point(lo, hi);
    ld F = 0, dF = 0;
    int it = 0;
    bool done = lo == hi;
    if (done) x = lo;
    const ld tiny = 4 * std::numeric_limits<ld>::epsilon();
    for (; !done && it < opt.max_iter; ++it) {
        ax.eval(anchor, x, F, dF);
        if (F == 0) break;
        if (F < 0)
            lo = x;
        else
            hi = x;
        ld xn = x - F / dF;
        if (!(dF != 0) || !(xn > lo && xn < hi)) xn = bisect_point(lo, hi);
        const ld step = std::abs(xn - x);
        x = xn;
        if (step <= tiny * std::abs(x) || (hi - lo) <= tiny * std::max(std::abs(lo), std::abs(hi))) done = true;
    }
    if (!done && !(F == 0)) {
        std::ostringstream os;
        os << what << ": iteration did not converge in interval k = " << k;
        throw ConvergenceFailure(os.str());
    }
    ax.eval(anchor, x, F, dF);
    root.anchor = anchor;
    root.offset = static_cast<double>(x);
    const ld z = x - gamma_at(terms, anchor);
    root.value = static_cast<double>(z);
    root.residual = static_cast<double>(std::abs(F));
    root.scale = ax.companion ? 1.0 : static_cast<double>(ax.a2 + z * z);
    root.derivative = static_cast<double>(std::abs(dF));
    const ld width = std::max(std::abs(x), tiny * g);
    root.simple = std::abs(dF) * width > 1e-8L * static_cast<ld>(root.scale);
    root.iterations = it;
    return root;
}

std::vector<RealRoot> solve_all(const SymbolContext& ctx, const RootOptions& opt, bool companion) {
    const RealAxis ax{ctx.terms(), static_cast<ld>(ctx.a()) * ctx.a(), std::pow(static_cast<ld>(ctx.a()), 2 * static_cast<ld>(ctx.xi())),
                      std::pow(static_cast<ld>(ctx.a()), -2 * (1 - static_cast<ld>(ctx.xi()))), companion};
    std::vector<RealRoot> out;
    out.reserve(ctx.N());
    for (std::size_t k = 1; k <= ctx.N(); ++k)
        out.push_back(solve_interval(ax, k, opt, companion ? "find_companion_zeros" : "find_real_zeros"));
    return out;
}

// l(i a + delta) = 2 i a delta + delta^2 - a^(2 xi) Psi(i a + delta), no cancellation of a^2.
cplx shifted_symbol(const SymbolContext& ctx, cplx delta) {
    const double x = delta.real(), y = ctx.a() + delta.imag();
    double P = 0.0, Q = 0.0;
    for (const auto& t : ctx.terms()) {
        const double u = x + t.gamma;
        const double d2 = u * u + y * y;
        P += t.c * u / d2;
        Q += t.c / d2;
    }
    const cplx psi_val(P, -y * Q);
    return cplx(0.0, 2.0 * ctx.a()) * delta + delta * delta - ctx.coupling() * psi_val;
}

bool newton_pair(const SymbolContext& ctx, cplx delta0, const RootOptions& opt, ComplexPair& out) {
    const double a = ctx.a();
    cplx d = delta0;
    const double eps = std::numeric_limits<double>::epsilon();
    int it = 0;
    bool converged = false;
    for (; it < opt.max_iter; ++it) {
        const cplx g = shifted_symbol(ctx, d);
        const cplx dg = symbol_derivative(ctx, cplx(0.0, a) + d);
        if (!(std::abs(dg) > 0.0)) return false;
        const cplx step = g / dg;
        d -= step;
        if (!std::isfinite(d.real()) || !std::isfinite(d.imag())) return false;
        if (std::abs(step) <= 8.0 * eps * std::abs(d)) {
            converged = true;
            ++it;
            break;
        }
    }
    if (!converged) return false;
    const cplx z = cplx(0.0, a) + d;
    if (!(z.imag() > 0.0)) return false;
    out.delta = d;
    out.plus = z;
    out.residual = std::abs(shifted_symbol(ctx, d));
    out.iterations = it;
    return out.residual <= opt.tol_root * (a * a + std::norm(z));
}

}  // namespace

double RealRoot::pole_offset(std::span<const KernelTerm> terms) const {
    if (anchor == k) return offset;
    return (terms[k - 1].gamma - gamma_at(terms, k - 1)) + offset;
}

std::vector<RealRoot> find_real_zeros(const SymbolContext& ctx, const RootOptions& opt) {
    return solve_all(ctx, opt, false);
}

std::vector<RealRoot> find_companion_zeros(const SymbolContext& ctx, const RootOptions& opt) {
    return solve_all(ctx, opt, true);
}

std::vector<std::complex<long double>> companion_matrix_roots(const SymbolContext& ctx) {
    const auto coeffs = cleared_polynomial<long double>(ctx.terms(), ctx.a(),
                                                        std::pow(static_cast<long double>(ctx.a()), 2.0L * ctx.xi()));
    return companion_roots(coeffs);
}

ComplexPair find_complex_pair(const SymbolContext& ctx, const std::vector<RealRoot>* real_zeros, const RootOptions& opt) {
    const double a = ctx.a();
    ComplexPair pair;
    if (ctx.N() == 0) {
        pair.plus = {0.0, a};
        pair.start = "harmonic";
        return pair;
    }
    std::vector<RealRoot> own;
    if (!real_zeros && ctx.N() <= opt.deflation_max_N) {
        own = find_real_zeros(ctx, opt);
        real_zeros = &own;
    }

    std::optional<cplx> start;
    if (real_zeros) {
        // sum of the pair = -sum(mu_k + gamma_k); |mu+|^2 from the constant coefficient
        const auto terms = ctx.terms();
        double sum_off = 0.0, log_ratio = 0.0;
        for (const auto& r : *real_zeros) {
            const double off = r.pole_offset(terms);
            sum_off += off;
            log_ratio -= std::log1p(-off / terms[r.k - 1].gamma);
        }
        const double re = -0.5 * sum_off;
        const double mod2 = a * a * (1.0 - ctx.f_scale() * ctx.kernel().sum_c_over_gamma()) * std::exp(log_ratio);
        const double im2 = mod2 - re * re;
        if (im2 > 0.0) {
            start = cplx(re, std::sqrt(im2) - a);
            pair.start = "deflation";
        }
    }
    if (!start) {
        start = predict_pair_finite(ctx).delta;
        pair.start = "asymptotic";
    }
    if (newton_pair(ctx, *start, opt, pair)) return pair;
    if (pair.start == "deflation") {
        pair.start = "asymptotic";
        if (newton_pair(ctx, predict_pair_finite(ctx).delta, opt, pair)) return pair;
    }
    if (ctx.N() <= opt.companion_max_N) {
        const auto roots = companion_matrix_roots(ctx);
        auto best = std::max_element(roots.begin(), roots.end(), [](const auto& p, const auto& q) {
            return std::abs(p.imag()) < std::abs(q.imag());
        });
        if (best != roots.end() && best->imag() != 0.0L) {
            const cplx z(static_cast<double>(best->real()), static_cast<double>(std::abs(best->imag())));
            pair.start = "companion";
            pair.from_companion = true;
            if (newton_pair(ctx, z - cplx(0.0, a), opt, pair)) return pair;
        }
    }
    std::ostringstream os;
    os << "find_complex_pair: Newton and companion fallback failed for a = " << a << ", N = " << ctx.N();
    throw ConvergenceFailure(os.str());
}

VietaCheck vieta_check(const SymbolContext& ctx, const std::vector<RealRoot>& real_zeros, const ComplexPair& pair) {
    VietaCheck v;
    v.zero_count = real_zeros.size() + 2;
    if (ctx.N() == 0) return v;
    const auto terms = ctx.terms();
    double sum = 0.0, mag = 0.0, log_prod = 0.0;
    for (const auto& r : real_zeros) {
        const double off = r.pole_offset(terms);
        sum += off;
        mag += std::abs(off);
        log_prod += std::log1p(-off / terms[r.k - 1].gamma);
    }
    const double re = pair.delta.real();
    sum += 2.0 * re;
    mag += 2.0 * std::abs(re);
    v.sum_rel = mag > 0.0 ? std::abs(sum) / mag : 0.0;
    const double a = ctx.a();
    const double c0 = 1.0 - ctx.f_scale() * ctx.kernel().sum_c_over_gamma();
    // |mu+|^2 / a^2 with mu+ = i a + delta
    const cplx d = pair.delta;
    const double mod2_over_a2 = (d.real() * d.real()) / (a * a) + (1.0 + d.imag() / a) * (1.0 + d.imag() / a);
    const double lhs = std::log(mod2_over_a2) + log_prod;
    v.product_rel = std::abs(std::expm1(lhs - std::log(c0)));
    return v;
}

SpectrumResult compute_spectrum(const SymbolContext& ctx, std::size_t n, const RootOptions& opt) {
    SpectrumResult r;
    r.n = n;
    r.a = ctx.a();
    r.xi = ctx.xi();
    r.N = ctx.N();
    if (ctx.N() > 0) {
        r.real_zeros = find_real_zeros(ctx, opt);
        r.companion_zeros = find_companion_zeros(ctx, opt);
    }
    r.pair = find_complex_pair(ctx, &r.real_zeros, opt);
    r.vieta = vieta_check(ctx, r.real_zeros, r.pair);
    return r;
}

// ---- asymptotics ---------------------------------------------------------

const char* to_string(PairRegime r) {
    switch (r) {
        case PairRegime::xi_below_half: return "xi<1/2";
        case PairRegime::xi_half: return "xi=1/2";
        case PairRegime::xi_above_half: return "xi>1/2";
        case PairRegime::r_below_half: return "r<1/2";
        case PairRegime::r_half_to_one: return "r in [1/2,1)";
        case PairRegime::r_one: return "r=1";
    }
    return "?";
}

AsymptoticPrediction predict_pair_finite(const SymbolContext& ctx) {
    const double a = ctx.a(), xi = ctx.xi();
    AsymptoticPrediction p;
    p.delta = {-0.5 * ctx.f_scale() * ctx.kernel().sum_c(), 0.0};
    p.value = cplx(0.0, a) + p.delta;
    if (xi < 0.5) {
        p.regime = PairRegime::xi_below_half;
        p.re_order = 2.0 * (1.0 - xi);
        p.im_order = 1.0 - 2.0 * xi;
    } else if (xi == 0.5) {
        p.regime = PairRegime::xi_half;
        p.re_order = 1.0;
        p.im_order = 0.0;
    } else {
        p.regime = PairRegime::xi_above_half;
        p.re_order = 2.0 * xi;
        p.im_order = 2.0 * xi - 1.0;
    }
    p.re_correction = std::pow(a, -p.re_order);
    p.im_correction = std::pow(a, -p.im_order);
    return p;
}

AsymptoticPrediction predict_pair_infinite(const KernelFamily& family, double a, double xi) {
    family.validate();
    if (!(xi >= 0.0 && xi <= 1.0)) throw RegimeError("predict_pair_infinite: xi must lie in [0, 1]");
    if (!(a > 0.0)) throw DomainError("predict_pair_infinite: a must be positive");
    const double r = family.r();
    if (!(r > 0.0 && r <= 1.0)) throw RegimeError("predict_pair_infinite: r outside (0, 1]");
    AsymptoticPrediction p;
    const double A = family.amp_A, B = family.rate_B, beta = family.beta;
    if (std::abs(r - 1.0) < 1e-12) {
        p.regime = PairRegime::r_one;
        p.delta = {-0.5 * (A / beta) * std::log(a) * std::pow(a, -2.0 * (1.0 - xi)), 0.0};
        p.re_order = 2.0 * (1.0 - xi);
        p.im_order = std::numeric_limits<double>::quiet_NaN();  // no remainder stated for Im
    } else {
        const cplx D = constant_D(r);
        p.D = D;
        const double corr = A * std::pow(B, r - 1.0) / (beta * std::pow(a, r + 1.0 - 2.0 * xi));
        p.delta = -D * corr;
        p.literal_value = cplx(D.real() * corr, a + D.imag() * corr);
        p.im_order = 2.0 * r + 3.0 - 4.0 * xi;
        if (r < 0.5) {
            p.regime = PairRegime::r_below_half;
            p.re_order = std::min(2.0 * (1.0 - xi), 2.0 * r + 3.0 - 4.0 * xi);
        } else {
            p.regime = PairRegime::r_half_to_one;
            p.re_order = 2.0 * (1.0 - xi);
        }
    }
    p.value = cplx(0.0, a) + p.delta;
    p.re_correction = std::pow(a, -p.re_order);
    p.im_correction = std::isnan(p.im_order) ? p.im_order : std::pow(a, -p.im_order);
    return p;
}

cplx constant_D(double r) {
    if (!(r > 0.0 && r < 1.0)) {
        std::ostringstream os;
        os << "constant_D: r = " << r << " outside (0, 1), the defining integral diverges";
        throw DivergenceError(os.str());
    }
    const double pi = std::numbers::pi;
    return (pi / 2.0) * std::polar(1.0, pi * (1.0 - r) / 2.0) / std::sin(pi * r);
}

cplx constant_D_quadrature(double r) {
    if (!(r > 0.0 && r < 1.0)) throw DivergenceError("constant_D_quadrature: r outside (0, 1)");
    boost::math::quadrature::tanh_sinh<double> ts;
    // fold (1, inf) onto (0, 1) with t -> 1/t
    const double re = ts.integrate([r](double t) { return (std::pow(t, -r) + std::pow(t, r)) / (1.0 + t * t); }, 0.0, 1.0);
    const double im = ts.integrate([r](double t) { return (std::pow(t, 1.0 - r) + std::pow(t, r - 1.0)) / (1.0 + t * t); }, 0.0, 1.0);
    return {0.5 * re, 0.5 * im};
}

// ---- interleaving and rates ----------------------------------------------

bool InterleavingReport::all() const {
    auto ok = [](const std::vector<bool>& v) { return std::all_of(v.begin(), v.end(), [](bool b) { return b; }); };
    return ok(pole_below_mu) && ok(mu_below_x) && ok(x_below_pole);
}

double zero_gap(const RealRoot& mu, const RealRoot& x, std::span<const KernelTerm> terms) {
    if (mu.anchor == x.anchor) return mu.offset - x.offset;
    return mu.pole_offset(terms) - x.pole_offset(terms);
}

InterleavingReport verify_interleaving(const SpectrumResult& result, const PronyKernel& kernel) {
    InterleavingReport rep;
    const auto terms = kernel.terms();
    const std::size_t K = std::min(result.real_zeros.size(), result.companion_zeros.size());
    for (std::size_t i = 0; i < K; ++i) {
        const auto& mu = result.real_zeros[i];
        const auto& x = result.companion_zeros[i];
        const std::size_t k = mu.k;
        const double g = terms[k - 1].gamma - gamma_at(terms, k - 1);
        const double x_right = x.anchor == k - 1 ? -x.offset : g - x.offset;  // distance from x up to -gamma_{k-1}
        rep.pole_below_mu.push_back(x.k == k && mu.pole_offset(terms) > 0.0);
        rep.mu_below_x.push_back(zero_gap(mu, x, terms) < 0.0);
        rep.x_below_pole.push_back(x_right > 0.0);
    }
    return rep;
}

std::vector<LimitApproach> limit_approach(const PronyKernel& kernel, std::span<const double> a_values, double xi,
                                          const RootOptions& opt) {
    std::vector<LimitApproach> out(kernel.size());
    for (std::size_t k = 0; k < kernel.size(); ++k) out[k].k = k + 1;
    for (double a : a_values) {
        const SymbolContext ctx(kernel, a, xi);
        const auto zeros = find_real_zeros(ctx, opt);
        for (std::size_t k = 0; k < zeros.size(); ++k) out[k].offsets.push_back(zeros[k].pole_offset(kernel.terms()));
    }
    for (auto& l : out) {
        l.monotone = l.offsets.size() >= 2;
        for (std::size_t i = 1; i < l.offsets.size(); ++i)
            if (!(l.offsets[i] < l.offsets[i - 1])) l.monotone = false;
        l.final_offset = l.offsets.empty() ? 0.0 : l.offsets.back();
    }
    return out;
}

SlopeFit loglog_fit(std::span<const double> x, std::span<const double> y) {
    SlopeFit f;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
        if (!(x[i] > 0.0) || !(std::abs(y[i]) > 0.0) || !std::isfinite(y[i])) continue;
        const double lx = std::log(x[i]), ly = std::log(std::abs(y[i]));
        sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
        ++n;
    }
    f.points = n;
    if (n < 2) {
        f.aborted = true;
        f.note = "fewer than two usable points";
        return f;
    }
    const double dn = static_cast<double>(n);
    const double den = dn * sxx - sx * sx;
    f.slope = (dn * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / dn;
    return f;
}

double stated_gap_slope(double xi) {
    if (xi < 0.5) return -2.0 * (1.0 - xi);
    if (xi == 0.5) return -1.0;
    return -2.0 * xi;
}

GapRateFit gap_rate_fit(const PronyKernel& kernel, std::span<const double> a_values, double xi, const RootOptions& opt) {
    if (a_values.size() < 6) throw InvalidInput("gap_rate_fit: need at least six sweep points");
    if (kernel.empty()) throw InvalidInput("gap_rate_fit: kernel has no terms");
    GapRateFit fit;
    fit.a_values.assign(a_values.begin(), a_values.end());
    fit.expected_gap_slope = stated_gap_slope(xi);
    const auto terms = kernel.terms();
    const std::size_t N = kernel.size();
    fit.gaps.assign(N, {});
    std::vector<std::vector<double>> keep_a(N), keep_gap(N);
    std::vector<std::size_t> dropped(N, 0);
    const double eps = std::numeric_limits<double>::epsilon();
    for (double a : a_values) {
        const SymbolContext ctx(kernel, a, xi);
        const auto mu = find_real_zeros(ctx, opt);
        const auto x = find_companion_zeros(ctx, opt);
        for (std::size_t k = 0; k < N; ++k) {
            const double gap = std::abs(zero_gap(mu[k], x[k], terms));
            fit.gaps[k].push_back(gap);
            if (gap > 100.0 * eps * mu[k].pole_offset(terms)) {
                keep_a[k].push_back(a);
                keep_gap[k].push_back(gap);
            } else {
                ++dropped[k];
            }
        }
        const auto pair = find_complex_pair(ctx, &mu, opt);
        const auto pred = predict_pair_finite(ctx);
        fit.pair_re_error.push_back(std::abs(pair.delta.real() - pred.delta.real()));
        fit.pair_im_error.push_back(std::abs(pair.delta.imag() - pred.delta.imag()));
    }
    for (std::size_t k = 0; k < N; ++k) {
        SlopeFit f = loglog_fit(keep_a[k], keep_gap[k]);
        if (keep_a[k].size() < 3) {
            f.aborted = true;
            f.note = "precision floor: fewer than three gaps above 100 eps of the pole offset";
        } else if (dropped[k] > 0) {
            f.note = std::to_string(dropped[k]) + " point(s) below the precision floor dropped";
        }
        fit.gap_fits.push_back(f);
    }
    fit.pair_re_fit = loglog_fit(fit.a_values, fit.pair_re_error);
    fit.pair_im_fit = loglog_fit(fit.a_values, fit.pair_im_error);
    return fit;
}

}  // namespace vklab
