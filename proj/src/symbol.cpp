#include "vklab/symbol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "vklab/errors.hpp"
#include "vklab/parallel.hpp"

namespace vklab {

SymbolContext::SymbolContext(const PronyKernel& kernel, double a, double xi, std::optional<std::size_t> N)
    : a_(a), xi_(xi) {
    if (!(xi >= 0.0 && xi <= 1.0)) throw DomainError("symbol: xi must lie in [0, 1]");
    if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("symbol: a_n must be positive");
    const std::size_t n = N.value_or(kernel.size());
    if (n > kernel.size()) throw DomainError("symbol: truncation N exceeds the kernel size");
    kernel_ = n == kernel.size() ? kernel : kernel.truncated(n);
    coupling_ = std::pow(a, 2.0 * xi);
    f_scale_ = std::pow(a, -2.0 * (1.0 - xi));
}

namespace {

// Sums P = sum c (x+g)/((x+g)^2+y^2) and Q = sum c/((x+g)^2+y^2), so that
// Psi(x+iy) = P - i y Q.
struct PsiParts {
    double P = 0.0, Q = 0.0;
};

PsiParts psi_parts(std::span<const KernelTerm> terms, cplx zeta) {
    const double x = zeta.real(), y = zeta.imag();
    const double guard = kPoleGuard * (1.0 + std::abs(zeta));
    PsiParts s;
    for (const auto& t : terms) {
        const double u = x + t.gamma;
        const double d2 = u * u + y * y;
        if (std::sqrt(d2) < guard) {
            std::ostringstream os;
            os << "symbol: zeta = " << zeta << " hits the pole at -" << t.gamma;
            throw PoleError(os.str(), -t.gamma);
        }
        s.P += t.c * u / d2;
        s.Q += t.c / d2;
    }
    return s;
}

}  // namespace

cplx symbol_eval(const SymbolContext& ctx, cplx zeta) {
    const double x = zeta.real(), y = zeta.imag(), a = ctx.a();
    const PsiParts p = psi_parts(ctx.terms(), zeta);
    const double re = x * x + (a - y) * (a + y) - ctx.coupling() * p.P;
    const double im = 2.0 * x * y + ctx.coupling() * y * p.Q;
    return {re, im};
}

cplx symbol_derivative(const SymbolContext& ctx, cplx zeta) {
    cplx s = 0.0;
    for (const auto& t : ctx.terms()) {
        const cplx d = zeta + t.gamma;
        s += t.c / (d * d);
    }
    return 2.0 * zeta + ctx.coupling() * s;
}

cplx normalized_symbol(const SymbolContext& ctx, cplx zeta) {
    const double x = zeta.real(), y = zeta.imag(), a2 = ctx.a() * ctx.a();
    const PsiParts p = psi_parts(ctx.terms(), zeta);
    const double re = (x * x - y * y) / a2 + 1.0 - ctx.f_scale() * p.P;
    const double im = 2.0 * x * y / a2 + y * ctx.f_scale() * p.Q;
    return {re, im};
}

cplx f_companion(const SymbolContext& ctx, cplx zeta) {
    return 1.0 - ctx.f_scale() * psi(ctx.terms(), zeta);
}

double k0(double gamma, const PronyKernel& kernel) {
    if (kernel.empty()) throw RegimeError("k0: the kernel has no terms");
    const double g1 = kernel[0].gamma;
    if (!(gamma > g1)) {
        std::ostringstream os;
        os << "k0: weight gamma = " << gamma << " must exceed gamma_1 = " << g1;
        throw RegimeError(os.str());
    }
    const double q = 1.0 + g1 / gamma;
    return kernel[0].c / (q * q + 1.0);
}

namespace {

// sup over Re z >= gamma of a^xi / |z^2 + a^2|.
double harmonic_sup(double a, double xi, double gamma) {
    const double m = a >= gamma ? 2.0 * gamma * a : gamma * gamma + a * a;
    return std::pow(a, xi) / m;
}

}  // namespace

TheoreticalBound theoretical_bound(double gamma, const PronyKernel& kernel, const OperatorSpectrum& spec, double xi) {
    if (!(xi >= 0.0 && xi <= 1.0)) throw DomainError("theoretical_bound: xi must lie in [0, 1]");
    if (!(gamma > 0.0)) throw RegimeError("theoretical_bound: gamma must be positive");
    TheoreticalBound b;
    b.gamma = gamma;
    const double a1 = spec.first();
    if (kernel.empty()) {
        b.harmonic = true;
        b.real_branch = std::pow(a1, 2.0 - xi);
        double sup = 1.0 / b.real_branch;
        for (double a : spec.eigenvalues()) sup = std::max(sup, harmonic_sup(a, xi, gamma));
        b.bound = sup;
        b.real_branch_binds = true;
        return b;
    }
    b.k0 = k0(gamma, kernel);
    const double S = kernel.sum_c_over_gamma();
    if (!(S < 1.0)) throw RegimeError("theoretical_bound: sum c/gamma >= 1");
    b.sector_branch = std::sqrt(2.0 * gamma * b.k0);
    const double scale = std::pow(a1, -2.0 * (1.0 - xi));
    const double rb = std::pow(a1, 2.0 - xi) * std::abs(1.0 - scale * S);
    if (!(rb > 0.0)) throw DegenerateBound("theoretical_bound: a_1^(2(1-xi)) equals sum c/gamma");
    b.real_branch = rb;
    b.real_branch_valid = 1.0 / scale > S;
    b.real_branch_binds = rb < b.sector_branch;
    b.bound = 1.0 / std::min(b.sector_branch, rb);
    return b;
}

namespace {

struct Best {
    double value = -1.0;
    cplx zeta{};
};

// Larger value wins; ties go to the lexicographically smaller (Re, Im).
void offer(Best& b, double v, cplx z) {
    if (v > b.value || (v == b.value && (z.real() < b.zeta.real() ||
                                         (z.real() == b.zeta.real() && z.imag() < b.zeta.imag())))) {
        b.value = v;
        b.zeta = z;
    }
}

struct ModeScan {
    Best best;
    std::size_t skipped = 0, evaluated = 0;
    std::vector<GridSample> samples;
};

}  // namespace

BoundReport empirical_sup(double gamma, const PronyKernel& kernel, const OperatorSpectrum& spec, double xi,
                          const GridConfig& grid, unsigned threads) {
    if (!kernel.empty() && !(gamma > kernel[0].gamma)) {
        std::ostringstream os;
        os << "empirical_sup: weight gamma = " << gamma << " must exceed gamma_1 = " << kernel[0].gamma;
        throw RegimeError(os.str());
    }
    if (!(gamma > 0.0)) throw RegimeError("empirical_sup: gamma must be positive");
    if (grid.x_slices == 0 || grid.log_nodes < 2) throw InvalidInput("empirical_sup: grid too small");

    BoundReport rep;
    rep.gamma = gamma;
    rep.theoretical = theoretical_bound(gamma, kernel, spec, xi);
    rep.k0 = rep.theoretical.k0;

    const double aM = spec.last();
    const double y_max = 4.0 * aM;
    std::vector<double> ylog;
    ylog.push_back(0.0);
    const double l0 = std::log(std::min(grid.y_min, y_max)), l1 = std::log(y_max);
    for (std::size_t i = 0; i < grid.log_nodes; ++i)
        ylog.push_back(std::exp(l0 + (l1 - l0) * static_cast<double>(i) / static_cast<double>(grid.log_nodes - 1)));

    std::vector<double> xs(grid.x_slices);
    for (std::size_t j = 0; j < grid.x_slices; ++j)
        xs[j] = grid.x_slices == 1 ? gamma
                                   : gamma + grid.x_span * static_cast<double>(j) / static_cast<double>(grid.x_slices - 1);

    const std::size_t M = spec.size();
    std::vector<ModeScan> scans(M);
    parallel_for(M, threads, [&](std::size_t n) {
        const double a = spec[n];
        const SymbolContext ctx(kernel, a, xi);
        const double axi = std::pow(a, xi);
        std::vector<double> ys = ylog;
        const double w = 4.0 * (gamma + 1.0);
        for (std::size_t i = 0; i < grid.resonance_nodes; ++i) {
            const double y = a - w + 2.0 * w * static_cast<double>(i) / static_cast<double>(std::max<std::size_t>(grid.resonance_nodes - 1, 1));
            if (y >= 0.0) ys.push_back(y);
        }
        std::sort(ys.begin(), ys.end());
        ys.erase(std::unique(ys.begin(), ys.end()), ys.end());

        ModeScan& s = scans[n];
        auto value_at = [&](cplx z, double& v) {
            try {
                const double m = std::abs(symbol_eval(ctx, z));
                if (!(m > 0.0) || !std::isfinite(m)) return false;
                v = axi / m;
                return true;
            } catch (const PoleError&) {
                return false;
            }
        };
        std::size_t best_j = 0, best_i = 0;
        for (std::size_t j = 0; j < xs.size(); ++j) {
            for (std::size_t i = 0; i < ys.size(); ++i) {
                const cplx z(xs[j], ys[i]);
                double v;
                if (!value_at(z, v)) {
                    ++s.skipped;
                    continue;
                }
                ++s.evaluated;
                const double before = s.best.value;
                offer(s.best, v, z);
                if (s.best.value != before || s.best.zeta == z) best_j = j, best_i = i;
                if (grid.keep_samples) s.samples.push_back({n + 1, z.real(), z.imag(), v});
            }
        }
        if (grid.polish && s.best.value >= 0.0) {
            const double x = xs[best_j];
            double lo = ys[best_i > 0 ? best_i - 1 : 0];
            double hi = ys[std::min(best_i + 1, ys.size() - 1)];
            const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
            double y1 = hi - phi * (hi - lo), y2 = lo + phi * (hi - lo);
            double v1 = -1.0, v2 = -1.0;
            value_at({x, y1}, v1);
            value_at({x, y2}, v2);
            for (int it = 0; it < 80 && hi - lo > 1e-14 * (1.0 + hi); ++it) {
                if (v1 >= v2) {
                    hi = y2, y2 = y1, v2 = v1;
                    y1 = hi - phi * (hi - lo);
                    v1 = -1.0;
                    value_at({x, y1}, v1);
                } else {
                    lo = y1, y1 = y2, v1 = v2;
                    y2 = lo + phi * (hi - lo);
                    v2 = -1.0;
                    value_at({x, y2}, v2);
                }
                s.evaluated += 1;
            }
            offer(s.best, v1, {x, y1});
            offer(s.best, v2, {x, y2});
        }
    });

    rep.per_n_sup.resize(M);
    Best global;
    std::size_t arg_n = 0;
    for (std::size_t n = 0; n < M; ++n) {
        rep.per_n_sup[n] = scans[n].best.value;
        rep.skipped += scans[n].skipped;
        rep.evaluated += scans[n].evaluated;
        // strict improvement keeps the smallest n on ties
        if (scans[n].best.value > global.value) {
            global = scans[n].best;
            arg_n = n + 1;
        }
        if (grid.keep_samples)
            rep.samples.insert(rep.samples.end(), scans[n].samples.begin(), scans[n].samples.end());
    }
    rep.empirical_sup = global.value;
    rep.arg_n = arg_n;
    rep.arg_zeta = global.zeta;
    return rep;
}

double psi_deviation_check(const PronyKernel& kernel, const OperatorSpectrum& spec, double xi, double gamma,
                           std::span<const cplx> samples) {
    if (!(xi >= 0.0 && xi <= 1.0)) throw DomainError("psi_deviation_check: xi must lie in [0, 1]");
    if (!kernel.empty() && !(gamma > kernel[0].gamma))
        throw DomainError("psi_deviation_check: gamma must exceed gamma_1");
    double worst = 0.0;
    for (const cplx z : samples) {
        if (!(z.real() > gamma)) throw DomainError("psi_deviation_check: sample outside Re z > gamma");
        const cplx p = psi(kernel, z);
        for (double a : spec.eigenvalues()) {
            const double v = std::abs(1.0 - p * std::pow(a, -2.0 * (1.0 - xi)));
            worst = std::max(worst, v);
        }
    }
    return worst;
}

std::vector<cplx> sample_half_plane(double gamma, std::size_t count, std::uint64_t seed, double x_span, double y_span) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(0.0, 1.0), uy(-y_span, y_span);
    std::vector<cplx> out(count);
    for (auto& z : out) {
        // 1 - U lies in (0, 1], so Re z > gamma strictly
        z = {gamma + x_span * (1.0 - ux(rng)), uy(rng)};
    }
    return out;
}

}  // namespace vklab
