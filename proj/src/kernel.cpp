#include "vklab/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "vklab/errors.hpp"

namespace vklab {

void KernelFamily::validate() const {
    if (!(amp_A > 0.0) || !(rate_B > 0.0))
        throw RegimeError("kernel family: amp_A and rate_B must be positive");
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw RegimeError("kernel family: alpha must lie in (0, 1]");
    if (!(beta > 0.0) || !(alpha + beta > 1.0))
        throw RegimeError("kernel family: need beta > 0 and alpha + beta > 1");
}

double KernelFamily::tail_bound(std::size_t N) const {
    const double s = alpha + beta;
    if (N == 0) return std::numeric_limits<double>::infinity();
    return amp_A / (rate_B * (s - 1.0) * std::pow(static_cast<double>(N), s - 1.0));
}

std::size_t KernelFamily::terms_for_tail(double tail) const {
    validate();
    if (!(tail > 0.0)) throw DomainError("terms_for_tail: tail must be positive");
    const double s = alpha + beta;
    const double n = std::pow(amp_A / (rate_B * (s - 1.0) * tail), 1.0 / (s - 1.0));
    auto N = static_cast<std::size_t>(std::ceil(n));
    N = std::max<std::size_t>(N, 1);
    while (tail_bound(N) >= tail) ++N;
    return N;
}

PronyKernel::PronyKernel(std::vector<KernelTerm> terms) : terms_(std::move(terms)) {
    for (std::size_t k = 0; k < terms_.size(); ++k) {
        const auto& t = terms_[k];
        if (!(t.c > 0.0) || !std::isfinite(t.c)) {
            std::ostringstream os;
            os << "invalid kernel: c_" << k + 1 << " = " << t.c << " is not positive";
            throw InvalidKernel(os.str());
        }
        if (!(t.gamma > 0.0) || !std::isfinite(t.gamma)) {
            std::ostringstream os;
            os << "invalid kernel: gamma_" << k + 1 << " = " << t.gamma << " is not positive";
            throw InvalidKernel(os.str());
        }
        if (k > 0 && !(t.gamma > terms_[k - 1].gamma)) {
            std::ostringstream os;
            os << "invalid kernel: rates not strictly increasing at k = " << k + 1;
            throw InvalidKernel(os.str());
        }
    }
}

PronyKernel PronyKernel::truncated(std::size_t N) const {
    PronyKernel out;
    out.terms_.assign(terms_.begin(), terms_.begin() + static_cast<std::ptrdiff_t>(std::min(N, terms_.size())));
    out.origin_ = origin_;
    if (out.origin_ && N < terms_.size()) {
        out.origin_->tail_bound = out.origin_->family.tail_bound(N);
    }
    return out;
}

double PronyKernel::sum_c() const {
    double s = 0.0;
    for (const auto& t : terms_) s += t.c;
    return s;
}

double PronyKernel::sum_c_over_gamma() const {
    double s = 0.0;
    for (const auto& t : terms_) s += t.c / t.gamma;
    return s;
}

KernelValidationReport validate_kernel(const PronyKernel& kernel) {
    if (kernel.empty()) throw InvalidKernel("validate_kernel: kernel has no terms");
    KernelValidationReport rep;
    rep.sum_c_over_gamma = kernel.sum_c_over_gamma();
    rep.condition4_ok = rep.sum_c_over_gamma < 1.0;
    rep.sum_c = kernel.sum_c();
    if (const auto& origin = kernel.origin()) {
        // sum c_k = A sum k^-alpha is finite iff alpha > 1, which the family excludes.
        rep.sum_c_infinite = !(origin->family.alpha > 1.0);
        rep.condition5_ok = !rep.sum_c_infinite;
        rep.tail_bound = origin->tail_bound;
        rep.condition4_limit_ok = rep.sum_c_over_gamma + origin->tail_bound < 1.0;
    } else {
        rep.sum_c_infinite = false;
        rep.condition5_ok = std::isfinite(rep.sum_c);
    }
    if (kernel.size() >= 2) rep.ivanov_diagnostic = ivanov_condition_diagnostic(kernel).values;
    return rep;
}

double eval_kernel(const PronyKernel& kernel, double t) {
    if (!(t >= 0.0)) throw DomainError("eval_kernel: t must be nonnegative");
    double s = 0.0;
    for (const auto& term : kernel.terms()) s += term.c * std::exp(-term.gamma * t);
    return s;
}

std::complex<double> psi(std::span<const KernelTerm> terms, std::complex<double> zeta) {
    const double guard = kPoleGuard * (1.0 + std::abs(zeta));
    std::complex<double> s = 0.0;
    for (const auto& term : terms) {
        const std::complex<double> d = zeta + term.gamma;
        if (std::abs(d) < guard) {
            std::ostringstream os;
            os << "psi: zeta = " << zeta << " hits the pole at -" << term.gamma;
            throw PoleError(os.str(), -term.gamma);
        }
        s += term.c / d;
    }
    return s;
}

PronyKernel generate_family(const KernelFamily& family, std::size_t N, bool allow_rescale) {
    family.validate();
    if (N == 0) throw DomainError("generate_family: N must be at least 1");

    std::vector<KernelTerm> terms(N);
    double stored = 0.0;
    for (std::size_t k = 1; k <= N; ++k) {
        const double kk = static_cast<double>(k);
        terms[k - 1] = {family.amp_A / std::pow(kk, family.alpha), family.rate_B * std::pow(kk, family.beta)};
        stored += terms[k - 1].c / terms[k - 1].gamma;
    }
    const double tail = family.tail_bound(N);

    FamilyOrigin origin{family, family, 1.0, tail};
    if (stored + tail >= 1.0) {
        if (!allow_rescale) {
            std::ostringstream os;
            os << "generate_family: sum c/gamma (stored " << stored << " + tail bound " << tail << ") >= 1";
            throw FamilyInfeasible(os.str());
        }
        const double factor = kFamilyRescaleTarget / (stored + tail);
        origin.rescale_factor = factor;
        origin.family.amp_A *= factor;
        origin.tail_bound = tail * factor;
        for (auto& t : terms) t.c *= factor;
    }

    PronyKernel out(std::move(terms));
    out.origin_ = origin;
    return out;
}

IvanovDiagnostic ivanov_condition_diagnostic(const PronyKernel& kernel) {
    if (kernel.size() < 2) throw InvalidKernel("ivanov_condition_diagnostic: need at least two terms");
    IvanovDiagnostic d;
    const auto terms = kernel.terms();
    d.values.reserve(terms.size() - 1);
    for (std::size_t k = 0; k + 1 < terms.size(); ++k)
        d.values.push_back(terms[k].gamma * (terms[k + 1].gamma - terms[k].gamma));
    d.increasing = true;
    for (std::size_t k = 1; k < d.values.size(); ++k)
        if (!(d.values[k] > d.values[k - 1])) d.increasing = false;
    if (d.values.size() < 2) d.increasing = false;
    // For gamma_k ~ B k^beta the gaps behave like k^(beta - p) with p = 1,
    // and the supremum is infinite iff p < 2 beta.
    if (const auto& origin = kernel.origin()) d.family_holds = 1.0 < 2.0 * origin->family.beta;
    return d;
}

}  // namespace vklab
