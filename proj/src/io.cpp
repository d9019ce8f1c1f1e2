#include "vklab/io.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "vklab/errors.hpp"

namespace vklab {

namespace {

double number(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number()) throw InvalidInput(std::string("missing or non-numeric field '") + key + "'");
    return j[key].get<double>();
}

std::size_t count(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number_integer() || j[key].get<long long>() < 0)
        throw InvalidInput(std::string("field '") + key + "' must be a nonnegative integer");
    return j[key].get<std::size_t>();
}

json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

// NaN and infinities become null.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

PronyKernel kernel_from_json(const json& j) {
    if (!j.is_object()) throw InvalidInput("kernel: expected an object");
    if (j.contains("family")) {
        const auto& f = j["family"];
        KernelFamily fam{number(f, "amp_A"), number(f, "rate_B"), number(f, "alpha"), number(f, "beta")};
        const bool rescale = f.value("allow_rescale", true);
        return generate_family(fam, count(f, "N"), rescale);
    }
    if (!j.contains("terms") || !j["terms"].is_array()) throw InvalidInput("kernel: expected 'terms' or 'family'");
    std::vector<KernelTerm> terms;
    for (const auto& t : j["terms"]) {
        if (!t.is_array() || t.size() != 2 || !t[0].is_number() || !t[1].is_number())
            throw InvalidInput("kernel: each term must be [c, gamma]");
        terms.push_back({t[0].get<double>(), t[1].get<double>()});
    }
    return PronyKernel(std::move(terms));
}

json kernel_to_json(const PronyKernel& k) {
    json j;
    if (const auto& o = k.origin()) {
        j["family"] = {{"amp_A", o->requested.amp_A},
                       {"rate_B", o->requested.rate_B},
                       {"alpha", o->requested.alpha},
                       {"beta", o->requested.beta},
                       {"N", k.size()},
                       {"allow_rescale", true}};
        j["rescale_factor"] = o->rescale_factor;
        j["tail_bound"] = o->tail_bound;
    }
    json terms = json::array();
    for (const auto& t : k.terms()) terms.push_back(json::array({t.c, t.gamma}));
    j["terms"] = std::move(terms);
    return j;
}

OperatorSpectrum spectrum_from_json(const json& j) {
    if (!j.is_object()) throw InvalidInput("operator: expected an object");
    if (j.contains("power_law")) {
        const auto& p = j["power_law"];
        const double p_exp = number(p, "p");
        if (p_exp != 1.0 && p_exp != 2.0) throw InvalidInput("operator: power_law p must be 1 or 2");
        return OperatorSpectrum::power_law(number(p, "L"), static_cast<int>(p_exp), count(p, "M"));
    }
    if (!j.contains("eigenvalues") || !j["eigenvalues"].is_array())
        throw InvalidInput("operator: expected 'eigenvalues' or 'power_law'");
    std::vector<double> a;
    for (const auto& v : j["eigenvalues"]) {
        if (!v.is_number()) throw InvalidInput("operator: eigenvalues must be numbers");
        a.push_back(v.get<double>());
    }
    return OperatorSpectrum(std::move(a));
}

json spectrum_to_json(const OperatorSpectrum& s) {
    if (s.generator() == SpectrumGenerator::power_law)
        return {{"power_law", {{"L", s.length()}, {"p", s.power()}, {"M", s.size()}}}};
    return {{"eigenvalues", std::vector<double>(s.eigenvalues().begin(), s.eigenvalues().end())}};
}

Forcing forcing_from_json(const json& j) {
    Forcing f;
    if (j.is_null()) return f;
    if (!j.is_object() || !j.contains("terms") || !j["terms"].is_array())
        throw InvalidInput("forcing: expected {\"terms\": [...]}");
    for (const auto& t : j["terms"]) {
        if (!t.is_object() || !t.contains("shape")) throw InvalidInput("forcing: each term needs a 'shape'");
        const std::string shape = t["shape"].get<std::string>();
        const double amp = number(t, "amp");
        const double sigma = t.value("sigma", 0.0);
        if (shape == "exp") {
            f.terms.push_back(exp_term(amp, sigma));
        } else if (shape == "cos") {
            f.terms.push_back(cos_term(amp, sigma, number(t, "omega")));
        } else if (shape == "sin") {
            f.terms.push_back(sin_term(amp, sigma, number(t, "omega")));
        } else if (shape == "polyexp") {
            f.terms.push_back(polyexp_term(amp, static_cast<unsigned>(count(t, "power")), sigma));
        } else {
            throw InvalidInput("forcing: unknown shape '" + shape + "'");
        }
    }
    f.expand();  // validates
    return f;
}

json forcing_to_json(const Forcing& f) {
    json terms = json::array();
    for (const auto& t : f.terms) {
        json e;
        if (t.trig == Trig::cos)
            e["shape"] = "cos";
        else if (t.trig == Trig::sin)
            e["shape"] = "sin";
        else
            e["shape"] = t.power > 0 ? "polyexp" : "exp";
        e["amp"] = t.amp;
        e["sigma"] = t.sigma;
        if (t.trig != Trig::none) e["omega"] = t.omega;
        if (t.power > 0) e["power"] = t.power;
        terms.push_back(std::move(e));
    }
    return {{"terms", std::move(terms)}};
}

json to_json(const RealRoot& r) {
    return {{"k", r.k},           {"value", r.value},         {"anchor", r.anchor},
            {"offset", r.offset}, {"bracket_lo", r.bracket_lo}, {"bracket_hi", r.bracket_hi},
            {"residual", num(r.residual)}, {"scale", r.scale},  {"simple", r.simple},
            {"iterations", r.iterations}};
}

json to_json(const SpectrumResult& r) {
    json j;
    j["n"] = r.n;
    j["a"] = r.a;
    j["xi"] = r.xi;
    j["N"] = r.N;
    json mu = json::array(), x = json::array();
    for (const auto& z : r.real_zeros) mu.push_back(to_json(z));
    for (const auto& z : r.companion_zeros) x.push_back(to_json(z));
    j["real_zeros"] = std::move(mu);
    j["companion_zeros"] = std::move(x);
    j["pair"] = {{"plus", complex_json(r.pair.plus)},
                 {"delta", complex_json(r.pair.delta)},
                 {"residual", num(r.pair.residual)},
                 {"iterations", r.pair.iterations},
                 {"start", r.pair.start}};
    j["vieta"] = {{"sum_rel", num(r.vieta.sum_rel)},
                  {"product_rel", num(r.vieta.product_rel)},
                  {"zero_count", r.vieta.zero_count}};
    return j;
}

json to_json(const AsymptoticPrediction& p) {
    json j;
    j["regime"] = to_string(p.regime);
    j["value"] = complex_json(p.value);
    j["delta"] = complex_json(p.delta);
    j["re_order"] = num(p.re_order);
    j["im_order"] = num(p.im_order);
    j["re_correction"] = num(p.re_correction);
    j["im_correction"] = num(p.im_correction);
    if (p.literal_value) j["literal_value"] = complex_json(*p.literal_value);
    if (p.D) j["D"] = complex_json(*p.D);
    return j;
}

json to_json(const TheoreticalBound& b) {
    return {{"gamma", b.gamma},
            {"k0", b.k0},
            {"sector_branch", num(b.sector_branch)},
            {"real_branch", num(b.real_branch)},
            {"bound", num(b.bound)},
            {"real_branch_binds", b.real_branch_binds},
            {"real_branch_valid", b.real_branch_valid},
            {"harmonic", b.harmonic}};
}

json to_json(const BoundReport& r) {
    return {{"gamma", r.gamma},
            {"k0", r.k0},
            {"theoretical", to_json(r.theoretical)},
            {"empirical_sup", r.empirical_sup},
            {"arg_n", r.arg_n},
            {"arg_zeta", complex_json(r.arg_zeta)},
            {"per_n_sup", r.per_n_sup},
            {"skipped", r.skipped},
            {"evaluated", r.evaluated},
            {"holds", r.holds()}};
}

json to_json(const InterleavingReport& r) {
    auto vec = [](const std::vector<bool>& v) {
        json a = json::array();
        for (bool b : v) a.push_back(b);
        return a;
    };
    return {{"pole_below_mu", vec(r.pole_below_mu)},
            {"mu_below_x", vec(r.mu_below_x)},
            {"x_below_pole", vec(r.x_below_pole)},
            {"all", r.all()}};
}

json to_json(const PlancherelResult& r) {
    return {{"time_side", r.time_side},       {"frequency_side", r.frequency_side},
            {"gap", r.gap},                   {"tail_estimate", r.tail_estimate},
            {"span_warning", r.span_warning}, {"sup_at_gamma", r.sup_at_gamma}};
}

void write_zeros_csv_header(std::ostream& os) { os << "n,k,mu,x,bracket_lo,bracket_hi,residual\n"; }

void write_zeros_csv(std::ostream& os, const SpectrumResult& r) {
    for (std::size_t i = 0; i < r.real_zeros.size(); ++i) {
        const auto& mu = r.real_zeros[i];
        const double x = i < r.companion_zeros.size() ? r.companion_zeros[i].value : std::nan("");
        os << r.n << ',' << mu.k << ',' << fmt17(mu.value) << ',' << fmt17(x) << ',' << fmt17(mu.bracket_lo) << ','
           << fmt17(mu.bracket_hi) << ',' << fmt17(mu.residual) << '\n';
    }
}

void write_pair_csv_header(std::ostream& os) { os << "n,re_pair,im_pair,predicted_re,predicted_im\n"; }

void write_pair_csv(std::ostream& os, const SpectrumResult& r, const AsymptoticPrediction& p) {
    os << r.n << ',' << fmt17(r.pair.plus.real()) << ',' << fmt17(r.pair.plus.imag()) << ',' << fmt17(p.value.real())
       << ',' << fmt17(p.value.imag()) << '\n';
}

void write_grid_csv(std::ostream& os, const BoundReport& r) {
    os << "n,re_zeta,im_zeta,value\n";
    for (const auto& s : r.samples) os << s.n << ',' << fmt17(s.re) << ',' << fmt17(s.im) << ',' << fmt17(s.value) << '\n';
}

}  // namespace vklab
