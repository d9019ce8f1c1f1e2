#include "vklab/cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <boost/version.hpp>

#include "vklab/errors.hpp"
#include "vklab/io.hpp"
#include "vklab/norms.hpp"
#include "vklab/parallel.hpp"
#include "vklab/solver.hpp"
#include "vklab/spectrum.hpp"
#include "vklab/symbol.hpp"

namespace fs = std::filesystem;

namespace vklab {

namespace {

constexpr std::uint64_t kDefaultSeed = 20240601;

const std::set<std::string> kCommands{"spectrum", "bound", "solve", "verify-estimate", "asymptotics", "plancherel"};

const std::set<std::string> kConfigKeys{"command", "kernel",  "operator", "xi",        "gamma_w",   "gammas",
                                        "sweep",   "tolerances", "forcing", "forcing_modes", "phi0", "phi1",
                                        "horizon", "branch",  "grid",     "psi_samples", "forcings", "y_span",
                                        "oracle",  "binary",  "out",      "threads",   "seed"};

struct Context {
    std::string command;
    json config;
    fs::path config_dir;
    fs::path out;
    unsigned threads = 1;
    std::uint64_t seed = kDefaultSeed;
    std::vector<std::string> outputs;
    json summary = json::object();  // command-specific fields echoed into the manifest
};

json load_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InvalidInput("malformed JSON in '" + path.string() + "': " + e.what());
    }
}

// An object with "file" is replaced by the JSON document it names (relative to the config).
json resolve(const Context& ctx, const json& j) {
    if (j.is_object() && j.contains("file")) {
        fs::path p = j["file"].get<std::string>();
        if (p.is_relative()) p = ctx.config_dir / p;
        if (!fs::exists(p)) throw InvalidInput("referenced file does not exist: " + p.string());
        return load_json_file(p);
    }
    return j;
}

double positive(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number() || !(j[key].get<double>() > 0.0))
        throw InvalidInput(std::string("'") + key + "' must be a positive number");
    return j[key].get<double>();
}

PronyKernel kernel_of(const Context& ctx) {
    if (!ctx.config.contains("kernel")) return PronyKernel();
    return kernel_from_json(resolve(ctx, ctx.config["kernel"]));
}

OperatorSpectrum operator_of(const Context& ctx) {
    if (!ctx.config.contains("operator")) throw InvalidInput("config: 'operator' is required for this command");
    return spectrum_from_json(resolve(ctx, ctx.config["operator"]));
}

double xi_of(const Context& ctx) {
    const double xi = ctx.config.value("xi", 0.0);
    if (!(xi >= 0.0 && xi <= 1.0)) throw InvalidInput("config: xi must lie in [0, 1]");
    return xi;
}

const json& tolerances(const Context& ctx) {
    static const json empty = json::object();
    return ctx.config.contains("tolerances") ? ctx.config["tolerances"] : empty;
}

RootOptions root_options(const Context& ctx) {
    RootOptions o;
    const auto& t = tolerances(ctx);
    o.tol_root = positive(t, "tol_root", o.tol_root);
    o.pole_eps = positive(t, "pole_eps", o.pole_eps);
    return o;
}

std::vector<double> a_sweep(const Context& ctx) {
    const auto& s = ctx.config["sweep"];
    if (s.contains("a_values")) return s["a_values"].get<std::vector<double>>();
    const double lo = positive(s, "a_min", 0.0), hi = positive(s, "a_max", 0.0);
    const auto n = s.value("count", std::size_t{0});
    if (!(lo > 0.0) || !(hi >= lo) || n < 1) throw InvalidInput("sweep: need a_values or a_min <= a_max and count >= 1");
    std::vector<double> a(n);
    const bool log = s.value("log", true);
    for (std::size_t i = 0; i < n; ++i) {
        const double f = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
        a[i] = log ? lo * std::pow(hi / lo, f) : lo + (hi - lo) * f;
    }
    return a;
}

// amp * n^-power profile or explicit per-mode values.
ModeVector mode_data(const json& j, std::size_t M, const char* name) {
    if (j.is_null()) return ModeVector::zeros(M);
    std::vector<double> v(M, 0.0);
    if (j.contains("values")) {
        v = j["values"].get<std::vector<double>>();
        if (v.size() != M) throw InvalidInput(std::string("config: ") + name + " values must have one entry per mode");
    } else {
        const double amp = j.value("amp", 0.0), power = j.value("power", 0.0);
        for (std::size_t n = 0; n < M; ++n) v[n] = amp * std::pow(static_cast<double>(n + 1), -power);
    }
    return ModeVector::real(v);
}

std::vector<Forcing> forcing_of(const Context& ctx, std::size_t M) {
    const auto& c = ctx.config;
    if (c.contains("forcing_modes")) {
        std::vector<Forcing> f;
        for (const auto& m : c["forcing_modes"]) f.push_back(forcing_from_json(m));
        if (f.size() != M) throw InvalidInput("config: forcing_modes must have one entry per mode");
        return f;
    }
    if (!c.contains("forcing")) return {};
    const Forcing base = forcing_from_json(c["forcing"]);
    const double power = c["forcing"].value("profile_power", 0.0);
    std::vector<Forcing> f;
    for (std::size_t n = 0; n < M; ++n) f.push_back(base.scaled(std::pow(static_cast<double>(n + 1), -power)));
    return f;
}

Problem problem_of(const Context& ctx, const OperatorSpectrum& spec) {
    Problem p(kernel_of(ctx), spec, xi_of(ctx));
    const auto& c = ctx.config;
    const std::size_t M = spec.size();
    p.phi0 = mode_data(c.value("phi0", json()), M, "phi0");
    p.phi1 = mode_data(c.value("phi1", json()), M, "phi1");
    p.forcing = forcing_of(ctx, M);
    p.gamma_w = positive(c, "gamma_w", p.gamma_w);
    if (c.contains("horizon")) p.horizon = positive(c, "horizon", 1.0);
    const auto& t = tolerances(ctx);
    p.tol_ode = positive(t, "tol_ode", p.tol_ode);
    p.samples_per_period = positive(t, "samples_per_period", p.samples_per_period);
    p.max_horizon = positive(t, "max_horizon", p.max_horizon);
    p.threads = ctx.threads;
    p.validate();
    return p;
}

std::ofstream open_out(Context& ctx, const std::string& name) {
    std::ofstream os(ctx.out / name, std::ios::binary);
    if (!os) throw InvalidInput("cannot write '" + (ctx.out / name).string() + "'");
    ctx.outputs.push_back(name);
    return os;
}

void write_json(Context& ctx, const std::string& name, const json& j) {
    auto os = open_out(ctx, name);
    os << j.dump(2) << '\n';
}

// ---- commands -------------------------------------------------------------

void cmd_spectrum(Context& ctx) {
    const PronyKernel kernel = kernel_of(ctx);
    const double xi = xi_of(ctx);
    const RootOptions opt = root_options(ctx);
    std::vector<double> a;
    if (ctx.config.contains("sweep"))
        a = a_sweep(ctx);
    else {
        const auto s = operator_of(ctx);
        a.assign(s.eigenvalues().begin(), s.eigenvalues().end());
    }
    const bool family = kernel.origin().has_value() && !validate_kernel(kernel).condition5_ok;
    std::vector<SpectrumResult> results(a.size());
    std::vector<AsymptoticPrediction> pred(a.size());
    std::vector<InterleavingReport> inter(a.size());
    parallel_for(a.size(), ctx.threads, [&](std::size_t i) {
        const SymbolContext sc(kernel, a[i], xi);
        results[i] = compute_spectrum(sc, i + 1, opt);
        inter[i] = verify_interleaving(results[i], kernel);
        pred[i] = family ? predict_pair_infinite(kernel.origin()->family, a[i], xi) : predict_pair_finite(sc);
    });
    json out;
    out["kernel"] = kernel_to_json(kernel);
    out["xi"] = xi;
    json arr = json::array();
    bool all_interleave = true;
    double worst_vieta = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        json r = to_json(results[i]);
        r["interleaving"] = to_json(inter[i]);
        r["prediction"] = to_json(pred[i]);
        arr.push_back(std::move(r));
        all_interleave = all_interleave && inter[i].all();
        worst_vieta = std::max({worst_vieta, results[i].vieta.sum_rel, results[i].vieta.product_rel});
    }
    out["results"] = std::move(arr);
    write_json(ctx, "spectrum.json", out);
    auto zeros = open_out(ctx, "zeros.csv");
    write_zeros_csv_header(zeros);
    for (const auto& r : results) write_zeros_csv(zeros, r);
    auto pairs = open_out(ctx, "pair.csv");
    write_pair_csv_header(pairs);
    for (std::size_t i = 0; i < a.size(); ++i) write_pair_csv(pairs, results[i], pred[i]);
    ctx.summary = {{"modes", a.size()}, {"interleaving", all_interleave}, {"worst_vieta", worst_vieta}};
}

void cmd_bound(Context& ctx) {
    const PronyKernel kernel = kernel_of(ctx);
    const OperatorSpectrum spec = operator_of(ctx);
    const double xi = xi_of(ctx);
    std::vector<double> gammas;
    if (ctx.config.contains("gammas"))
        gammas = ctx.config["gammas"].get<std::vector<double>>();
    else
        gammas.push_back(positive(ctx.config, "gamma_w", default_gamma_w(kernel)));
    GridConfig grid;
    if (ctx.config.contains("grid")) {
        const auto& g = ctx.config["grid"];
        grid.x_slices = g.value("x_slices", grid.x_slices);
        grid.x_span = g.value("x_span", grid.x_span);
        grid.log_nodes = g.value("log_nodes", grid.log_nodes);
        grid.y_min = g.value("y_min", grid.y_min);
        grid.resonance_nodes = g.value("resonance_nodes", grid.resonance_nodes);
        grid.polish = g.value("polish", grid.polish);
        grid.keep_samples = g.value("keep_samples", grid.keep_samples);
    }
    const auto psi_samples = ctx.config.value("psi_samples", std::size_t{1000});
    json reports = json::array();
    bool holds = true;
    for (std::size_t gi = 0; gi < gammas.size(); ++gi) {
        const double gamma = gammas[gi];
        k0(gamma, kernel);  // RegimeError for the empty kernel or gamma <= gamma_1
        const BoundReport r = empirical_sup(gamma, kernel, spec, xi, grid, ctx.threads);
        json j = to_json(r);
        if (psi_samples > 0) {
            const auto z = sample_half_plane(gamma, psi_samples, ctx.seed + gi);
            const double dev = psi_deviation_check(kernel, spec, xi, gamma, z);
            j["psi_deviation"] = {{"samples", psi_samples}, {"max", dev}, {"below_two", dev < 2.0}};
        }
        reports.push_back(std::move(j));
        holds = holds && r.holds();
        if (grid.keep_samples) {
            auto os = open_out(ctx, "grid_" + std::to_string(gi + 1) + ".csv");
            write_grid_csv(os, r);
        }
    }
    write_json(ctx, "bound.json", {{"kernel", kernel_to_json(kernel)},
                                   {"operator", spectrum_to_json(spec)},
                                   {"xi", xi},
                                   {"seed", ctx.seed},
                                   {"reports", std::move(reports)}});
    ctx.summary = {{"holds", holds}};
}

void cmd_solve(Context& ctx) {
    const Problem p = problem_of(ctx, operator_of(ctx));
    const Trajectory traj = integrate(p);
    {
        auto os = open_out(ctx, "trajectory.csv");
        write_trajectory_csv(os, traj);
    }
    if (ctx.config.value("binary", false)) {
        auto os = open_out(ctx, "trajectory.bin");
        write_trajectory_binary(os, traj);
    }
    const ResidualReport res = equation_residual(traj, p);
    json modes = json::array();
    double worst_oracle = 0.0;
    const bool oracle = ctx.config.value("oracle", false);
    for (std::size_t n = 0; n < traj.M(); ++n) {
        const auto& m = traj.modes[n];
        json j = {{"n", n + 1},
                  {"a", p.spec[n]},
                  {"accepted", traj.stats[n].accepted},
                  {"rejected", traj.stats[n].rejected},
                  {"exponential_steps", traj.stats[n].exponential_steps},
                  {"residual", res.residual[n]},
                  {"residual_scale", res.scale[n]},
                  {"ic_error", {std::abs(m.u.front() - p.phi0_at(n)), std::abs(m.du.front() - p.phi1_at(n))}}};
        if (oracle) {
            try {
                const ModeTrajectory r = residue_solution(p, n, traj.t, root_options(ctx));
                double diff = 0.0, scale = 0.0;
                for (std::size_t i = 0; i < traj.size(); ++i) {
                    diff = std::max(diff, std::abs(m.u[i] - r.u[i]));
                    scale = std::max(scale, std::abs(r.u[i]));
                }
                const double rel = scale > 0.0 ? diff / scale : diff;
                j["oracle_rel_linf"] = rel;
                worst_oracle = std::max(worst_oracle, rel);
            } catch (const OracleUnavailable& e) {
                j["oracle_rel_linf"] = nullptr;
                j["oracle_note"] = e.what();
            }
        }
        modes.push_back(std::move(j));
    }
    json out = {{"horizon", traj.t.back()},
                {"grid_size", traj.size()},
                {"horizon_capped", traj.horizon_capped},
                {"tol_ode", p.tol_ode},
                {"gamma_w", p.gamma_w},
                {"max_relative_residual", res.max_relative()},
                {"modes", std::move(modes)}};
    if (oracle) out["worst_oracle_rel_linf"] = worst_oracle;
    write_json(ctx, "solve.json", out);
    ctx.summary = {{"horizon", traj.t.back()}, {"max_relative_residual", res.max_relative()}};
}

void cmd_verify_estimate(Context& ctx) {
    const OperatorSpectrum full = operator_of(ctx);
    std::optional<int> branch;
    if (ctx.config.contains("branch")) branch = ctx.config["branch"].get<int>();
    if (branch && *branch == 2 && xi_of(ctx) == 0.0)
        throw RegimeError("verify-estimate: the estimate without a finite sum c_k needs xi in (0, 1]");
    std::vector<std::size_t> Ms;
    if (ctx.config.contains("sweep") && ctx.config["sweep"].contains("M_values"))
        Ms = ctx.config["sweep"]["M_values"].get<std::vector<std::size_t>>();
    else
        Ms.push_back(full.size());
    json reports = json::array();
    auto csv = open_out(ctx, "estimate.csv");
    csv << "quantity,lhs,rhs,pass\n";
    double dmin = std::numeric_limits<double>::infinity(), dmax = 0.0;
    bool checks = true;
    for (std::size_t M : Ms) {
        OperatorSpectrum spec = full;
        if (full.generator() == SpectrumGenerator::power_law && M != full.size())
            spec = OperatorSpectrum::power_law(full.length(), full.power(), M);
        else if (M != full.size())
            spec = full.truncated(M);
        const Problem p = problem_of(ctx, spec);
        const Trajectory traj = integrate(p);
        const EstimateReport r = verify_estimate(p, traj, branch);
        std::ostringstream js;
        write_estimate_json(js, r);
        json j = json::parse(js.str());
        j["M"] = M;
        j["horizon"] = traj.t.back();
        reports.push_back(std::move(j));
        const std::string tag = "[M=" + std::to_string(M) + "]";
        if (r.empirical_d) {
            csv << "estimate" << tag << ',' << fmt17(r.lhs.norm) << ',' << fmt17(*r.empirical_d * r.rhs_sum) << ",1\n";
            dmin = std::min(dmin, *r.empirical_d);
            dmax = std::max(dmax, *r.empirical_d);
        }
        if (!r.homogeneous) continue;
        csv << "d1" << tag << ',' << fmt17(r.d1_check.lhs) << ',' << fmt17(r.d1_check.rhs) << ','
            << (r.d1_check.pass() ? 1 : 0) << '\n';
        csv << "d2" << tag << ',' << fmt17(r.d2_check.lhs) << ',' << fmt17(r.d2_check.rhs) << ','
            << (r.d2_check.pass() ? 1 : 0) << '\n';
        checks = checks && r.d1_check.pass() && r.d2_check.pass();
    }
    json out = {{"reports", std::move(reports)}};
    if (dmax > 0.0) out["empirical_d_ratio"] = dmax / dmin;
    write_json(ctx, "estimate.json", out);
    ctx.summary = {{"d_checks_pass", checks}};
    if (dmax > 0.0) ctx.summary["empirical_d_ratio"] = dmax / dmin;
}

void cmd_asymptotics(Context& ctx) {
    const PronyKernel kernel = kernel_of(ctx);
    const double xi = xi_of(ctx);
    const RootOptions opt = root_options(ctx);
    if (!ctx.config.contains("sweep")) throw InvalidInput("asymptotics: 'sweep' is required");
    const std::vector<double> a = a_sweep(ctx);
    json out;
    out["kernel"] = kernel_to_json(kernel);
    out["xi"] = xi;
    out["a_values"] = a;

    const bool family = kernel.origin().has_value() && !validate_kernel(kernel).condition5_ok;
    json pairs = json::array();
    auto pcsv = open_out(ctx, "pairs.csv");
    pcsv << "a,re_found,im_found,re_predicted,im_predicted\n";
    std::vector<ComplexPair> found(a.size());
    std::vector<AsymptoticPrediction> pred(a.size());
    parallel_for(a.size(), ctx.threads, [&](std::size_t i) {
        const SymbolContext sc(kernel, a[i], xi);
        const auto zeros = find_real_zeros(sc, opt);
        found[i] = find_complex_pair(sc, &zeros, opt);
        pred[i] = family ? predict_pair_infinite(kernel.origin()->family, a[i], xi) : predict_pair_finite(sc);
    });
    for (std::size_t i = 0; i < a.size(); ++i) {
        pairs.push_back({{"a", a[i]}, {"found", {found[i].plus.real(), found[i].plus.imag()}}, {"prediction", to_json(pred[i])}});
        pcsv << fmt17(a[i]) << ',' << fmt17(found[i].plus.real()) << ',' << fmt17(found[i].plus.imag()) << ','
             << fmt17(pred[i].value.real()) << ',' << fmt17(pred[i].value.imag()) << '\n';
    }
    out["pairs"] = std::move(pairs);

    if (!kernel.empty() && a.size() >= 6) {
        const GapRateFit fit = gap_rate_fit(kernel, a, xi, opt);
        json g = json::array();
        for (std::size_t k = 0; k < fit.gap_fits.size(); ++k)
            g.push_back({{"k", k + 1},
                         {"slope", std::isfinite(fit.gap_fits[k].slope) ? json(fit.gap_fits[k].slope) : json(nullptr)},
                         {"points", fit.gap_fits[k].points},
                         {"aborted", fit.gap_fits[k].aborted},
                         {"note", fit.gap_fits[k].note}});
        out["gap_fits"] = std::move(g);
        out["expected_gap_slope"] = fit.expected_gap_slope;
        out["pair_re_fit"] = {{"slope", fit.pair_re_fit.slope}, {"points", fit.pair_re_fit.points}};
        out["pair_im_fit"] = {{"slope", fit.pair_im_fit.slope}, {"points", fit.pair_im_fit.points}};
        auto gcsv = open_out(ctx, "gaps.csv");
        gcsv << "a,k,gap\n";
        for (std::size_t k = 0; k < fit.gaps.size(); ++k)
            for (std::size_t i = 0; i < fit.a_values.size(); ++i)
                gcsv << fmt17(fit.a_values[i]) << ',' << k + 1 << ',' << fmt17(fit.gaps[k][i]) << '\n';
    }
    if (!kernel.empty()) {
        json lim = json::array();
        for (const auto& l : limit_approach(kernel, a, xi, opt))
            lim.push_back({{"k", l.k}, {"offsets", l.offsets}, {"monotone", l.monotone}, {"final_offset", l.final_offset}});
        out["limit_approach"] = std::move(lim);
    }
    json dtab = json::array();
    for (int i = 1; i <= 9; ++i) {
        const double r = 0.1 * i;
        const cplx closed = constant_D(r), quad = constant_D_quadrature(r);
        dtab.push_back({{"r", r},
                        {"closed", {closed.real(), closed.imag()}},
                        {"quadrature", {quad.real(), quad.imag()}},
                        {"abs_diff", std::abs(closed - quad)}});
    }
    out["constant_D"] = std::move(dtab);
    write_json(ctx, "asymptotics.json", out);
}

void cmd_plancherel(Context& ctx) {
    const auto& c = ctx.config;
    const double gamma = positive(c, "gamma_w", 1.0);
    const double span = c.contains("y_span") ? positive(c, "y_span", 1.0) : std::numeric_limits<double>::infinity();
    std::vector<Forcing> fs;
    if (c.contains("forcings"))
        for (const auto& f : c["forcings"]) fs.push_back(forcing_from_json(f));
    else if (c.contains("forcing"))
        fs.push_back(forcing_from_json(c["forcing"]));
    else
        throw InvalidInput("plancherel: 'forcings' or 'forcing' is required");
    std::vector<PlancherelResult> res(fs.size());
    parallel_for(fs.size(), ctx.threads, [&](std::size_t i) { res[i] = plancherel_check(fs[i], gamma, span); });
    json arr = json::array();
    auto csv = open_out(ctx, "plancherel.csv");
    csv << "index,time_side,frequency_side,gap\n";
    double worst = 0.0;
    for (std::size_t i = 0; i < fs.size(); ++i) {
        json j = to_json(res[i]);
        j["forcing"] = forcing_to_json(fs[i]);
        arr.push_back(std::move(j));
        csv << i << ',' << fmt17(res[i].time_side) << ',' << fmt17(res[i].frequency_side) << ',' << fmt17(res[i].gap)
            << '\n';
        worst = std::max(worst, res[i].gap);
    }
    write_json(ctx, "plancherel.json", {{"gamma_w", gamma}, {"y_span", std::isfinite(span) ? json(span) : json("inf")},
                                        {"results", std::move(arr)}});
    ctx.summary = {{"worst_gap", worst}};
}

// ---- error payloads ----------------------------------------------------------

json error_payload(const std::exception& e) {
    json j = {{"message", e.what()}};
    if (const auto* b = dynamic_cast<const BracketingFailure*>(&e)) {
        j["type"] = "bracketing_failure";
        j["interval"] = {b->lo(), b->hi()};
        j["values"] = {b->f_lo(), b->f_hi()};
    } else if (const auto* s = dynamic_cast<const StiffnessFailure*>(&e)) {
        j["type"] = "stiffness_failure";
        j["mode"] = s->mode();
        j["stiffness_ratio"] = s->stiffness_ratio();
    } else if (const auto* p = dynamic_cast<const PoleError*>(&e)) {
        j["type"] = "pole_error";
        j["pole"] = p->pole();
    } else if (dynamic_cast<const ConvergenceFailure*>(&e)) {
        j["type"] = "convergence_failure";
    } else if (dynamic_cast<const OracleUnavailable*>(&e)) {
        j["type"] = "oracle_unavailable";
    } else if (dynamic_cast<const RegimeError*>(&e)) {
        j["type"] = "regime_error";
    } else if (dynamic_cast<const InvalidInput*>(&e)) {
        j["type"] = "invalid_input";
    } else {
        j["type"] = "error";
    }
    return j;
}

std::string timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

void write_manifest(const Context& ctx, int code, double wall, const std::string& started, const json& error) {
    json m;
    m["command"] = ctx.command;
    m["exit_code"] = code;
    m["config"] = ctx.config;
    m["threads"] = ctx.threads;
    m["seed"] = ctx.seed;
    m["versions"] = {{"vklab", kVersion},
                     {"compiler", __VERSION__},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"boost", BOOST_LIB_VERSION},
                     {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
    m["started_at"] = started;
    m["wall_time_s"] = wall;
    m["outputs"] = ctx.outputs;
    if (!ctx.summary.empty()) m["summary"] = ctx.summary;
    if (!error.is_null()) m["error"] = error;
    std::ofstream os(ctx.out / "manifest.json");
    os << m.dump(2) << '\n';
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"vklab: spectra, bounds and solutions of a wave equation with exponential memory"};
    app.set_version_flag("--version", kVersion);
    std::string command, config_path, out_dir;
    std::optional<unsigned> threads;
    std::optional<std::uint64_t> seed;
    app.add_option("command", command, "spectrum | bound | solve | verify-estimate | asymptotics | plancherel")
        ->required()
        ->check(CLI::IsMember(kCommands));
    app.add_option("--config", config_path, "JSON experiment config")->required();
    app.add_option("--out", out_dir, "output directory (default: config 'out' or ./vklab-out)");
    app.add_option("--threads", threads, "worker threads (fallback: VKLAB_THREADS)")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "seed for randomized sampling");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_invalid;
    }

    Context ctx;
    ctx.command = command;
    const auto t0 = std::chrono::steady_clock::now();
    const std::string started = timestamp();
    int code = exit_ok;
    json error;
    bool have_out = false;
    try {
        const fs::path cfg = config_path;
        std::optional<Error> load_error;
        try {
            ctx.config = load_json_file(cfg);
        } catch (const InvalidInput& e) {
            load_error = e;
        }
        // The manifest goes out even for a rejected config, so settle the directory first.
        ctx.out = !out_dir.empty() ? fs::path(out_dir) : fs::path("vklab-out");
        if (out_dir.empty() && ctx.config.is_object() && ctx.config.contains("out") && ctx.config["out"].is_string())
            ctx.out = ctx.config["out"].get<std::string>();
        fs::create_directories(ctx.out);
        have_out = true;
        if (load_error) throw InvalidInput(load_error->what());
        if (!ctx.config.is_object()) throw InvalidInput("config: top level must be an object");
        for (const auto& [key, _] : ctx.config.items())
            if (!kConfigKeys.count(key)) throw InvalidInput("config: unknown field '" + key + "'");
        if (ctx.config.contains("command") && ctx.config["command"].get<std::string>() != command)
            err << "note: command '" << command << "' overrides config command '"
                << ctx.config["command"].get<std::string>() << "'\n";
        ctx.config_dir = cfg.has_parent_path() ? cfg.parent_path() : fs::path(".");
        if (!threads && ctx.config.contains("threads")) threads = ctx.config["threads"].get<unsigned>();
        ctx.threads = resolve_threads(threads);
        ctx.seed = seed ? *seed : ctx.config.value("seed", kDefaultSeed);

        if (command == "spectrum")
            cmd_spectrum(ctx);
        else if (command == "bound")
            cmd_bound(ctx);
        else if (command == "solve")
            cmd_solve(ctx);
        else if (command == "verify-estimate")
            cmd_verify_estimate(ctx);
        else if (command == "asymptotics")
            cmd_asymptotics(ctx);
        else
            cmd_plancherel(ctx);
    } catch (const InvalidInput& e) {
        code = exit_invalid;
        error = error_payload(e);
    } catch (const json::exception& e) {
        code = exit_invalid;
        error = {{"type", "invalid_input"}, {"message", std::string("config: ") + e.what()}};
    } catch (const fs::filesystem_error& e) {
        code = exit_invalid;
        error = {{"type", "invalid_input"}, {"message", e.what()}};
    } catch (const Error& e) {
        code = exit_numerical;
        error = error_payload(e);
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!error.is_null()) err << "vklab " << command << ": " << error["message"].get<std::string>() << '\n';
    if (have_out) {
        if (!error.is_null()) {
            std::ofstream os(ctx.out / "error.json");
            os << error.dump(2) << '\n';
        }
        write_manifest(ctx, code, wall, started, error);
        if (code == exit_ok) out << "wrote " << ctx.outputs.size() + 1 << " files to " << ctx.out.string() << '\n';
    }
    return code;
}

}  // namespace vklab
