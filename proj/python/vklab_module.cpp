#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "vklab/cli.hpp"
#include "vklab/errors.hpp"
#include "vklab/io.hpp"
#include "vklab/norms.hpp"
#include "vklab/solver.hpp"
#include "vklab/spectrum.hpp"
#include "vklab/symbol.hpp"

namespace py = pybind11;
using namespace vklab;

namespace {

// nlohmann -> Python via the json module; only used for report dictionaries.
py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

PronyKernel make_kernel(const std::vector<std::pair<double, double>>& terms) {
    std::vector<KernelTerm> t;
    for (const auto& [c, g] : terms) t.push_back({c, g});
    return PronyKernel(std::move(t));
}

py::array_t<double> rows(const std::vector<std::vector<double>>& v) {
    const std::size_t n = v.size(), m = n ? v[0].size() : 0;
    py::array_t<double> a({n, m});
    auto r = a.mutable_unchecked<2>();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) r(i, j) = v[i][j];
    return a;
}

py::dict trajectory_dict(const Trajectory& tr) {
    std::vector<std::vector<double>> u, du, ddu;
    for (const auto& m : tr.modes) {
        u.push_back(m.u);
        du.push_back(m.du);
        ddu.push_back(m.ddu);
    }
    py::dict d;
    d["t"] = py::array_t<double>(tr.t.size(), tr.t.data());
    d["a"] = tr.a;
    d["u"] = rows(u);
    d["du"] = rows(du);
    d["ddu"] = rows(ddu);
    d["horizon_capped"] = tr.horizon_capped;
    return d;
}

Problem make_problem(const PronyKernel& k, const OperatorSpectrum& s, double xi, std::optional<std::vector<double>> phi0,
                     std::optional<std::vector<double>> phi1, std::optional<std::vector<Forcing>> forcing,
                     std::optional<double> horizon, std::optional<double> gamma_w, double tol_ode) {
    Problem p(k, s, xi);
    if (phi0) p.phi0 = ModeVector::real(*phi0);
    if (phi1) p.phi1 = ModeVector::real(*phi1);
    if (forcing) p.forcing = *forcing;
    p.horizon = horizon;
    if (gamma_w) p.gamma_w = *gamma_w;
    p.tol_ode = tol_ode;
    p.validate();
    return p;
}

}  // namespace

PYBIND11_MODULE(vklab, m) {
    m.doc() = "Spectra, resolvent bounds and solutions of a wave equation with exponential-sum memory";
    m.attr("__version__") = kVersion;

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<InvalidInput>(m, "InvalidInput", base.ptr());
    py::register_exception<NumericalFailure>(m, "NumericalFailure", base.ptr());
    // Subclasses must be registered after their bases so the most derived translator wins.
    py::register_exception<RegimeError>(m, "RegimeError", m.attr("InvalidInput").ptr());
    py::register_exception<OracleUnavailable>(m, "OracleUnavailable", m.attr("NumericalFailure").ptr());

    py::class_<PronyKernel>(m, "PronyKernel")
        .def(py::init<>())
        .def(py::init(&make_kernel), py::arg("terms"), "terms: list of (c, gamma)")
        .def_property_readonly("terms",
                               [](const PronyKernel& k) {
                                   std::vector<std::pair<double, double>> t;
                                   for (const auto& x : k.terms()) t.emplace_back(x.c, x.gamma);
                                   return t;
                               })
        .def("__len__", &PronyKernel::size)
        .def("sum_c_over_gamma", &PronyKernel::sum_c_over_gamma)
        .def("__call__", [](const PronyKernel& k, double t) { return eval_kernel(k, t); })
        .def("psi", [](const PronyKernel& k, cplx z) { return psi(k, z); });

    m.def("generate_family",
          [](double amp_A, double rate_B, double alpha, double beta, std::size_t N, bool allow_rescale) {
              return generate_family({amp_A, rate_B, alpha, beta}, N, allow_rescale);
          },
          py::arg("amp_A"), py::arg("rate_B"), py::arg("alpha"), py::arg("beta"), py::arg("N"),
          py::arg("allow_rescale") = true);
    m.def("validate_kernel", [](const PronyKernel& k) {
        const auto r = validate_kernel(k);
        py::dict d;
        d["sum_c_over_gamma"] = r.sum_c_over_gamma;
        d["condition4_ok"] = r.condition4_ok;
        d["condition5_ok"] = r.condition5_ok;
        d["sum_c"] = r.sum_c;
        d["sum_c_infinite"] = r.sum_c_infinite;
        d["tail_bound"] = r.tail_bound;
        return d;
    });

    py::class_<OperatorSpectrum>(m, "OperatorSpectrum")
        .def(py::init<std::vector<double>>(), py::arg("eigenvalues"))
        .def_static("power_law", &OperatorSpectrum::power_law, py::arg("L"), py::arg("p"), py::arg("M"))
        .def_property_readonly("eigenvalues",
                               [](const OperatorSpectrum& s) {
                                   return std::vector<double>(s.eigenvalues().begin(), s.eigenvalues().end());
                               })
        .def("__len__", &OperatorSpectrum::size);

    m.def("symbol", [](const PronyKernel& k, double a, double xi, cplx z) { return symbol_eval(SymbolContext(k, a, xi), z); },
          py::arg("kernel"), py::arg("a"), py::arg("xi"), py::arg("zeta"));
    m.def("compute_spectrum",
          [](const PronyKernel& k, double a, double xi) { return to_py(to_json(compute_spectrum(SymbolContext(k, a, xi)))); },
          py::arg("kernel"), py::arg("a"), py::arg("xi"), "Real zeros, companion zeros, complex pair and Vieta check");
    m.def("constant_D", &constant_D, py::arg("r"));
    m.def("theoretical_bound",
          [](double gamma, const PronyKernel& k, const OperatorSpectrum& s, double xi) {
              return to_py(to_json(theoretical_bound(gamma, k, s, xi)));
          },
          py::arg("gamma"), py::arg("kernel"), py::arg("spectrum"), py::arg("xi"));
    m.def("empirical_sup",
          [](double gamma, const PronyKernel& k, const OperatorSpectrum& s, double xi, unsigned threads) {
              return to_py(to_json(empirical_sup(gamma, k, s, xi, {}, threads)));
          },
          py::arg("gamma"), py::arg("kernel"), py::arg("spectrum"), py::arg("xi"), py::arg("threads") = 1);

    py::class_<Forcing>(m, "Forcing")
        .def(py::init<>())
        .def_static("exp", [](double amp, double sigma) { return Forcing{exp_term(amp, sigma)}; }, py::arg("amp"),
                    py::arg("sigma"))
        .def_static("cos", [](double amp, double sigma, double omega) { return Forcing{cos_term(amp, sigma, omega)}; },
                    py::arg("amp"), py::arg("sigma"), py::arg("omega"))
        .def_static("sin", [](double amp, double sigma, double omega) { return Forcing{sin_term(amp, sigma, omega)}; },
                    py::arg("amp"), py::arg("sigma"), py::arg("omega"))
        .def_static("polyexp",
                    [](double amp, unsigned power, double sigma) { return Forcing{polyexp_term(amp, power, sigma)}; },
                    py::arg("amp"), py::arg("power"), py::arg("sigma"))
        .def("__add__", &Forcing::operator+)
        .def("__call__", &Forcing::operator())
        .def("laplace", &Forcing::laplace);

    m.def("solve",
          [](const PronyKernel& k, const OperatorSpectrum& s, double xi, std::optional<std::vector<double>> phi0,
             std::optional<std::vector<double>> phi1, std::optional<std::vector<Forcing>> forcing,
             std::optional<double> horizon, std::optional<double> gamma_w, double tol_ode, bool oracle) {
              const Problem p = make_problem(k, s, xi, phi0, phi1, forcing, horizon, gamma_w, tol_ode);
              Trajectory tr;
              {
                  py::gil_scoped_release release;
                  tr = integrate(p);
                  if (oracle) tr = residue_solution(p, tr.t);
              }
              py::dict d = trajectory_dict(tr);
              d["max_relative_residual"] = equation_residual(tr, p).max_relative();
              return d;
          },
          py::arg("kernel"), py::arg("spectrum"), py::arg("xi"), py::arg("phi0") = py::none(),
          py::arg("phi1") = py::none(), py::arg("forcing") = py::none(), py::arg("horizon") = py::none(),
          py::arg("gamma_w") = py::none(), py::arg("tol_ode") = 1e-9, py::arg("oracle") = false,
          "Integrates every mode; oracle=True returns the residue-sum solution on the same grid");
    m.def("verify_estimate",
          [](const PronyKernel& k, const OperatorSpectrum& s, double xi, std::optional<std::vector<Forcing>> forcing,
             std::optional<double> gamma_w, std::optional<int> branch) {
              const Problem p = make_problem(k, s, xi, std::nullopt, std::nullopt, forcing, std::nullopt, gamma_w, 1e-9);
              std::ostringstream os;
              write_estimate_json(os, verify_estimate(p, integrate(p), branch));
              return py::module_::import("json").attr("loads")(os.str());
          },
          py::arg("kernel"), py::arg("spectrum"), py::arg("xi"), py::arg("forcing") = py::none(),
          py::arg("gamma_w") = py::none(), py::arg("branch") = py::none());
    m.def("plancherel_check",
          [](const Forcing& f, double gamma) { return to_py(to_json(plancherel_check(f, gamma))); }, py::arg("f"),
          py::arg("gamma"));
    m.def("conv_cos", &conv_cos, py::arg("gamma"), py::arg("a"), py::arg("t"));
    m.def("conv_sin", &conv_sin, py::arg("gamma"), py::arg("a"), py::arg("t"));

    m.def("run_cli",
          [](std::vector<std::string> args) {
              args.insert(args.begin(), "vklab");
              std::vector<const char*> argv;
              for (const auto& a : args) argv.push_back(a.c_str());
              std::ostringstream out, err;
              const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
              return py::make_tuple(code, out.str(), err.str());
          },
          py::arg("args"), "Runs a CLI command in-process; returns (exit code, stdout, stderr)");
}
