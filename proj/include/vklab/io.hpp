#pragma once

// JSON and CSV forms of the library objects. Doubles in CSV carry 17 significant
// digits; JSON numbers use the shortest representation that round-trips.

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "vklab/forcing.hpp"
#include "vklab/kernel.hpp"
#include "vklab/norms.hpp"
#include "vklab/spectral_operator.hpp"
#include "vklab/spectrum.hpp"
#include "vklab/symbol.hpp"

namespace vklab {

using json = nlohmann::ordered_json;

/// "%.17g"
std::string fmt17(double v);

/// {"terms": [[c, gamma], ...]} or {"family": {"amp_A", "rate_B", "alpha", "beta", "N"}}
/// (optional "allow_rescale", default true). InvalidInput on malformed input.
PronyKernel kernel_from_json(const json& j);
/// Explicit kernels as terms; family kernels as the family record plus the terms.
json kernel_to_json(const PronyKernel& k);

/// {"eigenvalues": [...]} or {"power_law": {"L", "p", "M"}}.
OperatorSpectrum spectrum_from_json(const json& j);
json spectrum_to_json(const OperatorSpectrum& s);

/// {"terms": [{"shape": "exp"|"cos"|"sin"|"polyexp", "amp", "sigma", "omega", "power"}]}.
Forcing forcing_from_json(const json& j);
json forcing_to_json(const Forcing& f);

json to_json(const RealRoot& r);
json to_json(const SpectrumResult& r);
json to_json(const AsymptoticPrediction& p);
json to_json(const TheoreticalBound& b);
json to_json(const BoundReport& r);
json to_json(const InterleavingReport& r);
json to_json(const PlancherelResult& r);

/// n, k, mu, x, bracket_lo, bracket_hi, residual
void write_zeros_csv_header(std::ostream& os);
void write_zeros_csv(std::ostream& os, const SpectrumResult& r);
/// n, re_pair, im_pair, predicted_re, predicted_im
void write_pair_csv_header(std::ostream& os);
void write_pair_csv(std::ostream& os, const SpectrumResult& r, const AsymptoticPrediction& p);
/// n, re_zeta, im_zeta, value
void write_grid_csv(std::ostream& os, const BoundReport& r);

}  // namespace vklab
