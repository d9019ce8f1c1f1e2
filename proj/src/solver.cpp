#include "vklab/solver.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>

#include "vklab/errors.hpp"
#include "vklab/parallel.hpp"
#include "vklab/symbol.hpp"

namespace vklab {

namespace {

// DOP853 (Hairer, Norsett, Wanner)
namespace dop {
constexpr double c2 = 0.526001519587677318785587544488e-01;
constexpr double c3 = 0.789002279381515978178381316732e-01;
constexpr double c4 = 0.118350341907227396726757197510e+00;
constexpr double c5 = 0.281649658092772603273242802490e+00;
constexpr double c6 = 0.333333333333333333333333333333e+00;
constexpr double c7 = 0.25e+00;
constexpr double c8 = 0.307692307692307692307692307692e+00;
constexpr double c9 = 0.651282051282051282051282051282e+00;
constexpr double c10 = 0.6e+00;
constexpr double c11 = 0.857142857142857142857142857142e+00;
constexpr double a21 = 5.26001519587677318785587544488e-2;
constexpr double a31 = 1.97250569845378994544595329183e-2;
constexpr double a32 = 5.91751709536136983633785987549e-2;
constexpr double a41 = 2.95875854768068491816892993775e-2;
constexpr double a43 = 8.87627564304205475450678981324e-2;
constexpr double a51 = 2.41365134159266685502369798665e-1;
constexpr double a53 = -8.84549479328286085344864962717e-1;
constexpr double a54 = 9.24834003261792003115737966543e-1;
constexpr double a61 = 3.7037037037037037037037037037e-2;
constexpr double a64 = 1.70828608729473871279604482173e-1;
constexpr double a65 = 1.25467687566822425016691814123e-1;
constexpr double a71 = 3.7109375e-2;
constexpr double a74 = 1.70252211019544039314978060272e-1;
constexpr double a75 = 6.02165389804559606850219397283e-2;
constexpr double a76 = -1.7578125e-2;
constexpr double a81 = 3.70920001185047927108779319836e-2;
constexpr double a84 = 1.70383925712239993810214054705e-1;
constexpr double a85 = 1.07262030446373284651809199168e-1;
constexpr double a86 = -1.53194377486244017527936158236e-2;
constexpr double a87 = 8.27378916381402288758473766002e-3;
constexpr double a91 = 6.24110958716075717114429577812e-1;
constexpr double a94 = -3.36089262944694129406857109825e0;
constexpr double a95 = -8.68219346841726006818189891453e-1;
constexpr double a96 = 2.75920996994467083049415600797e1;
constexpr double a97 = 2.01540675504778934086186788979e1;
constexpr double a98 = -4.34898841810699588477366255144e1;
constexpr double a101 = 4.77662536438264365890433908527e-1;
constexpr double a104 = -2.48811461997166764192642586468e0;
constexpr double a105 = -5.90290826836842996371446475743e-1;
constexpr double a106 = 2.12300514481811942347288949897e1;
constexpr double a107 = 1.52792336328824235832596922938e1;
constexpr double a108 = -3.32882109689848629194453265587e1;
constexpr double a109 = -2.03312017085086261358222928593e-2;
constexpr double a111 = -9.3714243008598732571704021658e-1;
constexpr double a114 = 5.18637242884406370830023853209e0;
constexpr double a115 = 1.09143734899672957818500254654e0;
constexpr double a116 = -8.14978701074692612513997267357e0;
constexpr double a117 = -1.85200656599969598641566180701e1;
constexpr double a118 = 2.27394870993505042818970056734e1;
constexpr double a119 = 2.49360555267965238987089396762e0;
constexpr double a1110 = -3.0467644718982195003823669022e0;
constexpr double a121 = 2.27331014751653820792359768449e0;
constexpr double a124 = -1.05344954667372501984066689879e1;
constexpr double a125 = -2.00087205822486249909675718444e0;
constexpr double a126 = -1.79589318631187989172765950534e1;
constexpr double a127 = 2.79488845294199600508499808837e1;
constexpr double a128 = -2.85899827713502369474065508674e0;
constexpr double a129 = -8.87285693353062954433549289258e0;
constexpr double a1210 = 1.23605671757943030647266201528e1;
constexpr double a1211 = 6.43392746015763530355970484046e-1;
constexpr double b1 = 5.42937341165687622380535766363e-2;
constexpr double b6 = 4.45031289275240888144113950566e0;
constexpr double b7 = 1.89151789931450038304281599044e0;
constexpr double b8 = -5.8012039600105847814672114227e0;
constexpr double b9 = 3.1116436695781989440891606237e-1;
constexpr double b10 = -1.52160949662516078556178806805e-1;
constexpr double b11 = 2.01365400804030348374776537501e-1;
constexpr double b12 = 4.47106157277725905176885569043e-2;
constexpr double e31 = 0.244094488188976377952755905512e+00;
constexpr double e32 = 0.733846688281611857341361741547e+00;
constexpr double e33 = 0.220588235294117647058823529412e-01;
constexpr double e51 = 0.1312004499419488073250102996e-01;
constexpr double e56 = -0.1225156446376204440720569753e+01;
constexpr double e57 = -0.4957589496572501915214079952e+00;
constexpr double e58 = 0.1664377182454986536961530415e+01;
constexpr double e59 = -0.3503288487499736816886487290e+00;
constexpr double e510 = 0.3341791187130174790297318841e+00;
constexpr double e511 = 0.8192320648511571246570742613e-01;
constexpr double e512 = -0.2235530786388629525884427845e-01;

constexpr std::array<double, 12> c{0.0, c2, c3, c4, c5, c6, c7, c8, c9, c10, c11, 1.0};
// Row i holds a_{i+1, j+1}.
constexpr double A[12][11] = {
    {},
    {a21},
    {a31, a32},
    {a41, 0, a43},
    {a51, 0, a53, a54},
    {a61, 0, 0, a64, a65},
    {a71, 0, 0, a74, a75, a76},
    {a81, 0, 0, a84, a85, a86, a87},
    {a91, 0, 0, a94, a95, a96, a97, a98},
    {a101, 0, 0, a104, a105, a106, a107, a108, a109},
    {a111, 0, 0, a114, a115, a116, a117, a118, a119, a1110},
    {a121, 0, 0, a124, a125, a126, a127, a128, a129, a1210, a1211},
};
constexpr std::array<double, 12> b{b1, 0, 0, 0, 0, b6, b7, b8, b9, b10, b11, b12};
constexpr std::array<double, 12> e5{e51, 0, 0, 0, 0, e56, e57, e58, e59, e510, e511, e512};
}  // namespace dop


constexpr double kStiffnessGuard = 0.5;

struct ModeSystem {
    double a = 0.0, a2 = 0.0, coupling = 0.0;
    std::vector<double> c, gamma;
    const Forcing* f = nullptr;

    std::size_t dim() const { return 2 + c.size(); }

    // Full right-hand side.
    void rhs(double t, const double* y, double* dy) const {
        double mem = 0.0;
        for (std::size_t k = 0; k < c.size(); ++k) {
            mem += c[k] * y[2 + k];
            dy[2 + k] = y[0] - gamma[k] * y[2 + k];
        }
        dy[0] = y[1];
        dy[1] = -a2 * y[0] + coupling * mem + (*f)(t);
    }

    // Right-hand side without the linear decay -gamma_k w_k.
    void rhs_nonstiff(double t, const double* y, double* dy) const {
        rhs(t, y, dy);
        for (std::size_t k = 0; k < c.size(); ++k) dy[2 + k] = y[0];
    }

    double ddu(double t, const double* y) const {
        double mem = 0.0;
        for (std::size_t k = 0; k < c.size(); ++k) mem += c[k] * y[2 + k];
        return -a2 * y[0] + coupling * mem + (*f)(t);
    }
};

ModeSystem make_system(const Problem& p, std::size_t i) {
    ModeSystem s;
    s.a = p.spec[i];
    s.a2 = s.a * s.a;
    s.coupling = std::pow(s.a, 2.0 * p.xi);
    for (const auto& term : p.kernel.terms()) {
        s.c.push_back(term.c);
        s.gamma.push_back(term.gamma);
    }
    s.f = &p.forcing_at(i);
    return s;
}

class ModeIntegrator {
public:
    ModeIntegrator(const ModeSystem& sys, double phi0, double phi1, double tol, std::size_t mode)
        : sys_(sys), d_(sys.dim()), y_(d_, 0.0), ynew_(d_), tmp_(d_), atol_(d_), coarse_(d_), mid_(d_), tol_(tol), mode_(mode) {
        y_[0] = phi0;
        y_[1] = phi1;
        const double a = sys.a;
        double U = std::abs(phi0) + std::abs(phi1) / a + sys.f->magnitude() / (a * a);
        if (!(U > 0.0)) U = 1.0;
        atol_[0] = tol * U;
        atol_[1] = tol * U * a;
        for (std::size_t k = 0; k < sys.c.size(); ++k)
            atol_[2 + k] = tol * U / std::hypot(sys.gamma[k], a);
        gamma_max_ = sys.gamma.empty() ? 0.0 : sys.gamma.back();
        h_ = 0.01 / std::max(a, 1.0);
        k_.assign(12, std::vector<double>(d_));
    }

    double t() const { return t_; }
    const std::vector<double>& y() const { return y_; }
    const SolveStats& stats() const { return stats_; }

    void advance_to(double target) {
        while (t_ < target) {
            const double remaining = target - t_;
            double h = h_;
            bool last = false;
            if (h >= remaining * (1.0 - 1e-12) || t_ + 1.01 * h >= target) {
                h = remaining;
                last = true;
            }
            if (!(h > 1e-13 * std::max(1.0, std::abs(t_))) && !last)
                throw StiffnessFailure("step size underflow in mode " + std::to_string(mode_ + 1) +
                                           " (gamma_N dt = " + std::to_string(gamma_max_ * h) + ")",
                                       mode_ + 1, gamma_max_ * h);
            double hnew = 0.0;
            const bool stiff = gamma_max_ * h > kStiffnessGuard;
            const bool ok = stiff ? etd_step(h, hnew) : dop853_step(h, hnew);
            if (!stiff && hold_explicit_ > 0) {
                // an exponential step at this size was just rejected for accuracy; stay explicit
                hnew = std::min(hnew, kStiffnessGuard / gamma_max_);
                if (ok) --hold_explicit_;
            }
            if (stiff && !ok) hold_explicit_ = 64;
            if (ok) {
                t_ = last ? target : t_ + h;
                y_.swap(ynew_);
                ++stats_.accepted;
                if (stiff) ++stats_.exponential_steps;
                stats_.min_step = stats_.accepted == 1 ? h : std::min(stats_.min_step, h);
                h_ = (last && h < h_) ? std::max(hnew, h_) : hnew;
            } else {
                ++stats_.rejected;
                h_ = hnew;
                if (!(h_ > 1e-13 * std::max(1.0, std::abs(t_))))
                    throw StiffnessFailure("step size underflow in mode " + std::to_string(mode_ + 1) +
                                               " (gamma_N dt = " + std::to_string(gamma_max_ * h_) + ")",
                                           mode_ + 1, gamma_max_ * h_);
            }
        }
    }

private:
    bool dop853_step(double h, double& hnew) {
        using namespace dop;
        auto& k = k_;
        sys_.rhs(t_, y_.data(), k[0].data());
        for (std::size_t s = 1; s < 12; ++s) {
            for (std::size_t i = 0; i < d_; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < s; ++j)
                    if (A[s][j] != 0.0) acc += A[s][j] * k[j][i];
                tmp_[i] = y_[i] + h * acc;
            }
            sys_.rhs(t_ + c[s] * h, tmp_.data(), k[s].data());
        }
        double err5 = 0.0, err3 = 0.0;
        for (std::size_t i = 0; i < d_; ++i) {
            double bs = 0.0, es = 0.0;
            for (std::size_t j = 0; j < 12; ++j) {
                bs += b[j] * k[j][i];
                es += e5[j] * k[j][i];
            }
            ynew_[i] = y_[i] + h * bs;
            const double e3 = bs - e31 * k[0][i] - e32 * k[8][i] - e33 * k[11][i];
            const double sc = atol_[i] + tol_ * std::max(std::abs(y_[i]), std::abs(ynew_[i]));
            err5 += (es / sc) * (es / sc);
            err3 += (e3 / sc) * (e3 / sc);
        }
        double denom = err5 + 0.01 * err3;
        if (denom <= 0.0) denom = 1.0;
        const double err = std::abs(h) * err5 * std::sqrt(1.0 / (static_cast<double>(d_) * denom));
        if (!std::isfinite(err)) {
            hnew = h * 0.333;
            return false;
        }
        const double fac11 = std::pow(err, 0.125);
        if (err <= 1.0) {
            const double fac = std::clamp(fac11 / 0.9, 1.0 / 6.0, 1.0 / 0.333);
            hnew = h / fac;
            return true;
        }
        hnew = h / std::min(1.0 / 0.333, fac11 / 0.9);
        return false;
    }

    // phi_1..phi_3 of z = -gamma h for every kernel term, at full and half step.
    struct PhiTable {
        double h = -1.0;
        std::vector<double> e, p1, p2, p3;
    };

    static void phis(double z, double& e, double& p1, double& p2, double& p3) {
        e = std::exp(z);
        if (std::abs(z) < 0.5) {
            // phi_j(z) = sum_m z^m / (m + j)!
            p1 = p2 = p3 = 0.0;
            double term1 = 1.0, term2 = 0.5, term3 = 1.0 / 6.0;
            for (int m = 0; m < 25; ++m) {
                p1 += term1;
                p2 += term2;
                p3 += term3;
                term1 *= z / (m + 2);
                term2 *= z / (m + 3);
                term3 *= z / (m + 4);
            }
        } else {
            p1 = std::expm1(z) / z;
            p2 = (p1 - 1.0) / z;
            p3 = (p2 - 0.5) / z;
        }
    }

    void fill(PhiTable& tab, double h) {
        if (tab.h == h) return;
        const std::size_t N = sys_.c.size();
        tab.h = h;
        tab.e.resize(N);
        tab.p1.resize(N);
        tab.p2.resize(N);
        tab.p3.resize(N);
        for (std::size_t k = 0; k < N; ++k) phis(-sys_.gamma[k] * h, tab.e[k], tab.p1[k], tab.p2[k], tab.p3[k]);
    }

    // Cox-Matthews ETDRK4 for y' = L y + F(t, y), L = diag(0, 0, -gamma_k): the w decay
    // is propagated exactly, the source u enters through phi-function weights.
    void etd4(double t, const double* y, double h, double* out) {
        const std::size_t N = sys_.c.size();
        fill(half_, 0.5 * h);
        fill(full_, h);
        auto& k = k_;
        auto* ya = tmp_.data();
        sys_.rhs_nonstiff(t, y, k[0].data());
        auto half_step = [&](const double* base, const double* F, double* dst) {
            for (std::size_t i = 0; i < 2; ++i) dst[i] = base[i] + 0.5 * h * F[i];
            for (std::size_t m = 0; m < N; ++m)
                dst[2 + m] = half_.e[m] * base[2 + m] + 0.5 * h * half_.p1[m] * F[2 + m];
        };
        half_step(y, k[0].data(), ya);
        sys_.rhs_nonstiff(t + 0.5 * h, ya, k[1].data());
        std::vector<double>& yb = k[5];
        half_step(y, k[1].data(), yb.data());
        sys_.rhs_nonstiff(t + 0.5 * h, yb.data(), k[2].data());
        std::vector<double>& yc = k[6];
        for (std::size_t i = 0; i < d_; ++i) k[4][i] = 2.0 * k[2][i] - k[0][i];
        half_step(ya, k[4].data(), yc.data());
        sys_.rhs_nonstiff(t + h, yc.data(), k[3].data());
        for (std::size_t i = 0; i < 2; ++i)
            out[i] = y[i] + h * (k[0][i] + 2.0 * (k[1][i] + k[2][i]) + k[3][i]) / 6.0;
        for (std::size_t m = 0; m < N; ++m) {
            const double p1 = full_.p1[m], p2 = full_.p2[m], p3 = full_.p3[m];
            const double f1 = p1 - 3.0 * p2 + 4.0 * p3, f2 = p2 - 2.0 * p3, f3 = -p2 + 4.0 * p3;
            const std::size_t i = 2 + m;
            out[i] = full_.e[m] * y[i] + h * (f1 * k[0][i] + 2.0 * f2 * (k[1][i] + k[2][i]) + f3 * k[3][i]);
        }
    }

    // One ETDRK4 step against two half steps; the difference / 15 is the error estimate.
    bool etd_step(double h, double& hnew) {
        etd4(t_, y_.data(), h, coarse_.data());
        etd4(t_, y_.data(), 0.5 * h, mid_.data());
        etd4(t_ + 0.5 * h, mid_.data(), 0.5 * h, ynew_.data());
        double err = 0.0;
        for (std::size_t i = 0; i < d_; ++i) {
            const double sc = atol_[i] + tol_ * std::max(std::abs(y_[i]), std::abs(ynew_[i]));
            const double r = (ynew_[i] - coarse_[i]) / (15.0 * sc);
            err += r * r;
        }
        err = std::sqrt(err / static_cast<double>(d_));
        if (!std::isfinite(err)) {
            hnew = 0.2 * h;
            return false;
        }
        const double fac = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 4.0;
        if (err <= 1.0) {
            hnew = h * std::clamp(fac, 0.2, 4.0);
            return true;
        }
        hnew = h * std::clamp(fac, 0.2, 1.0);
        return false;
    }

    const ModeSystem& sys_;
    std::size_t d_;
    std::vector<double> y_, ynew_, tmp_, atol_, coarse_, mid_;
    PhiTable half_, full_;
    std::vector<std::vector<double>> k_;
    double tol_;
    std::size_t mode_;
    double t_ = 0.0, h_ = 0.0, gamma_max_ = 0.0;
    int hold_explicit_ = 0;
    SolveStats stats_;
};

void record(const ModeSystem& sys, const ModeIntegrator& in, ModeTrajectory& out) {
    const auto& y = in.y();
    out.u.push_back(y[0]);
    out.du.push_back(y[1]);
    out.ddu.push_back(sys.ddu(in.t(), y.data()));
    for (std::size_t k = 0; k < sys.c.size(); ++k) out.w[k].push_back(y[2 + k]);
}

// Integrates every mode over grid[from..to) and appends the samples.
void run_modes(const Problem& p, const std::vector<ModeSystem>& systems, std::vector<ModeIntegrator>& integrators,
               Trajectory& traj, const std::vector<double>& grid, std::size_t from) {
    parallel_for(systems.size(), p.threads, [&](std::size_t n) {
        auto& in = integrators[n];
        for (std::size_t i = from; i < grid.size(); ++i) {
            in.advance_to(grid[i]);
            record(systems[n], in, traj.modes[n]);
        }
        traj.stats[n] = in.stats();
    });
}

Trajectory empty_trajectory(const Problem& p) {
    Trajectory traj;
    traj.a.assign(p.spec.eigenvalues().begin(), p.spec.eigenvalues().end());
    traj.xi = p.xi;
    traj.N = p.kernel.size();
    traj.modes.resize(p.modes());
    for (auto& m : traj.modes) m.w.resize(traj.N);
    traj.stats.resize(p.modes());
    return traj;
}

double energy_at(const Trajectory& traj, std::size_t i) {
    double e = 0.0;
    for (std::size_t n = 0; n < traj.M(); ++n) {
        const double a2 = traj.a[n] * traj.a[n];
        const auto& m = traj.modes[n];
        e += m.ddu[i] * m.ddu[i] + a2 * a2 * m.u[i] * m.u[i];
    }
    return e;
}

cplx cpow_int(cplx z, unsigned q) {
    cplx r = 1.0;
    for (unsigned i = 0; i < q; ++i) r *= z;
    return r;
}

// Truncated power series in eps, orders 0..m.
using Series = std::vector<cplx>;

Series series_mul(const Series& x, const Series& y) {
    Series r(x.size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; i + j < x.size(); ++j) r[i + j] += x[i] * y[j];
    return r;
}

Series series_inv(const Series& x) {
    Series r(x.size(), 0.0);
    r[0] = 1.0 / x[0];
    for (std::size_t n = 1; n < x.size(); ++n) {
        cplx s = 0.0;
        for (std::size_t j = 1; j <= n; ++j) s += x[j] * r[n - j];
        r[n] = -s * r[0];
    }
    return r;
}

struct RealPole {
    double value;
    std::vector<double> shift;  // value + gamma_j, j = 1..N, in offset form
    double derivative;          // l'(value)
};

}  // namespace

// ---------------------------------------------------------------------------

Problem::Problem(PronyKernel k, OperatorSpectrum s, double x)
    : kernel(std::move(k)), spec(std::move(s)), xi(x), gamma_w(default_gamma_w(kernel)) {}

double default_gamma_w(const PronyKernel& kernel) { return kernel.empty() ? 1.0 : kernel[0].gamma + 1.0; }

void Problem::validate() const {
    const std::size_t M = modes();
    if (!(xi >= 0.0 && xi <= 1.0)) throw InvalidInput("problem: xi must lie in [0, 1]");
    if (!phi0.coords.empty() && phi0.size() != M) throw InvalidInput("problem: phi0 size differs from the mode count");
    if (!phi1.coords.empty() && phi1.size() != M) throw InvalidInput("problem: phi1 size differs from the mode count");
    if (!forcing.empty() && forcing.size() != M) throw InvalidInput("problem: forcing size differs from the mode count");
    for (const auto* v : {&phi0, &phi1})
        for (const auto& z : v->coords)
            if (z.imag() != 0.0 || !std::isfinite(z.real()))
                throw InvalidInput("problem: initial data must be real and finite");
    for (const auto& f : forcing) f.expand();
    if (!(gamma_w > 0.0) || !std::isfinite(gamma_w)) throw InvalidInput("problem: gamma_w must be positive");
    if (horizon && !(*horizon > 0.0 && std::isfinite(*horizon))) throw InvalidInput("problem: horizon must be positive");
    if (!(tol_ode > 0.0 && tol_ode < 1.0)) throw InvalidInput("problem: tol_ode must lie in (0, 1)");
    if (!(samples_per_period >= 1.0)) throw InvalidInput("problem: samples_per_period must be at least 1");
    if (!(max_horizon > 0.0)) throw InvalidInput("problem: max_horizon must be positive");
}

double Problem::phi0_at(std::size_t i) const { return phi0.coords.empty() ? 0.0 : phi0[i].real(); }
double Problem::phi1_at(std::size_t i) const { return phi1.coords.empty() ? 0.0 : phi1[i].real(); }

const Forcing& Problem::forcing_at(std::size_t i) const {
    static const Forcing zero;
    return forcing.empty() ? zero : forcing[i];
}

std::vector<double> uniform_grid(double T, double dt) {
    if (!(T > 0.0) || !(dt > 0.0)) throw InvalidInput("uniform_grid: T and dt must be positive");
    const auto n = static_cast<std::size_t>(std::ceil(T / dt - 1e-9));
    std::vector<double> g(n + 1);
    for (std::size_t i = 0; i <= n; ++i) g[i] = T * static_cast<double>(i) / static_cast<double>(n);
    return g;
}

double output_spacing(const Problem& p) {
    return 2.0 * std::numbers::pi / (p.samples_per_period * p.spec.last());
}

Trajectory integrate(const Problem& p, const std::vector<double>& grid) {
    p.validate();
    if (grid.empty() || grid.front() != 0.0) throw InvalidInput("integrate: grid must start at 0");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw InvalidInput("integrate: grid must be increasing");
    std::vector<ModeSystem> systems;
    std::vector<ModeIntegrator> integrators;
    systems.reserve(p.modes());
    for (std::size_t n = 0; n < p.modes(); ++n) systems.push_back(make_system(p, n));
    integrators.reserve(p.modes());
    for (std::size_t n = 0; n < p.modes(); ++n)
        integrators.emplace_back(systems[n], p.phi0_at(n), p.phi1_at(n), p.tol_ode, n);
    Trajectory traj = empty_trajectory(p);
    traj.t = grid;
    run_modes(p, systems, integrators, traj, grid, 0);
    return traj;
}

Trajectory integrate(const Problem& p) {
    p.validate();
    const double dt = output_spacing(p);
    if (p.horizon) return integrate(p, uniform_grid(*p.horizon, dt));

    std::vector<ModeSystem> systems;
    std::vector<ModeIntegrator> integrators;
    systems.reserve(p.modes());
    for (std::size_t n = 0; n < p.modes(); ++n) systems.push_back(make_system(p, n));
    integrators.reserve(p.modes());
    for (std::size_t n = 0; n < p.modes(); ++n)
        integrators.emplace_back(systems[n], p.phi0_at(n), p.phi1_at(n), p.tol_ode, n);
    Trajectory traj = empty_trajectory(p);

    // Extend until exp(-2 gamma T) E(T) < 1e-6 int_0^T exp(-2 gamma t) E(t) dt,
    // E = sum_n u_n''^2 + a_n^4 u_n^2, taking E(T) as the max over the last stretch.
    const double g2 = 2.0 * p.gamma_w;
    double T = std::min(p.max_horizon, std::max(std::log(1e6) / g2, 8.0 * std::numbers::pi / p.spec.first()));
    std::size_t done = 0;
    double integral = 0.0;
    while (true) {
        const auto n_pts = static_cast<std::size_t>(std::ceil(T / dt - 1e-9)) + 1;
        for (std::size_t i = traj.t.size(); i < n_pts; ++i) traj.t.push_back(static_cast<double>(i) * dt);
        run_modes(p, systems, integrators, traj, traj.t, done);
        for (std::size_t i = std::max<std::size_t>(done, 1); i < traj.t.size(); ++i)
            integral += 0.5 * dt *
                        (std::exp(-g2 * traj.t[i - 1]) * energy_at(traj, i - 1) +
                         std::exp(-g2 * traj.t[i]) * energy_at(traj, i));
        done = traj.t.size();
        const std::size_t window = std::max<std::size_t>(2, done / 10);
        double tail = 0.0;
        for (std::size_t i = done - window; i < done; ++i)
            tail = std::max(tail, std::exp(-g2 * traj.t[i]) * energy_at(traj, i));
        if (tail <= 1e-6 * integral) break;
        if (traj.t.back() >= p.max_horizon) {
            traj.horizon_capped = true;
            break;
        }
        T = std::min(p.max_horizon, 1.5 * traj.t.back());
    }
    return traj;
}

// ---------------------------------------------------------------------------

ModeTrajectory residue_solution(const Problem& p, std::size_t idx, const std::vector<double>& times,
                                const RootOptions& opt) {
    p.validate();
    if (idx >= p.modes()) throw InvalidInput("residue_solution: mode index out of range");
    const double a = p.spec[idx];
    const SymbolContext ctx(p.kernel, a, p.xi);
    const auto terms = p.kernel.terms();
    const std::size_t N = terms.size();
    const double coupling = ctx.coupling();
    const double phi0 = p.phi0_at(idx), phi1 = p.phi1_at(idx);
    const auto fterms = p.forcing_at(idx).expand();

    const auto real_zeros = find_real_zeros(ctx, opt);
    const auto pair = find_complex_pair(ctx, &real_zeros, opt);
    const cplx mu = pair.plus;

    // Exact -gamma_j forcing poles are cancelled by the pole of Psi (removable in u).
    auto kernel_pole = [&](const ExpPolyTerm& e) -> std::optional<std::size_t> {
        if (e.lambda.imag() != 0.0) return std::nullopt;
        for (std::size_t j = 0; j < N; ++j)
            if (e.lambda.real() == -terms[j].gamma) return j;
        return std::nullopt;
    };

    // Cluster check over distinct poles.
    std::vector<cplx> poles;
    for (const auto& r : real_zeros) poles.push_back(r.value);
    poles.push_back(mu);
    poles.push_back(std::conj(mu));
    std::vector<cplx> forcing_poles;
    for (const auto& e : fterms) {
        if (kernel_pole(e)) {
            if (e.m > 0) throw OracleUnavailable("residue oracle: repeated forcing pole on a kernel pole");
            continue;
        }
        if (std::find(forcing_poles.begin(), forcing_poles.end(), e.lambda) == forcing_poles.end())
            forcing_poles.push_back(e.lambda);
    }
    poles.insert(poles.end(), forcing_poles.begin(), forcing_poles.end());
    const double min_sep = 1e-6 * a;
    for (std::size_t i = 0; i < poles.size(); ++i)
        for (std::size_t j = i + 1; j < poles.size(); ++j)
            if (std::abs(poles[i] - poles[j]) < min_sep)
                throw OracleUnavailable("residue oracle: poles " + std::to_string(i) + " and " + std::to_string(j) +
                                        " closer than 1e-6 a");

    // Real zeros in offset form.
    std::vector<RealPole> rp;
    for (const auto& r : real_zeros) {
        RealPole q;
        q.value = r.value;
        const double off = r.pole_offset(terms);
        const double gk = terms[r.k - 1].gamma;
        q.shift.resize(N);
        double d = 2.0 * r.value;
        for (std::size_t j = 0; j < N; ++j) {
            q.shift[j] = (j + 1 == r.k) ? off : (terms[j].gamma - gk) + off;
            d += coupling * terms[j].c / (q.shift[j] * q.shift[j]);
        }
        q.derivative = d;
        rp.push_back(std::move(q));
    }

    // f^(z) at a real zero; z - lambda taken in offset form when lambda = -gamma_j.
    auto fhat_real = [&](const RealPole& q) {
        cplx s = 0.0;
        for (const auto& e : fterms) {
            double fact = 1.0;
            for (unsigned i = 2; i <= e.m; ++i) fact *= i;
            const auto j = kernel_pole(e);
            const cplx diff = j ? cplx(q.shift[*j]) : cplx(q.value) - e.lambda;
            s += e.coef * fact / cpow_int(diff, e.m + 1);
        }
        return s;
    };

    const cplx R_pair = (p.forcing_at(idx).laplace(mu) + mu * phi0 + phi1) / symbol_derivative(ctx, mu);
    std::vector<double> R_real(rp.size());
    for (std::size_t k = 0; k < rp.size(); ++k)
        R_real[k] = ((fhat_real(rp[k]) + rp[k].value * phi0 + phi1) / rp[k].derivative).real();

    // Forcing-pole contributions: coef * d^m/dz^m [z^q e^{z t} g(z) / l(z)] at lambda,
    // with g = 1 or 1/(z + gamma_k). Series in eps of everything but e^{z t}.
    struct ForcingPole {
        ExpPolyTerm e;
        std::vector<Series> base;  // [q or 3+k] series of z^q / l, or 1/((z+gamma_k) l)
        std::optional<std::size_t> kernel_index;
    };
    std::vector<ForcingPole> fp;
    for (const auto& e : fterms) {
        ForcingPole f{e, {}, kernel_pole(e)};
        if (!f.kernel_index) {
            const std::size_t L = e.m + 1;
            Series ell(L, 0.0);
            try {
                ell[0] = symbol_eval(ctx, e.lambda);
            } catch (const PoleError&) {
                throw OracleUnavailable("residue oracle: forcing pole on a kernel pole");
            }
            for (std::size_t r = 1; r < L; ++r) {
                cplx s = 0.0;
                for (std::size_t j = 0; j < N; ++j)
                    s += terms[j].c * ((r % 2 == 0) ? -1.0 : 1.0) / cpow_int(e.lambda + terms[j].gamma, r + 1);
                // -coupling * sum c (-1)^r / (lambda+gamma)^(r+1)
                ell[r] = coupling * s;
            }
            if (L > 1) ell[1] += 2.0 * e.lambda;
            if (L > 2) ell[2] += 1.0;
            const Series inv = series_inv(ell);
            for (unsigned q = 0; q < 3; ++q) {
                Series zq(L, 0.0);
                // (lambda + eps)^q
                for (std::size_t r = 0; r < L && r <= q; ++r) {
                    double binom = 1.0;
                    for (std::size_t i = 0; i < r; ++i) binom = binom * static_cast<double>(q - i) / static_cast<double>(i + 1);
                    zq[r] = binom * cpow_int(e.lambda, q - static_cast<unsigned>(r));
                }
                f.base.push_back(series_mul(zq, inv));
            }
            for (std::size_t k = 0; k < N; ++k) {
                Series g(L, 0.0);
                const cplx s = e.lambda + terms[k].gamma;
                for (std::size_t r = 0; r < L; ++r) g[r] = ((r % 2 == 0) ? 1.0 : -1.0) / cpow_int(s, static_cast<unsigned>(r + 1));
                f.base.push_back(series_mul(g, inv));
            }
        }
        fp.push_back(std::move(f));
    }

    auto forcing_contrib = [&](const ForcingPole& f, std::size_t slot, double t) {
        const std::size_t L = f.e.m + 1;
        const cplx ez = std::exp(f.e.lambda * t);
        cplx acc = 0.0;
        // coefficient of eps^m in base * sum (t eps)^s / s!
        double tp = 1.0, fact = 1.0;
        for (std::size_t s = 0; s < L; ++s) {
            if (s > 0) {
                tp *= t;
                fact *= static_cast<double>(s);
            }
            acc += f.base[slot][L - 1 - s] * (tp / fact);
        }
        double mfact = 1.0;
        for (unsigned i = 2; i <= f.e.m; ++i) mfact *= i;
        return f.e.coef * mfact * ez * acc;
    };

    ModeTrajectory out;
    out.u.resize(times.size());
    out.du.resize(times.size());
    out.ddu.resize(times.size());
    out.w.assign(N, std::vector<double>(times.size()));
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double t = times[i];
        if (t < 0.0) throw DomainError("residue_solution: t must be nonnegative");
        const cplx ep = std::exp(mu * t) * R_pair;
        std::array<double, 3> d{2.0 * ep.real(), 2.0 * (mu * ep).real(), 2.0 * (mu * mu * ep).real()};
        std::vector<double> w(N, 0.0);
        for (std::size_t k = 0; k < N; ++k) w[k] = 2.0 * (ep / (mu + terms[k].gamma)).real();
        for (std::size_t r = 0; r < rp.size(); ++r) {
            const double e = std::exp(rp[r].value * t) * R_real[r];
            d[0] += e;
            d[1] += rp[r].value * e;
            d[2] += rp[r].value * rp[r].value * e;
            for (std::size_t k = 0; k < N; ++k) w[k] += e / rp[r].shift[k];
        }
        cplx fu[3] = {0.0, 0.0, 0.0};
        std::vector<cplx> fw(N, 0.0);
        for (const auto& f : fp) {
            if (f.kernel_index) {
                // u-part removable; w_j picks up exp(-gamma_j t) coef / (-coupling c_j).
                const std::size_t j = *f.kernel_index;
                fw[j] += f.e.coef * std::exp(f.e.lambda * t) / (-coupling * terms[j].c);
                continue;
            }
            for (unsigned q = 0; q < 3; ++q) fu[q] += forcing_contrib(f, q, t);
            for (std::size_t k = 0; k < N; ++k) fw[k] += forcing_contrib(f, 3 + k, t);
        }
        out.u[i] = d[0] + fu[0].real();
        out.du[i] = d[1] + fu[1].real();
        out.ddu[i] = d[2] + fu[2].real();
        for (std::size_t k = 0; k < N; ++k) out.w[k][i] = w[k] + fw[k].real();
    }
    return out;
}

Trajectory residue_solution(const Problem& p, const std::vector<double>& times, const RootOptions& opt) {
    Trajectory traj = empty_trajectory(p);
    traj.stats.clear();
    traj.t = times;
    parallel_for(p.modes(), p.threads, [&](std::size_t n) { traj.modes[n] = residue_solution(p, n, times, opt); });
    return traj;
}

// ---------------------------------------------------------------------------

double conv_cos(double gamma, double a, double t) {
    if (!(gamma > 0.0) || !(a > 0.0) || !(t >= 0.0)) throw DomainError("conv_cos: need gamma > 0, a > 0, t >= 0");
    return (gamma * (std::cos(a * t) - std::exp(-gamma * t)) + a * std::sin(a * t)) / (a * a + gamma * gamma);
}

double conv_sin(double gamma, double a, double t) {
    if (!(gamma > 0.0) || !(a > 0.0) || !(t >= 0.0)) throw DomainError("conv_sin: need gamma > 0, a > 0, t >= 0");
    return (gamma * std::sin(a * t) - a * std::cos(a * t) + a * std::exp(-gamma * t)) / (a * a + gamma * gamma);
}

namespace {
double real_coord(const ModeVector& v, std::size_t i) { return v.coords.empty() ? 0.0 : v[i].real(); }

void check_ic_sizes(const OperatorSpectrum& spec, const ModeVector& phi0, const ModeVector& phi1) {
    if ((!phi0.coords.empty() && phi0.size() != spec.size()) || (!phi1.coords.empty() && phi1.size() != spec.size()))
        throw InvalidInput("h_forcing: initial data size differs from the mode count");
}
}  // namespace

ModeVector h_forcing(const PronyKernel& kernel, const OperatorSpectrum& spec, double xi, const ModeVector& phi0,
                     const ModeVector& phi1, double t) {
    check_ic_sizes(spec, phi0, phi1);
    ModeVector h = ModeVector::zeros(spec.size());
    for (std::size_t n = 0; n < spec.size(); ++n) {
        const double a = spec[n];
        const double cpl = std::pow(a, 2.0 * xi);
        const double p0 = real_coord(phi0, n), p1 = real_coord(phi1, n);
        double s = 0.0;
        for (const auto& term : kernel.terms())
            s += term.c * (cpl * conv_cos(term.gamma, a, t) * p0 + cpl / a * conv_sin(term.gamma, a, t) * p1);
        h[n] = s;
    }
    return h;
}

std::vector<Forcing> h_forcing_terms(const PronyKernel& kernel, const OperatorSpectrum& spec, double xi,
                                     const ModeVector& phi0, const ModeVector& phi1) {
    check_ic_sizes(spec, phi0, phi1);
    std::vector<Forcing> out(spec.size());
    for (std::size_t n = 0; n < spec.size(); ++n) {
        const double a = spec[n];
        const double cpl = std::pow(a, 2.0 * xi);
        const double p0 = real_coord(phi0, n), p1 = real_coord(phi1, n);
        if (kernel.empty() || (p0 == 0.0 && p1 == 0.0)) continue;
        double cos_amp = 0.0, sin_amp = 0.0;
        for (const auto& term : kernel.terms()) {
            const double g = term.gamma;
            const double w = term.c * cpl / (a * a + g * g);
            cos_amp += w * (g * p0 - p1);
            sin_amp += w * (a * p0 + g * p1 / a);
            out[n].terms.push_back(exp_term(w * (p1 - g * p0), g));
        }
        out[n].terms.push_back(cos_term(cos_amp, 0.0, a));
        out[n].terms.push_back(sin_term(sin_amp, 0.0, a));
    }
    return out;
}

double IcShift::v(std::size_t i, double t) const {
    return std::cos(a[i] * t) * phi0[i] + std::sin(a[i] * t) * phi1[i] / a[i];
}
double IcShift::dv(std::size_t i, double t) const {
    return -a[i] * std::sin(a[i] * t) * phi0[i] + std::cos(a[i] * t) * phi1[i];
}
double IcShift::ddv(std::size_t i, double t) const { return -a[i] * a[i] * v(i, t); }
double IcShift::wv(std::size_t i, std::size_t k, double t) const {
    return conv_cos(gammas[k], a[i], t) * phi0[i] + conv_sin(gammas[k], a[i], t) * phi1[i] / a[i];
}

Trajectory IcShift::recombine(const Trajectory& omega) const {
    if (omega.M() != a.size()) throw InvalidInput("IcShift::recombine: mode count mismatch");
    Trajectory u = omega;
    for (std::size_t n = 0; n < u.M(); ++n) {
        auto& m = u.modes[n];
        for (std::size_t i = 0; i < u.t.size(); ++i) {
            const double t = u.t[i];
            m.u[i] += v(n, t);
            m.du[i] += dv(n, t);
            m.ddu[i] += ddv(n, t);
            for (std::size_t k = 0; k < gammas.size(); ++k) m.w[k][i] += wv(n, k, t);
        }
    }
    return u;
}

IcShift ic_shift(const Problem& p) {
    p.validate();
    IcShift s{p, {}, {}, {}, {}};
    const auto h = h_forcing_terms(p.kernel, p.spec, p.xi, p.phi0, p.phi1);
    s.shifted.forcing.assign(p.modes(), Forcing{});
    for (std::size_t n = 0; n < p.modes(); ++n) {
        s.shifted.forcing[n] = p.forcing_at(n) + h[n];
        s.a.push_back(p.spec[n]);
        s.phi0.push_back(p.phi0_at(n));
        s.phi1.push_back(p.phi1_at(n));
    }
    s.shifted.phi0 = ModeVector::zeros(p.modes());
    s.shifted.phi1 = ModeVector::zeros(p.modes());
    for (const auto& term : p.kernel.terms()) s.gammas.push_back(term.gamma);
    return s;
}

// ---------------------------------------------------------------------------

double ResidualReport::max_relative() const {
    double m = 0.0;
    for (std::size_t n = 0; n < residual.size(); ++n) {
        if (residual[n] == 0.0) continue;
        m = std::max(m, scale[n] > 0.0 ? residual[n] / scale[n] : std::numeric_limits<double>::infinity());
    }
    return m;
}

ResidualReport equation_residual(const Trajectory& traj, const Problem& p) {
    if (traj.M() != p.modes()) throw InvalidInput("equation_residual: mode count mismatch");
    const auto terms = p.kernel.terms();
    ResidualReport rep;
    rep.residual.assign(traj.M(), 0.0);
    rep.scale.assign(traj.M(), 0.0);
    for (std::size_t n = 0; n < traj.M(); ++n) {
        const double a = p.spec[n];
        const double cpl = std::pow(a, 2.0 * p.xi);
        const auto& m = traj.modes[n];
        const auto& f = p.forcing_at(n);
        double umax = 0.0, rmax = 0.0;
        for (std::size_t i = 0; i < traj.size(); ++i) {
            double mem = 0.0;
            for (std::size_t k = 0; k < terms.size(); ++k) mem += terms[k].c * m.w[k][i];
            const double r = m.ddu[i] + a * a * m.u[i] - cpl * mem - f(traj.t[i]);
            rmax = std::max(rmax, std::abs(r));
            umax = std::max(umax, std::abs(m.u[i]));
        }
        rep.residual[n] = rmax;
        rep.scale[n] = a * a * umax;
    }
    return rep;
}

// ---------------------------------------------------------------------------

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os << "t,n,u,du,ddu\n";
    char buf[128];
    for (std::size_t i = 0; i < traj.size(); ++i)
        for (std::size_t n = 0; n < traj.M(); ++n) {
            const auto& m = traj.modes[n];
            std::snprintf(buf, sizeof buf, "%.17g,%zu,%.17g,%.17g,%.17g\n", traj.t[i], n + 1, m.u[i], m.du[i], m.ddu[i]);
            os << buf;
        }
}

namespace {
constexpr std::uint32_t kBinaryVersion = 1;

template <class T>
void put(std::ostream& os, T v) {
    static_assert(std::endian::native == std::endian::little, "little-endian host assumed");
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_array(std::ostream& os, const std::vector<double>& v) {
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

template <class T>
T get(std::istream& is) {
    T v{};
    if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw InvalidInput("trajectory binary: truncated input");
    return v;
}

void get_array(std::istream& is, std::vector<double>& v, std::size_t n) {
    v.resize(n);
    if (!is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double))))
        throw InvalidInput("trajectory binary: truncated input");
}
}  // namespace

void write_trajectory_binary(std::ostream& os, const Trajectory& traj) {
    os.write("VKTR", 4);
    put<std::uint32_t>(os, kBinaryVersion);
    put<std::uint64_t>(os, traj.M());
    put<std::uint64_t>(os, traj.N);
    put<std::uint64_t>(os, traj.size());
    put<double>(os, traj.xi);
    put_array(os, traj.a);
    put_array(os, traj.t);
    for (const auto& m : traj.modes) {
        put_array(os, m.u);
        put_array(os, m.du);
        put_array(os, m.ddu);
        for (const auto& w : m.w) put_array(os, w);
    }
}

Trajectory read_trajectory_binary(std::istream& is) {
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "VKTR", 4) != 0) throw InvalidInput("trajectory binary: bad magic");
    if (get<std::uint32_t>(is) != kBinaryVersion) throw InvalidInput("trajectory binary: unsupported version");
    Trajectory traj;
    const auto M = get<std::uint64_t>(is);
    traj.N = get<std::uint64_t>(is);
    const auto G = get<std::uint64_t>(is);
    traj.xi = get<double>(is);
    get_array(is, traj.a, M);
    get_array(is, traj.t, G);
    traj.modes.resize(M);
    for (auto& m : traj.modes) {
        get_array(is, m.u, G);
        get_array(is, m.du, G);
        get_array(is, m.ddu, G);
        m.w.resize(traj.N);
        for (auto& w : m.w) get_array(is, w, G);
    }
    return traj;
}

}  // namespace vklab
