#ifndef SCL_KL_HPP
#define SCL_KL_HPP

#include <cmath>
#include <fstream>
#include <functional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scl/util.hpp"

namespace scl {
namespace kl {

/// One Karhunen-Loeve mode: eigenvalue and its eigenfunction tabulated on
/// the spec's grid.
struct KLMode {
    double lambda = 0.0;
    std::vector<double> phi;
};

/// Truncated Karhunen-Loeve expansion mean(x) + sum_i sqrt(lambda_i) c_i
/// phi_i(x), with eigenfunctions tabulated on a uniform grid over the
/// support interval and L2-normalized there.
struct KLSpec {
    std::function<double(double)> mean;
    double lo = 0.0;
    double hi = 1.0;
    std::vector<double> grid;
    std::vector<KLMode> modes;
    double sigma = 0.0; // kernel parameters, echoed for reports
    double eta = 0.0;
    int n_quad = 0;

    int dim() const { return static_cast<int>(modes.size()); }

    /// Linear interpolation of tabulated mode i at x.
    double phi(int i, double x) const {
        const auto& v = modes[i].phi;
        const int n = static_cast<int>(v.size());
        const double h = (hi - lo) / (n - 1);
        int k = static_cast<int>(std::floor((x - lo) / h));
        k = std::clamp(k, 0, n - 2);
        const double t = (x - (lo + k * h)) / h;
        return v[k] * (1.0 - t) + v[k + 1] * t;
    }
};

/// Leading eigenpairs of the exponential-covariance operator
/// int C(u1, u2) phi(u1) du1 = lambda phi(u2), C(u1, u2) =
/// sigma^2 exp(-|u1 - u2| / eta), by Nystrom discretization with trapezoid
/// weights and a dense symmetric eigensolve. Eigenfunctions are sign-fixed
/// (positive integral) and L2-normalized on the support.
inline KLSpec exp_cov_modes(double sigma, double eta, double lo, double hi, int n_modes,
                            int n_quad = 512) {
    if (!(sigma > 0.0) || !(eta > 0.0)) throw std::invalid_argument("exp_cov_modes: sigma, eta > 0");
    if (!(lo < hi)) throw std::invalid_argument("exp_cov_modes: empty support");
    if (n_quad < 8 * n_modes) throw std::invalid_argument("exp_cov_modes: need n_quad >= 8*n_modes");

    const int n = n_quad;
    const double h = (hi - lo) / (n - 1);
    std::vector<double> x(n), w(n, h);
    for (int i = 0; i < n; ++i) x[i] = lo + i * h;
    w.front() = w.back() = 0.5 * h;

    Eigen::MatrixXd B(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            const double c = sigma * sigma * std::exp(-std::abs(x[i] - x[j]) / eta);
            const double v = std::sqrt(w[i]) * c * std::sqrt(w[j]);
            B(i, j) = v;
            B(j, i) = v;
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(B);
    if (solver.info() != Eigen::Success) throw std::runtime_error("exp_cov_modes: eigensolve failed");

    KLSpec spec;
    spec.lo = lo;
    spec.hi = hi;
    spec.sigma = sigma;
    spec.eta = eta;
    spec.n_quad = n_quad;
    spec.grid = x;
    spec.mean = [](double) { return 0.0; };
    for (int k = 0; k < n_modes; ++k) {
        const int idx = n - 1 - k; // eigenvalues ascend in Eigen
        const double lambda = solver.eigenvalues()(idx);
        if (lambda < -1e-10) throw std::runtime_error("exp_cov_modes: negative eigenvalue");
        KLMode mode;
        mode.lambda = std::max(lambda, 0.0);
        mode.phi.resize(n);
        double integral = 0.0;
        for (int i = 0; i < n; ++i) {
            mode.phi[i] = solver.eigenvectors()(i, idx) / std::sqrt(w[i]);
            integral += w[i] * mode.phi[i];
        }
        double sign = integral > 1e-12 ? 1.0 : (integral < -1e-12 ? -1.0 : 0.0);
        if (sign == 0.0) sign = mode.phi.front() >= 0.0 ? 1.0 : -1.0;
        if (sign < 0.0) {
            for (double& v : mode.phi) v = -v;
        }
        spec.modes.push_back(std::move(mode));
    }
    return spec;
}

/// Pointwise value of the expansion mean(x) + sum_i sqrt(lambda_i) y_i phi_i(x).
inline double kl_initial_value(const KLSpec& spec, double x, std::span<const double> y) {
    if (static_cast<int>(y.size()) != spec.dim()) {
        throw std::invalid_argument("kl_initial_value: parameter dimension mismatch");
    }
    if (x < spec.lo - 1e-12 || x > spec.hi + 1e-12) {
        throw std::invalid_argument("kl_initial_value: x outside support");
    }
    double v = spec.mean(x);
    for (int i = 0; i < spec.dim(); ++i) v += std::sqrt(spec.modes[i].lambda) * y[i] * spec.phi(i, x);
    return v;
}

/// Parametric flux value mean_flux(u) + sum_k z_k sqrt(lambda_k) phi_k(u).
inline double kl_flux_value(const KLSpec& spec, const std::function<double(double)>& mean_flux,
                            double u, std::span<const double> z) {
    if (static_cast<int>(z.size()) != spec.dim()) {
        throw std::invalid_argument("kl_flux_value: parameter dimension mismatch");
    }
    if (u < spec.lo - 1e-12 || u > spec.hi + 1e-12) {
        throw std::invalid_argument("kl_flux_value: u outside support");
    }
    double v = mean_flux(u);
    for (int k = 0; k < spec.dim(); ++k) v += z[k] * std::sqrt(spec.modes[k].lambda) * spec.phi(k, u);
    return v;
}

struct B4Entry {
    double sigma_f = 0.0;
    double C_f = 0.0; // smallest feasible constant for this sigma_f
    bool pass = false;
};

struct B4Report {
    double deriv_sup = 0.0; // sup over u, z of |d_u f(u, z)|
    double mode_term = 0.0; // max_i sqrt(lambda_i)(C0 |phi_i''| + (|phi_i|+1)/4 |phi_i'|)
    std::vector<B4Entry> entries; // sigma_f in {0, 1/4, 1/2}
};

namespace detail {

/// Max |derivative| of a tabulated mode by centered differences.
inline void mode_derivative_sups(const KLSpec& spec, int i, double lo, double hi, double& d1,
                                 double& d2, double& d0) {
    const auto& v = spec.modes[i].phi;
    const int n = static_cast<int>(v.size());
    const double h = (spec.hi - spec.lo) / (n - 1);
    d0 = d1 = d2 = 0.0;
    for (int k = 0; k < n; ++k) {
        const double x = spec.lo + k * h;
        if (x < lo - 1e-12 || x > hi + 1e-12) continue;
        d0 = std::max(d0, std::abs(v[k]));
        if (k > 0 && k + 1 < n) {
            d1 = std::max(d1, std::abs((v[k + 1] - v[k - 1]) / (2.0 * h)));
            d2 = std::max(d2, std::abs((v[k + 1] - 2.0 * v[k] + v[k - 1]) / (h * h)));
        }
    }
}

} // namespace detail

/// Eigenvalue-decay feasibility check: computes the two quantities that the
/// constants (C_f, sigma_f) must dominate and reports the smallest feasible
/// C_f for sigma_f in {0, 1/4, 1/2}. The flux derivative sup is taken over
/// z in [0,1]^s and over the intersection of [-C0, C0] with the support.
inline B4Report check_B4(const KLSpec& spec, const std::function<double(double)>& mean_fprime,
                         double C0) {
    const double lo = spec.dim() > 0 ? std::max(-C0, spec.lo) : -C0;
    const double hi = spec.dim() > 0 ? std::min(C0, spec.hi) : C0;
    const int s = std::max(spec.dim(), 1);

    B4Report rep;
    // sup_z |f_u| at fixed u: mean slope plus the worst z in [0,1]^s per mode
    const int n_sweep = 2000;
    for (int k = 0; k <= n_sweep; ++k) {
        const double u = lo + (hi - lo) * k / n_sweep;
        double up = mean_fprime(u), down = mean_fprime(u);
        for (int i = 0; i < spec.dim(); ++i) {
            const auto& v = spec.modes[i].phi;
            const int n = static_cast<int>(v.size());
            const double h = (spec.hi - spec.lo) / (n - 1);
            int idx = std::clamp(static_cast<int>(std::round((u - spec.lo) / h)), 1, n - 2);
            const double dphi = (v[idx + 1] - v[idx - 1]) / (2.0 * h);
            const double c = std::sqrt(spec.modes[i].lambda) * dphi;
            up += std::max(c, 0.0);
            down += std::min(c, 0.0);
        }
        rep.deriv_sup = std::max({rep.deriv_sup, std::abs(up), std::abs(down)});
    }

    for (int i = 0; i < spec.dim(); ++i) {
        double d0, d1, d2;
        detail::mode_derivative_sups(spec, i, lo, hi, d1, d2, d0);
        const double q = std::sqrt(spec.modes[i].lambda) * (C0 * d2 + 0.25 * (d0 + 1.0) * d1);
        rep.mode_term = std::max(rep.mode_term, q);
    }

    for (double sf : {0.0, 0.25, 0.5}) {
        B4Entry e;
        e.sigma_f = sf;
        e.C_f = std::max(rep.deriv_sup / std::pow(s, sf), rep.mode_term / std::pow(s, 2.0 * sf));
        e.pass = std::isfinite(e.C_f);
        rep.entries.push_back(e);
    }
    return rep;
}

/// CSV serialization: header line of eigenvalues and kernel settings, then
/// rows (grid point, phi_1..phi_s).
inline void save_kl_csv(const KLSpec& spec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_kl_csv: cannot open " + path);
    char buf[80];
    out << "# sigma=" << spec.sigma << " eta=" << spec.eta << " n_quad=" << spec.n_quad
        << " support=[" << spec.lo << "," << spec.hi << "]\n";
    out << "# lambda";
    for (const auto& m : spec.modes) {
        std::snprintf(buf, sizeof(buf), ",%.17g", m.lambda);
        out << buf;
    }
    out << "\nx";
    for (int i = 0; i < spec.dim(); ++i) out << ",phi_" << (i + 1);
    out << "\n";
    for (std::size_t k = 0; k < spec.grid.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%.17g", spec.grid[k]);
        out << buf;
        for (const auto& m : spec.modes) {
            std::snprintf(buf, sizeof(buf), ",%.17g", m.phi[k]);
            out << buf;
        }
        out << "\n";
    }
}

} // namespace kl
} // namespace scl

#endif // SCL_KL_HPP
