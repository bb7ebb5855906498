#ifndef SCL_FV_HPP
#define SCL_FV_HPP

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "scl/relu_net.hpp"
#include "scl/util.hpp"

namespace scl {

enum class Boundary { periodic, outflow };

inline std::string to_string(Boundary b) {
    return b == Boundary::periodic ? "periodic" : "outflow";
}

namespace fv {

/// Cell averages on a uniform grid over [a, b] at time t.
struct GridState {
    double a = 0.0;
    double b = 1.0;
    std::vector<double> values;
    double t = 0.0;

    int cells() const { return static_cast<int>(values.size()); }
    double dx() const { return (b - a) / cells(); }
    double center(int j) const { return a + (j + 0.5) * dx(); }

    PiecewiseConstantFn as_fn() const { return PiecewiseConstantFn{a, b, values}; }
};

/// Scalar flux with derivative; the derivative drives wave-speed estimates.
struct FluxFn {
    std::function<double(double)> f;
    std::function<double(double)> df;
};

inline GridState sample_grid(const std::function<double(double)>& u0, double a, double b, int J) {
    GridState g;
    g.a = a;
    g.b = b;
    g.values.resize(J);
    for (int j = 0; j < J; ++j) g.values[j] = u0(g.center(j));
    return g;
}

namespace detail {

inline int wrap(int j, int J, Boundary bc) {
    if (bc == Boundary::periodic) return ((j % J) + J) % J;
    return std::clamp(j, 0, J - 1);
}

inline void check_finite(const std::vector<double>& u, int step) {
    for (double v : u) {
        if (!std::isfinite(v)) {
            throw std::runtime_error("solver blow-up at step " + std::to_string(step));
        }
    }
}

inline double minmod(double p, double q) {
    if (p > 0 && q > 0) return std::min(p, q);
    if (p < 0 && q < 0) return std::max(p, q);
    return 0.0;
}

} // namespace detail

/// One Lax-Friedrichs update of the whole grid with mu = dt / (2 dx).
inline void lxf_step(const std::vector<double>& u, std::vector<double>& out, double mu,
                     const std::function<double(double)>& fhat, Boundary bc) {
    const int J = static_cast<int>(u.size());
    out.resize(J);
    for (int j = 0; j < J; ++j) {
        const double up = u[detail::wrap(j + 1, J, bc)];
        const double um = u[detail::wrap(j - 1, J, bc)];
        out[j] = 0.5 * (up + um) - mu * (fhat(up) - fhat(um));
    }
}

/// Fixed-step Lax-Friedrichs evolution: exactly `steps` updates with a
/// constant ratio mu = dt/(2 dx). This is the loop oracle the emulator
/// networks are checked against.
inline std::vector<double> lxf_loop(const std::function<double(double)>& fhat,
                                    std::vector<double> u, int steps, double mu, Boundary bc) {
    std::vector<double> next;
    for (int n = 0; n < steps; ++n) {
        lxf_step(u, next, mu, fhat, bc);
        u.swap(next);
        detail::check_finite(u, n + 1);
    }
    return u;
}

/// First-order Lax-Friedrichs solve to time T at the given CFL number; the
/// final step is truncated to land on T exactly.
inline GridState lxf_solve(const FluxFn& flux, GridState grid, double T, double cfl,
                           Boundary bc = Boundary::periodic) {
    if (!(cfl > 0.0) || cfl > 1.0) throw std::invalid_argument("lxf_solve: cfl in (0, 1]");
    const double dx = grid.dx();
    std::vector<double> next;
    int step = 0;
    while (grid.t < T - 1e-14) {
        double speed = 0.0;
        for (double v : grid.values) speed = std::max(speed, std::abs(flux.df(v)));
        double dt = speed > 0.0 ? cfl * dx / speed : T - grid.t;
        dt = std::min(dt, T - grid.t);
        lxf_step(grid.values, next, dt / (2.0 * dx), flux.f, bc);
        grid.values.swap(next);
        grid.t += dt;
        detail::check_finite(grid.values, ++step);
    }
    return grid;
}

enum class NumFlux { rusanov, godunov };

namespace detail {

inline double rusanov_flux(const FluxFn& flux, double ul, double ur) {
    const double s = std::max(std::abs(flux.df(ul)), std::abs(flux.df(ur)));
    return 0.5 * (flux.f(ul) + flux.f(ur)) - 0.5 * s * (ur - ul);
}

/// Godunov flux for a convex flux with minimum at `sonic`.
inline double godunov_flux_convex(const FluxFn& flux, double sonic, double ul, double ur) {
    if (ul <= ur) return flux.f(std::clamp(sonic, ul, ur));
    return std::max(flux.f(ul), flux.f(ur));
}

struct MusclRhs {
    const FluxFn& flux;
    NumFlux num_flux;
    double sonic;
    Boundary bc;

    void operator()(const std::vector<double>& u, std::vector<double>& dudt, double dx) const {
        const int J = static_cast<int>(u.size());
        std::vector<double> slope(J);
        for (int j = 0; j < J; ++j) {
            const double um = u[wrap(j - 1, J, bc)];
            const double up = u[wrap(j + 1, J, bc)];
            slope[j] = minmod(u[j] - um, up - u[j]);
        }
        std::vector<double> iface(J + 1);
        for (int i = 0; i <= J; ++i) {
            const int jl = wrap(i - 1, J, bc);
            const int jr = wrap(i, J, bc);
            const double ul = u[jl] + 0.5 * slope[jl];
            const double ur = u[jr] - 0.5 * slope[jr];
            iface[i] = num_flux == NumFlux::rusanov ? rusanov_flux(flux, ul, ur)
                                                    : godunov_flux_convex(flux, sonic, ul, ur);
        }
        dudt.resize(J);
        for (int j = 0; j < J; ++j) dudt[j] = -(iface[j + 1] - iface[j]) / dx;
    }
};

} // namespace detail

/// Second-order MUSCL scheme: minmod-limited reconstruction, Rusanov or
/// Godunov interface flux, SSP2 (Heun) time stepping. Godunov assumes a
/// convex flux; `sonic` is the minimizer of f (0 for Burgers-type fluxes).
inline GridState muscl_solve(const FluxFn& flux, NumFlux num_flux, GridState grid, double T,
                             double cfl = 0.45, Boundary bc = Boundary::periodic,
                             double sonic = 0.0) {
    if (!(cfl > 0.0) || cfl > 1.0) throw std::invalid_argument("muscl_solve: cfl in (0, 1]");
    const double dx = grid.dx();
    const detail::MusclRhs rhs{flux, num_flux, sonic, bc};
    std::vector<double> k1, k2, u1(grid.cells());
    int step = 0;
    while (grid.t < T - 1e-14) {
        double speed = 0.0;
        for (double v : grid.values) speed = std::max(speed, std::abs(flux.df(v)));
        double dt = speed > 0.0 ? cfl * dx / speed : T - grid.t;
        dt = std::min(dt, T - grid.t);
        rhs(grid.values, k1, dx);
        u1.resize(grid.cells());
        for (int j = 0; j < grid.cells(); ++j) u1[j] = grid.values[j] + dt * k1[j];
        rhs(u1, k2, dx);
        for (int j = 0; j < grid.cells(); ++j) {
            grid.values[j] = 0.5 * grid.values[j] + 0.5 * (u1[j] + dt * k2[j]);
        }
        grid.t += dt;
        detail::check_finite(grid.values, ++step);
    }
    return grid;
}

/// Grid total variation; periodic boundaries add the wrap-around jump.
inline double tv(const std::vector<double>& u, Boundary bc = Boundary::outflow) {
    double s = 0.0;
    for (std::size_t j = 0; j + 1 < u.size(); ++j) s += std::abs(u[j + 1] - u[j]);
    if (bc == Boundary::periodic && u.size() > 1) s += std::abs(u.front() - u.back());
    return s;
}

inline double tv(const GridState& g, Boundary bc = Boundary::outflow) { return tv(g.values, bc); }

/// dx * sum |g1_j - g2_j|; a finer grid whose resolution is an integer
/// multiple of the other is cell-averaged down first.
inline double l1_distance(const GridState& g1, const GridState& g2) {
    if (g1.a != g2.a || g1.b != g2.b) throw std::invalid_argument("l1_distance: domains differ");
    const GridState* coarse = &g1;
    const GridState* fine = &g2;
    if (coarse->cells() > fine->cells()) std::swap(coarse, fine);
    if (fine->cells() % coarse->cells() != 0) {
        throw std::invalid_argument("l1_distance: incommensurate grids");
    }
    const int r = fine->cells() / coarse->cells();
    double s = 0.0;
    for (int j = 0; j < coarse->cells(); ++j) {
        double avg = 0.0;
        for (int k = 0; k < r; ++k) avg += fine->values[j * r + k];
        avg /= r;
        s += std::abs(coarse->values[j] - avg);
    }
    return s * coarse->dx();
}

// ---------------------------------------------------------------------------
// two-dimensional grids, dimensional splitting
// ---------------------------------------------------------------------------

/// Cell averages on an nx x ny uniform grid over [a, b]^2 (row-major in x).
struct Grid2D {
    double a = 0.0;
    double b = 1.0;
    int nx = 0;
    int ny = 0;
    std::vector<double> values;
    double t = 0.0;

    double dx() const { return (b - a) / nx; }
    double dy() const { return (b - a) / ny; }
    double center_x(int ix) const { return a + (ix + 0.5) * dx(); }
    double center_y(int iy) const { return a + (iy + 0.5) * dy(); }
    double& at(int ix, int iy) { return values[ix * ny + iy]; }
    double at(int ix, int iy) const { return values[ix * ny + iy]; }
};

inline Grid2D sample_grid_2d(const std::function<double(double, double)>& u0, double a, double b,
                             int nx, int ny) {
    Grid2D g;
    g.a = a;
    g.b = b;
    g.nx = nx;
    g.ny = ny;
    g.values.resize(static_cast<std::size_t>(nx) * ny);
    for (int ix = 0; ix < nx; ++ix) {
        for (int iy = 0; iy < ny; ++iy) g.at(ix, iy) = u0(g.center_x(ix), g.center_y(iy));
    }
    return g;
}

namespace detail {

/// One splitting substep: a 1-d Lax-Friedrichs update along the given axis.
inline void lxf_substep_2d(Grid2D& g, int axis, double mu,
                           const std::function<double(double)>& fhat, Boundary bc) {
    std::vector<double> line, updated;
    if (axis == 0) {
        line.resize(g.nx);
        for (int iy = 0; iy < g.ny; ++iy) {
            for (int ix = 0; ix < g.nx; ++ix) line[ix] = g.at(ix, iy);
            lxf_step(line, updated, mu, fhat, bc);
            for (int ix = 0; ix < g.nx; ++ix) g.at(ix, iy) = updated[ix];
        }
    } else {
        line.resize(g.ny);
        for (int ix = 0; ix < g.nx; ++ix) {
            for (int iy = 0; iy < g.ny; ++iy) line[iy] = g.at(ix, iy);
            lxf_step(line, updated, mu, fhat, bc);
            for (int iy = 0; iy < g.ny; ++iy) g.at(ix, iy) = updated[iy];
        }
    }
}

} // namespace detail

/// Fixed-step 2-d evolution by dimensional splitting: each time step applies
/// a 1-d Lax-Friedrichs substep along x, then along y. Loop oracle for the
/// 2-d emulator networks.
inline Grid2D splitting_loop_2d(const std::function<double(double)>& fhat1,
                                const std::function<double(double)>& fhat2, Grid2D g, int steps,
                                double mu1, double mu2, Boundary bc) {
    for (int n = 0; n < steps; ++n) {
        detail::lxf_substep_2d(g, 0, mu1, fhat1, bc);
        detail::lxf_substep_2d(g, 1, mu2, fhat2, bc);
        detail::check_finite(g.values, n + 1);
    }
    return g;
}

/// Dimensional-splitting solve of u_t + f1(u)_x + f2(u)_y = 0 to time T.
inline Grid2D splitting_solve_2d(const FluxFn& f1, const FluxFn& f2, Grid2D grid, double T,
                                 double cfl, Boundary bc = Boundary::periodic) {
    if (!(cfl > 0.0) || cfl > 1.0) throw std::invalid_argument("splitting_solve_2d: cfl in (0,1]");
    int step = 0;
    while (grid.t < T - 1e-14) {
        double s1 = 0.0, s2 = 0.0;
        for (double v : grid.values) {
            s1 = std::max(s1, std::abs(f1.df(v)));
            s2 = std::max(s2, std::abs(f2.df(v)));
        }
        double dt = T - grid.t;
        if (s1 > 0.0) dt = std::min(dt, cfl * grid.dx() / s1);
        if (s2 > 0.0) dt = std::min(dt, cfl * grid.dy() / s2);
        detail::lxf_substep_2d(grid, 0, dt / (2.0 * grid.dx()), f1.f, bc);
        detail::lxf_substep_2d(grid, 1, dt / (2.0 * grid.dy()), f2.f, bc);
        grid.t += dt;
        detail::check_finite(grid.values, ++step);
    }
    return grid;
}

// ---------------------------------------------------------------------------
// Kuznetsov convergence study
// ---------------------------------------------------------------------------

struct KuznetsovRow {
    int N = 0;
    double error = 0.0;
    double bound = 0.0;
    bool within = false;
};

struct KuznetsovReport {
    std::vector<KuznetsovRow> rows;
    double fitted_rate = 0.0; // error ~ N^{-rate}
    double tv0 = 0.0;
    double F = 0.0;
};

/// For each N: first-order Lax-Friedrichs with dt = T/N and dx = F dt
/// against a fine MUSCL/Rusanov reference, compared with the a-priori
/// error bound 31 TV(u0) T (1+F)^2 / sqrt(N).
inline KuznetsovReport kuznetsov_study(const FluxFn& flux, const GridState& u0, double T,
                                       const std::vector<double>& N_list,
                                       Boundary bc = Boundary::periodic, int J_ref = 4096) {
    for (std::size_t i = 1; i < N_list.size(); ++i) {
        if (N_list[i] <= N_list[i - 1]) {
            throw std::invalid_argument("kuznetsov_study: N_list must ascend");
        }
    }
    double lo = u0.values[0], hi = u0.values[0];
    for (double v : u0.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    KuznetsovReport rep;
    rep.F = sup_abs_sweep(flux.df, lo, hi);
    rep.tv0 = tv(u0, bc);

    const PiecewiseConstantFn u0fn = u0.as_fn();
    GridState ref_init = sample_grid([&](double x) { return u0fn(x); }, u0.a, u0.b, J_ref);
    const GridState ref = muscl_solve(flux, NumFlux::rusanov, ref_init, T, 0.45, bc);
    const PiecewiseConstantFn ref_fn = ref.as_fn();

    std::vector<double> ns, errs;
    for (double Nd : N_list) {
        const int N = static_cast<int>(Nd);
        const double dt = T / N;
        const double dx = rep.F > 0.0 ? rep.F * dt : (u0.b - u0.a) / N;
        const int J = static_cast<int>(std::ceil((u0.b - u0.a) / dx - 1e-12));
        GridState g = sample_grid([&](double x) { return u0fn(x); }, u0.a, u0.b, J);
        g.values = lxf_loop(flux.f, g.values, N, dt / (2.0 * g.dx()), bc);
        KuznetsovRow row;
        row.N = N;
        row.error = l1_distance(g.as_fn(), ref_fn);
        row.bound = 31.0 * rep.tv0 * T * (1.0 + rep.F) * (1.0 + rep.F) / std::sqrt(Nd);
        row.within = row.error <= row.bound;
        rep.rows.push_back(row);
        ns.push_back(Nd);
        errs.push_back(row.error);
    }
    rep.fitted_rate = -loglog_slope(ns, errs);
    return rep;
}

// ---------------------------------------------------------------------------
// CSV grid dump / load
// ---------------------------------------------------------------------------

inline void save_grid_csv(const GridState& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_grid_csv: cannot open " + path);
    out << "x_center,value\n";
    char buf[80];
    for (int j = 0; j < g.cells(); ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", g.center(j), g.values[j]);
        out << buf;
    }
}

inline GridState load_grid_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_grid_csv: cannot open " + path);
    std::string line;
    std::getline(in, line); // header
    std::vector<double> xs, vs;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string x, v;
        std::getline(ss, x, ',');
        std::getline(ss, v, ',');
        xs.push_back(std::stod(x));
        vs.push_back(std::stod(v));
    }
    if (xs.size() < 1) throw std::runtime_error("load_grid_csv: empty grid");
    GridState g;
    const double h = xs.size() > 1 ? xs[1] - xs[0] : 1.0;
    g.a = xs.front() - 0.5 * h;
    g.b = xs.back() + 0.5 * h;
    g.values = vs;
    return g;
}

} // namespace fv
} // namespace scl

#endif // SCL_FV_HPP
