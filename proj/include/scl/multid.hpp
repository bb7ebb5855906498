#ifndef SCL_MULTID_HPP
#define SCL_MULTID_HPP

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "scl/emulator.hpp"
#include "scl/fv.hpp"

namespace scl {
namespace emu {

struct Init2DMode {
    double lambda = 0.0;
    std::function<double(double, double)> phi;
};

/// Configuration of the two-dimensional emulator on the square [a, b]^2
/// with per-axis fluxes and Karhunen-Loeve initial data.
struct Emulator2DConfig {
    double a = 0.0;
    double b = 1.0;
    double T = 0.1;
    int N = 8;
    FluxSpec flux1;
    FluxSpec flux2;
    std::function<double(double, double)> mean;
    std::vector<Init2DMode> modes;
    double C0 = 1.0;
    Boundary boundary = Boundary::periodic;
    std::optional<int> J_override; // cells per axis
    std::optional<int> K_override;
    StoreMode store_mode = StoreMode::unrolled;
    std::size_t max_triplets = 300000000; // memory budget guard
};

/// Built 2-d emulator. Each time step is realized as two sigma layers: a
/// 1-d Lax-Friedrichs substep along x, then one along y (dimensional
/// splitting). fv::splitting_loop_2d is the matching loop oracle.
struct Emulator2D {
    double a = 0.0, b = 1.0, T = 0.1;
    int N = 0, J = 0, K = 0, d = 0;
    double dt = 0.0, dx = 0.0, mu = 0.0;
    double F1 = 0.0, F2 = 0.0;
    Boundary boundary = Boundary::periodic;
    Interp1DSpec fhat1, fhat2;
    LayerProgram program;

    std::vector<double> eval(std::span<const double> y) const { return program.eval(y); }
    ReluNet unrolled() const { return program.unrolled(); }

    fv::Grid2D as_grid(std::span<const double> y) const {
        fv::Grid2D g;
        g.a = a;
        g.b = b;
        g.nx = J;
        g.ny = J;
        g.values = eval(y);
        g.t = T;
        return g;
    }
};

namespace detail {

/// Substep block along one axis of the flattened J x J grid; same slim
/// per-cell wiring as the 1-d block.
inline ReluNet build_axis_block(int J, double mu, const Interp1DSpec& fhat, int axis, Boundary bc) {
    const int G = J * J;
    const int K = fhat.segments();
    const double s0 = fhat.slope(0);
    const int per_cell = 2 + (K - 1);
    auto carry_pos = [&](int c) { return c * per_cell; };
    auto carry_neg = [&](int c) { return c * per_cell + 1; };
    auto knot = [&](int c, int k) { return c * per_cell + 1 + k; };
    auto neighbor = [&](int ix, int iy, int off) {
        if (axis == 0) return wrap(ix + off, J, bc) * J + iy;
        return ix * J + wrap(iy + off, J, bc);
    };

    RowBuilder hidden(G * per_cell, G);
    for (int c = 0; c < G; ++c) {
        hidden.add(carry_pos(c), c, 1.0);
        hidden.add(carry_neg(c), c, -1.0);
        for (int k = 1; k < K; ++k) {
            hidden.add(knot(c, k), c, 1.0);
            hidden.bias(knot(c, k), -fhat.knot(k));
        }
    }
    RowBuilder out(G, G * per_cell);
    for (int ix = 0; ix < J; ++ix) {
        for (int iy = 0; iy < J; ++iy) {
            const int c = ix * J + iy;
            const int p = neighbor(ix, iy, +1);
            const int m = neighbor(ix, iy, -1);
            out.add(c, carry_pos(p), 0.5 - mu * s0);
            out.add(c, carry_neg(p), -(0.5 - mu * s0));
            out.add(c, carry_pos(m), 0.5 + mu * s0);
            out.add(c, carry_neg(m), -(0.5 + mu * s0));
            for (int k = 1; k < K; ++k) {
                const double cf = fhat.slope(k) - fhat.slope(k - 1);
                out.add(c, knot(p, k), -mu * cf);
                out.add(c, knot(m, k), mu * cf);
            }
        }
    }
    std::vector<AffineLayer> layers;
    layers.push_back(hidden.take());
    layers.push_back(out.take());
    return ReluNet(std::move(layers));
}

} // namespace detail

inline Emulator2D build_multid_emulator(const Emulator2DConfig& cfg) {
    if (cfg.flux1.kind != FluxKind::closed_form || cfg.flux2.kind != FluxKind::closed_form) {
        throw std::invalid_argument("build_multid_emulator: closed-form per-axis fluxes required");
    }
    if (cfg.N < 1) throw std::invalid_argument("build_multid_emulator: need N >= 1");

    Emulator2D e;
    e.a = cfg.a;
    e.b = cfg.b;
    e.T = cfg.T;
    e.N = cfg.N;
    e.d = static_cast<int>(cfg.modes.size());
    e.boundary = cfg.boundary;
    e.dt = cfg.T / cfg.N;
    e.F1 = cfg.flux1.f1sup ? *cfg.flux1.f1sup : sup_abs_sweep(cfg.flux1.df, -cfg.C0, cfg.C0);
    e.F2 = cfg.flux2.f1sup ? *cfg.flux2.f1sup : sup_abs_sweep(cfg.flux2.df, -cfg.C0, cfg.C0);
    const double Fmax = std::max(e.F1, e.F2);

    if (cfg.J_override) {
        e.J = *cfg.J_override;
        e.dx = (cfg.b - cfg.a) / e.J;
        if (Fmax * e.dt > e.dx * (1.0 + 1e-9)) {
            throw std::invalid_argument("build_multid_emulator: explicit grid violates the CFL condition");
        }
    } else if (Fmax > 0.0) {
        // dt <= dx / (m * max_i sup|f_i'|) with m = 2
        e.dx = 2.0 * Fmax * e.dt;
        e.J = static_cast<int>(std::ceil((cfg.b - cfg.a) / e.dx - 1e-12));
        e.dx = (cfg.b - cfg.a) / e.J;
    } else {
        e.J = cfg.N;
        e.dx = (cfg.b - cfg.a) / e.J;
    }
    e.mu = e.dt / (2.0 * e.dx);
    e.K = cfg.K_override ? *cfg.K_override
                         : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(cfg.N))));

    const std::size_t est =
        static_cast<std::size_t>(e.J) * e.J * (e.K + 3) * 4u * (2u * cfg.N);
    if (est > cfg.max_triplets) {
        throw std::invalid_argument("build_multid_emulator: grid too large, about " +
                                    std::to_string(est) + " stored entries");
    }

    // C0 must dominate the initial data over y in [0,1]^d
    double sup0 = 0.0;
    for (int ix = 0; ix < e.J; ++ix) {
        for (int iy = 0; iy < e.J; ++iy) {
            const double x1 = cfg.a + (ix + 0.5) * e.dx;
            const double x2 = cfg.a + (iy + 0.5) * e.dx;
            double up = cfg.mean(x1, x2), down = up;
            for (const auto& m : cfg.modes) {
                const double c = std::sqrt(m.lambda) * m.phi(x1, x2);
                up += std::max(c, 0.0);
                down += std::min(c, 0.0);
            }
            sup0 = std::max({sup0, std::abs(up), std::abs(down)});
        }
    }
    if (sup0 > cfg.C0 * (1.0 + 1e-12)) {
        throw std::invalid_argument("build_multid_emulator: C0 < sup|u0|");
    }

    e.fhat1 = make_interp(cfg.flux1.f, -cfg.C0, cfg.C0, e.K);
    e.fhat2 = make_interp(cfg.flux2.f, -cfg.C0, cfg.C0, e.K);

    const int G = e.J * e.J;
    detail::RowBuilder init(G, e.d);
    for (int ix = 0; ix < e.J; ++ix) {
        for (int iy = 0; iy < e.J; ++iy) {
            const int c = ix * e.J + iy;
            const double x1 = cfg.a + (ix + 0.5) * e.dx;
            const double x2 = cfg.a + (iy + 0.5) * e.dx;
            for (int i = 0; i < e.d; ++i) {
                init.add(c, i, std::sqrt(cfg.modes[i].lambda) * cfg.modes[i].phi(x1, x2));
            }
            init.bias(c, cfg.mean(x1, x2));
        }
    }
    const AffineLayer init_layer = init.take();

    const ReluNet bx = detail::build_axis_block(e.J, e.mu, e.fhat1, 0, cfg.boundary);
    const ReluNet by = detail::build_axis_block(e.J, e.mu, e.fhat2, 1, cfg.boundary);

    e.program.prefix.push_back(scl::detail::merge_affine(bx.layers()[0], init_layer));
    e.program.prefix.push_back(scl::detail::merge_affine(by.layers()[0], bx.layers()[1]));
    e.program.repeat.push_back(scl::detail::merge_affine(bx.layers()[0], by.layers()[1]));
    e.program.repeat.push_back(scl::detail::merge_affine(by.layers()[0], bx.layers()[1]));
    e.program.repeat_count = cfg.N - 1;
    e.program.last = by.layers()[1];
    return e;
}

} // namespace emu
} // namespace scl

#endif // SCL_MULTID_HPP
