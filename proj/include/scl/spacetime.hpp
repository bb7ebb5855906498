#ifndef SCL_SPACETIME_HPP
#define SCL_SPACETIME_HPP

#include <cmath>
#include <stdexcept>
#include <vector>

#include "scl/emulator.hpp"

namespace scl {
namespace emu {

namespace detail {

/// Column layouts of the space-time network stages. Stage-A layer n holds
/// sigma(t), sigma(x-a), carry pairs for all heads up to level n-1, and the
/// flux knot neurons feeding step n.
struct SpaceTimeLayout {
    int J = 0, K = 0, N = 0, d = 0;

    int a_width(int n) const { return 2 + 2 * J * n + J * (K - 1); }
    int a_head(int lev, int j, bool neg) const { return 2 + 2 * J * lev + 2 * j + (neg ? 1 : 0); }
    int a_knot(int n, int j, int k) const { return 2 + 2 * J * n + j * (K - 1) + (k - 1); }

    // S1: sigma(x-a), 2N ramp neurons, head pairs for levels 0..N
    int s1_ramp(int n, bool hi) const { return 1 + 2 * (n - 1) + (hi ? 1 : 0); }
    int s1_head(int lev, int j, bool neg) const {
        return 1 + 2 * N + 2 * J * lev + 2 * j + (neg ? 1 : 0);
    }
    int s1_width() const { return 1 + 2 * N + 2 * J * (N + 1); }

    // S2: sigma(x-a), time-star pairs per (n, j), head-0 pairs
    int s2_star(int n, int j, bool neg) const {
        return 1 + 2 * ((n - 1) * J + j) + (neg ? 1 : 0);
    }
    int s2_h0(int j, bool neg) const { return 1 + 2 * N * J + 2 * j + (neg ? 1 : 0); }
    int s2_width() const { return 1 + 2 * N * J + 2 * J; }

    // S3: x-ramp pairs per interior interface, U_j(t) pairs
    int s3_ramp(int jj, bool hi) const { return 2 * (jj - 1) + (hi ? 1 : 0); }
    int s3_u(int j, bool neg) const { return 2 * (J - 1) + 2 * j + (neg ? 1 : 0); }
    int s3_width() const { return 2 * (J - 1) + 2 * J; }

    // S4: x-star pairs per interior interface, U_1(t) pair
    int s4_star(int jj, bool neg) const { return 2 * (jj - 1) + (neg ? 1 : 0); }
    int s4_u1(bool neg) const { return 2 * (J - 1) + (neg ? 1 : 0); }
    int s4_width() const { return 2 * (J - 1) + 2; }
};

} // namespace detail

/// Space-time network (t, x, y) -> U(t, x, y): the emulator heads U^n_j are
/// computed and carried, then interpolated in time and in space with star
/// operations at scale lambda = 2 C0. Ramps saturate outside [0, T] and
/// outside [a, b], so the network is defined on all of R^{2+d}.
inline ReluNet build_spacetime_net(const EmulatorConfig& cfg) {
    if (cfg.flux.kind != FluxKind::closed_form || cfg.init.kind != InitKind::kl_init) {
        throw std::invalid_argument("build_spacetime_net: fixed flux and kl initial data required");
    }
    const Resolution r = resolve(cfg);
    const Interp1DSpec fhat = make_interp(cfg.flux.f, r.flux_lo, r.flux_hi, r.K);
    const int J = r.J, K = r.K, N = cfg.N, d = cfg.init.dim();
    const double lambda = 2.0 * cfg.C0;
    const double s0 = fhat.slope(0);
    const detail::SpaceTimeLayout L{J, K, N, d};

    // row coefficients of the initial cell value U^0_j over the raw input
    auto init_row = [&](detail::RowBuilder& rb, int row, int j, double sgn) {
        const double x = cfg.a + (j + 0.5) * r.dx;
        for (int i = 0; i < d; ++i) {
            rb.add(row, 2 + i, sgn * std::sqrt(cfg.init.modes[i].lambda) * cfg.init.modes[i].phi(x));
        }
        rb.bias(row, sgn * cfg.init.mean(x));
    };

    // row coefficients of H^n_j over stage-A layer n (n >= 1): the LxF
    // combination of the level n-1 carries and the step-n flux neurons
    auto head_row = [&](detail::RowBuilder& rb, int row, int n, int j, double sgn) {
        const int p = detail::wrap(j + 1, J, cfg.boundary);
        const int mj = detail::wrap(j - 1, J, cfg.boundary);
        rb.add(row, L.a_head(n - 1, p, false), sgn * (0.5 - r.mu * s0));
        rb.add(row, L.a_head(n - 1, p, true), -sgn * (0.5 - r.mu * s0));
        rb.add(row, L.a_head(n - 1, mj, false), sgn * (0.5 + r.mu * s0));
        rb.add(row, L.a_head(n - 1, mj, true), -sgn * (0.5 + r.mu * s0));
        for (int k = 1; k < K; ++k) {
            const double c = fhat.slope(k) - fhat.slope(k - 1);
            rb.add(row, L.a_knot(n, p, k), -sgn * r.mu * c);
            rb.add(row, L.a_knot(n, mj, k), sgn * r.mu * c);
        }
    };

    std::vector<AffineLayer> layers;

    // ---- stage A, layer 1: from the raw input (t, x, y) ----
    {
        detail::RowBuilder rb(L.a_width(1), 2 + d);
        rb.add(0, 0, 1.0);             // sigma(t)
        rb.add(1, 1, 1.0);             // sigma(x - a)
        rb.bias(1, -cfg.a);
        for (int j = 0; j < J; ++j) {
            init_row(rb, L.a_head(0, j, false), j, 1.0);
            init_row(rb, L.a_head(0, j, true), j, -1.0);
            for (int k = 1; k < K; ++k) {
                init_row(rb, L.a_knot(1, j, k), j, 1.0);
                rb.bias(L.a_knot(1, j, k), -fhat.knot(k));
            }
        }
        layers.push_back(rb.take());
    }

    // ---- stage A, layers 2..N ----
    for (int n = 2; n <= N; ++n) {
        detail::RowBuilder rb(L.a_width(n), L.a_width(n - 1));
        rb.add(0, 0, 1.0);
        rb.add(1, 1, 1.0);
        for (int lev = 0; lev <= n - 2; ++lev) {
            for (int j = 0; j < J; ++j) {
                rb.add(L.a_head(lev, j, false), L.a_head(lev, j, false), 1.0);
                rb.add(L.a_head(lev, j, false), L.a_head(lev, j, true), -1.0);
                rb.add(L.a_head(lev, j, true), L.a_head(lev, j, false), -1.0);
                rb.add(L.a_head(lev, j, true), L.a_head(lev, j, true), 1.0);
            }
        }
        for (int j = 0; j < J; ++j) {
            head_row(rb, L.a_head(n - 1, j, false), n - 1, j, 1.0);
            head_row(rb, L.a_head(n - 1, j, true), n - 1, j, -1.0);
            for (int k = 1; k < K; ++k) {
                head_row(rb, L.a_knot(n, j, k), n - 1, j, 1.0);
                rb.bias(L.a_knot(n, j, k), -fhat.knot(k));
            }
        }
        layers.push_back(rb.take());
    }

    // ---- S1: time ramps r_n = (t - t^{n-1}) / dt and all head carries ----
    {
        detail::RowBuilder rb(L.s1_width(), L.a_width(N));
        rb.add(0, 1, 1.0); // sigma(x - a)
        for (int n = 1; n <= N; ++n) {
            const double t_prev = (n - 1) * r.dt;
            rb.add(L.s1_ramp(n, false), 0, 1.0 / r.dt);
            rb.bias(L.s1_ramp(n, false), -t_prev / r.dt);
            rb.add(L.s1_ramp(n, true), 0, 1.0 / r.dt);
            rb.bias(L.s1_ramp(n, true), -t_prev / r.dt - 1.0);
        }
        for (int lev = 0; lev <= N - 1; ++lev) {
            for (int j = 0; j < J; ++j) {
                rb.add(L.s1_head(lev, j, false), L.a_head(lev, j, false), 1.0);
                rb.add(L.s1_head(lev, j, false), L.a_head(lev, j, true), -1.0);
                rb.add(L.s1_head(lev, j, true), L.a_head(lev, j, false), -1.0);
                rb.add(L.s1_head(lev, j, true), L.a_head(lev, j, true), 1.0);
            }
        }
        for (int j = 0; j < J; ++j) {
            head_row(rb, L.s1_head(N, j, false), N, j, 1.0);
            head_row(rb, L.s1_head(N, j, true), N, j, -1.0);
        }
        layers.push_back(rb.take());
    }

    // ---- S2: time stars sigma(+-D + lambda alpha_n - lambda) ----
    {
        detail::RowBuilder rb(L.s2_width(), L.s1_width());
        rb.add(0, 0, 1.0);
        for (int n = 1; n <= N; ++n) {
            for (int j = 0; j < J; ++j) {
                for (int sgn = 0; sgn < 2; ++sgn) {
                    const int row = L.s2_star(n, j, sgn == 1);
                    const double sg = sgn == 0 ? 1.0 : -1.0;
                    // D = H^n_j - H^{n-1}_j
                    rb.add(row, L.s1_head(n, j, false), sg);
                    rb.add(row, L.s1_head(n, j, true), -sg);
                    rb.add(row, L.s1_head(n - 1, j, false), -sg);
                    rb.add(row, L.s1_head(n - 1, j, true), sg);
                    // + lambda alpha_n - lambda
                    rb.add(row, L.s1_ramp(n, false), lambda);
                    rb.add(row, L.s1_ramp(n, true), -lambda);
                    rb.bias(row, -lambda);
                }
            }
        }
        for (int j = 0; j < J; ++j) {
            rb.add(L.s2_h0(j, false), L.s1_head(0, j, false), 1.0);
            rb.add(L.s2_h0(j, false), L.s1_head(0, j, true), -1.0);
            rb.add(L.s2_h0(j, true), L.s1_head(0, j, false), -1.0);
            rb.add(L.s2_h0(j, true), L.s1_head(0, j, true), 1.0);
        }
        layers.push_back(rb.take());
    }

    // U_j(t) over S2 columns: head 0 plus the telescoped star differences
    auto u_of_t_row = [&](detail::RowBuilder& rb, int row, int j, double sgn) {
        rb.add(row, L.s2_h0(j, false), sgn);
        rb.add(row, L.s2_h0(j, true), -sgn);
        for (int n = 1; n <= N; ++n) {
            rb.add(row, L.s2_star(n, j, false), sgn);
            rb.add(row, L.s2_star(n, j, true), -sgn);
        }
    };

    // ---- S3: x ramps rho_jj = (x - x_{jj-1}) / dx and U_j(t) carries ----
    {
        detail::RowBuilder rb(L.s3_width(), L.s2_width());
        for (int jj = 1; jj < J; ++jj) {
            const double center_prev = (jj - 1 + 0.5) * r.dx; // relative to a
            rb.add(L.s3_ramp(jj, false), 0, 1.0 / r.dx);
            rb.bias(L.s3_ramp(jj, false), -center_prev / r.dx);
            rb.add(L.s3_ramp(jj, true), 0, 1.0 / r.dx);
            rb.bias(L.s3_ramp(jj, true), -center_prev / r.dx - 1.0);
        }
        for (int j = 0; j < J; ++j) {
            u_of_t_row(rb, L.s3_u(j, false), j, 1.0);
            u_of_t_row(rb, L.s3_u(j, true), j, -1.0);
        }
        layers.push_back(rb.take());
    }

    // ---- S4: x stars sigma(+-(U_jj - U_{jj-1}) + lambda beta_jj - lambda) ----
    {
        detail::RowBuilder rb(L.s4_width(), L.s3_width());
        for (int jj = 1; jj < J; ++jj) {
            for (int sgn = 0; sgn < 2; ++sgn) {
                const int row = L.s4_star(jj, sgn == 1);
                const double sg = sgn == 0 ? 1.0 : -1.0;
                rb.add(row, L.s3_u(jj, false), sg);
                rb.add(row, L.s3_u(jj, true), -sg);
                rb.add(row, L.s3_u(jj - 1, false), -sg);
                rb.add(row, L.s3_u(jj - 1, true), sg);
                rb.add(row, L.s3_ramp(jj, false), lambda);
                rb.add(row, L.s3_ramp(jj, true), -lambda);
                rb.bias(row, -lambda);
            }
        }
        rb.add(L.s4_u1(false), L.s3_u(0, false), 1.0);
        rb.add(L.s4_u1(false), L.s3_u(0, true), -1.0);
        rb.add(L.s4_u1(true), L.s3_u(0, false), -1.0);
        rb.add(L.s4_u1(true), L.s3_u(0, true), 1.0);
        layers.push_back(rb.take());
    }

    // ---- output: U_1(t) plus the telescoped x-star differences ----
    {
        detail::RowBuilder rb(1, L.s4_width());
        rb.add(0, L.s4_u1(false), 1.0);
        rb.add(0, L.s4_u1(true), -1.0);
        for (int jj = 1; jj < J; ++jj) {
            rb.add(0, L.s4_star(jj, false), 1.0);
            rb.add(0, L.s4_star(jj, true), -1.0);
        }
        layers.push_back(rb.take());
    }

    return ReluNet(std::move(layers));
}

} // namespace emu
} // namespace scl

#endif // SCL_SPACETIME_HPP
