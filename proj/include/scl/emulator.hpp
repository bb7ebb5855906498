#ifndef SCL_EMULATOR_HPP
#define SCL_EMULATOR_HPP

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "scl/blocks.hpp"
#include "scl/fv.hpp"
#include "scl/kl.hpp"
#include "scl/relu_net.hpp"
#include "scl/serialize.hpp"
#include "scl/util.hpp"

namespace scl {
namespace emu {

enum class FluxKind { closed_form, kl_flux };
enum class InitKind { kl_init, external_net };
enum class StoreMode { unrolled, shared_block };

/// Flux of the conservation law. Closed form needs f and f'; optional sup
/// registrations take precedence over sweeps. The kl_flux kind models
/// f(u, z) = mean(u) + sum_i z_i sqrt(lambda_i) phi_i(u) on the support of
/// the mode tabulation.
struct FluxSpec {
    FluxKind kind = FluxKind::closed_form;
    std::function<double(double)> f;
    std::function<double(double)> df;
    std::optional<double> f1sup; // sup|f'| on the flux domain
    std::optional<double> f2sup; // sup|f''| on the flux domain
    kl::KLSpec kl;               // kl_flux modes
    double sigma_f = 0.0;        // eigenvalue-decay exponent, user input
};

struct InitMode {
    double lambda = 0.0;
    std::function<double(double)> phi;
};

/// Parametric initial data. kl_init realizes u0(x_j, .) as a single affine
/// layer; external_net supplies one per-knot network plus the declared
/// magnitude constant.
struct InitSpec {
    InitKind kind = InitKind::kl_init;
    std::function<double(double)> mean;
    std::vector<InitMode> modes;
    std::vector<ReluNet> knot_nets; // external_net: one net per cell, input dim ext_dim
    int ext_dim = 0;
    double C_B = 0.0; // declared magnitude constant for external nets

    int dim() const {
        return kind == InitKind::kl_init ? static_cast<int>(modes.size()) : ext_dim;
    }
};

struct EmulatorConfig {
    double a = 0.0;
    double b = 1.0;
    double T = 0.1;
    int N = 16;
    FluxSpec flux;
    InitSpec init;
    double C0 = 1.0;
    Boundary boundary = Boundary::periodic;
    std::optional<int> K_override;
    std::optional<int> J_override;
    std::optional<double> F_override;
    std::optional<std::pair<double, double>> flux_domain; // default [-C0, C0] / KL support
    StoreMode store_mode = StoreMode::unrolled;
};

/// Resolved discretization: dt = T/N and dx = F dt with F = sup|f'|, cells
/// rounded up so the CFL number F dt / dx is at most 1.
struct Resolution {
    double dt = 0.0;
    double dx = 0.0;
    double mu = 0.0; // dt / (2 dx)
    double F = 0.0;
    int J = 0;
    int K = 0;       // flux interpolant segments
    int N_star = 0;  // inflated step count (parametric flux), else N
    double flux_lo = 0.0;
    double flux_hi = 0.0;
};

namespace detail {

inline int wrap(int j, int J, Boundary bc) {
    if (bc == Boundary::periodic) return ((j % J) + J) % J;
    return std::clamp(j, 0, J - 1);
}

/// sup over u in [lo, hi] and z in [0,1]^s of |d_u f(u, z)| for a KL flux.
inline double kl_flux_deriv_sup(const FluxSpec& flux, double lo, double hi) {
    const auto& spec = flux.kl;
    double sup = 0.0;
    const int n = 10000;
    for (int k = 0; k <= n; ++k) {
        const double u = lo + (hi - lo) * k / n;
        double up = flux.df(u), down = flux.df(u);
        for (int i = 0; i < spec.dim(); ++i) {
            const double h = (spec.hi - spec.lo) / (static_cast<int>(spec.modes[i].phi.size()) - 1);
            const double c = std::sqrt(spec.modes[i].lambda) *
                             (spec.phi(i, std::min(u + h, spec.hi)) -
                              spec.phi(i, std::max(u - h, spec.lo))) /
                             (std::min(u + h, spec.hi) - std::max(u - h, spec.lo));
            up += std::max(c, 0.0);
            down += std::min(c, 0.0);
        }
        sup = std::max({sup, std::abs(up), std::abs(down)});
    }
    return sup;
}

} // namespace detail

inline Resolution resolve(const EmulatorConfig& cfg) {
    if (cfg.N < 1) throw std::invalid_argument("resolve: need N >= 1");
    if (!(cfg.a < cfg.b)) throw std::invalid_argument("resolve: empty domain");
    Resolution r;
    if (cfg.flux_domain) {
        r.flux_lo = cfg.flux_domain->first;
        r.flux_hi = cfg.flux_domain->second;
        if (!(r.flux_lo < r.flux_hi)) throw std::invalid_argument("resolve: empty flux domain");
    } else if (cfg.flux.kind == FluxKind::closed_form) {
        r.flux_lo = -cfg.C0;
        r.flux_hi = cfg.C0;
    } else {
        r.flux_lo = cfg.flux.kl.lo;
        r.flux_hi = cfg.flux.kl.hi;
    }
    if (cfg.F_override) {
        r.F = *cfg.F_override;
    } else if (cfg.flux.f1sup) {
        r.F = *cfg.flux.f1sup;
    } else if (cfg.flux.kind == FluxKind::kl_flux) {
        r.F = detail::kl_flux_deriv_sup(cfg.flux, r.flux_lo, r.flux_hi);
    } else {
        r.F = sup_abs_sweep(cfg.flux.df, r.flux_lo, r.flux_hi);
    }

    const int s = cfg.flux.kind == FluxKind::kl_flux ? cfg.flux.kl.dim() : 0;
    r.N_star = cfg.N;
    if (cfg.flux.kind == FluxKind::kl_flux && cfg.flux.sigma_f > 0.0) {
        r.N_star = static_cast<int>(std::ceil(std::pow(s, 4.0 * cfg.flux.sigma_f) * cfg.N));
    }
    r.dt = cfg.T / r.N_star;

    if (cfg.J_override) {
        r.J = *cfg.J_override;
        r.dx = (cfg.b - cfg.a) / r.J;
        if (r.F * r.dt > r.dx * (1.0 + 1e-9)) {
            throw std::invalid_argument("resolve: explicit J violates the CFL condition");
        }
    } else if (r.F > 0.0) {
        r.dx = r.F * r.dt;
        r.J = static_cast<int>(std::ceil((cfg.b - cfg.a) / r.dx - 1e-12));
        r.dx = (cfg.b - cfg.a) / r.J;
    } else {
        r.J = r.N_star;
        r.dx = (cfg.b - cfg.a) / r.J;
    }
    r.mu = r.dt / (2.0 * r.dx);
    r.K = cfg.K_override ? *cfg.K_override
                         : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(r.N_star))));
    return r;
}

inline double cell_center(const EmulatorConfig& cfg, const Resolution& r, int j) {
    return cfg.a + (j + 0.5) * r.dx;
}

/// Exact range of the affine KL initial data over y in [0,1]^d and the
/// cell centers. External nets fall back to the declared [-C0, C0].
inline std::pair<double, double> init_range(const EmulatorConfig& cfg, const Resolution& r) {
    if (cfg.init.kind != InitKind::kl_init) return {-cfg.C0, cfg.C0};
    double lo = cfg.init.mean(cell_center(cfg, r, 0));
    double hi = lo;
    for (int j = 0; j < r.J; ++j) {
        const double x = cell_center(cfg, r, j);
        double up = cfg.init.mean(x), down = up;
        for (const auto& m : cfg.init.modes) {
            const double c = std::sqrt(m.lambda) * m.phi(x);
            up += std::max(c, 0.0);
            down += std::min(c, 0.0);
        }
        hi = std::max(hi, up);
        lo = std::min(lo, down);
    }
    return {lo, hi};
}

inline double init_sup(const EmulatorConfig& cfg, const Resolution& r) {
    const auto [lo, hi] = init_range(cfg, r);
    return std::max(std::abs(lo), std::abs(hi));
}

/// Affine layer mapping y to the initial cell values (one row per cell).
inline ReluNet build_initial_layer(const EmulatorConfig& cfg, const Resolution& r) {
    const InitSpec& init = cfg.init;
    if (init.kind == InitKind::kl_init) {
        const int d = init.dim();
        AffineLayer l(r.J, d);
        for (int j = 0; j < r.J; ++j) {
            const double x = cell_center(cfg, r, j);
            for (int i = 0; i < d; ++i) {
                l.add(j, i, std::sqrt(init.modes[i].lambda) * init.modes[i].phi(x));
            }
            l.set_bias(j, init.mean(x));
        }
        std::vector<AffineLayer> layers;
        layers.push_back(std::move(l));
        return ReluNet(std::move(layers));
    }
    if (static_cast<int>(init.knot_nets.size()) != r.J) {
        throw std::invalid_argument("build_initial_layer: need one external net per cell");
    }
    int depth = 1;
    for (const ReluNet& n : init.knot_nets) {
        if (n.input_dim() != init.ext_dim) {
            throw std::invalid_argument("build_initial_layer: external net input dim mismatch");
        }
        depth = std::max(depth, n.depth());
    }
    std::vector<ReluNet> padded;
    for (const ReluNet& n : init.knot_nets) {
        padded.push_back(n.depth() == depth ? n
                                            : compose(identity_chain(1, depth - n.depth() + 1), n));
    }
    return parallel(padded, /*shared_input=*/true);
}

namespace detail {

/// Builder for one affine layer that accumulates coefficients per
/// (row, col) before storing, so repeated contributions merge exactly.
struct RowBuilder {
    AffineLayer layer;
    std::map<std::pair<int, int>, double> acc;

    RowBuilder(int rows, int cols) : layer(rows, cols) {}

    void add(int r, int c, double v) {
        if (v != 0.0) acc[{r, c}] += v;
    }
    void bias(int r, double v) { layer.bias[r] += v; }

    AffineLayer take() {
        for (const auto& [rc, v] : acc) {
            if (v != 0.0) layer.weights.push_back({rc.first, rc.second, v});
        }
        return std::move(layer);
    }
};

/// Per-cell hidden layout of the fixed-flux time-step block: an identity
/// carry pair followed by the interior flux knot neurons. The outer and
/// edge knot neurons of the interpolant are affine or zero on the flux
/// domain and are folded into the output coefficients through the carry.
struct CellLayout {
    int K = 0;
    int per_cell() const { return 2 + (K - 1); }
    int carry_pos(int j) const { return j * per_cell(); }
    int carry_neg(int j) const { return j * per_cell() + 1; }
    int knot(int j, int k) const { return j * per_cell() + 1 + k; } // k = 1..K-1
};

} // namespace detail

/// One Lax-Friedrichs time step as a depth-2 network: maps (U_j)_j to the
/// updated cells 0.5 (U_{j+1} + U_{j-1}) - mu (fhat(U_{j+1}) - fhat(U_{j-1}))
/// where fhat is the piecewise-linear flux interpolant. Each cell carries
/// one identity pair and one set of flux neurons, shared by the two
/// neighboring cell updates.
inline ReluNet build_lxf_block(const Resolution& r, const Interp1DSpec& fhat, Boundary bc) {
    const int J = r.J;
    if (J < 3) throw std::invalid_argument("build_lxf_block: need at least 3 cells");
    const int K = fhat.segments();
    const detail::CellLayout lay{K};
    const double s0 = fhat.slope(0);

    detail::RowBuilder hidden(J * lay.per_cell(), J);
    for (int j = 0; j < J; ++j) {
        hidden.add(lay.carry_pos(j), j, 1.0);
        hidden.add(lay.carry_neg(j), j, -1.0);
        for (int k = 1; k < K; ++k) {
            hidden.add(lay.knot(j, k), j, 1.0);
            hidden.bias(lay.knot(j, k), -fhat.knot(k));
        }
    }

    detail::RowBuilder out(J, J * lay.per_cell());
    for (int j = 0; j < J; ++j) {
        const int p = detail::wrap(j + 1, J, bc);
        const int m = detail::wrap(j - 1, J, bc);
        out.add(j, lay.carry_pos(p), 0.5 - r.mu * s0);
        out.add(j, lay.carry_neg(p), -(0.5 - r.mu * s0));
        out.add(j, lay.carry_pos(m), 0.5 + r.mu * s0);
        out.add(j, lay.carry_neg(m), -(0.5 + r.mu * s0));
        for (int k = 1; k < K; ++k) {
            const double c = fhat.slope(k) - fhat.slope(k - 1);
            out.add(j, lay.knot(p, k), -r.mu * c);
            out.add(j, lay.knot(m, k), r.mu * c);
        }
    }

    std::vector<AffineLayer> layers;
    layers.push_back(hidden.take());
    layers.push_back(out.take());
    return ReluNet(std::move(layers));
}

/// Layer program: prefix, a repeated group, and a closing affine layer.
/// ReLU is applied after every affine map except the last. Holding the
/// repeated group once is the shared-block storage mode; materializing it
/// is the unrolled network. Both evaluate the same layer sequence, so the
/// outputs agree bit for bit.
struct LayerProgram {
    std::vector<AffineLayer> prefix;
    std::vector<AffineLayer> repeat;
    int repeat_count = 0;
    AffineLayer last;

    ReluNet unrolled() const {
        std::vector<AffineLayer> layers = prefix;
        for (int n = 0; n < repeat_count; ++n) {
            layers.insert(layers.end(), repeat.begin(), repeat.end());
        }
        layers.push_back(last);
        return ReluNet(std::move(layers));
    }

    std::vector<double> eval(std::span<const double> x) const {
        std::vector<double> cur(x.begin(), x.end());
        std::vector<double> next;
        auto step = [&](const AffineLayer& l, bool relu) {
            l.apply(cur, next);
            if (relu) {
                for (double& v : next) v = std::max(v, 0.0);
            }
            cur.swap(next);
        };
        for (const AffineLayer& l : prefix) step(l, true);
        for (int n = 0; n < repeat_count; ++n) {
            for (const AffineLayer& l : repeat) step(l, true);
        }
        step(last, false);
        return cur;
    }
};

/// A built emulator: the resolved discretization, the flux interpolant the
/// loop oracle must use, and the network in both storage modes.
struct Emulator {
    Resolution res;
    double a = 0.0, b = 1.0, T = 0.1;
    int N = 0;
    int d = 0;
    int s = 0;
    Boundary boundary = Boundary::periodic;
    FluxKind flux_kind = FluxKind::closed_form;
    StoreMode store_mode = StoreMode::unrolled;
    Interp1DSpec fhat;                    // fixed flux (or mean flux)
    std::vector<Interp1DSpec> phi_hat;    // parametric flux modes
    std::vector<double> sqrt_lambda;      // parametric flux mode scales
    LayerProgram program;

    std::vector<double> eval(std::span<const double> y) const { return program.eval(y); }
    std::vector<double> eval(std::initializer_list<double> y) const {
        return program.eval(std::span<const double>(y.begin(), y.size()));
    }
    ReluNet unrolled() const { return program.unrolled(); }

    PiecewiseConstantFn solution(std::span<const double> y) const {
        return PiecewiseConstantFn{a, b, eval(y)};
    }

    /// The loop-oracle flux: evaluates the same piecewise-linear fhat.
    std::function<double(double)> oracle_flux() const {
        Interp1DSpec spec = fhat;
        return [spec](double u) { return spec(u); };
    }

    /// Parametric oracle flux at fixed z, through the same mult nets.
    std::function<double(double)> oracle_flux_parametric(std::vector<double> z) const;
};

/// Emulator network for a fixed flux: initial layer followed by N identical
/// Lax-Friedrichs blocks, with adjacent affine maps merged exactly.
inline Emulator build_emulator(const EmulatorConfig& cfg) {
    if (cfg.flux.kind != FluxKind::closed_form) {
        throw std::invalid_argument("build_emulator: fixed flux required (use the parametric builder)");
    }
    Emulator e;
    e.res = resolve(cfg);
    e.a = cfg.a;
    e.b = cfg.b;
    e.T = cfg.T;
    e.N = cfg.N;
    e.d = cfg.init.dim();
    e.boundary = cfg.boundary;
    e.flux_kind = cfg.flux.kind;
    e.store_mode = cfg.store_mode;

    const auto [lo0, hi0] = init_range(cfg, e.res);
    if (std::max(std::abs(lo0), std::abs(hi0)) > cfg.C0 * (1.0 + 1e-12)) {
        throw std::invalid_argument("build_emulator: C0 < sup|u0|");
    }
    if (hi0 > e.res.flux_hi + 1e-12 || lo0 < e.res.flux_lo - 1e-12) {
        throw std::invalid_argument("build_emulator: data range exceeds the flux domain");
    }

    e.fhat = make_interp(cfg.flux.f, e.res.flux_lo, e.res.flux_hi, e.res.K);
    const ReluNet init = build_initial_layer(cfg, e.res);
    const ReluNet block = build_lxf_block(e.res, e.fhat, cfg.boundary);

    const auto& init_layers = init.layers();
    for (std::size_t k = 0; k + 1 < init_layers.size(); ++k) e.program.prefix.push_back(init_layers[k]);
    e.program.prefix.push_back(scl::detail::merge_affine(block.layers()[0], init_layers.back()));
    e.program.repeat.push_back(scl::detail::merge_affine(block.layers()[0], block.layers()[1]));
    e.program.repeat_count = cfg.N - 1;
    e.program.last = block.layers()[1];
    return e;
}

// ---------------------------------------------------------------------------
// parametric flux (Karhunen-Loeve flux) emulator
// ---------------------------------------------------------------------------

namespace detail {

/// Column layout of one sigma-layer group of the parametric block.
struct ParamLayout {
    int J = 0, s = 0, K2 = 0;
    std::vector<int> active; // modes with lambda > 0 and nonzero amplitude

    // stage 1: per cell [u+, u-, knots 1..K2-1], then s z-carries
    int s1_per_cell() const { return 2 + (K2 - 1); }
    int s1_carry_pos(int j) const { return j * s1_per_cell(); }
    int s1_carry_neg(int j) const { return j * s1_per_cell() + 1; }
    int s1_knot(int j, int k) const { return j * s1_per_cell() + 1 + k; }
    int s1_z(int i) const { return J * s1_per_cell() + i; }
    int s1_width() const { return J * s1_per_cell() + s; }

    // stage 2: per cell [u+, u-, fb+, fb-, 8 per active mode], then z
    int s2_per_cell() const { return 4 + 8 * static_cast<int>(active.size()); }
    int s2_carry_pos(int j) const { return j * s2_per_cell(); }
    int s2_carry_neg(int j) const { return j * s2_per_cell() + 1; }
    int s2_fb_pos(int j) const { return j * s2_per_cell() + 2; }
    int s2_fb_neg(int j) const { return j * s2_per_cell() + 3; }
    int s2_mult(int j, int ai, int n) const { return j * s2_per_cell() + 4 + 8 * ai + n; }
    int s2_z(int i) const { return J * s2_per_cell() + i; }
    int s2_width() const { return J * s2_per_cell() + s; }

    // stages 3..m+1: per cell [u+, u-, fb+, fb-, 6 per active mode], then z
    int sq_per_cell() const { return 4 + 6 * static_cast<int>(active.size()); }
    int sq_carry_pos(int j) const { return j * sq_per_cell(); }
    int sq_carry_neg(int j) const { return j * sq_per_cell() + 1; }
    int sq_fb_pos(int j) const { return j * sq_per_cell() + 2; }
    int sq_fb_neg(int j) const { return j * sq_per_cell() + 3; }
    int sq_mult(int j, int ai, int n) const { return j * sq_per_cell() + 4 + 6 * ai + n; }
    int sq_z(int i) const { return J * sq_per_cell() + i; }
    int sq_width() const { return J * sq_per_cell() + s; }
};

/// Coefficients of an interpolant value over the stage-1 cell group: the
/// interior knot neurons plus a linear part through the identity carry.
/// value(u) = sum_k coeff_k sigma(u - x_k) + lin * u + constant.
struct SlimInterp {
    std::vector<double> knot_coeff; // size K2-1, over the shared knot grid
    double lin = 0.0;
    double constant = 0.0;
};

/// Express an interpolant with K segments on the shared K2-knot grid
/// (K2 = stride * K) in slim on-domain form.
inline SlimInterp slim_on_grid(const Interp1DSpec& spec, int K2) {
    const int K = spec.segments();
    if (K2 % K != 0) throw std::logic_error("slim_on_grid: knot grids are not nested");
    const int stride = K2 / K;
    SlimInterp out;
    out.knot_coeff.assign(K2 - 1, 0.0);
    const double s0 = spec.slope(0);
    for (int k = 1; k < K; ++k) {
        const int pos = k * stride; // index on the K2 grid, 1..K2-1
        out.knot_coeff[pos - 1] = spec.slope(k) - spec.slope(k - 1);
    }
    out.lin = s0;
    out.constant = spec.values.front() - s0 * spec.a;
    return out;
}

} // namespace detail

/// Emulator network for a parametric Karhunen-Loeve flux: per time step the
/// flux value is assembled from a mean-flux interpolant with K1 segments,
/// mode interpolants with K2 = s K1 segments on a shared knot grid, and one
/// multiplication net of depth m+1 per mode, with the z vector carried
/// through every layer.
inline Emulator build_emulator_parametric_flux(const EmulatorConfig& cfg) {
    if (cfg.flux.kind != FluxKind::kl_flux) {
        throw std::invalid_argument("build_emulator_parametric_flux: kl flux required");
    }
    const auto& kspec = cfg.flux.kl;
    const int s = kspec.dim();
    if (s < 1) throw std::invalid_argument("build_emulator_parametric_flux: need s >= 1 modes");

    Emulator e;
    e.res = resolve(cfg);
    e.a = cfg.a;
    e.b = cfg.b;
    e.T = cfg.T;
    e.N = e.res.N_star;
    e.d = cfg.init.dim();
    e.s = s;
    e.boundary = cfg.boundary;
    e.flux_kind = FluxKind::kl_flux;
    e.store_mode = cfg.store_mode;

    const auto [lo0, hi0] = init_range(cfg, e.res);
    if (std::max(std::abs(lo0), std::abs(hi0)) > cfg.C0 * (1.0 + 1e-12)) {
        throw std::invalid_argument("build_emulator_parametric_flux: C0 < sup|u0|");
    }
    if (hi0 > e.res.flux_hi + 1e-12 || lo0 < e.res.flux_lo - 1e-12) {
        throw std::invalid_argument(
            "build_emulator_parametric_flux: data range exceeds the flux support");
    }

    const int J = e.res.J;
    const int K1 = e.res.K;
    const int K2 = s * K1;
    const int m = std::max(
        1, static_cast<int>(std::ceil(std::log2(s * std::sqrt(static_cast<double>(e.res.N_star))))));
    const double lo = e.res.flux_lo, hi = e.res.flux_hi;

    e.fhat = make_interp(cfg.flux.f, lo, hi, K1);
    for (int i = 0; i < s; ++i) {
        e.phi_hat.push_back(make_interp([&](double u) { return kspec.phi(i, u); }, lo, hi, K2));
        e.sqrt_lambda.push_back(std::sqrt(kspec.modes[i].lambda));
    }

    detail::ParamLayout lay;
    lay.J = J;
    lay.s = s;
    lay.K2 = K2;
    std::vector<double> amp(s, 0.0); // (1 + N_i)^2 / 4
    std::vector<double> sc(s, 0.0);  // 1 / (1 + N_i)
    for (int i = 0; i < s; ++i) {
        double Ni = 0.0;
        for (double v : e.phi_hat[i].values) Ni = std::max(Ni, std::abs(v));
        if (e.sqrt_lambda[i] > 0.0 && Ni > 0.0) {
            lay.active.push_back(i);
            amp[i] = (1.0 + Ni) * (1.0 + Ni) / 4.0;
            sc[i] = 1.0 / (1.0 + Ni);
        }
    }
    const int A = static_cast<int>(lay.active.size());

    const detail::SlimInterp fbar = detail::slim_on_grid(e.fhat, K2);
    std::vector<detail::SlimInterp> phis;
    for (int i = 0; i < s; ++i) phis.push_back(detail::slim_on_grid(e.phi_hat[i], K2));

    // ---- stage-1 sigma layer: knot neurons, identity carries, z carries ----
    detail::RowBuilder b1(lay.s1_width(), J + s);
    for (int j = 0; j < J; ++j) {
        b1.add(lay.s1_carry_pos(j), j, 1.0);
        b1.add(lay.s1_carry_neg(j), j, -1.0);
        for (int k = 1; k < K2; ++k) {
            b1.add(lay.s1_knot(j, k), j, 1.0);
            b1.bias(lay.s1_knot(j, k), -(lo + k * (hi - lo) / K2));
        }
    }
    for (int i = 0; i < s; ++i) b1.add(lay.s1_z(i), J + i, 1.0);

    // helper: emit `scale * interp(u_j)` into row r of a builder over stage-1 cols
    auto emit_interp = [&](detail::RowBuilder& rb, int row, int j, const detail::SlimInterp& si,
                           double scale) {
        for (int k = 1; k < K2; ++k) {
            rb.add(row, lay.s1_knot(j, k), scale * si.knot_coeff[k - 1]);
        }
        rb.add(row, lay.s1_carry_pos(j), scale * si.lin);
        rb.add(row, lay.s1_carry_neg(j), -scale * si.lin);
        rb.bias(row, scale * si.constant);
    };

    // ---- stage-2 sigma layer: mult-net first layers, value carries ----
    detail::RowBuilder b2(lay.s2_width(), lay.s1_width());
    for (int j = 0; j < J; ++j) {
        b2.add(lay.s2_carry_pos(j), lay.s1_carry_pos(j), 1.0);
        b2.add(lay.s2_carry_pos(j), lay.s1_carry_neg(j), -1.0);
        b2.add(lay.s2_carry_neg(j), lay.s1_carry_pos(j), -1.0);
        b2.add(lay.s2_carry_neg(j), lay.s1_carry_neg(j), 1.0);
        emit_interp(b2, lay.s2_fb_pos(j), j, fbar, 1.0);
        emit_interp(b2, lay.s2_fb_neg(j), j, fbar, -1.0);
        for (int ai = 0; ai < A; ++ai) {
            const int i = lay.active[ai];
            // p = sc (z_i + phi_i(u_j)), q = sc (z_i - phi_i(u_j));
            // neurons sigma(+-p), sigma(+-p - 1/2), sigma(+-q), sigma(+-q - 1/2)
            for (int n = 0; n < 8; ++n) {
                const int row = lay.s2_mult(j, ai, n);
                const bool qch = n >= 4;
                const double sgn = (n % 2 == 0) ? 1.0 : -1.0; // sign in front of the channel
                const double phi_sign = qch ? -1.0 : 1.0;
                emit_interp(b2, row, j, phis[i], sgn * phi_sign * sc[i]);
                b2.add(row, lay.s1_z(i), sgn * sc[i]);
                if (n % 4 >= 2) b2.bias(row, -0.5);
            }
        }
    }
    for (int i = 0; i < s; ++i) b2.add(lay.s2_z(i), lay.s1_z(i), 1.0);

    // ---- stages 3..m+1: square-chain layers of every mult net ----
    std::vector<AffineLayer> chain_layers;
    for (int stage = 2; stage <= m; ++stage) {
        const bool from_s2 = stage == 2;
        const int in_width = from_s2 ? lay.s2_width() : lay.sq_width();
        detail::RowBuilder bq(lay.sq_width(), in_width);
        for (int j = 0; j < J; ++j) {
            const int cp = from_s2 ? lay.s2_carry_pos(j) : lay.sq_carry_pos(j);
            const int cn = from_s2 ? lay.s2_carry_neg(j) : lay.sq_carry_neg(j);
            const int fp = from_s2 ? lay.s2_fb_pos(j) : lay.sq_fb_pos(j);
            const int fn = from_s2 ? lay.s2_fb_neg(j) : lay.sq_fb_neg(j);
            bq.add(lay.sq_carry_pos(j), cp, 1.0);
            bq.add(lay.sq_carry_pos(j), cn, -1.0);
            bq.add(lay.sq_carry_neg(j), cp, -1.0);
            bq.add(lay.sq_carry_neg(j), cn, 1.0);
            bq.add(lay.sq_fb_pos(j), fp, 1.0);
            bq.add(lay.sq_fb_pos(j), fn, -1.0);
            bq.add(lay.sq_fb_neg(j), fp, -1.0);
            bq.add(lay.sq_fb_neg(j), fn, 1.0);
            for (int ai = 0; ai < A; ++ai) {
                const double scale = std::pow(4.0, -(stage - 1));
                for (int ch = 0; ch < 2; ++ch) {
                    const int g = lay.sq_mult(j, ai, 3 * ch + 0);
                    const int gh = lay.sq_mult(j, ai, 3 * ch + 1);
                    const int v = lay.sq_mult(j, ai, 3 * ch + 2);
                    if (from_s2) {
                        // |c| = sigma(c) + sigma(-c), sigma(|c| - 1/2) likewise
                        const int c0 = lay.s2_mult(j, ai, 4 * ch + 0);
                        const int c1 = lay.s2_mult(j, ai, 4 * ch + 1);
                        const int c2 = lay.s2_mult(j, ai, 4 * ch + 2);
                        const int c3 = lay.s2_mult(j, ai, 4 * ch + 3);
                        bq.add(g, c0, 2.0);
                        bq.add(g, c1, 2.0);
                        bq.add(g, c2, -4.0);
                        bq.add(g, c3, -4.0);
                        bq.add(gh, c0, 2.0);
                        bq.add(gh, c1, 2.0);
                        bq.add(gh, c2, -4.0);
                        bq.add(gh, c3, -4.0);
                        bq.bias(gh, -0.5);
                        bq.add(v, c0, 0.5);
                        bq.add(v, c1, 0.5);
                        bq.add(v, c2, 1.0);
                        bq.add(v, c3, 1.0);
                    } else {
                        const int pg = lay.sq_mult(j, ai, 3 * ch + 0);
                        const int pgh = lay.sq_mult(j, ai, 3 * ch + 1);
                        const int pv = lay.sq_mult(j, ai, 3 * ch + 2);
                        bq.add(g, pg, 2.0);
                        bq.add(g, pgh, -4.0);
                        bq.add(gh, pg, 2.0);
                        bq.add(gh, pgh, -4.0);
                        bq.bias(gh, -0.5);
                        bq.add(v, pg, -2.0 * scale);
                        bq.add(v, pgh, 4.0 * scale);
                        bq.add(v, pv, 1.0);
                    }
                }
            }
        }
        const int zin = from_s2 ? lay.s2_z(0) : lay.sq_z(0);
        for (int i = 0; i < s; ++i) bq.add(lay.sq_z(i), zin + i, 1.0);
        chain_layers.push_back(bq.take());
    }

    // ---- closing affine: Lax-Friedrichs combination plus z passthrough ----
    const bool last_is_s2 = (m == 1);
    const int last_width = last_is_s2 ? lay.s2_width() : lay.sq_width();
    detail::RowBuilder bout(J + s, last_width);
    // value of the mult net for mode ai at cell j as coefficients
    auto emit_mult_value = [&](int row, int j, int ai, double scale) {
        const int i = lay.active[ai];
        const double a2 = scale * e.sqrt_lambda[i] * amp[i];
        if (last_is_s2) {
            for (int ch = 0; ch < 2; ++ch) {
                const double sgn = ch == 0 ? 1.0 : -1.0;
                bout.add(row, lay.s2_mult(j, ai, 4 * ch + 0), sgn * a2 * 0.5);
                bout.add(row, lay.s2_mult(j, ai, 4 * ch + 1), sgn * a2 * 0.5);
                bout.add(row, lay.s2_mult(j, ai, 4 * ch + 2), sgn * a2);
                bout.add(row, lay.s2_mult(j, ai, 4 * ch + 3), sgn * a2);
            }
        } else {
            const double scale4 = std::pow(4.0, -m);
            for (int ch = 0; ch < 2; ++ch) {
                const double sgn = ch == 0 ? 1.0 : -1.0;
                bout.add(row, lay.sq_mult(j, ai, 3 * ch + 0), sgn * a2 * -2.0 * scale4);
                bout.add(row, lay.sq_mult(j, ai, 3 * ch + 1), sgn * a2 * 4.0 * scale4);
                bout.add(row, lay.sq_mult(j, ai, 3 * ch + 2), sgn * a2);
            }
        }
    };
    for (int j = 0; j < J; ++j) {
        const int p = detail::wrap(j + 1, J, cfg.boundary);
        const int mj = detail::wrap(j - 1, J, cfg.boundary);
        const int cp_p = last_is_s2 ? lay.s2_carry_pos(p) : lay.sq_carry_pos(p);
        const int cn_p = last_is_s2 ? lay.s2_carry_neg(p) : lay.sq_carry_neg(p);
        const int cp_m = last_is_s2 ? lay.s2_carry_pos(mj) : lay.sq_carry_pos(mj);
        const int cn_m = last_is_s2 ? lay.s2_carry_neg(mj) : lay.sq_carry_neg(mj);
        bout.add(j, cp_p, 0.5);
        bout.add(j, cn_p, -0.5);
        bout.add(j, cp_m, 0.5);
        bout.add(j, cn_m, -0.5);
        const int fp_p = last_is_s2 ? lay.s2_fb_pos(p) : lay.sq_fb_pos(p);
        const int fn_p = last_is_s2 ? lay.s2_fb_neg(p) : lay.sq_fb_neg(p);
        const int fp_m = last_is_s2 ? lay.s2_fb_pos(mj) : lay.sq_fb_pos(mj);
        const int fn_m = last_is_s2 ? lay.s2_fb_neg(mj) : lay.sq_fb_neg(mj);
        bout.add(j, fp_p, -e.res.mu);
        bout.add(j, fn_p, e.res.mu);
        bout.add(j, fp_m, e.res.mu);
        bout.add(j, fn_m, -e.res.mu);
        for (int ai = 0; ai < A; ++ai) {
            emit_mult_value(j, p, ai, -e.res.mu);
            emit_mult_value(j, mj, ai, e.res.mu);
        }
    }
    const int zlast = last_is_s2 ? lay.s2_z(0) : lay.sq_z(0);
    for (int i = 0; i < s; ++i) bout.add(J + i, zlast + i, 1.0);

    // ---- initial affine: cells from y, z passthrough ----
    const int d = cfg.init.dim();
    detail::RowBuilder init(J + s, d + s);
    for (int j = 0; j < J; ++j) {
        const double x = cell_center(cfg, e.res, j);
        for (int i = 0; i < d; ++i) {
            init.add(j, i, std::sqrt(cfg.init.modes[i].lambda) * cfg.init.modes[i].phi(x));
        }
        init.bias(j, cfg.init.mean(x));
    }
    for (int i = 0; i < s; ++i) init.add(J + i, d + i, 1.0);
    if (cfg.init.kind != InitKind::kl_init) {
        throw std::invalid_argument("build_emulator_parametric_flux: kl initial data required");
    }

    const AffineLayer first_sigma = b1.take();
    const AffineLayer second_sigma = b2.take();
    const AffineLayer out_layer = bout.take();
    const AffineLayer init_layer = init.take();

    e.program.prefix.push_back(scl::detail::merge_affine(first_sigma, init_layer));
    e.program.prefix.push_back(second_sigma);
    for (const auto& l : chain_layers) e.program.prefix.push_back(l);
    e.program.repeat.push_back(scl::detail::merge_affine(first_sigma, out_layer));
    e.program.repeat.push_back(second_sigma);
    for (const auto& l : chain_layers) e.program.repeat.push_back(l);
    e.program.repeat_count = e.res.N_star - 1;
    // closing layer: drop the z passthrough rows
    AffineLayer final_out(J, out_layer.cols);
    for (const Triplet& t : out_layer.weights) {
        if (t.row < J) final_out.add(t.row, t.col, t.value);
    }
    for (int j = 0; j < J; ++j) final_out.set_bias(j, out_layer.bias[j]);
    e.program.last = std::move(final_out);
    return e;
}

inline std::function<double(double)> Emulator::oracle_flux_parametric(std::vector<double> z) const {
    if (static_cast<int>(z.size()) != s) {
        throw std::invalid_argument("oracle_flux_parametric: z dimension mismatch");
    }
    // mirror of the network arithmetic: interpolants plus mult-net values
    const Interp1DSpec mean = fhat;
    std::vector<Interp1DSpec> phis = phi_hat;
    std::vector<double> sl = sqrt_lambda;
    const int steps = [&] {
        int m = std::max(1, static_cast<int>(std::ceil(
                                std::log2(s * std::sqrt(static_cast<double>(res.N_star))))));
        return m;
    }();
    return [mean, phis, sl, z, steps](double u) {
        auto fm = [&](double t) {
            // t in [0,1]; dyadic square-chain value after `steps` levels
            double g = t, v = t;
            for (int k = 1; k <= steps; ++k) {
                g = 2.0 * std::max(g, 0.0) - 4.0 * std::max(g - 0.5, 0.0);
                v = v - g * std::pow(4.0, -k);
            }
            return v;
        };
        double val = mean(u);
        for (std::size_t i = 0; i < phis.size(); ++i) {
            if (sl[i] == 0.0) continue;
            double Ni = 0.0;
            for (double w : phis[i].values) Ni = std::max(Ni, std::abs(w));
            if (Ni == 0.0) continue;
            const double y = phis[i](u);
            const double sc = 1.0 / (1.0 + Ni);
            const double amp = (1.0 + Ni) * (1.0 + Ni) / 4.0;
            val += sl[i] * amp * (fm(std::abs(sc * (z[i] + y))) - fm(std::abs(sc * (z[i] - y))));
        }
        return val;
    };
}

// ---------------------------------------------------------------------------
// observables
// ---------------------------------------------------------------------------

/// Midpoint quadrature of int phi(x) g(u(x)) dx for a piecewise-constant u.
inline double eval_observable(const PiecewiseConstantFn& u, const std::function<double(double)>& phi,
                              const std::function<double(double)>& g) {
    double sum = 0.0;
    for (int j = 0; j < u.cells(); ++j) sum += phi(u.cell_center(j)) * g(u.values[j]);
    return sum * u.cell_width();
}

} // namespace emu
} // namespace scl

#endif // SCL_EMULATOR_HPP
