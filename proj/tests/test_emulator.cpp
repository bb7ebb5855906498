#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "scl/bounds.hpp"
#include "scl/emulator.hpp"
#include "scl/multid.hpp"
#include "scl/spacetime.hpp"
#include "scl/util.hpp"

using namespace scl;
using namespace scl::emu;

namespace {

EmulatorConfig burgers_sine_config(int d, int N, double C0 = 3.0) {
    EmulatorConfig cfg;
    cfg.a = 0.0;
    cfg.b = 1.0;
    cfg.T = 0.1;
    cfg.N = N;
    cfg.flux.f = [](double u) { return 0.5 * u * u; };
    cfg.flux.df = [](double u) { return u; };
    cfg.init.mean = [](double) { return 1.0; };
    for (int k = 1; k <= d; ++k) {
        cfg.init.modes.push_back(
            {std::pow(4.0, 1.0 - k), [k](double x) { return std::sin(k * x); }});
    }
    cfg.C0 = C0;
    return cfg;
}

std::vector<double> init_values(const EmulatorConfig& cfg, const Resolution& r,
                                std::span<const double> y) {
    std::vector<double> u0(r.J);
    for (int j = 0; j < r.J; ++j) {
        const double x = cfg.a + (j + 0.5) * r.dx;
        u0[j] = cfg.init.mean(x);
        for (std::size_t i = 0; i < cfg.init.modes.size(); ++i) {
            u0[j] += std::sqrt(cfg.init.modes[i].lambda) * y[i] * cfg.init.modes[i].phi(x);
        }
    }
    return u0;
}

} // namespace

TEST_CASE("resolve: CFL coupling and rounding") {
    EmulatorConfig cfg = burgers_sine_config(2, 16, 2.5);
    const Resolution r = resolve(cfg);
    CHECK(r.dt == Catch::Approx(0.1 / 16));
    CHECK(r.F == Catch::Approx(2.5)); // sup of |f'| = |u| on [-C0, C0]
    CHECK(r.J == 64);                 // ceil((b-a) / (F dt)) = ceil(64)
    CHECK(r.F * r.dt <= r.dx * (1.0 + 1e-12));
    CHECK(r.K == 4);
}

TEST_CASE("resolve: zero flux falls back to J = N") {
    EmulatorConfig cfg = burgers_sine_config(0, 8, 2.0);
    cfg.flux.f = [](double) { return 0.0; };
    cfg.flux.df = [](double) { return 0.0; };
    const Resolution r = resolve(cfg);
    CHECK(r.J == 8);
    CHECK(r.dx == Catch::Approx(1.0 / 8));
}

TEST_CASE("resolve: explicit J must satisfy the CFL condition") {
    EmulatorConfig cfg = burgers_sine_config(1, 16, 2.0);
    cfg.J_override = 10; // dx = 0.1 > F dt = 0.0125 is fine
    CHECK(resolve(cfg).J == 10);
    cfg.J_override = 1000; // dx too small
    CHECK_THROWS_AS(resolve(cfg), std::invalid_argument);
}

TEST_CASE("initial layer: constant mean with no modes") {
    EmulatorConfig cfg = burgers_sine_config(0, 4, 1.0);
    const Resolution r = resolve(cfg);
    const ReluNet layer = build_initial_layer(cfg, r);
    const std::vector<double> out = layer.eval(std::vector<double>{});
    REQUIRE(static_cast<int>(out.size()) == r.J);
    for (double v : out) CHECK(v == 1.0);
}

TEST_CASE("initial layer: zero coefficient gives the mean") {
    EmulatorConfig cfg = burgers_sine_config(1, 4, 2.0);
    const Resolution r = resolve(cfg);
    const ReluNet layer = build_initial_layer(cfg, r);
    const std::vector<double> out = layer.eval({0.0});
    for (double v : out) CHECK(v == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("initial layer: sine expansion value at a half-pi cell center") {
    // domain [0, pi] with 3 cells puts a center exactly at pi/2
    EmulatorConfig cfg = burgers_sine_config(2, 4, 3.0);
    cfg.a = 0.0;
    cfg.b = M_PI;
    cfg.J_override = 3;
    const Resolution r = resolve(cfg);
    const ReluNet layer = build_initial_layer(cfg, r);
    const std::vector<double> out = layer.eval({1.0, 1.0});
    // 1 + sin(pi/2) + 0.5 sin(pi) = 2
    CHECK(out[1] == Catch::Approx(2.0).margin(1e-14));
}

TEST_CASE("initial layer: external per-knot nets with padding") {
    EmulatorConfig cfg = burgers_sine_config(0, 4, 2.0);
    cfg.J_override = 3;
    const Resolution r = resolve(cfg);
    cfg.init.kind = InitKind::external_net;
    cfg.init.ext_dim = 1;
    for (int j = 0; j < r.J; ++j) {
        AffineLayer l(1, 1);
        l.add(0, 0, 0.5 * (j + 1));
        std::vector<AffineLayer> layers{l};
        cfg.init.knot_nets.push_back(ReluNet(std::move(layers)));
    }
    const ReluNet layer = build_initial_layer(cfg, r);
    const std::vector<double> out = layer.eval({2.0});
    CHECK(out[0] == Catch::Approx(1.0));
    CHECK(out[1] == Catch::Approx(2.0));
    CHECK(out[2] == Catch::Approx(3.0));
}

TEST_CASE("lxf block: zero flux averages the neighbors") {
    EmulatorConfig cfg = burgers_sine_config(0, 4, 1.5);
    cfg.flux.f = [](double) { return 0.0; };
    cfg.flux.df = [](double) { return 0.0; };
    cfg.J_override = 3;
    Resolution r = resolve(cfg);
    const Interp1DSpec fhat = make_interp(cfg.flux.f, -1.5, 1.5, 2);
    const ReluNet block = build_lxf_block(r, fhat, Boundary::outflow);
    const std::vector<double> out = block.eval({0.0, 1.0, 0.0});
    CHECK(out[1] == 0.5);
}

TEST_CASE("lxf block: Burgers update by hand") {
    // knots {-1, 0, 1} make fhat exact at 0 and 1; mu = 1/2 means dt/dx = 1
    EmulatorConfig cfg = burgers_sine_config(0, 4, 1.0);
    cfg.J_override = 3;
    Resolution r = resolve(cfg);
    r.mu = 0.5;
    const Interp1DSpec fhat = make_interp([](double u) { return 0.5 * u * u; }, -1.0, 1.0, 2);
    const ReluNet block = build_lxf_block(r, fhat, Boundary::outflow);
    // cell 1 with neighbors (0, 1): (0+1)/2 - 1/2 (f(1) - f(0)) = 0.25
    const std::vector<double> out = block.eval({0.0, 1.0, 1.0});
    CHECK(out[1] == Catch::Approx(0.25).margin(1e-15));
}

TEST_CASE("lxf block: constant states are fixed points") {
    EmulatorConfig cfg = burgers_sine_config(0, 4, 2.0);
    cfg.J_override = 5;
    const Resolution r = resolve(cfg);
    const Interp1DSpec fhat = make_interp([](double u) { return 0.5 * u * u; }, -2.0, 2.0, 4);
    const ReluNet block = build_lxf_block(r, fhat, Boundary::periodic);
    for (double c : {-1.5, 0.0, 0.7}) {
        const std::vector<double> out = block.eval(std::vector<double>(5, c));
        for (double v : out) CHECK(v == Catch::Approx(c).margin(1e-14));
    }
}

TEST_CASE("lxf block: fewer than 3 cells rejected") {
    EmulatorConfig cfg = burgers_sine_config(0, 4, 2.0);
    cfg.J_override = 3;
    Resolution r = resolve(cfg);
    r.J = 2;
    const Interp1DSpec fhat = make_interp([](double u) { return 0.5 * u * u; }, -2.0, 2.0, 2);
    CHECK_THROWS_AS(build_lxf_block(r, fhat, Boundary::periodic), std::invalid_argument);
}

TEST_CASE("emulator: one zero-flux step of constant data") {
    EmulatorConfig cfg = burgers_sine_config(0, 1, 2.0);
    cfg.flux.f = [](double) { return 0.0; };
    cfg.flux.df = [](double) { return 0.0; };
    cfg.init.mean = [](double) { return 0.4; };
    cfg.J_override = 3;
    const Emulator e = build_emulator(cfg);
    const std::vector<double> out = e.eval(std::vector<double>{});
    REQUIRE(out.size() == 3);
    for (double v : out) CHECK(v == Catch::Approx(0.4).margin(1e-15));
}

TEST_CASE("emulator: equivalence with the loop oracle") {
    EmulatorConfig cfg = burgers_sine_config(3, 16);
    const Emulator e = build_emulator(cfg);
    UniformSampler rng(2024);
    double worst = 0.0;
    const auto fhat = e.oracle_flux();
    for (int t = 0; t < 25; ++t) {
        const std::vector<double> y = rng.vector(3);
        const std::vector<double> net = e.eval(y);
        const std::vector<double> loop =
            fv::lxf_loop(fhat, init_values(cfg, e.res, y), cfg.N, e.res.mu, cfg.boundary);
        for (int j = 0; j < e.res.J; ++j) worst = std::max(worst, std::abs(net[j] - loop[j]));
    }
    CHECK(worst <= 1e-9);
}

TEST_CASE("emulator: outflow boundary equivalence") {
    EmulatorConfig cfg = burgers_sine_config(2, 8);
    cfg.boundary = Boundary::outflow;
    const Emulator e = build_emulator(cfg);
    UniformSampler rng(11);
    const std::vector<double> y = rng.vector(2);
    const std::vector<double> net = e.eval(y);
    const std::vector<double> loop =
        fv::lxf_loop(e.oracle_flux(), init_values(cfg, e.res, y), cfg.N, e.res.mu, cfg.boundary);
    for (int j = 0; j < e.res.J; ++j) CHECK(net[j] == Catch::Approx(loop[j]).margin(1e-12));
}

TEST_CASE("emulator: evolution invariants along the steps") {
    EmulatorConfig cfg = burgers_sine_config(3, 16);
    const Emulator e = build_emulator(cfg);
    UniformSampler rng(5);
    const auto fhat = e.oracle_flux();
    for (int t = 0; t < 5; ++t) {
        std::vector<double> u = init_values(cfg, e.res, rng.vector(3));
        double sup0 = 0.0, sum0 = 0.0;
        for (double v : u) {
            sup0 = std::max(sup0, std::abs(v));
            sum0 += v;
        }
        double tv_prev = fv::tv(u, cfg.boundary);
        std::vector<double> next;
        for (int n = 0; n < cfg.N; ++n) {
            fv::lxf_step(u, next, e.res.mu, fhat, cfg.boundary);
            u.swap(next);
            double sup = 0.0, sum = 0.0;
            for (double v : u) {
                sup = std::max(sup, std::abs(v));
                sum += v;
            }
            CHECK(sup <= sup0 + 1e-12);
            const double tv_now = fv::tv(u, cfg.boundary);
            CHECK(tv_now <= tv_prev + 1e-12);
            CHECK(std::abs(sum - sum0) <= 1e-10 * std::abs(sum0));
            tv_prev = tv_now;
        }
    }
}

TEST_CASE("emulator: metrics satisfy the size bounds") {
    for (int N : {4, 8}) {
        for (int d : {1, 4}) {
            EmulatorConfig cfg = burgers_sine_config(d, N);
            const Emulator e = build_emulator(cfg);
            const NetMetrics m = metrics(e.unrolled());
            bounds::ComplexityConstants cc;
            cc.b_minus_a = 1.0;
            cc.T = 0.1;
            cc.f1sup = e.res.F;
            cc.C0 = cfg.C0;
            cc.f_at_minus_C0 = 0.5 * cfg.C0 * cfg.C0;
            cc.f_at_plus_C0 = 0.5 * cfg.C0 * cfg.C0;
            cc.C_B = metrics(build_initial_layer(cfg, e.res)).weight_magnitude;
            const bounds::ComplexityBounds cb = bounds::complexity_report(d, N, cc);
            CHECK(m.depth <= cb.depth);
            CHECK(m.max_width <= cb.width);
            CHECK(m.weight_magnitude <= cb.magnitude);
        }
    }
}

TEST_CASE("emulator: depth bound for N = 8") {
    EmulatorConfig cfg = burgers_sine_config(2, 8);
    const Emulator e = build_emulator(cfg);
    CHECK(metrics(e.unrolled()).depth <= 9);
}

TEST_CASE("emulator: shared-block and unrolled storage agree bitwise") {
    EmulatorConfig cfg = burgers_sine_config(2, 12);
    cfg.store_mode = StoreMode::shared_block;
    const Emulator shared = build_emulator(cfg);
    const ReluNet unrolled = shared.unrolled();
    UniformSampler rng(88);
    for (int t = 0; t < 10; ++t) {
        const std::vector<double> y = rng.vector(2);
        const std::vector<double> a = shared.eval(y);
        const std::vector<double> b = unrolled.eval(y);
        for (std::size_t j = 0; j < a.size(); ++j) CHECK(a[j] == b[j]);
    }
}

TEST_CASE("emulator: C0 below the data range is rejected") {
    EmulatorConfig cfg = burgers_sine_config(2, 8, 1.2); // sup u0 > 1.2
    CHECK_THROWS_AS(build_emulator(cfg), std::invalid_argument);
}

TEST_CASE("parametric flux emulator: z = 0 matches the fixed-flux network") {
    const kl::KLSpec modes = kl::exp_cov_modes(1.0, 3.0, 0.0, 2.0, 3, 128);
    EmulatorConfig cfg;
    cfg.a = 0.0;
    cfg.b = 1.0;
    cfg.T = 0.1;
    cfg.N = 8;
    cfg.flux.kind = FluxKind::kl_flux;
    cfg.flux.f = [](double u) { return 0.5 * u * u; };
    cfg.flux.df = [](double u) { return u; };
    cfg.flux.kl = modes;
    cfg.init.mean = [](double x) { return 1.0 + std::sin(x); };
    cfg.C0 = 2.0;
    const Emulator ep = build_emulator_parametric_flux(cfg);

    EmulatorConfig fixed = cfg;
    fixed.flux.kind = FluxKind::closed_form;
    fixed.F_override = ep.res.F;
    fixed.flux_domain = std::make_pair(ep.res.flux_lo, ep.res.flux_hi);
    const Emulator ef = build_emulator(fixed);
    REQUIRE(ef.res.J == ep.res.J);

    const std::vector<double> z0(3, 0.0);
    const std::vector<double> a = ep.eval(z0);
    const std::vector<double> b = ef.eval(std::vector<double>{});
    for (int j = 0; j < ep.res.J; ++j) CHECK(a[j] == Catch::Approx(b[j]).margin(1e-9));
}

TEST_CASE("parametric flux emulator: equivalence with its loop oracle") {
    const kl::KLSpec modes = kl::exp_cov_modes(1.0, 3.0, 0.0, 2.0, 2, 128);
    EmulatorConfig cfg;
    cfg.a = 0.0;
    cfg.b = 1.0;
    cfg.T = 0.1;
    cfg.N = 6;
    cfg.flux.kind = FluxKind::kl_flux;
    cfg.flux.f = [](double u) { return 0.5 * u * u; };
    cfg.flux.df = [](double u) { return u; };
    cfg.flux.kl = modes;
    cfg.init.mean = [](double x) { return 1.0 + std::sin(x); };
    cfg.C0 = 2.0;
    const Emulator ep = build_emulator_parametric_flux(cfg);

    UniformSampler rng(404);
    double worst = 0.0;
    for (int t = 0; t < 10; ++t) {
        const std::vector<double> z = rng.vector(2);
        const std::vector<double> net = ep.eval(z);
        std::vector<double> u0(ep.res.J);
        for (int j = 0; j < ep.res.J; ++j) {
            u0[j] = cfg.init.mean(cfg.a + (j + 0.5) * ep.res.dx);
        }
        const std::vector<double> loop =
            fv::lxf_loop(ep.oracle_flux_parametric(z), u0, ep.res.N_star, ep.res.mu, cfg.boundary);
        for (int j = 0; j < ep.res.J; ++j) worst = std::max(worst, std::abs(net[j] - loop[j]));
    }
    CHECK(worst <= 1e-9);
}

TEST_CASE("parametric flux emulator: constant state is a fixed point in z") {
    const kl::KLSpec modes = kl::exp_cov_modes(1.0, 3.0, 0.0, 2.0, 2, 128);
    EmulatorConfig cfg;
    cfg.a = 0.0;
    cfg.b = 1.0;
    cfg.T = 0.1;
    cfg.N = 4;
    cfg.flux.kind = FluxKind::kl_flux;
    cfg.flux.f = [](double u) { return 0.5 * u * u; };
    cfg.flux.df = [](double u) { return u; };
    cfg.flux.kl = modes;
    cfg.init.mean = [](double) { return 1.3; };
    cfg.C0 = 2.0;
    const Emulator ep = build_emulator_parametric_flux(cfg);
    UniformSampler rng(3);
    for (int t = 0; t < 5; ++t) {
        const std::vector<double> z = rng.vector(2);
        for (double v : ep.eval(z)) CHECK(v == Catch::Approx(1.3).margin(1e-12));
    }
}

TEST_CASE("parametric flux oracle: exact at multiplication breakpoints") {
    // one constant mode phi = 1: the mult net is exact at (z, y) = (1, 1)
    kl::KLSpec spec;
    spec.lo = 0.0;
    spec.hi = 2.0;
    spec.mean = [](double) { return 0.0; };
    spec.grid = {0.0, 1.0, 2.0};
    spec.modes.push_back({0.09, {1.0, 1.0, 1.0}});
    EmulatorConfig cfg;
    cfg.a = 0.0;
    cfg.b = 1.0;
    cfg.T = 0.1;
    cfg.N = 4;
    cfg.flux.kind = FluxKind::kl_flux;
    cfg.flux.f = [](double u) { return 0.5 * u * u; };
    cfg.flux.df = [](double u) { return u; };
    cfg.flux.kl = spec;
    cfg.init.mean = [](double x) { return 1.0 + std::sin(x); };
    cfg.C0 = 2.0;
    const Emulator ep = build_emulator_parametric_flux(cfg);
    const auto fz = ep.oracle_flux_parametric({1.0});
    for (double u : {0.2, 0.9, 1.7}) {
        CHECK(fz(u) == Catch::Approx(ep.fhat(u) + 0.3).margin(1e-14));
    }
}

TEST_CASE("space-time net: endpoints and bracketing") {
    EmulatorConfig cfg = burgers_sine_config(2, 8, 2.5);
    const Emulator e = build_emulator(cfg);
    const ReluNet st = build_spacetime_net(cfg);
    UniformSampler rng(7);
    const std::vector<double> y = rng.vector(2);
    const std::vector<double> heads = e.eval(y);
    const std::vector<double> u0 = init_values(cfg, e.res, y);

    // all head levels via the loop
    std::vector<std::vector<double>> levels{u0};
    {
        std::vector<double> u = u0, next;
        const auto fhat = e.oracle_flux();
        for (int n = 0; n < cfg.N; ++n) {
            fv::lxf_step(u, next, e.res.mu, fhat, cfg.boundary);
            u.swap(next);
            levels.push_back(u);
        }
    }

    for (int j = 0; j < e.res.J; ++j) {
        const double xj = cfg.a + (j + 0.5) * e.res.dx;
        // t = T reproduces the final heads
        CHECK(st.eval({cfg.T, xj, y[0], y[1]})[0] == Catch::Approx(heads[j]).margin(1e-12));
        // t = 0 reproduces the initial data
        CHECK(st.eval({0.0, xj, y[0], y[1]})[0] == Catch::Approx(u0[j]).margin(1e-12));
    }

    // midpoints stay between the two bracketing time levels per cell
    for (int n = 1; n <= cfg.N; ++n) {
        const double t = (n - 0.5) * e.res.dt;
        for (int j = 0; j < e.res.J; ++j) {
            const double xj = cfg.a + (j + 0.5) * e.res.dx;
            const double v = st.eval({t, xj, y[0], y[1]})[0];
            const double lo = std::min(levels[n - 1][j], levels[n][j]);
            const double hi = std::max(levels[n - 1][j], levels[n][j]);
            CHECK(v >= lo - 1e-12);
            CHECK(v <= hi + 1e-12);
        }
    }

    // generic (t, x): value within the box spanned by the four corner values
    for (int trial = 0; trial < 200; ++trial) {
        const double t = cfg.T * rng.next();
        const double x = cfg.a + (cfg.b - cfg.a) * rng.next();
        const double v = st.eval({t, x, y[0], y[1]})[0];
        const int n = std::min(cfg.N - 1, static_cast<int>(t / e.res.dt));
        int j = std::min(e.res.J - 1,
                         static_cast<int>((x - cfg.a) / e.res.dx - 0.5 + 1.0) );
        j = std::max(j, 0);
        const int jm = std::max(j - 1, 0);
        double lo = 1e300, hi = -1e300;
        for (int nn : {n, n + 1}) {
            for (int jj : {jm, j}) {
                lo = std::min(lo, levels[nn][jj]);
                hi = std::max(hi, levels[nn][jj]);
            }
        }
        CHECK(v >= lo - 1e-10);
        CHECK(v <= hi + 1e-10);
    }

    // ramp saturation outside the domain
    const double x1 = cfg.a + 0.5 * e.res.dx;
    CHECK(st.eval({-0.3, x1, y[0], y[1]})[0] == Catch::Approx(u0[0]).margin(1e-12));
    CHECK(st.eval({cfg.T + 1.0, x1, y[0], y[1]})[0] == Catch::Approx(heads[0]).margin(1e-12));
}

TEST_CASE("space-time net: weight magnitude grows like N") {
    EmulatorConfig c4 = burgers_sine_config(1, 4, 2.0);
    EmulatorConfig c16 = burgers_sine_config(1, 16, 2.0);
    const double b4 = metrics(build_spacetime_net(c4)).weight_magnitude;
    const double b16 = metrics(build_spacetime_net(c16)).weight_magnitude;
    CHECK(b16 >= b4);
    CHECK(b16 <= 8.0 * b4); // O(N) growth, not worse
}

TEST_CASE("2-d emulator: constant data with zero fluxes") {
    Emulator2DConfig cfg;
    cfg.a = 0.0;
    cfg.b = 1.0;
    cfg.T = 0.05;
    cfg.N = 2;
    cfg.flux1.f = [](double) { return 0.0; };
    cfg.flux1.df = [](double) { return 0.0; };
    cfg.flux2 = cfg.flux1;
    cfg.mean = [](double, double) { return 0.9; };
    cfg.C0 = 1.0;
    cfg.J_override = 4;
    const Emulator2D e = build_multid_emulator(cfg);
    for (double v : e.eval(std::vector<double>{})) CHECK(v == Catch::Approx(0.9).margin(1e-14));
}

TEST_CASE("2-d emulator: equivalence with the splitting loop") {
    Emulator2DConfig cfg;
    cfg.a = 0.0;
    cfg.b = 1.0;
    cfg.T = 0.05;
    cfg.N = 4;
    cfg.flux1.f = [](double u) { return 0.5 * u * u; };
    cfg.flux1.df = [](double u) { return u; };
    cfg.flux2 = cfg.flux1;
    cfg.mean = [](double, double) { return 1.0; };
    cfg.modes.push_back({1.0, [](double x1, double x2) { return std::sin(x1) * std::sin(x2); }});
    cfg.C0 = 2.0;
    cfg.J_override = 12;
    const Emulator2D e = build_multid_emulator(cfg);
    UniformSampler rng(20);
    double worst = 0.0;
    for (int t = 0; t < 5; ++t) {
        const std::vector<double> y = rng.vector(1);
        const std::vector<double> net = e.eval(y);
        fv::Grid2D g0;
        g0.a = cfg.a;
        g0.b = cfg.b;
        g0.nx = e.J;
        g0.ny = e.J;
        g0.values.resize(static_cast<std::size_t>(e.J) * e.J);
        for (int ix = 0; ix < e.J; ++ix) {
            for (int iy = 0; iy < e.J; ++iy) {
                g0.at(ix, iy) = cfg.mean(g0.center_x(ix), g0.center_y(iy)) +
                                std::sqrt(cfg.modes[0].lambda) * y[0] *
                                    cfg.modes[0].phi(g0.center_x(ix), g0.center_y(iy));
            }
        }
        const fv::Grid2D loop = fv::splitting_loop_2d([&](double u) { return e.fhat1(u); },
                                                      [&](double u) { return e.fhat2(u); }, g0,
                                                      cfg.N, e.mu, e.mu, cfg.boundary);
        for (std::size_t i = 0; i < net.size(); ++i) {
            worst = std::max(worst, std::abs(net[i] - loop.values[i]));
        }
    }
    CHECK(worst <= 1e-9);
}

TEST_CASE("2-d emulator: zero second flux reduces to the 1-d emulator per row") {
    Emulator2DConfig cfg;
    cfg.a = 0.0;
    cfg.b = 1.0;
    cfg.T = 0.05;
    cfg.N = 4;
    cfg.flux1.f = [](double u) { return 0.5 * u * u; };
    cfg.flux1.df = [](double u) { return u; };
    cfg.flux2.f = [](double) { return 0.0; };
    cfg.flux2.df = [](double) { return 0.0; };
    cfg.mean = [](double, double) { return 1.0; };
    cfg.modes.push_back({1.0, [](double x1, double) { return std::sin(x1); }});
    cfg.C0 = 2.0;
    cfg.J_override = 16;
    const Emulator2D e2 = build_multid_emulator(cfg);

    EmulatorConfig c1 = burgers_sine_config(1, 4, 2.0);
    c1.T = cfg.T;
    c1.J_override = 16;
    const Emulator e1 = build_emulator(c1);
    REQUIRE(e1.res.mu == Catch::Approx(e2.mu));

    const std::vector<double> y{0.6};
    const std::vector<double> v2 = e2.eval(y);
    const std::vector<double> v1 = e1.eval(y);
    for (int ix = 0; ix < 16; ++ix) {
        for (int iy = 0; iy < 16; ++iy) {
            CHECK(v2[ix * 16 + iy] == Catch::Approx(v1[ix]).margin(1e-9));
        }
    }
}

TEST_CASE("2-d emulator: memory budget guard") {
    Emulator2DConfig cfg;
    cfg.flux1.f = [](double u) { return 0.5 * u * u; };
    cfg.flux1.df = [](double u) { return u; };
    cfg.flux2 = cfg.flux1;
    cfg.mean = [](double, double) { return 1.0; };
    cfg.C0 = 2.0;
    cfg.N = 64;
    cfg.T = 0.01;
    cfg.J_override = 4096;
    cfg.max_triplets = 1000;
    CHECK_THROWS_WITH(build_multid_emulator(cfg), Catch::Matchers::ContainsSubstring("too large"));
}

TEST_CASE("observable quadrature") {
    const PiecewiseConstantFn c{0.0, 1.0, std::vector<double>(8, 2.0)};
    auto one = [](double) { return 1.0; };
    auto id = [](double u) { return u; };
    CHECK(eval_observable(c, one, id) == Catch::Approx(2.0));

    const PiecewiseConstantFn two{0.0, 1.0, {0.0, 1.0}};
    CHECK(eval_observable(two, one, id) == Catch::Approx(0.5));

    auto phx = [](double x) { return x; };
    auto sq = [](double u) { return u * u; };
    // integral of 4x over [0,1] with midpoint quadrature is exact: 2
    CHECK(eval_observable(c, phx, sq) == Catch::Approx(2.0));
}
