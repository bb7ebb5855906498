#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "scl/blocks.hpp"
#include "scl/util.hpp"

using namespace scl;

namespace {
double burgers(double u) { return 0.5 * u * u; }
} // namespace

TEST_CASE("flux interpolant: hand values for Burgers on [-1, 1]") {
    const ReluNet net = flux_interp_net(burgers, -1.0, 1.0, 2);
    CHECK(net.eval({0.5})[0] == Catch::Approx(0.25).margin(1e-14));
}

TEST_CASE("flux interpolant: reproduces f at the knots") {
    for (int J : {1, 2, 5, 16}) {
        const ReluNet net = flux_interp_net(burgers, -2.0, 2.0, J);
        for (int j = 0; j <= J; ++j) {
            const double x = -2.0 + 4.0 * j / J;
            CHECK(std::abs(net.eval({x})[0] - burgers(x)) <= 1e-12);
        }
    }
}

TEST_CASE("flux interpolant: affine functions are reproduced exactly") {
    const auto f = [](double u) { return 3.0 * u - 0.7; };
    const ReluNet net = flux_interp_net(f, -1.0, 2.0, 7);
    for (double x = -1.0; x <= 2.0; x += 0.05) {
        CHECK(net.eval({x})[0] == Catch::Approx(f(x)).margin(1e-12));
    }
}

TEST_CASE("flux interpolant: Lipschitz error bound and halving rate") {
    // f = u^2/2 on [-2, 2]: bound is 4 / J per segment count J
    std::vector<double> Js, errs;
    for (int J : {4, 8, 16, 32}) {
        const ReluNet net = flux_interp_net(burgers, -2.0, 2.0, J);
        const double err = lipschitz_seminorm(
            [&](double x) { return burgers(x) - net.eval({x})[0]; }, -2.0, 2.0);
        CHECK(err <= 4.0 / J);
        Js.push_back(J);
        errs.push_back(err);
    }
    CHECK(-loglog_slope(Js, errs) >= 0.9);
}

TEST_CASE("flux interpolant: metrics match the stated sizes") {
    const ReluNet net = flux_interp_net(burgers, -2.0, 2.0, 8);
    const NetMetrics m = metrics(net);
    CHECK(m.depth == 2);
    CHECK(m.max_width == 8 + 3);
    const double mag_bound = std::max({1.0, 2.0 + burgers(-2.0), 2.0 + burgers(2.0), 2.0 * 2.0});
    CHECK(m.weight_magnitude <= mag_bound);
}

TEST_CASE("flux interpolant: zero end value drops one outer neuron") {
    const auto f = [](double u) { return u * (1.0 - u); }; // zero at both ends of [0, 1]
    const ReluNet net = flux_interp_net(f, 0.0, 1.0, 4);
    CHECK(metrics(net).max_width == 4 + 3 - 2);
    for (int j = 0; j <= 4; ++j) {
        const double x = j / 4.0;
        CHECK(std::abs(net.eval({x})[0] - f(x)) <= 1e-12);
    }
}

TEST_CASE("flux interpolant: invalid inputs rejected") {
    CHECK_THROWS_AS(flux_interp_net(burgers, -1.0, 1.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(flux_interp_net([](double) { return std::nan(""); }, 0.0, 1.0, 2),
                    std::invalid_argument);
}

TEST_CASE("dyadic square: breakpoint values and interior formula") {
    const ReluNet f1 = yarotsky_square(1);
    CHECK(f1.eval({0.25})[0] == Catch::Approx(0.125).margin(1e-15));
    for (int m : {1, 2, 3, 6}) {
        const ReluNet fm = yarotsky_square(m);
        CHECK(fm.eval({1.0})[0] == Catch::Approx(1.0).margin(1e-14));
        CHECK(fm.eval({0.0})[0] == 0.0);
        // exact at every dyadic breakpoint
        for (int k = 0; k <= (1 << m); ++k) {
            const double x = static_cast<double>(k) / (1 << m);
            CHECK(fm.eval({x})[0] == Catch::Approx(x * x).margin(1e-13));
        }
    }
}

TEST_CASE("dyadic square: sup and Lipschitz error rates") {
    for (int m : {2, 3, 4, 5}) {
        const ReluNet fm = yarotsky_square(m);
        double sup_err = 0.0;
        for (int i = 0; i <= 20000; ++i) {
            const double x = i / 20000.0;
            sup_err = std::max(sup_err, std::abs(fm.eval({x})[0] - x * x));
        }
        CHECK(sup_err <= std::pow(2.0, -2 * m - 2) + 1e-13);
        const double lip = lipschitz_seminorm(
            [&](double x) { return fm.eval({x})[0] - x * x; }, 0.0, 1.0, 20000);
        CHECK(lip <= std::pow(2.0, -m) + 1e-12);
    }
}

TEST_CASE("dyadic square: metrics") {
    for (int m : {1, 2, 5}) {
        const NetMetrics mm = metrics(yarotsky_square(m));
        CHECK(mm.depth == m + 1);
        CHECK(mm.max_width <= 4);
        CHECK(mm.weight_magnitude <= 4.0);
    }
    CHECK_THROWS_AS(yarotsky_square(0), std::invalid_argument);
}

TEST_CASE("multiplication net: exact zero and breakpoint cases") {
    for (int m : {1, 2, 3, 5}) {
        const ReluNet mm = mult_net(m, 1.0, 1.0);
        for (double x : {-0.8, -0.1, 0.0, 0.4, 1.0}) {
            CHECK(mm.eval({x, 0.0})[0] == Catch::Approx(0.0).margin(1e-15));
        }
        CHECK(mm.eval({1.0, 1.0})[0] == Catch::Approx(1.0).margin(1e-14));
    }
}

TEST_CASE("multiplication net: per-fixed-y Lipschitz error bound") {
    const int m = 4;
    const ReluNet mm = mult_net(m, 1.0, 1.0);
    double worst = 0.0;
    for (int yi = 0; yi <= 16; ++yi) {
        const double y = -1.0 + 2.0 * yi / 16;
        worst = std::max(worst, lipschitz_seminorm(
                                    [&](double x) { return mm.eval({x, y})[0] - x * y; }, -1.0,
                                    1.0, 4000));
    }
    CHECK(worst <= 2.0 / std::pow(2.0, m + 1) + 1e-12);
}

TEST_CASE("multiplication net: odd in the second argument for M = N") {
    const ReluNet mm = mult_net(3, 1.0, 1.0);
    UniformSampler rng(4);
    for (int t = 0; t < 2000; ++t) {
        const double x = 2.0 * rng.next() - 1.0;
        const double y = 2.0 * rng.next() - 1.0;
        CHECK(mm.eval({x, y})[0] == Catch::Approx(-mm.eval({x, -y})[0]).margin(1e-14));
    }
}

TEST_CASE("multiplication net: metrics per the stated sizes") {
    for (int m : {1, 2, 4, 8}) {
        const NetMetrics mm = metrics(mult_net(m, 1.0, 1.0));
        CHECK(mm.depth == m + 1);
        CHECK(mm.max_width == 8);
    }
    CHECK_THROWS_AS(mult_net(0, 1.0, 1.0), std::invalid_argument);
    // magnitude stays bounded as m grows (the (M+N)^2 scale dominates)
    const double b4 = metrics(mult_net(4, 2.0, 3.0)).weight_magnitude;
    const double b8 = metrics(mult_net(8, 2.0, 3.0)).weight_magnitude;
    CHECK(b8 <= std::max(b4, (2.0 + 3.0) * (2.0 + 3.0)) + 1e-12);
}

TEST_CASE("star operation: five properties") {
    for (double lambda : {1.0, 2.5}) {
        const ReluNet st = star_net(lambda);
        auto star = [&](double x, double y) { return st.eval({x, y})[0]; };
        UniformSampler rng(1234);
        for (int t = 0; t < 10000; ++t) {
            const double x = rng.next();
            const double y = lambda * (2.0 * rng.next() - 1.0);
            // 1: exact at x in {0, 1}
            CHECK(star(0.0, y) == 0.0);
            CHECK(star(1.0, y) == Catch::Approx(y).margin(1e-14));
            // 2 and 3: between 0 and xy depending on the sign of y
            const double s = star(x, y);
            if (y >= 0.0) {
                CHECK(s >= -1e-14);
                CHECK(s <= x * y + 1e-14);
            } else {
                CHECK(s >= x * y - 1e-14);
                CHECK(s <= 1e-14);
            }
            // 5: y1 + x (*) (y2 - y1) is a convex combination
            const double y2 = lambda * (2.0 * rng.next() - 1.0);
            const double v = y + star(x, y2 - y);
            CHECK(v >= std::min(y, y2) - 1e-14);
            CHECK(v <= std::max(y, y2) + 1e-14);
        }
    }
}

TEST_CASE("star operation: naive convex-combination form fails somewhere") {
    // property 4: grid search finds (x, y1, y2) violating
    // min <= (1-x) (*) y1 + x (*) y2 <= max
    const double lambda = 1.0;
    const ReluNet st = star_net(lambda);
    auto star = [&](double x, double y) { return st.eval({x, y})[0]; };
    bool found = false;
    double wx = 0, wy1 = 0, wy2 = 0;
    for (int ix = 0; ix <= 10 && !found; ++ix) {
        for (int i1 = 0; i1 <= 10 && !found; ++i1) {
            for (int i2 = 0; i2 <= 10 && !found; ++i2) {
                const double x = ix / 10.0;
                const double y1 = -lambda + 2.0 * lambda * i1 / 10.0;
                const double y2 = -lambda + 2.0 * lambda * i2 / 10.0;
                const double v = star(1.0 - x, y1) + star(x, y2);
                if (v < std::min(y1, y2) - 1e-9 || v > std::max(y1, y2) + 1e-9) {
                    found = true;
                    wx = x;
                    wy1 = y1;
                    wy2 = y2;
                }
            }
        }
    }
    REQUIRE(found);
    INFO("witness x=" << wx << " y1=" << wy1 << " y2=" << wy2);
    CHECK(found);
}

TEST_CASE("star operation: example values and metrics") {
    const ReluNet st = star_net(1.0);
    CHECK(st.eval({0.0, 0.7})[0] == 0.0);
    CHECK(st.eval({0.5, 0.2})[0] == 0.0);
    const NetMetrics m = metrics(st);
    CHECK(m.depth == 2);
    CHECK(m.max_width == 2);
    CHECK_THROWS_AS(star_net(0.0), std::invalid_argument);
}

TEST_CASE("saturated ramp") {
    const ReluNet ramp = hat_ramp_net(1.0, 1.0);
    CHECK(ramp.eval({0.0})[0] == 1.0);
    CHECK(ramp.eval({1.0})[0] == 0.0);
    CHECK(ramp.eval({0.5})[0] == 0.5);
    CHECK(ramp.eval({-3.0})[0] == 1.0);
    CHECK(ramp.eval({4.0})[0] == 0.0);
    CHECK_THROWS_AS(hat_ramp_net(0.0, 0.0), std::invalid_argument);
}
