#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "scl/bounds.hpp"
#include "scl/util.hpp"

using namespace scl;
using namespace scl::bounds;

TEST_CASE("flux interpolation bound") {
    CHECK(flux_interp_bound(-2.0, 2.0, 8, 1.0) == 0.5);
    CHECK(flux_interp_bound(-2.0, 2.0, 8, 0.0) == 0.0);
    CHECK(flux_interp_bound(-2.0, 2.0, 16, 1.0) == 0.25);
    CHECK_THROWS_AS(flux_interp_bound(-2.0, 2.0, 0, 1.0), std::invalid_argument);
}

TEST_CASE("multiplication bound") {
    CHECK(mult_bound(4, 1.0, 1.0) == 0.0625);
    CHECK(mult_bound(3, 0.0, 0.0) == 0.0);
    CHECK(mult_bound(5, 1.0, 1.0) == 0.5 * mult_bound(4, 1.0, 1.0));
}

TEST_CASE("kuznetsov bound") {
    CHECK(kuznetsov_bound(2.0, 0.1, 2.0, 100) == Catch::Approx(5.58).margin(1e-12));
    CHECK(kuznetsov_bound(0.0, 0.1, 2.0, 100) == 0.0);
    CHECK(kuznetsov_bound(2.0, 0.1, 2.0, 400) == Catch::Approx(0.5 * 5.58).margin(1e-12));
    CHECK_THROWS_AS(kuznetsov_bound(1.0, 1.0, 1.0, 0), std::invalid_argument);
}

TEST_CASE("expressivity bound variants") {
    ExpressivityConstants c;
    c.C_TV = 2.0;
    c.T = 0.1;
    c.C0 = 2.0;
    c.f2sup = 1.0;
    c.f1sup = 2.0;
    const double kle = expressivity_bound(ExpressivityVariant::kle, c, 100);
    CHECK(kle == Catch::Approx(6.56).margin(1e-12));
    const double gen = expressivity_bound(ExpressivityVariant::general, c, 100);
    CHECK(gen == Catch::Approx(6.66).margin(1e-12));
    // vanishes as N grows
    CHECK(expressivity_bound(ExpressivityVariant::kle, c, 1e12) <= 1e-4);
    // parametric variant uses 19 and C_f s^{sigma_f}
    c.C_f = 2.0;
    c.sigma_f = 0.0;
    c.s = 4;
    const double par = expressivity_bound(ExpressivityVariant::parametric_flux, c, 100);
    CHECK(par == Catch::Approx((2.0 * 2.0 * 0.1 * (2.0 * 1.0 + 19.0 * 9.0) + 1.0) / 10.0).margin(1e-12));
}

TEST_CASE("complexity report right-hand sides") {
    ComplexityConstants c;
    c.b_minus_a = 1.0;
    c.T = 0.1;
    c.f1sup = 2.0;
    c.C0 = 2.0;
    c.f_at_minus_C0 = 2.0;
    c.f_at_plus_C0 = 2.0;
    c.C_B = 1.0;
    const ComplexityBounds cb = complexity_report(3, 8, c);
    CHECK(cb.depth == 9.0);
    CHECK(cb.width == Catch::Approx(std::max(4.0, 2.0 * std::pow(8.0, 1.5) / 0.2)));
    CHECK(cb.magnitude == Catch::Approx(4.0)); // C0 + |f(C0)|
    CHECK_FALSE(cb.connectivity_assertable);

    const ComplexityBounds cb2 = complexity_report(3, 4, ComplexityConstants{1.0, 0.1, 2.0, 2.0, 2.0, 2.0, 1.0});
    CHECK(cb2.width == Catch::Approx(std::max(4.0, 2.0 * 8.0 / 0.2)));
    // the (2 sup|f'|)^{-1} candidate never wins when C0 >= 1
    CHECK(cb2.magnitude > 1.0 / (2.0 * c.f1sup));
}

TEST_CASE("covering bound") {
    CHECK(covering_bound(2.0, 0.5, 3) == 64.0);
    CHECK(covering_bound(2.0, 2.5, 3) == 1.0);
    CHECK(covering_bound(2.0, 0.5, 0) == 1.0);
    CHECK_THROWS_AS(covering_bound(2.0, 0.0, 3), std::invalid_argument);
}

TEST_CASE("parameter Lipschitz bound") {
    CHECK(param_lipschitz_bound(1, 5.0, 3) == 4.0);
    CHECK(param_lipschitz_bound(2, 1.0, 1) == 8.0);
    // monotone in each argument
    CHECK(param_lipschitz_bound(3, 2.0, 4) <= param_lipschitz_bound(4, 2.0, 4));
    CHECK(param_lipschitz_bound(3, 2.0, 4) <= param_lipschitz_bound(3, 3.0, 4));
    CHECK(param_lipschitz_bound(3, 2.0, 4) <= param_lipschitz_bound(3, 2.0, 5));
}

TEST_CASE("generalization gap bound: hand-computed simplified value") {
    const double v = gen_gap_bound(2.0, 1.0, 4, 20, 500, 10.0, GapForm::simplified);
    // 12 * 2 * 1 * 4 * 21^2 * sqrt(ln(2*500*10)) / sqrt(500)
    const double expect = 12.0 * 2.0 * 4.0 * 441.0 * std::sqrt(std::log(10000.0)) / std::sqrt(500.0);
    CHECK(v == Catch::Approx(expect).epsilon(1e-14));
    CHECK(v == Catch::Approx(5745.8).epsilon(1e-4));
}

TEST_CASE("generalization gap bound: sharp never exceeds simplified") {
    UniformSampler rng(13);
    for (int t = 0; t < 1000; ++t) {
        const double ba = 1.0 + 3.0 * rng.next();
        const double dom = 0.5 + 2.0 * rng.next();
        const int L = 1 + static_cast<int>(rng.next() * 6);
        const int W = 1 + static_cast<int>(rng.next() * 30);
        const int M = 1 + static_cast<int>(rng.next() * 1000);
        const double R = 1.0 + 10.0 * rng.next();
        const double sharp = gen_gap_bound(ba, dom, L, W, M, R, GapForm::sharp);
        const double simplified = gen_gap_bound(ba, dom, L, W, M, R, GapForm::simplified);
        CHECK(sharp <= simplified * (1.0 + 1e-12));
    }
}

TEST_CASE("generalization gap bound: hypothesis violations rejected") {
    CHECK_THROWS_AS(gen_gap_bound(2.0, 1.0, 4, 20, 500, 0.5, GapForm::sharp),
                    std::invalid_argument);
    CHECK_THROWS_AS(gen_gap_bound(0.5, 1.0, 4, 20, 500, 10.0, GapForm::sharp),
                    std::invalid_argument);
    CHECK_THROWS_AS(gen_gap_bound(2.0, 1.0, 4, 20, 0, 10.0, GapForm::sharp),
                    std::invalid_argument);
}

TEST_CASE("gap bound decreases to zero in M") {
    double prev = 1e300;
    for (int M : {100, 10000, 1000000, 1000000000}) {
        const double v = gen_gap_bound(2.0, 1.0, 4, 20, M, 10.0, GapForm::simplified);
        CHECK(v < prev);
        prev = v;
    }
    CHECK(prev <= 10.0);
}

TEST_CASE("derivation chain reproduces the sharp bound") {
    // tuple chosen so the covering ratio is an exact integer:
    // M^(1/(3L)) = 4096^(1/6) = 4 and 2 M^(1/(3L)) R (W+1) = 64
    const double ba = 2.0, dom = 1.0, R = 2.0;
    const int L = 2, W = 3, M = 4096;
    const double sharp = gen_gap_bound(ba, dom, L, W, M, R, GapForm::sharp);

    const int k = L * (W + 1) * (W + 1);
    // 2 M^(1/(3L)) R (W+1) = 64 exactly for this tuple, so r is a power of two
    const double r = 2.0 * R / 64.0;
    const double cover = covering_bound(2.0 * R, r, k); // 64^k exactly
    const double chain = 12.0 * ba * dom * L * (W + 1) * std::sqrt(std::log(cover) / k) /
                         std::sqrt(static_cast<double>(M));
    CHECK(chain == Catch::Approx(sharp).epsilon(1e-12));

    // the Lipschitz factor feeding the chain matches its closed form
    const double Lstar = param_lipschitz_bound(L, R, W);
    CHECK(4.0 * R * R * M * Lstar * Lstar ==
          Catch::Approx(4.0 * M * L * L * std::pow(R, 2 * L) * std::pow(W + 1.0, 2 * L))
              .epsilon(1e-12));
}

TEST_CASE("cumulative generalization bound") {
    CHECK(cumulative_gen_bound(0.1, 0.5) == 0.6);
    CHECK(cumulative_gen_bound(0.0, 0.7) == 0.7);
    UniformSampler rng(3);
    for (int t = 0; t < 100; ++t) {
        const double a = rng.next(), b = rng.next();
        CHECK(cumulative_gen_bound(a, b) == a + b);
    }
    CHECK_THROWS_AS(cumulative_gen_bound(-0.1, 0.5), std::invalid_argument);
}

TEST_CASE("bound report serializes constants with provenance") {
    BoundReport rep;
    rep.name = "example";
    rep.value = 1.5;
    rep.formula = "a + b";
    rep.constants["a"] = {1.0, Provenance::closed_form};
    rep.constants["b"] = {0.5, Provenance::swept};
    const auto j = rep.to_json();
    CHECK(j["name"] == "example");
    CHECK(j["constants"]["a"]["provenance"] == "closed_form");
    CHECK(j["constants"]["b"]["provenance"] == "swept");
}
