#ifndef SCL_BLOCKS_HPP
#define SCL_BLOCKS_HPP

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "scl/relu_net.hpp"

namespace scl {

/// Piecewise-linear interpolant data on J uniform segments of [a, b]:
/// values at the J+1 knots plus the signs of the two outer neurons
/// (absent when the corresponding end value is 0).
struct Interp1DSpec {
    double a = 0.0;
    double b = 1.0;
    std::vector<double> values;       // J+1 knot values
    std::optional<double> end_slope_a; // f(a)/|f(a)|, absent if f(a) == 0
    std::optional<double> end_slope_b; // f(b)/|f(b)|, absent if f(b) == 0

    int segments() const { return static_cast<int>(values.size()) - 1; }
    double knot(int j) const { return a + j * (b - a) / segments(); }
    double segment_width() const { return (b - a) / segments(); }

    /// Slope of segment k (between knots k and k+1).
    double slope(int k) const { return (values[k + 1] - values[k]) / segment_width(); }

    /// Interpolant value at u; linear continuation outside [a, b].
    double operator()(double u) const {
        const int J = segments();
        int k = static_cast<int>(std::floor((u - a) / segment_width()));
        k = std::clamp(k, 0, J - 1);
        return values[k] + slope(k) * (u - knot(k));
    }
};

inline Interp1DSpec make_interp(const std::function<double(double)>& f, double a, double b, int J) {
    if (!(a < b)) throw std::invalid_argument("make_interp: need a < b");
    if (J < 1) throw std::invalid_argument("make_interp: need J >= 1");
    Interp1DSpec spec;
    spec.a = a;
    spec.b = b;
    spec.values.resize(J + 1);
    for (int j = 0; j <= J; ++j) {
        const double v = f(a + j * (b - a) / J);
        if (!std::isfinite(v)) throw std::invalid_argument("make_interp: non-finite value");
        spec.values[j] = v;
    }
    if (spec.values.front() != 0.0) spec.end_slope_a = spec.values.front() > 0 ? 1.0 : -1.0;
    if (spec.values.back() != 0.0) spec.end_slope_b = spec.values.back() > 0 ? 1.0 : -1.0;
    return spec;
}

/// One-hidden-layer net realizing the interpolant: hat-function weights
/// become second differences of segment slopes at the interior knots and
/// unit-slope neurons at the two outer knots a - |f(a)|, b + |f(b)|.
inline ReluNet interp_net(const Interp1DSpec& spec) {
    const int J = spec.segments();
    const bool has_a = spec.end_slope_a.has_value();
    const bool has_b = spec.end_slope_b.has_value();
    const int width = (J + 1) + (has_a ? 1 : 0) + (has_b ? 1 : 0);

    AffineLayer hidden(width, 1);
    AffineLayer out(1, width);
    int n = 0;
    if (has_a) {
        hidden.add(n, 0, 1.0);
        hidden.set_bias(n, -(spec.a - std::abs(spec.values.front())));
        out.add(0, n, *spec.end_slope_a);
        ++n;
    }
    for (int j = 0; j <= J; ++j) {
        hidden.add(n, 0, 1.0);
        hidden.set_bias(n, -spec.knot(j));
        // slope difference across knot j, with the outer segments carrying
        // unit slope toward 0 at the phantom knots
        const double left = (j == 0) ? (has_a ? *spec.end_slope_a : 0.0) : spec.slope(j - 1);
        const double right = (j == J) ? (has_b ? -*spec.end_slope_b : 0.0) : spec.slope(j);
        out.add(0, n, right - left);
        ++n;
    }
    if (has_b) {
        hidden.add(n, 0, 1.0);
        hidden.set_bias(n, -(spec.b + std::abs(spec.values.back())));
        out.add(0, n, *spec.end_slope_b);
        ++n;
    }
    std::vector<AffineLayer> layers;
    layers.push_back(std::move(hidden));
    layers.push_back(std::move(out));
    return ReluNet(std::move(layers));
}

/// ReLU net interpolating f at J+1 uniform knots of [a, b]; the Lipschitz
/// seminorm error is at most (b-a) * sup|f''| / J.
inline ReluNet flux_interp_net(const std::function<double(double)>& f, double a, double b, int J) {
    return interp_net(make_interp(f, a, b, J));
}

/// Dyadic piecewise-linear approximation of x^2 on [0, 1] with breakpoints
/// k/2^m: exact at the breakpoints, sup error 2^{-2m-2}, Lipschitz error
/// 2^{-m}. Depth m+1, width <= 3, entries bounded by 4.
inline ReluNet yarotsky_square(int m) {
    if (m < 1) throw std::invalid_argument("yarotsky_square: need m >= 1");
    std::vector<AffineLayer> layers;

    // layer 1 neurons: sigma(t), sigma(t - 1/2); the third tent neuron
    // sigma(t - 1) vanishes identically on [0, 1]
    AffineLayer first(2, 1);
    first.add(0, 0, 1.0);
    first.add(1, 0, 1.0);
    first.set_bias(1, -0.5);
    layers.push_back(std::move(first));

    // layer k neurons: sigma(g_{k-1}), sigma(g_{k-1} - 1/2), sigma(v_{k-1})
    // with g_k the k-fold tent map and v_k = t - sum_{s<=k} g_s / 4^s
    for (int k = 2; k <= m; ++k) {
        AffineLayer mid(3, k == 2 ? 2 : 3);
        const double scale = std::pow(4.0, -(k - 1));
        if (k == 2) {
            mid.add(0, 0, 2.0);
            mid.add(0, 1, -4.0);
            mid.add(1, 0, 2.0);
            mid.add(1, 1, -4.0);
            mid.set_bias(1, -0.5);
            mid.add(2, 0, 0.5);
            mid.add(2, 1, 1.0);
        } else {
            mid.add(0, 0, 2.0);
            mid.add(0, 1, -4.0);
            mid.add(1, 0, 2.0);
            mid.add(1, 1, -4.0);
            mid.set_bias(1, -0.5);
            mid.add(2, 0, -2.0 * scale);
            mid.add(2, 1, 4.0 * scale);
            mid.add(2, 2, 1.0);
        }
        layers.push_back(std::move(mid));
    }

    const double scale = std::pow(4.0, -m);
    AffineLayer out(1, m == 1 ? 2 : 3);
    if (m == 1) {
        out.add(0, 0, 0.5);
        out.add(0, 1, 1.0);
    } else {
        out.add(0, 0, -2.0 * scale);
        out.add(0, 1, 4.0 * scale);
        out.add(0, 2, 1.0);
    }
    layers.push_back(std::move(out));
    return ReluNet(std::move(layers));
}

/// Two-input approximate multiplication on [-M, M] x [-N, N] built from
/// xy = ((x+y)^2 - (x-y)^2)/4 and two dyadic square approximations applied
/// to |x+y|/(M+N) and |x-y|/(M+N). For every fixed y the Lipschitz error
/// in x is at most (M+N)/2^{m+1}. Depth m+1, width 8.
inline ReluNet mult_net(int m, double M, double N) {
    if (m < 1) throw std::invalid_argument("mult_net: need m >= 1");
    if (!(M > 0.0) || !(N > 0.0)) throw std::invalid_argument("mult_net: need M, N > 0");
    const double s = 1.0 / (M + N);
    std::vector<AffineLayer> layers;

    // channel u = (x+y)/(M+N), channel w = (x-y)/(M+N); per channel the four
    // neurons sigma(+-c), sigma(+-c - 1/2) give |c| and sigma(|c| - 1/2)
    AffineLayer first(8, 2);
    const double sx[2] = {s, s};
    const double sy[2] = {s, -s};
    for (int ch = 0; ch < 2; ++ch) {
        const int o = 4 * ch;
        first.add(o + 0, 0, sx[ch]);
        first.add(o + 0, 1, sy[ch]);
        first.add(o + 1, 0, -sx[ch]);
        first.add(o + 1, 1, -sy[ch]);
        first.add(o + 2, 0, sx[ch]);
        first.add(o + 2, 1, sy[ch]);
        first.set_bias(o + 2, -0.5);
        first.add(o + 3, 0, -sx[ch]);
        first.add(o + 3, 1, -sy[ch]);
        first.set_bias(o + 3, -0.5);
    }
    layers.push_back(std::move(first));

    // interior square-chain layers, 3 neurons per channel
    for (int k = 2; k <= m; ++k) {
        const int in = k == 2 ? 8 : 6;
        AffineLayer mid(6, in);
        const double scale = std::pow(4.0, -(k - 1));
        for (int ch = 0; ch < 2; ++ch) {
            const int ro = 3 * ch;
            if (k == 2) {
                const int co = 4 * ch;
                // g_1 = 2(|c|) - 4 sigma(|c| - 1/2), v_1 = |c|/2 + sigma(|c| - 1/2)
                mid.add(ro + 0, co + 0, 2.0);
                mid.add(ro + 0, co + 1, 2.0);
                mid.add(ro + 0, co + 2, -4.0);
                mid.add(ro + 0, co + 3, -4.0);
                mid.add(ro + 1, co + 0, 2.0);
                mid.add(ro + 1, co + 1, 2.0);
                mid.add(ro + 1, co + 2, -4.0);
                mid.add(ro + 1, co + 3, -4.0);
                mid.set_bias(ro + 1, -0.5);
                mid.add(ro + 2, co + 0, 0.5);
                mid.add(ro + 2, co + 1, 0.5);
                mid.add(ro + 2, co + 2, 1.0);
                mid.add(ro + 2, co + 3, 1.0);
            } else {
                const int co = 3 * ch;
                mid.add(ro + 0, co + 0, 2.0);
                mid.add(ro + 0, co + 1, -4.0);
                mid.add(ro + 1, co + 0, 2.0);
                mid.add(ro + 1, co + 1, -4.0);
                mid.set_bias(ro + 1, -0.5);
                mid.add(ro + 2, co + 0, -2.0 * scale);
                mid.add(ro + 2, co + 1, 4.0 * scale);
                mid.add(ro + 2, co + 2, 1.0);
            }
        }
        layers.push_back(std::move(mid));
    }

    const double amp = (M + N) * (M + N) / 4.0;
    AffineLayer out(1, m == 1 ? 8 : 6);
    if (m == 1) {
        for (int ch = 0; ch < 2; ++ch) {
            const int co = 4 * ch;
            const double sgn = ch == 0 ? 1.0 : -1.0;
            out.add(0, co + 0, sgn * amp * 0.5);
            out.add(0, co + 1, sgn * amp * 0.5);
            out.add(0, co + 2, sgn * amp);
            out.add(0, co + 3, sgn * amp);
        }
    } else {
        const double scale = std::pow(4.0, -m);
        for (int ch = 0; ch < 2; ++ch) {
            const int co = 3 * ch;
            const double sgn = ch == 0 ? 1.0 : -1.0;
            out.add(0, co + 0, sgn * amp * -2.0 * scale);
            out.add(0, co + 1, sgn * amp * 4.0 * scale);
            out.add(0, co + 2, sgn * amp);
        }
    }
    layers.push_back(std::move(out));
    return ReluNet(std::move(layers));
}

/// One-hidden-layer surrogate for products x*y with x in [0,1] and y in
/// [-lambda, lambda]: x (*) y = sigma(y + lambda*x - lambda) - sigma(-y +
/// lambda*x - lambda). Exact at x in {0, 1}.
inline ReluNet star_net(double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("star_net: need lambda > 0");
    AffineLayer first(2, 2);
    first.add(0, 0, lambda);
    first.add(0, 1, 1.0);
    first.set_bias(0, -lambda);
    first.add(1, 0, lambda);
    first.add(1, 1, -1.0);
    first.set_bias(1, -lambda);
    AffineLayer out(1, 2);
    out.add(0, 0, 1.0);
    out.add(0, 1, -1.0);
    std::vector<AffineLayer> layers;
    layers.push_back(std::move(first));
    layers.push_back(std::move(out));
    return ReluNet(std::move(layers));
}

/// Saturated ramp t -> max{min{(center - t)/step, 1}, 0}: equals 1 for
/// t <= center - step and 0 for t >= center.
inline ReluNet hat_ramp_net(double center, double step) {
    if (!(step > 0.0)) throw std::invalid_argument("hat_ramp_net: need step > 0");
    AffineLayer first(2, 1);
    first.add(0, 0, -1.0 / step);
    first.set_bias(0, center / step);
    first.add(1, 0, -1.0 / step);
    first.set_bias(1, center / step - 1.0);
    AffineLayer out(1, 2);
    out.add(0, 0, 1.0);
    out.add(0, 1, -1.0);
    std::vector<AffineLayer> layers;
    layers.push_back(std::move(first));
    layers.push_back(std::move(out));
    return ReluNet(std::move(layers));
}

/// Max absolute difference quotient over n uniform consecutive-point pairs;
/// the measurement used for all Lipschitz-seminorm error checks.
inline double lipschitz_seminorm(const std::function<double(double)>& f, double a, double b,
                                 int n = 10000) {
    const double h = (b - a) / n;
    double worst = 0.0;
    double prev = f(a);
    for (int i = 1; i <= n; ++i) {
        const double cur = f(a + i * h);
        worst = std::max(worst, std::abs(cur - prev) / h);
        prev = cur;
    }
    return worst;
}

} // namespace scl

#endif // SCL_BLOCKS_HPP
