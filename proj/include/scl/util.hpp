#ifndef SCL_UTIL_HPP
#define SCL_UTIL_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

namespace scl {

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("loglog_slope: need >= 2 points");
    }
    const int n = static_cast<int>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Max of |g| over a uniform sweep with n+1 points.
inline double sup_abs_sweep(const std::function<double(double)>& g, double lo, double hi,
                            int n = 10000) {
    double m = 0.0;
    for (int i = 0; i <= n; ++i) {
        m = std::max(m, std::abs(g(lo + (hi - lo) * i / n)));
    }
    return m;
}

/// Uniform doubles in [0, 1) from a seeded mt19937_64, mapped portably
/// (53 high bits) so the stream does not depend on the standard library's
/// distribution implementation.
class UniformSampler {
public:
    explicit UniformSampler(std::uint64_t seed) : rng_(seed) {}

    double next() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

    std::vector<double> vector(int n) {
        std::vector<double> v(n);
        for (double& x : v) x = next();
        return v;
    }

private:
    std::mt19937_64 rng_;
};

/// M x dim matrix of iid U([0,1]) parameter samples, reproducible from seed.
inline std::vector<std::vector<double>> sample_params(int dim, int M, std::uint64_t seed) {
    if (M < 1) throw std::invalid_argument("sample_params: need M >= 1");
    if (dim < 0) throw std::invalid_argument("sample_params: need dim >= 0");
    UniformSampler s(seed);
    std::vector<std::vector<double>> out(M);
    for (auto& row : out) row = s.vector(dim);
    return out;
}

} // namespace scl

#endif // SCL_UTIL_HPP
