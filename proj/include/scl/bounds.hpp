#ifndef SCL_BOUNDS_HPP
#define SCL_BOUNDS_HPP

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace scl {
namespace bounds {

enum class Provenance { closed_form, swept, user };

inline std::string to_string(Provenance p) {
    switch (p) {
        case Provenance::closed_form: return "closed_form";
        case Provenance::swept: return "swept";
        default: return "user";
    }
}

struct Constant {
    double value = 0.0;
    Provenance prov = Provenance::user;
};

/// A named bound value with every constant it was computed from, so the
/// number can be recomputed from the report alone.
struct BoundReport {
    std::string name;
    double value = 0.0;
    std::map<std::string, Constant> constants;
    std::string formula; // human-readable formula in terms of the constants

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["name"] = name;
        j["value"] = value;
        j["formula"] = formula;
        for (const auto& [k, c] : constants) {
            j["constants"][k] = {{"value", c.value}, {"provenance", to_string(c.prov)}};
        }
        return j;
    }
};

/// Lipschitz error of the J-segment flux interpolant: (b-a) sup|f''| / J.
inline double flux_interp_bound(double a, double b, int J, double f2sup) {
    if (J < 1) throw std::invalid_argument("flux_interp_bound: need J >= 1");
    return (b - a) * f2sup / J;
}

/// Per-fixed-y Lipschitz error of the depth-(m+1) multiplication net.
inline double mult_bound(int m, double M, double N) {
    return (M + N) / std::pow(2.0, m + 1);
}

/// First-order Lax-Friedrichs L1 error bound 31 TV T (1+F)^2 / sqrt(N).
inline double kuznetsov_bound(double TV, double T, double F, double N) {
    if (!(N > 0)) throw std::invalid_argument("kuznetsov_bound: need N > 0");
    return 31.0 * TV * T * (1.0 + F) * (1.0 + F) / std::sqrt(N);
}

enum class ExpressivityVariant { general, kle, parametric_flux };

struct ExpressivityConstants {
    double C_TV = 0.0;
    double T = 0.0;
    double C0 = 0.0;
    double f2sup = 0.0;   // sup|f''| (mean flux for the parametric variant)
    double f1sup = 0.0;   // sup|f'|
    double C_f = 0.0;     // parametric variant only
    double sigma_f = 0.0; // parametric variant only
    int s = 1;            // parametric variant only
};

/// Sup-over-parameters L1 error bound of the emulator network after N time
/// steps, in the three published variants.
inline double expressivity_bound(ExpressivityVariant variant, const ExpressivityConstants& c,
                                 double N) {
    if (!(N > 0)) throw std::invalid_argument("expressivity_bound: need N > 0");
    switch (variant) {
        case ExpressivityVariant::general: {
            const double q = 1.0 + c.f1sup;
            return (2.0 * c.C_TV * c.T * (c.C0 * c.f2sup + 18.0 * q * q) + 1.0) / std::sqrt(N);
        }
        case ExpressivityVariant::kle: {
            const double q = 1.0 + c.f1sup;
            return 2.0 * c.C_TV * c.T * (c.C0 * c.f2sup + 18.0 * q * q) / std::sqrt(N);
        }
        default: {
            const double q = 1.0 + c.C_f * std::pow(static_cast<double>(c.s), c.sigma_f);
            return (2.0 * c.C_TV * c.T * (c.C0 * c.f2sup + 19.0 * q * q) + 1.0) / std::sqrt(N);
        }
    }
}

/// Right-hand sides of the exact size bounds for the unrolled emulator with
/// Karhunen-Loeve initial data. Connectivity only has an asymptotic form and
/// is flagged non-assertable.
struct ComplexityBounds {
    double depth = 0.0;
    double width = 0.0;
    double magnitude = 0.0;
    bool connectivity_assertable = false;
    std::string connectivity_form;
};

struct ComplexityConstants {
    double b_minus_a = 0.0;
    double T = 0.0;
    double f1sup = 0.0;
    double C0 = 0.0;
    double f_at_minus_C0 = 0.0;
    double f_at_plus_C0 = 0.0;
    double C_B = 0.0;
};

inline ComplexityBounds complexity_report(int d, int N, const ComplexityConstants& c) {
    ComplexityBounds out;
    out.depth = N + 1.0;
    out.width = std::max(1.0 + d,
                         2.0 * c.b_minus_a * std::pow(static_cast<double>(N), 1.5) / (c.T * c.f1sup));
    out.magnitude = std::max({c.C_B, c.C0 + std::abs(c.f_at_minus_C0), c.C0 + std::abs(c.f_at_plus_C0),
                              2.0 * c.f1sup, 1.0 / (2.0 * c.f1sup)});
    out.connectivity_assertable = false;
    out.connectivity_form = "O(d*N + N^(5/2))";
    return out;
}

/// Covering number of a width-`width` cube in sup norm: ceil(width/r)^k.
inline double covering_bound(double width, double r, int k) {
    if (!(r > 0.0)) throw std::invalid_argument("covering_bound: need r > 0");
    if (k < 0) throw std::invalid_argument("covering_bound: need k >= 0");
    if (width <= r) return 1.0;
    return std::pow(std::ceil(width / r), k);
}

/// Parameter-to-realization Lipschitz constant L R^{L-1} (W+1)^L.
inline double param_lipschitz_bound(int L, double R, int W) {
    return L * std::pow(R, L - 1) * std::pow(W + 1.0, L);
}

enum class GapForm { sharp, simplified };

/// Expected generalization gap of clipped networks over M samples.
inline double gen_gap_bound(double beta_minus_alpha, double b_minus_a, int L, int W, int M,
                            double R, GapForm form) {
    if (R < 1.0) throw std::invalid_argument("gen_gap_bound: hypothesis requires R >= 1");
    if (beta_minus_alpha < 1.0) {
        throw std::invalid_argument("gen_gap_bound: hypothesis requires beta - alpha >= 1");
    }
    if (M < 1) throw std::invalid_argument("gen_gap_bound: need M >= 1");
    const double w1 = W + 1.0;
    if (form == GapForm::sharp) {
        const double arg = 2.0 * std::pow(M, 1.0 / (3.0 * L)) * R * w1;
        return 12.0 * beta_minus_alpha * b_minus_a * L * w1 * std::sqrt(std::log(arg)) / std::sqrt(M);
    }
    return 12.0 * beta_minus_alpha * b_minus_a * L * w1 * w1 * std::sqrt(std::log(2.0 * M * R)) /
           std::sqrt(M);
}

/// Cumulative generalization bound: training-error estimate plus gap bound.
inline double cumulative_gen_bound(double train_err_estimate, double gap) {
    if (train_err_estimate < 0.0 || gap < 0.0) {
        throw std::invalid_argument("cumulative_gen_bound: negative input");
    }
    return train_err_estimate + gap;
}

} // namespace bounds
} // namespace scl

#endif // SCL_BOUNDS_HPP
