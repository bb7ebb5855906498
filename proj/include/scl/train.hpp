#ifndef SCL_TRAIN_HPP
#define SCL_TRAIN_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "scl/bounds.hpp"
#include "scl/fv.hpp"
#include "scl/kl.hpp"
#include "scl/relu_net.hpp"
#include "scl/util.hpp"

namespace scl {
namespace train {

/// Dense ReLU MLP parameters: layer widths [in, h_1, ..., out] and the flat
/// vector theta laid out per layer as row-major weights followed by biases.
struct MlpParams {
    std::vector<int> widths;
    std::vector<double> theta;
    std::uint64_t seed = 0;

    int layers() const { return static_cast<int>(widths.size()) - 1; }

    int weight_offset(int layer) const {
        int off = 0;
        for (int l = 0; l < layer; ++l) off += widths[l] * widths[l + 1] + widths[l + 1];
        return off;
    }
    int bias_offset(int layer) const {
        return weight_offset(layer) + widths[layer] * widths[layer + 1];
    }
    int param_count() const { return weight_offset(layers()); }

    double sup_norm() const {
        double m = 0.0;
        for (double v : theta) m = std::max(m, std::abs(v));
        return m;
    }

    /// Uniform init in +-sqrt(6 / (fan_in + fan_out)), reproducible from seed.
    static MlpParams init(std::vector<int> widths_, std::uint64_t seed_) {
        if (widths_.size() < 2) throw std::invalid_argument("MlpParams: need >= 2 widths");
        MlpParams p;
        p.widths = std::move(widths_);
        p.seed = seed_;
        p.theta.assign(p.param_count(), 0.0);
        UniformSampler rng(seed_);
        for (int l = 0; l < p.layers(); ++l) {
            const double bound = std::sqrt(6.0 / (p.widths[l] + p.widths[l + 1]));
            const int wo = p.weight_offset(l);
            for (int i = 0; i < p.widths[l] * p.widths[l + 1]; ++i) {
                p.theta[wo + i] = bound * (2.0 * rng.next() - 1.0);
            }
            // biases start at zero
        }
        return p;
    }
};

inline std::vector<double> mlp_forward(const MlpParams& p, std::span<const double> input) {
    if (static_cast<int>(input.size()) != p.widths.front()) {
        throw std::invalid_argument("mlp_forward: input dimension mismatch");
    }
    std::vector<double> cur(input.begin(), input.end());
    std::vector<double> next;
    for (int l = 0; l < p.layers(); ++l) {
        const int in = p.widths[l], out = p.widths[l + 1];
        const int wo = p.weight_offset(l), bo = p.bias_offset(l);
        next.assign(p.theta.begin() + bo, p.theta.begin() + bo + out);
        for (int r = 0; r < out; ++r) {
            double acc = 0.0;
            for (int c = 0; c < in; ++c) acc += p.theta[wo + r * in + c] * cur[c];
            next[r] += acc;
        }
        if (l + 1 < p.layers()) {
            for (double& v : next) v = std::max(v, 0.0);
        }
        cur.swap(next);
    }
    return cur;
}

/// Conversion to the sparse layered representation; realizes the identical
/// function.
inline ReluNet to_relu_net(const MlpParams& p) {
    std::vector<AffineLayer> layers;
    for (int l = 0; l < p.layers(); ++l) {
        const int in = p.widths[l], out = p.widths[l + 1];
        AffineLayer layer(out, in);
        const int wo = p.weight_offset(l), bo = p.bias_offset(l);
        for (int r = 0; r < out; ++r) {
            for (int c = 0; c < in; ++c) layer.add(r, c, p.theta[wo + r * in + c]);
            layer.set_bias(r, p.theta[bo + r]);
        }
        layers.push_back(std::move(layer));
    }
    return ReluNet(std::move(layers));
}

// ---------------------------------------------------------------------------
// datasets
// ---------------------------------------------------------------------------

enum class Problem { fixed_flux, parametric_flux };

struct SolverConfig {
    int J_solver = 1024;
    double cfl = 0.45;
    double T = 0.1;
    int J_grid = 100; // equidistant sample points for targets
};

struct Dataset {
    std::vector<std::vector<double>> params;  // M x dim
    std::vector<std::vector<double>> targets; // M x J
    std::vector<double> grid;                 // J x-points
    std::string provenance;

    int size() const { return static_cast<int>(params.size()); }
    int dim() const { return params.empty() ? 0 : static_cast<int>(params.front().size()); }
    int out_dim() const { return targets.empty() ? 0 : static_cast<int>(targets.front().size()); }

    Dataset slice(int from, int to) const {
        Dataset d;
        d.params.assign(params.begin() + from, params.begin() + to);
        d.targets.assign(targets.begin() + from, targets.begin() + to);
        d.grid = grid;
        d.provenance = provenance;
        return d;
    }

    void target_range(double& lo, double& hi) const {
        lo = targets[0][0];
        hi = targets[0][0];
        for (const auto& row : targets) {
            for (double v : row) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
    }
};

/// Supervised data for the two experiment families: fixed Burgers flux with
/// sine-series initial data, or fixed initial data 1 + sin(x) with a
/// Karhunen-Loeve flux. Targets come from the second-order MUSCL solver
/// sampled at J_grid equidistant points; everything is deterministic in the
/// seed. The Godunov flux is used when the sampled flux is convex on the
/// data range; otherwise the run falls back to Rusanov.
inline Dataset make_dataset(Problem problem, int dim, int M, std::uint64_t seed,
                            const SolverConfig& sc = {}, const kl::KLSpec* flux_modes = nullptr) {
    Dataset ds;
    ds.params = sample_params(dim, M, seed);
    ds.grid.resize(sc.J_grid);
    const double a = 0.0, b = 1.0;
    for (int j = 0; j < sc.J_grid; ++j) ds.grid[j] = a + (j + 0.5) * (b - a) / sc.J_grid;

    int rusanov_fallbacks = 0;
    for (int i = 0; i < M; ++i) {
        const auto& y = ds.params[i];
        fv::FluxFn flux;
        std::function<double(double)> u0;
        fv::NumFlux nf = fv::NumFlux::rusanov;
        if (problem == Problem::fixed_flux) {
            flux.f = [](double u) { return 0.5 * u * u; };
            flux.df = [](double u) { return u; };
            u0 = [&y, dim](double x) {
                double v = 1.0;
                for (int k = 1; k <= dim; ++k) v += y[k - 1] * std::pow(2.0, 1 - k) * std::sin(k * x);
                return v;
            };
        } else {
            if (flux_modes == nullptr || flux_modes->dim() != dim) {
                throw std::invalid_argument("make_dataset: parametric flux needs KL modes of size dim");
            }
            const kl::KLSpec* km = flux_modes;
            std::vector<double> z = y;
            flux.f = [km, z](double u) {
                return kl::kl_flux_value(*km, [](double v) { return 0.5 * v * v; }, u,
                                         std::span<const double>(z));
            };
            const double h = 1e-6;
            flux.df = [flux_f = flux.f, h](double u) {
                return (flux_f(u + h) - flux_f(u - h)) / (2.0 * h);
            };
            u0 = [](double x) { return 1.0 + std::sin(x); };
            // Godunov needs a convex flux; probe f'' on the data range
            bool convex = true;
            for (int q = 0; q <= 200; ++q) {
                const double u = 0.9 + (1.0 + std::sin(1.0) - 0.8) * q / 200.0;
                const double f2 = (flux.f(u + 1e-4) - 2.0 * flux.f(u) + flux.f(u - 1e-4)) / 1e-8;
                if (f2 < -1e-6) {
                    convex = false;
                    break;
                }
            }
            if (convex) {
                nf = fv::NumFlux::godunov;
            } else {
                ++rusanov_fallbacks;
            }
        }
        fv::GridState g = fv::sample_grid(u0, a, b, sc.J_solver);
        const fv::GridState sol = fv::muscl_solve(flux, nf, g, sc.T, sc.cfl, Boundary::periodic);
        const PiecewiseConstantFn fn = sol.as_fn();
        std::vector<double> row(sc.J_grid);
        for (int j = 0; j < sc.J_grid; ++j) row[j] = fn(ds.grid[j]);
        ds.targets.push_back(std::move(row));
    }
    std::ostringstream prov;
    prov << "problem=" << (problem == Problem::fixed_flux ? "fixed_flux" : "parametric_flux")
         << " dim=" << dim << " M=" << M << " seed=" << seed << " J_solver=" << sc.J_solver
         << " cfl=" << sc.cfl << " T=" << sc.T << " J_grid=" << sc.J_grid
         << " rusanov_fallbacks=" << rusanov_fallbacks;
    ds.provenance = prov.str();
    return ds;
}

// ---------------------------------------------------------------------------
// loss, gradient, Adam
// ---------------------------------------------------------------------------

struct LossGrad {
    double loss = 0.0;      // data term + regularization
    double data_term = 0.0; // the grid-sum discrepancy, also the training error
    std::vector<double> grad;
};

/// Loss (1/M) sum_i sum_j |target_ij - pred_ij| + reg_lambda ||theta||_2^2
/// with reverse-mode gradient; sign(0) := 0 and ReLU'(0) := 0.
inline LossGrad loss_and_grad(const MlpParams& p, const Dataset& data, double reg_lambda) {
    if (reg_lambda < 0.0) throw std::invalid_argument("loss_and_grad: reg_lambda >= 0");
    const int M = data.size();
    const int L = p.layers();
    LossGrad out;
    out.grad.assign(p.theta.size(), 0.0);

    std::vector<std::vector<double>> act(L + 1);  // post-activation values per layer
    std::vector<std::vector<double>> pre(L + 1);  // pre-activation values
    std::vector<double> delta, delta_prev;

    for (int i = 0; i < M; ++i) {
        act[0].assign(data.params[i].begin(), data.params[i].end());
        for (int l = 0; l < L; ++l) {
            const int in = p.widths[l], outw = p.widths[l + 1];
            const int wo = p.weight_offset(l), bo = p.bias_offset(l);
            pre[l + 1].assign(p.theta.begin() + bo, p.theta.begin() + bo + outw);
            for (int r = 0; r < outw; ++r) {
                double acc = 0.0;
                for (int c = 0; c < in; ++c) acc += p.theta[wo + r * in + c] * act[l][c];
                pre[l + 1][r] += acc;
            }
            act[l + 1] = pre[l + 1];
            if (l + 1 < L) {
                for (double& v : act[l + 1]) v = std::max(v, 0.0);
            }
        }
        const auto& predicted = act[L];
        if (!std::isfinite(std::accumulate(predicted.begin(), predicted.end(), 0.0))) {
            throw std::runtime_error("loss_and_grad: non-finite forward values");
        }
        delta.assign(predicted.size(), 0.0);
        for (std::size_t j = 0; j < predicted.size(); ++j) {
            const double r = data.targets[i][j] - predicted[j];
            out.data_term += std::abs(r);
            delta[j] = (r > 0.0 ? -1.0 : (r < 0.0 ? 1.0 : 0.0)) / M;
        }
        for (int l = L - 1; l >= 0; --l) {
            const int in = p.widths[l], outw = p.widths[l + 1];
            const int wo = p.weight_offset(l), bo = p.bias_offset(l);
            for (int r = 0; r < outw; ++r) {
                const double dr = delta[r];
                if (dr == 0.0) continue;
                out.grad[bo + r] += dr;
                for (int c = 0; c < in; ++c) out.grad[wo + r * in + c] += dr * act[l][c];
            }
            if (l > 0) {
                delta_prev.assign(in, 0.0);
                for (int r = 0; r < outw; ++r) {
                    const double dr = delta[r];
                    if (dr == 0.0) continue;
                    for (int c = 0; c < in; ++c) delta_prev[c] += dr * p.theta[wo + r * in + c];
                }
                for (int c = 0; c < in; ++c) {
                    if (pre[l][c] <= 0.0) delta_prev[c] = 0.0;
                }
                delta.swap(delta_prev);
            }
        }
    }
    out.data_term /= M;
    out.loss = out.data_term;
    if (reg_lambda > 0.0) {
        double sq = 0.0;
        for (std::size_t k = 0; k < p.theta.size(); ++k) {
            sq += p.theta[k] * p.theta[k];
            out.grad[k] += 2.0 * reg_lambda * p.theta[k];
        }
        out.loss += reg_lambda * sq;
    }
    return out;
}

/// Training error (4.4)-style grid-sum discrepancy of the parameters on a
/// dataset; the same code path as the loss data term.
inline double grid_sum_error(const MlpParams& p, const Dataset& data, bool clip = false,
                             double clip_lo = 0.0, double clip_hi = 0.0) {
    double total = 0.0;
    for (int i = 0; i < data.size(); ++i) {
        const std::vector<double> pred = mlp_forward(p, data.params[i]);
        for (std::size_t j = 0; j < pred.size(); ++j) {
            const double v = clip ? std::clamp(pred[j], clip_lo, clip_hi) : pred[j];
            total += std::abs(data.targets[i][j] - v);
        }
    }
    return total / data.size();
}

struct AdamConfig {
    int epochs = 2000;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double reg_lambda = 0.0;
};

struct TrainReport {
    std::vector<double> loss_history;
    double train_err = 0.0;   // grid-sum error on the training set at theta*
    double test_err = 0.0;    // estimate of the generalization error
    double gap = 0.0;         // |train_err - test_err|
    double gap_clipped = 0.0; // gap with predictions clipped to the target range
    double theta_sup = 0.0;
    double target_lo = 0.0;
    double target_hi = 0.0;
    std::uint64_t seed = 0;
    std::string config_echo;
};

/// Full-batch Adam with bias correction; deterministic in (params, config).
inline std::pair<MlpParams, TrainReport> adam_train(MlpParams params, const Dataset& data,
                                                    const Dataset* test, const AdamConfig& cfg) {
    if (cfg.epochs < 1) throw std::invalid_argument("adam_train: need epochs >= 1");
    TrainReport rep;
    rep.seed = params.seed;
    std::vector<double> m(params.theta.size(), 0.0), v(params.theta.size(), 0.0);
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        LossGrad lg;
        try {
            lg = loss_and_grad(params, data, cfg.reg_lambda);
        } catch (const std::runtime_error&) {
            throw std::runtime_error("adam_train: diverged at epoch " + std::to_string(epoch));
        }
        rep.loss_history.push_back(lg.loss);
        if (!std::isfinite(lg.loss)) {
            throw std::runtime_error("adam_train: diverged at epoch " + std::to_string(epoch));
        }
        const double bc1 = 1.0 - std::pow(cfg.beta1, epoch);
        const double bc2 = 1.0 - std::pow(cfg.beta2, epoch);
        for (std::size_t k = 0; k < params.theta.size(); ++k) {
            m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * lg.grad[k];
            v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * lg.grad[k] * lg.grad[k];
            params.theta[k] -= cfg.lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + cfg.eps);
        }
    }
    rep.train_err = grid_sum_error(params, data);
    rep.theta_sup = params.sup_norm();
    data.target_range(rep.target_lo, rep.target_hi);
    if (test != nullptr && test->size() > 0) {
        rep.test_err = grid_sum_error(params, *test);
        rep.gap = std::abs(rep.train_err - rep.test_err);
        const double tr_c = grid_sum_error(params, data, true, rep.target_lo, rep.target_hi);
        const double te_c = grid_sum_error(params, *test, true, rep.target_lo, rep.target_hi);
        rep.gap_clipped = std::abs(tr_c - te_c);
    } else {
        rep.test_err = std::numeric_limits<double>::quiet_NaN();
        rep.gap = rep.gap_clipped = std::numeric_limits<double>::quiet_NaN();
    }
    std::ostringstream echo;
    echo << "epochs=" << cfg.epochs << " lr=" << cfg.lr << " betas=(" << cfg.beta1 << ","
         << cfg.beta2 << ") eps=" << cfg.eps << " reg_lambda=" << cfg.reg_lambda
         << " seed=" << params.seed << " arch=";
    for (std::size_t i = 0; i < params.widths.size(); ++i) {
        echo << (i ? "x" : "") << params.widths[i];
    }
    rep.config_echo = echo.str();
    return {std::move(params), std::move(rep)};
}

// ---------------------------------------------------------------------------
// architecture search and experiment sweeps
// ---------------------------------------------------------------------------

struct ArchChoice {
    int depth = 0; // hidden layers
    int width = 0; // neurons per hidden layer
    double median_validation = 0.0;
};

inline std::vector<int> make_arch(int in, int hidden_layers, int width, int out) {
    std::vector<int> w;
    w.push_back(in);
    for (int l = 0; l < hidden_layers; ++l) w.push_back(width);
    w.push_back(out);
    return w;
}

/// Trains every (depth, width) candidate `runs` times on an 80/20 split and
/// returns the pair minimizing the median validation error.
inline ArchChoice arch_search(const Dataset& data, const std::vector<int>& depths,
                              const std::vector<int>& widths, int runs, const AdamConfig& base,
                              std::uint64_t seed) {
    const int M_train = std::max(1, (data.size() * 4) / 5);
    const Dataset tr = data.slice(0, M_train);
    const Dataset va = data.slice(M_train, data.size());
    ArchChoice best;
    best.median_validation = std::numeric_limits<double>::infinity();
    for (int depth : depths) {
        for (int width : widths) {
            std::vector<double> errs;
            for (int r = 0; r < runs; ++r) {
                MlpParams p = MlpParams::init(make_arch(data.dim(), depth, width, data.out_dim()),
                                              seed + 1000 * r);
                auto [trained, rep] = adam_train(std::move(p), tr, &va, base);
                errs.push_back(rep.test_err);
            }
            std::sort(errs.begin(), errs.end());
            const double median = errs[errs.size() / 2];
            if (median < best.median_validation) {
                best = {depth, width, median};
            }
        }
    }
    return best;
}

struct SweepRow {
    double key = 0.0; // d or M
    double train_mean = 0.0, train_se = 0.0;
    double test_mean = 0.0, test_se = 0.0;
    double gap_mean = 0.0, gap_se = 0.0;
    double gap_clipped_mean = 0.0;
    double bound = 0.0; // cumulative generalization bound
    double R = 0.0;     // measured sup-norm of theta*, rounded up
};

inline void mean_se(const std::vector<double>& xs, double& mean, double& se) {
    const int n = static_cast<int>(xs.size());
    mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    se = n > 1 ? std::sqrt(var / (n - 1)) / std::sqrt(n) : 0.0;
}

struct ExperimentConfig {
    AdamConfig adam;
    SolverConfig solver;
    int hidden_layers = 4;
    int width = 20;
    int M_test = 200;
    std::uint64_t seed = 1;
    const kl::KLSpec* flux_modes = nullptr; // parametric problem only
};

namespace detail {

inline std::vector<train::TrainReport> run_repeats(Problem problem, int dim, int M, int repeats,
                                                   const ExperimentConfig& xc) {
    const Dataset data =
        make_dataset(problem, dim, M, xc.seed, xc.solver, xc.flux_modes);
    const Dataset test =
        make_dataset(problem, dim, xc.M_test, xc.seed + 777777, xc.solver, xc.flux_modes);
    std::vector<train::TrainReport> reports;
    for (int r = 0; r < repeats; ++r) {
        MlpParams p = MlpParams::init(
            make_arch(dim, xc.hidden_layers, xc.width, xc.solver.J_grid), xc.seed + 31 * (r + 1));
        auto [trained, rep] = adam_train(std::move(p), data, &test, xc.adam);
        reports.push_back(std::move(rep));
    }
    return reports;
}

inline SweepRow summarize(double key, const std::vector<train::TrainReport>& reps, int M,
                          double b_minus_a = 1.0) {
    SweepRow row;
    row.key = key;
    std::vector<double> tr, te, gap, gapc;
    double Rmax = 1.0;
    double lo = reps.front().target_lo, hi = reps.front().target_hi;
    for (const auto& r : reps) {
        tr.push_back(r.train_err);
        te.push_back(r.test_err);
        gap.push_back(r.gap);
        gapc.push_back(r.gap_clipped);
        Rmax = std::max(Rmax, std::ceil(r.theta_sup));
        lo = std::min(lo, r.target_lo);
        hi = std::max(hi, r.target_hi);
    }
    mean_se(tr, row.train_mean, row.train_se);
    mean_se(te, row.test_mean, row.test_se);
    mean_se(gap, row.gap_mean, row.gap_se);
    double dummy;
    mean_se(gapc, row.gap_clipped_mean, dummy);
    row.R = Rmax;
    const double beta_minus_alpha = std::max(1.0, hi - lo);
    const int d = static_cast<int>(key) > 0 ? static_cast<int>(key) : 1;
    const double gapb = bounds::gen_gap_bound(beta_minus_alpha, b_minus_a, 4, std::max(d, 20), M,
                                              Rmax, bounds::GapForm::simplified);
    row.bound = bounds::cumulative_gen_bound(row.train_mean, gapb);
    return row;
}

} // namespace detail

/// Per-dimension sweep with the fixed architecture: average train/test
/// errors over `seeds` runs and the cumulative generalization bound with
/// L = 4 and W = max{d, 20}.
inline std::vector<SweepRow> experiment_dimension_sweep(Problem problem,
                                                        const std::vector<int>& dims, int M,
                                                        int seeds, const ExperimentConfig& xc) {
    std::vector<SweepRow> rows;
    for (int d : dims) {
        rows.push_back(detail::summarize(d, detail::run_repeats(problem, d, M, seeds, xc), M));
    }
    return rows;
}

/// Per-sample-count sweep at fixed dimension: mean and standard error of
/// train error, test error and gap.
inline std::vector<SweepRow> experiment_m_sweep(Problem problem, int dim,
                                                const std::vector<int>& M_list, int repeats,
                                                const ExperimentConfig& xc) {
    std::vector<SweepRow> rows;
    for (int M : M_list) {
        SweepRow row = detail::summarize(dim, detail::run_repeats(problem, dim, M, repeats, xc), M);
        row.key = M;
        rows.push_back(row);
    }
    return rows;
}

/// CSV with a config echo comment block.
inline std::string sweep_csv(const std::vector<SweepRow>& rows, const std::string& key_name,
                             const std::string& config_echo) {
    std::ostringstream os;
    os << "# " << config_echo << "\n";
    os << key_name << ",train_mean,train_se,test_mean,test_se,gap_mean,gap_se,gap_clipped_mean,"
          "bound,R\n";
    char buf[320];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%g\n",
                      r.key, r.train_mean, r.train_se, r.test_mean, r.test_se, r.gap_mean, r.gap_se,
                      r.gap_clipped_mean, r.bound, r.R);
        os << buf;
    }
    return os.str();
}

} // namespace train
} // namespace scl

#endif // SCL_TRAIN_HPP
