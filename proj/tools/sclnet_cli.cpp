// Command-line entry point: reproducible builds, verification runs, bound
// tables, reference solves, KL mode tables, training and experiment sweeps.
// Every subcommand reads one key=value config file plus --set overrides and
// writes a manifest echoing the resolved configuration.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "scl/bounds.hpp"
#include "scl/config.hpp"
#include "scl/emulator.hpp"
#include "scl/fv.hpp"
#include "scl/kl.hpp"
#include "scl/serialize.hpp"
#include "scl/train.hpp"
#include "scl/util.hpp"

namespace fs = std::filesystem;
using namespace scl;

namespace {

struct CliContext {
    std::string config_path;
    std::string out_dir = "out";
    long long seed = 1;
    std::vector<std::string> overrides;
    bool full_scale = false;

    Config resolve() const {
        Config c;
        if (!config_path.empty()) c.load_file(config_path);
        for (const std::string& kv : overrides) c.parse_line(kv);
        if (!c.has("seed")) c.set("seed", std::to_string(seed));
        return c;
    }
};

void write_manifest(const CliContext& ctx, const Config& c, const std::string& subcommand) {
    fs::create_directories(ctx.out_dir);
    std::ofstream out(fs::path(ctx.out_dir) / "manifest.txt");
    out << "# sclnet run manifest\n";
    out << "subcommand=" << subcommand << "\n";
    out << "seed=" << ctx.seed << "\n";
    out << "full_scale=" << (ctx.full_scale ? 1 : 0) << "\n";
    out << c.echo();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << text;
}

std::vector<double> config_y(const Config& c, int d) {
    std::vector<double> y = c.get_list("y", {});
    if (static_cast<int>(y.size()) != d) y.assign(d, 0.5);
    return y;
}

// emulator JSON with a discretization header in front of the network
std::string emulator_json(const emu::Emulator& e) {
    std::ostringstream os;
    os << "{\n  \"header\": {\"T\": " << format_double(e.T) << ", \"N\": " << e.N
       << ", \"J\": " << e.res.J << ", \"domain\": [" << format_double(e.a) << ", "
       << format_double(e.b) << "], \"boundary\": \"" << to_string(e.boundary)
       << "\", \"flux_kind\": \""
       << (e.flux_kind == emu::FluxKind::closed_form ? "closed_form" : "kl_flux")
       << "\", \"d\": " << e.d << ", \"s\": " << e.s << "},\n  \"network\": " << to_json(e.unrolled())
       << "}\n";
    return os.str();
}

emu::Emulator build_from_config(const Config& c) {
    const std::string kind = c.get_string("flux_kind", "closed_form");
    if (kind == "closed_form") {
        return emu::build_emulator(emulator_config_from(c));
    }
    if (kind != "kl_flux") throw ConfigError("unknown flux_kind: " + kind);
    emu::EmulatorConfig cfg = emulator_config_from(c);
    cfg.flux.kind = emu::FluxKind::kl_flux;
    cfg.flux.kl = kl::exp_cov_modes(
        c.get_double("kl_sigma", 1.0), c.get_double("kl_eta", 3.0), c.get_double("kl_lo", 0.0),
        c.get_double("kl_hi", 2.0), static_cast<int>(c.get_int("kl_s", 4)),
        static_cast<int>(c.get_int("kl_nquad", 512)));
    cfg.flux.sigma_f = c.get_double("sigma_f", 0.0);
    return emu::build_emulator_parametric_flux(cfg);
}

fv::FluxFn flux_fn_from(const emu::FluxSpec& spec) { return {spec.f, spec.df}; }

// ---------------------------------------------------------------------------

int cmd_build(const CliContext& ctx) {
    const Config c = ctx.resolve();
    write_manifest(ctx, c, "build");
    const emu::Emulator e = build_from_config(c);
    write_file(fs::path(ctx.out_dir) / "emulator.json", emulator_json(e));

    const NetMetrics m = metrics(e.unrolled());
    bounds::ComplexityConstants cc;
    cc.b_minus_a = e.b - e.a;
    cc.T = e.T;
    cc.f1sup = e.res.F;
    cc.C0 = c.get_double("C0", 3.0);
    cc.f_at_minus_C0 = e.fhat(e.res.flux_lo);
    cc.f_at_plus_C0 = e.fhat(e.res.flux_hi);
    cc.C_B = 0.0;
    const bounds::ComplexityBounds cb = bounds::complexity_report(e.d, e.N, cc);

    std::ostringstream os;
    os << "metric,measured,bound,assertable\n";
    os << "connectivity," << m.connectivity << "," << cb.connectivity_form << ",0\n";
    os << "depth," << m.depth << "," << cb.depth << ",1\n";
    os << "max_width," << m.max_width << "," << cb.width << ",1\n";
    os << "weight_magnitude," << m.weight_magnitude << "," << cb.magnitude << ",1\n";
    write_file(fs::path(ctx.out_dir) / "metrics.csv", os.str());
    std::cout << os.str();
    const bool ok = (e.flux_kind != emu::FluxKind::closed_form) ||
                    (m.depth <= cb.depth && m.max_width <= cb.width &&
                     m.weight_magnitude <= cb.magnitude);
    std::cout << (ok ? "size bounds satisfied\n" : "size bounds VIOLATED\n");
    return ok ? 0 : 1;
}

struct CheckRow {
    std::string name;
    double measured = 0.0;
    double bound = 0.0;
    bool pass = false;
};

int cmd_verify(const CliContext& ctx) {
    const Config c = ctx.resolve();
    write_manifest(ctx, c, "verify");
    emu::EmulatorConfig cfg = emulator_config_from(c);
    const emu::Emulator e = emu::build_emulator(cfg);
    const int d = e.d;
    const int samples = static_cast<int>(c.get_int("n_param_samples", 100));
    std::vector<CheckRow> rows;

    // network to check: the built one, or an externally supplied file
    // (either a bare network JSON or a full emulator.json document)
    ReluNet net = e.unrolled();
    if (c.has("network")) {
        std::ifstream in(c.get_string("network", ""));
        if (!in) throw ConfigError("cannot open network file");
        std::ostringstream ss;
        ss << in.rdbuf();
        nlohmann::json doc = nlohmann::json::parse(ss.str());
        if (doc.contains("network")) doc = doc["network"];
        net = net_from_json(doc.dump());
    }

    // 1. equivalence against the loop oracle
    {
        UniformSampler us(static_cast<std::uint64_t>(c.get_int("seed", 1)));
        double worst = 0.0;
        const auto fhat = e.oracle_flux();
        for (int t = 0; t < samples; ++t) {
            const std::vector<double> y = us.vector(d);
            const std::vector<double> out = net.eval(y);
            std::vector<double> u0(e.res.J);
            for (int j = 0; j < e.res.J; ++j) {
                const double x = e.a + (j + 0.5) * e.res.dx;
                u0[j] = cfg.init.mean(x);
                for (int i = 0; i < d; ++i) {
                    u0[j] += std::sqrt(cfg.init.modes[i].lambda) * y[i] * cfg.init.modes[i].phi(x);
                }
            }
            const std::vector<double> loop = fv::lxf_loop(fhat, u0, e.N, e.res.mu, e.boundary);
            for (int j = 0; j < e.res.J; ++j) worst = std::max(worst, std::abs(out[j] - loop[j]));
        }
        rows.push_back({"oracle_equivalence", worst, 1e-9, worst <= 1e-9});
    }

    // 2-4. maximum principle, TVD, conservation along the evolution
    {
        UniformSampler us(99);
        double max_growth = 0.0, tv_growth = 0.0, cons_drift = 0.0;
        const auto fhat = e.oracle_flux();
        for (int t = 0; t < 10; ++t) {
            const std::vector<double> y = us.vector(d);
            std::vector<double> u(e.res.J);
            for (int j = 0; j < e.res.J; ++j) {
                const double x = e.a + (j + 0.5) * e.res.dx;
                u[j] = cfg.init.mean(x);
                for (int i = 0; i < d; ++i) {
                    u[j] += std::sqrt(cfg.init.modes[i].lambda) * y[i] * cfg.init.modes[i].phi(x);
                }
            }
            double sup0 = 0.0, sum0 = 0.0;
            for (double v : u) {
                sup0 = std::max(sup0, std::abs(v));
                sum0 += v;
            }
            double tv_prev = fv::tv(u, e.boundary);
            std::vector<double> next;
            for (int n = 0; n < e.N; ++n) {
                fv::lxf_step(u, next, e.res.mu, fhat, e.boundary);
                u.swap(next);
                double sup = 0.0, sum = 0.0;
                for (double v : u) {
                    sup = std::max(sup, std::abs(v));
                    sum += v;
                }
                const double tv_now = fv::tv(u, e.boundary);
                max_growth = std::max(max_growth, sup - sup0);
                tv_growth = std::max(tv_growth, tv_now - tv_prev);
                tv_prev = tv_now;
                if (e.boundary == Boundary::periodic) {
                    cons_drift = std::max(cons_drift, std::abs(sum - sum0) / std::max(1.0, std::abs(sum0)));
                }
            }
        }
        rows.push_back({"maximum_principle", max_growth, 1e-12, max_growth <= 1e-12});
        rows.push_back({"total_variation_diminishing", tv_growth, 1e-12, tv_growth <= 1e-12});
        if (e.boundary == Boundary::periodic) {
            rows.push_back({"conservation", cons_drift, 1e-10, cons_drift <= 1e-10});
        }
    }

    // 5-6. convergence and the expressivity bound over an N sweep
    {
        const std::vector<double> Ns = c.get_list("N_sweep", {16, 64, 256});
        const int n_y = static_cast<int>(c.get_int("n_convergence_samples", 20));
        const int J_ref = static_cast<int>(c.get_int("J_ref", 4096));
        const fv::FluxFn flux = flux_fn_from(cfg.flux);

        // sup|f''| for the bound (registered or swept)
        const double f2sup = cfg.flux.f2sup ? *cfg.flux.f2sup : sup_abs_sweep([&](double u) {
            const double h = 1e-4;
            return (cfg.flux.f(u + h) - 2.0 * cfg.flux.f(u) + cfg.flux.f(u - h)) / (h * h);
        }, -cfg.C0, cfg.C0);

        UniformSampler us(static_cast<std::uint64_t>(c.get_int("seed", 1)) + 555);
        std::vector<std::vector<double>> ys;
        for (int t = 0; t < n_y; ++t) ys.push_back(us.vector(d));

        double C_TV = 0.0;
        std::vector<double> errs;
        bool bound_ok = true;
        std::vector<double> Nvals;
        for (double Nd : Ns) {
            emu::EmulatorConfig cn = cfg;
            cn.N = static_cast<int>(Nd);
            const emu::Emulator en = emu::build_emulator(cn);
            double sup_err = 0.0;
            for (const auto& y : ys) {
                const PiecewiseConstantFn approx = en.solution(y);
                std::function<double(double)> u0 = [&](double x) {
                    double v = cn.init.mean(x);
                    for (int i = 0; i < d; ++i) {
                        v += std::sqrt(cn.init.modes[i].lambda) * y[i] * cn.init.modes[i].phi(x);
                    }
                    return v;
                };
                fv::GridState g = fv::sample_grid(u0, cn.a, cn.b, J_ref);
                C_TV = std::max(C_TV, fv::tv(g, cn.boundary));
                const fv::GridState ref =
                    fv::muscl_solve(flux, fv::NumFlux::rusanov, g, cn.T, 0.45, cn.boundary);
                sup_err = std::max(sup_err, l1_distance(approx, ref.as_fn()));
            }
            bounds::ExpressivityConstants ec;
            ec.C_TV = C_TV;
            ec.T = cn.T;
            ec.C0 = cn.C0;
            ec.f2sup = f2sup;
            ec.f1sup = en.res.F;
            const double eb = bounds::expressivity_bound(bounds::ExpressivityVariant::kle, ec, Nd);
            bound_ok = bound_ok && sup_err <= eb;
            rows.push_back({"expressivity_bound_N" + std::to_string(static_cast<int>(Nd)), sup_err,
                            eb, sup_err <= eb});
            errs.push_back(sup_err);
            Nvals.push_back(Nd);
        }
        const double rate = -loglog_slope(Nvals, errs);
        rows.push_back({"convergence_rate", rate, 0.5, rate >= 0.5});
    }

    std::ostringstream os;
    os << "check,measured,bound,pass\n";
    bool all_pass = true;
    std::string first_fail;
    for (const auto& r : rows) {
        char buf[200];
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%d\n", r.name.c_str(), r.measured, r.bound,
                      r.pass ? 1 : 0);
        os << buf;
        if (!r.pass && all_pass) {
            all_pass = false;
            first_fail = r.name;
        }
    }
    write_file(fs::path(ctx.out_dir) / "verify.csv", os.str());
    std::cout << os.str();
    if (!all_pass) {
        std::cerr << "verification FAILED at: " << first_fail << "\n";
        return 1;
    }
    std::cout << "all checks passed\n";
    return 0;
}

int cmd_bounds(const CliContext& ctx) {
    const Config c = ctx.resolve();
    write_manifest(ctx, c, "bounds");
    emu::EmulatorConfig cfg = emulator_config_from(c);
    const emu::Resolution r = emu::resolve(cfg);

    const auto prov_f2 = cfg.flux.f2sup ? bounds::Provenance::closed_form : bounds::Provenance::swept;
    const double f2sup = cfg.flux.f2sup ? *cfg.flux.f2sup : sup_abs_sweep([&](double u) {
        const double h = 1e-4;
        return (cfg.flux.f(u + h) - 2.0 * cfg.flux.f(u) + cfg.flux.f(u - h)) / (h * h);
    }, -cfg.C0, cfg.C0);

    // C_TV on a fine grid over a parameter sweep
    double C_TV = 0.0;
    {
        UniformSampler us(11);
        for (int t = 0; t < 50; ++t) {
            const std::vector<double> y = us.vector(cfg.init.dim());
            fv::GridState g = fv::sample_grid(
                [&](double x) {
                    double v = cfg.init.mean(x);
                    for (std::size_t i = 0; i < cfg.init.modes.size(); ++i) {
                        v += std::sqrt(cfg.init.modes[i].lambda) * y[i] * cfg.init.modes[i].phi(x);
                    }
                    return v;
                },
                cfg.a, cfg.b, 2048);
            C_TV = std::max(C_TV, fv::tv(g, cfg.boundary));
        }
    }

    std::vector<bounds::BoundReport> reports;
    {
        bounds::BoundReport rep;
        rep.name = "flux_interp_lipschitz";
        rep.value = bounds::flux_interp_bound(r.flux_lo, r.flux_hi, r.K, f2sup);
        rep.formula = "(b - a) * sup|f''| / J";
        rep.constants["a"] = {r.flux_lo, bounds::Provenance::user};
        rep.constants["b"] = {r.flux_hi, bounds::Provenance::user};
        rep.constants["J"] = {static_cast<double>(r.K), bounds::Provenance::user};
        rep.constants["sup|f''|"] = {f2sup, prov_f2};
        reports.push_back(rep);
    }
    {
        bounds::BoundReport rep;
        rep.name = "kuznetsov";
        rep.value = bounds::kuznetsov_bound(C_TV, cfg.T, r.F, cfg.N);
        rep.formula = "31 * TV * T * (1 + F)^2 / sqrt(N)";
        rep.constants["TV"] = {C_TV, bounds::Provenance::swept};
        rep.constants["T"] = {cfg.T, bounds::Provenance::user};
        rep.constants["F"] = {r.F, cfg.flux.f1sup || cfg.F_override ? bounds::Provenance::closed_form
                                                                    : bounds::Provenance::swept};
        rep.constants["N"] = {static_cast<double>(cfg.N), bounds::Provenance::user};
        reports.push_back(rep);
    }
    {
        bounds::ExpressivityConstants ec;
        ec.C_TV = C_TV;
        ec.T = cfg.T;
        ec.C0 = cfg.C0;
        ec.f2sup = f2sup;
        ec.f1sup = r.F;
        bounds::BoundReport rep;
        rep.name = "expressivity_kle";
        rep.value = bounds::expressivity_bound(bounds::ExpressivityVariant::kle, ec, cfg.N);
        rep.formula = "2 C_TV T (C0 sup|f''| + 18 (1 + sup|f'|)^2) / sqrt(N)";
        rep.constants["C_TV"] = {C_TV, bounds::Provenance::swept};
        rep.constants["T"] = {cfg.T, bounds::Provenance::user};
        rep.constants["C0"] = {cfg.C0, bounds::Provenance::user};
        rep.constants["sup|f''|"] = {f2sup, prov_f2};
        rep.constants["sup|f'|"] = {r.F, bounds::Provenance::swept};
        rep.constants["N"] = {static_cast<double>(cfg.N), bounds::Provenance::user};
        reports.push_back(rep);
    }
    {
        const int M = static_cast<int>(c.get_int("M", 500));
        const double R = c.get_double("R", 10.0);
        const double ba = c.get_double("beta_minus_alpha", 2.0);
        const int W = std::max(static_cast<int>(c.get_int("dim", cfg.init.dim())), 20);
        bounds::BoundReport rep;
        rep.name = "generalization_gap_simplified";
        rep.value = bounds::gen_gap_bound(ba, cfg.b - cfg.a, 4, W, M, R, bounds::GapForm::simplified);
        rep.formula = "12 (beta-alpha) (b-a) L (W+1)^2 sqrt(ln(2 M R)) / sqrt(M)";
        rep.constants["beta-alpha"] = {ba, bounds::Provenance::user};
        rep.constants["b-a"] = {cfg.b - cfg.a, bounds::Provenance::user};
        rep.constants["L"] = {4.0, bounds::Provenance::user};
        rep.constants["W"] = {static_cast<double>(W), bounds::Provenance::user};
        rep.constants["M"] = {static_cast<double>(M), bounds::Provenance::user};
        rep.constants["R"] = {R, bounds::Provenance::user};
        reports.push_back(rep);
    }

    nlohmann::json j = nlohmann::json::array();
    std::ostringstream os;
    for (const auto& rep : reports) {
        j.push_back(rep.to_json());
        os << rep.name << " = " << rep.value << "   [" << rep.formula << "]\n";
        for (const auto& [k, v] : rep.constants) {
            os << "    " << k << " = " << v.value << " (" << bounds::to_string(v.prov) << ")\n";
        }
    }
    write_file(fs::path(ctx.out_dir) / "bounds.json", j.dump(2) + "\n");
    std::cout << os.str();
    return 0;
}

int cmd_fv_solve(const CliContext& ctx) {
    const Config c = ctx.resolve();
    write_manifest(ctx, c, "fv-solve");
    emu::EmulatorConfig cfg = emulator_config_from(c);
    const std::vector<double> y = config_y(c, cfg.init.dim());
    const fv::FluxFn flux = flux_fn_from(cfg.flux);
    fv::GridState g = fv::sample_grid(
        [&](double x) {
            double v = cfg.init.mean(x);
            for (std::size_t i = 0; i < cfg.init.modes.size(); ++i) {
                v += std::sqrt(cfg.init.modes[i].lambda) * y[i] * cfg.init.modes[i].phi(x);
            }
            return v;
        },
        cfg.a, cfg.b, static_cast<int>(c.get_int("J_solver", 1024)));
    const std::string solver = c.get_string("solver", "muscl_rusanov");
    const double cfl = c.get_double("cfl", 0.45);
    fv::GridState sol;
    if (solver == "lxf") {
        sol = fv::lxf_solve(flux, g, cfg.T, std::min(cfl, 1.0), cfg.boundary);
    } else if (solver == "muscl_rusanov") {
        sol = fv::muscl_solve(flux, fv::NumFlux::rusanov, g, cfg.T, cfl, cfg.boundary);
    } else if (solver == "muscl_godunov") {
        sol = fv::muscl_solve(flux, fv::NumFlux::godunov, g, cfg.T, cfl, cfg.boundary);
    } else {
        throw ConfigError("unknown solver: " + solver);
    }
    fv::save_grid_csv(sol, (fs::path(ctx.out_dir) / "solution.csv").string());
    std::cout << "wrote " << (fs::path(ctx.out_dir) / "solution.csv").string() << "\n";
    return 0;
}

int cmd_kl_modes(const CliContext& ctx) {
    const Config c = ctx.resolve();
    write_manifest(ctx, c, "kl-modes");
    const kl::KLSpec spec = kl::exp_cov_modes(
        c.get_double("kl_sigma", 1.0), c.get_double("kl_eta", 3.0), c.get_double("kl_lo", 0.0),
        c.get_double("kl_hi", 2.0), static_cast<int>(c.get_int("kl_s", 10)),
        static_cast<int>(c.get_int("kl_nquad", 512)));
    kl::save_kl_csv(spec, (fs::path(ctx.out_dir) / "kl_modes.csv").string());
    std::vector<double> idx, lam;
    for (int i = 0; i < std::min(10, spec.dim()); ++i) {
        idx.push_back(i + 1.0);
        lam.push_back(spec.modes[i].lambda);
    }
    std::cout << "eigenvalue decay exponent (first " << idx.size()
              << "): " << loglog_slope(idx, lam) << "\n";
    return 0;
}

int cmd_train(const CliContext& ctx) {
    const Config c = ctx.resolve();
    write_manifest(ctx, c, "train");
    const std::string prob = c.get_string("problem", "fixed_flux");
    const int dim = static_cast<int>(c.get_int("dim", 4));
    const int M = static_cast<int>(c.get_int("M", 200));
    train::SolverConfig sc;
    sc.T = c.get_double("T", 0.1);
    sc.J_solver = static_cast<int>(c.get_int("J_solver", 1024));
    sc.cfl = c.get_double("cfl", 0.45);
    kl::KLSpec flux_modes;
    const kl::KLSpec* fm = nullptr;
    train::Problem problem = train::Problem::fixed_flux;
    if (prob == "parametric_flux") {
        problem = train::Problem::parametric_flux;
        flux_modes = kl::exp_cov_modes(c.get_double("kl_sigma", 1.0), c.get_double("kl_eta", 3.0),
                                       c.get_double("kl_lo", 0.0), c.get_double("kl_hi", 2.0), dim,
                                       static_cast<int>(c.get_int("kl_nquad", 512)));
        fm = &flux_modes;
    }
    const std::uint64_t seed = static_cast<std::uint64_t>(c.get_int("seed", 1));
    const train::Dataset data = train::make_dataset(problem, dim, M, seed, sc, fm);
    const train::Dataset test = train::make_dataset(problem, dim,
                                                    static_cast<int>(c.get_int("M_test", 200)),
                                                    seed + 777777, sc, fm);
    train::AdamConfig ac;
    ac.epochs = static_cast<int>(c.get_int("epochs", ctx.full_scale ? 10000 : 2000));
    ac.lr = c.get_double("lr", 1e-3);
    ac.reg_lambda = c.get_double("reg_lambda", 0.0);
    train::MlpParams p = train::MlpParams::init(
        train::make_arch(dim, static_cast<int>(c.get_int("hidden_layers", 4)),
                         static_cast<int>(c.get_int("width", 20)), sc.J_grid),
        seed);
    auto [trained, rep] = train::adam_train(std::move(p), data, &test, ac);

    std::ostringstream os;
    os << "# " << rep.config_echo << "\n# " << data.provenance << "\n";
    os << "train_err,test_err,gap,gap_clipped,theta_sup\n";
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g\n", rep.train_err, rep.test_err,
                  rep.gap, rep.gap_clipped, rep.theta_sup);
    os << buf;
    write_file(fs::path(ctx.out_dir) / "train_report.csv", os.str());
    std::ostringstream hist;
    hist << "epoch,loss\n";
    for (std::size_t i = 0; i < rep.loss_history.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i + 1, rep.loss_history[i]);
        hist << buf;
    }
    write_file(fs::path(ctx.out_dir) / "loss_history.csv", hist.str());
    std::cout << os.str();
    return 0;
}

int cmd_experiment(const CliContext& ctx) {
    const Config c = ctx.resolve();
    write_manifest(ctx, c, "experiment");
    const std::string what = c.get_string("experiment", "dimension_sweep");
    const std::string prob = c.get_string("problem", "fixed_flux");
    train::Problem problem =
        prob == "parametric_flux" ? train::Problem::parametric_flux : train::Problem::fixed_flux;

    train::ExperimentConfig xc;
    xc.seed = static_cast<std::uint64_t>(c.get_int("seed", 1));
    xc.adam.epochs = static_cast<int>(c.get_int("epochs", ctx.full_scale ? 10000 : 2000));
    xc.adam.lr = c.get_double("lr", 1e-3);
    xc.adam.reg_lambda = c.get_double("reg_lambda", 0.0);
    xc.solver.T = c.get_double("T", 0.1);
    xc.solver.J_solver = static_cast<int>(c.get_int("J_solver", 1024));
    xc.M_test = static_cast<int>(c.get_int("M_test", 200));
    kl::KLSpec flux_modes;
    if (problem == train::Problem::parametric_flux) {
        // modes sized to the largest requested dimension
        int dmax = static_cast<int>(c.get_int("dim", 4));
        for (double d : c.get_list("dims", {})) dmax = std::max(dmax, static_cast<int>(d));
        flux_modes = kl::exp_cov_modes(c.get_double("kl_sigma", 1.0), c.get_double("kl_eta", 3.0),
                                       c.get_double("kl_lo", 0.0), c.get_double("kl_hi", 2.0), dmax,
                                       static_cast<int>(c.get_int("kl_nquad", 512)));
    }

    if (c.has("dry_run") && c.get_int("dry_run", 0) != 0) {
        std::cout << "plan: " << what << " problem=" << prob << " (dry run, no training)\n";
        return 0;
    }

    if (what == "dimension_sweep") {
        std::vector<int> dims;
        for (double d : c.get_list("dims", {1, 2, 4, 8})) dims.push_back(static_cast<int>(d));
        const int M = static_cast<int>(c.get_int("M", 200));
        const int seeds = static_cast<int>(c.get_int("seeds", ctx.full_scale ? 25 : 5));
        std::vector<train::SweepRow> rows;
        for (int d : dims) {
            train::ExperimentConfig xd = xc;
            kl::KLSpec sub;
            if (problem == train::Problem::parametric_flux) {
                sub = flux_modes;
                sub.modes.resize(d);
                xd.flux_modes = &sub;
            }
            auto part = train::experiment_dimension_sweep(problem, {d}, M, seeds, xd);
            rows.push_back(part.front());
        }
        const std::string csv = train::sweep_csv(rows, "d", c.echo() + "experiment=dimension_sweep");
        write_file(fs::path(ctx.out_dir) / "dimension_sweep.csv", csv);
        std::cout << csv;
        return 0;
    }
    if (what == "m_sweep") {
        const int dim = static_cast<int>(c.get_int("dim", 8));
        std::vector<int> Ms;
        const std::vector<double> def =
            ctx.full_scale ? std::vector<double>{25, 50, 100, 200, 400, 800}
                           : std::vector<double>{25, 50, 100, 200};
        for (double v : c.get_list("M_list", def)) Ms.push_back(static_cast<int>(v));
        const int repeats = static_cast<int>(c.get_int("repeats", ctx.full_scale ? 25 : 5));
        kl::KLSpec sub;
        if (problem == train::Problem::parametric_flux) {
            sub = flux_modes;
            sub.modes.resize(dim);
            xc.flux_modes = &sub;
        }
        const auto rows = train::experiment_m_sweep(problem, dim, Ms, repeats, xc);
        const std::string csv = train::sweep_csv(rows, "M", c.echo() + "experiment=m_sweep");
        write_file(fs::path(ctx.out_dir) / "m_sweep.csv", csv);
        std::cout << csv;
        bool decreasing = rows.size() < 2 || rows.back().gap_mean < rows.front().gap_mean;
        std::cout << (decreasing ? "gap decreases with M\n" : "gap did NOT decrease with M\n");
        return decreasing ? 0 : 1;
    }
    if (what == "arch_search") {
        const int dim = static_cast<int>(c.get_int("dim", 4));
        const int M = static_cast<int>(c.get_int("M", 100));
        const train::Dataset data = train::make_dataset(
            problem, dim, M, xc.seed, xc.solver,
            problem == train::Problem::parametric_flux ? &flux_modes : nullptr);
        std::vector<int> depths, widths;
        for (double v : c.get_list("depths", {2, 4, 6, 8})) depths.push_back(static_cast<int>(v));
        for (double v : c.get_list("widths", {5, 10, 15, 20})) widths.push_back(static_cast<int>(v));
        const auto best = train::arch_search(data, depths, widths,
                                             static_cast<int>(c.get_int("runs", 5)), xc.adam,
                                             xc.seed);
        std::ostringstream os;
        os << "depth,width,median_validation\n"
           << best.depth << "," << best.width << "," << best.median_validation << "\n";
        write_file(fs::path(ctx.out_dir) / "arch_search.csv", os.str());
        std::cout << os.str();
        return 0;
    }
    throw ConfigError("unknown experiment: " + what);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ReLU network emulators for parametric scalar conservation laws"};
    app.require_subcommand(1);
    CliContext ctx;
    app.add_option("--config", ctx.config_path, "key=value config file")->check(CLI::ExistingFile);
    app.add_option("--out", ctx.out_dir, "output directory");
    app.add_option("--seed", ctx.seed, "base random seed");
    app.add_option("--set", ctx.overrides, "override KEY=VALUE (repeatable)");
    app.add_flag("--full-scale", ctx.full_scale, "paper-scale experiment settings");

    auto* sb = app.add_subcommand("build", "build the configured emulator network");
    auto* sv = app.add_subcommand("verify", "run the verification suite");
    auto* so = app.add_subcommand("bounds", "print the bound table");
    auto* sf = app.add_subcommand("fv-solve", "run a reference finite-volume solve");
    auto* sk = app.add_subcommand("kl-modes", "compute Karhunen-Loeve modes");
    auto* st = app.add_subcommand("train", "run one training job");
    auto* se = app.add_subcommand("experiment", "run an experiment sweep");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 2;
    }

    try {
        if (sb->parsed()) return cmd_build(ctx);
        if (sv->parsed()) return cmd_verify(ctx);
        if (so->parsed()) return cmd_bounds(ctx);
        if (sf->parsed()) return cmd_fv_solve(ctx);
        if (sk->parsed()) return cmd_kl_modes(ctx);
        if (st->parsed()) return cmd_train(ctx);
        if (se->parsed()) return cmd_experiment(ctx);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
