#include "dno/experiments.hpp"
#include "dno/parallel.hpp"
#include "dno/probreg.hpp"
#include "dno/rng.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

using namespace dno;

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    long long seed = -1;
    int seeds = -1;
    int jobs = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool config_required = true) {
    auto* c = cmd->add_option("--config", opts.config_path, "JSON experiment config");
    if (config_required) c->required();
    cmd->add_option("--seed", opts.seed, "override base seed");
    cmd->add_option("--seeds", opts.seeds, "override seed count");
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--jobs", opts.jobs, "worker threads (1 = serial, 0 = all)");
}

ExperimentConfig load_with_overrides(const CommonOpts& opts) {
    ExperimentConfig cfg = load_experiment_config(opts.config_path);
    if (opts.seed >= 0) cfg.base_seed = static_cast<std::uint64_t>(opts.seed);
    if (opts.seeds > 0) cfg.seed_count = opts.seeds;
    if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
    cfg.jobs = opts.jobs;
    return cfg;
}

std::filesystem::path resolve_out(const std::string& out_dir, const std::string& leaf) {
    if (!out_dir.empty()) return out_dir;
    const char* root = std::getenv("DNO_LAB_OUT");
    return std::filesystem::path(root ? root : "out") / leaf;
}

// Indicator evaluation on synthetic vectors (fresh Gaussian, all-zero,
// block-repeated) or rows of a whitespace-separated file.
int run_pz(int n, int k, int q, int trials, std::uint64_t seed,
           const std::string& input, const std::string& out_dir) {
    const auto fac = FactorizationConfig::create(n, k);
    const auto perms = PermutationSet::create(n, q, seed);
    const auto dir = resolve_out(out_dir, "pz");
    std::filesystem::create_directories(dir);

    CsvSchema schema;
    schema.columns = {"kind", "trial", "m1", "m2", "p"};
    std::vector<std::vector<double>> rows;

    auto add = [&](double kind, int trial, const Eigen::VectorXd& z) {
        rows.push_back({kind, static_cast<double>(trial), m1_stat(z, fac),
                        m2_stat(z, fac), indicator_P(z, fac, perms)});
    };

    if (!input.empty()) {
        std::ifstream in(input);
        if (!in) {
            std::cerr << "cannot open " << input << "\n";
            return 1;
        }
        Eigen::VectorXd z(n);
        int trial = 0;
        while (in) {
            for (int i = 0; i < n && (in >> z[i]); ++i) {}
            if (!in) break;
            add(0, trial++, z);
        }
    } else {
        for (int trial = 0; trial < trials; ++trial) {
            Rng rng(substream(seed, 100, static_cast<std::uint64_t>(trial)));
            add(0, trial, rng.gaussian_vector(n)); // kind 0: fresh gaussian
            add(1, trial, Eigen::VectorXd::Zero(n)); // kind 1: all-zero
            Eigen::VectorXd z(n); // kind 2: four repeats of an n/4 block
            const Eigen::VectorXd block = rng.gaussian_vector(n / 4);
            for (int r = 0; r < 4; ++r) z.segment(r * (n / 4), n / 4) = block;
            add(2, trial, z);
        }
    }
    emit_csv(schema, rows, (dir / "pz.csv").string());
    std::cout << "wrote " << (dir / "pz.csv").string() << "\n";
    return 0;
}

int run_stationarity(const ExperimentConfig& cfg, double tolerance, int polish_steps,
                     double polish_lr) {
    const auto dir = resolve_out(cfg.out_dir, "stationarity");
    std::filesystem::create_directories(dir);
    const DnoConfig base = make_dno_config(cfg);

    CsvSchema schema;
    schema.columns = {"seed", "x0_1", "x0_2", "g1_norm", "g2_norm", "pull_norm", "type"};
    std::vector<std::vector<double>> rows(cfg.seed_count);

    parallel_for(cfg.seed_count, cfg.jobs, [&](int i) {
        DnoConfig dc = base;
        dc.seed = cfg.base_seed + static_cast<std::uint64_t>(i);
        RunResult run = dno_run(dc);
        // Plain-ascent polish drives the run into the stationary regime
        // before classification.
        NoiseBundle z = run.final_noise;
        for (int s = 0; s < polish_steps; ++s) {
            auto [sample, tape] = run_sampler(dc.sampler, z);
            const Eigen::VectorXd cot = grad_reward(dc.reward, sample);
            z.flat() += polish_lr * sampler_vjp(dc.sampler, tape, cot).flat();
        }
        auto [sample, tape] = run_sampler(dc.sampler, z);
        const Eigen::VectorXd g1 = grad_reward(dc.reward, sample);
        Eigen::MatrixXd jac(dc.sampler.model.dim, dc.noise_dim());
        for (int r = 0; r < dc.sampler.model.dim; ++r) {
            Eigen::VectorXd basis = Eigen::VectorXd::Zero(dc.sampler.model.dim);
            basis[r] = 1.0;
            jac.row(r) = sampler_vjp(dc.sampler, tape, basis).flat();
        }
        const Stationarity type = classify_stationarity(dc, z, tolerance);
        rows[i] = {static_cast<double>(cfg.base_seed + i), sample[0], sample[1],
                   g1.norm(), jac.norm(), (g1.transpose() * jac).norm(),
                   static_cast<double>(static_cast<int>(type))};
    });

    emit_csv(schema, rows, (dir / "stationarity.csv").string());
    std::cout << "wrote " << (dir / "stationarity.csv").string() << "\n";
    return 0;
}

int run_sweep(const ExperimentConfig& cfg) {
    const auto dir = resolve_out(cfg.out_dir, "sweep");
    std::filesystem::create_directories(dir);

    CsvSchema schema;
    schema.columns = {"param", "value", "seed", "final_reward", "final_p_z", "escaped"};
    std::vector<std::vector<double>> rows;

    // param codes: 0 = k, 1 = b, 2 = gamma
    auto sweep_one = [&](double code, double value, DnoConfig dc) {
        const auto runs = run_seed_batch(dc, cfg.seed_count, cfg.base_seed, cfg.jobs);
        for (std::size_t i = 0; i < runs.size(); ++i) {
            const auto& last = runs[i].trajectory.back();
            const double radius = last.sample.norm();
            rows.push_back({code, value, static_cast<double>(cfg.base_seed + i),
                            last.reward, last.p_z,
                            (radius < 0.8 || radius > 1.2) ? 1.0 : 0.0});
        }
    };

    const DnoConfig base = make_dno_config(cfg);
    for (int k : cfg.sweep_k) {
        DnoConfig dc = base;
        dc.reg_enabled = true;
        dc.reg_k = k;
        sweep_one(0, k, dc);
    }
    for (int b : cfg.sweep_b) {
        DnoConfig dc = base;
        dc.reg_enabled = true;
        dc.reg_batch = b;
        sweep_one(1, b, dc);
    }
    for (double gamma : cfg.sweep_gamma) {
        DnoConfig dc = base;
        dc.reg_enabled = gamma > 0.0;
        dc.gamma = gamma;
        sweep_one(2, gamma, dc);
    }

    emit_csv(schema, rows, (dir / "sweep.csv").string());
    std::cout << "wrote " << (dir / "sweep.csv").string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Toy-scale direct noise optimization lab"};
    app.require_subcommand(1);

    CommonOpts run_opts;
    auto* run_cmd = app.add_subcommand("run", "run a named experiment from a config");
    add_common(run_cmd, run_opts);

    CommonOpts pz_opts;
    int pz_n = 16384, pz_k = 2, pz_q = 100, pz_trials = 100;
    long long pz_seed = 2024;
    std::string pz_input;
    auto* pz_cmd = app.add_subcommand("pz", "evaluate the typicality indicator");
    pz_cmd->add_option("--n", pz_n, "vector dimension");
    pz_cmd->add_option("--k", pz_k, "subvector dimension");
    pz_cmd->add_option("--q", pz_q, "permutation count");
    pz_cmd->add_option("--trials", pz_trials, "synthetic trials");
    pz_cmd->add_option("--seed", pz_seed, "permutation/draw seed");
    pz_cmd->add_option("--input", pz_input, "file of whitespace-separated vectors");
    pz_cmd->add_option("--out", pz_opts.out_dir, "output directory");

    CommonOpts st_opts;
    double st_tol = 1e-4;
    int st_polish = 2000;
    double st_polish_lr = 1e-3;
    auto* st_cmd = app.add_subcommand("stationarity", "classify converged runs");
    add_common(st_cmd, st_opts);
    st_cmd->add_option("--tolerance", st_tol, "classification tolerance");
    st_cmd->add_option("--polish-steps", st_polish, "plain-ascent polish steps");
    st_cmd->add_option("--polish-lr", st_polish_lr, "polish step size");

    CommonOpts sw_opts;
    auto* sw_cmd = app.add_subcommand("sweep", "hyperparameter grids over k, b, gamma");
    add_common(sw_cmd, sw_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed())
            return run_experiment(load_with_overrides(run_opts), std::cout);
        if (pz_cmd->parsed())
            return run_pz(pz_n, pz_k, pz_q, pz_trials,
                          static_cast<std::uint64_t>(pz_seed), pz_input, pz_opts.out_dir);
        if (st_cmd->parsed())
            return run_stationarity(load_with_overrides(st_opts), st_tol, st_polish,
                                    st_polish_lr);
        if (sw_cmd->parsed())
            return run_sweep(load_with_overrides(sw_opts));
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
