#pragma once

#include "dno/probreg.hpp"
#include "dno/rewards.hpp"
#include "dno/sampler.hpp"
#include "dno/zo_grad.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace dno {

enum class Stepper { Adam, GradientAscent };

enum class GradientSource { Exact, ZoSgd, Hybrid1, Hybrid2 };

struct DnoConfig {
    SamplerConfig sampler;
    RewardSpec reward;
    int steps = 100;
    Stepper stepper = Stepper::Adam;
    double learning_rate = 0.01;
    double gamma = 1.0;
    bool reg_enabled = false;
    int reg_k = 2;           // subvector dimension for the regularizer
    int reg_batch = 100;     // fresh permutations per optimizer step
    int indicator_q = 100;   // fixed seeded ensemble used for reporting P(z)
    std::uint64_t indicator_seed = 2024;
    GradientSource gradient_source = GradientSource::Exact;
    ZoConfig zo;
    std::uint64_t seed = 0;

    int noise_dim() const { return (sampler.schedule.steps + 1) * sampler.model.dim; }
};

struct AdamState {
    Eigen::VectorXd first_moment;
    Eigen::VectorXd second_moment;
    long step_count = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamState create(int dim, double beta1 = 0.9, double beta2 = 0.999,
                            double epsilon = 1e-8);
};

// Ascent update; the gradient is followed uphill.
Eigen::VectorXd adam_step(AdamState& state, const Eigen::VectorXd& z,
                          const Eigen::VectorXd& gradient, double learning_rate);

struct TrajectoryPoint {
    int step = 0;
    double reward = 0.0;
    double reg_value = 0.0;
    double p_z = 1.0;
    Eigen::VectorXd sample;
    double grad_norm = 0.0;      // ||grad_z r(M(z))||, regularizer excluded
    long reward_queries = 0;     // cumulative
    long sampler_passes = 0;     // cumulative
};

struct RunResult {
    std::vector<TrajectoryPoint> trajectory;
    NoiseBundle final_noise;
    Eigen::VectorXd final_sample;
    std::string termination; // "completed" or failure reason
};

RunResult dno_run(const DnoConfig& config);

// Empirical smoothness lower bound from gradient differences over probe
// pairs. For eta=0 the probes perturb only xT; the step noises are inert.
double estimate_lipschitz(const DnoConfig& config, int probes,
                          double probe_scale = 0.01, std::uint64_t seed = 7771);

struct MonotonicityReport {
    double lipschitz_bound = 0.0;  // final L-hat
    double step_size = 0.0;        // final ell
    int attempts = 0;              // halvings + 1
    int seeds = 0;
    int violating_seeds = 0;
    double worst_delta = 0.0;      // most negative per-step reward delta
    std::vector<double> mean_reward; // per step, averaged over seeds
    bool mean_curve_monotone = false;
};

// Runs plain gradient ascent with ell <= 1/L-hat per seed and verifies the
// per-step reward deltas stay above -tolerance; halves ell and retries while
// more than violation_fraction of the seeds fail (at most five times).
MonotonicityReport theorem1_harness(DnoConfig config, int seeds,
                                    double tolerance = 1e-9,
                                    double violation_fraction = 0.01,
                                    int lipschitz_probes = 1000, int jobs = 0);

enum class Stationarity { TypeI, TypeII, TypeIII, NotStationary };

const char* to_string(Stationarity s);

// Appendix-style fixed-point taxonomy at a given noise vector: zero reward
// gradient, zero sampler Jacobian, or orthogonality between them.
Stationarity classify_stationarity(const DnoConfig& config, const NoiseBundle& z,
                                   double tolerance = 1e-4);

} // namespace dno
