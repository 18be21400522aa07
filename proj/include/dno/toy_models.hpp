#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace dno {

// Isotropic Gaussian mixture component: N(mean, variance * I).
struct MixtureComponent {
    double weight;
    Eigen::VectorXd mean;
    double variance;
};

// Analytic data distribution. Stands in for a trained score network: the
// noisy marginals, scores and score Jacobians are all available in closed
// form, so downstream gradients are exact.
struct MixtureModel {
    std::vector<MixtureComponent> components;
    int dim = 0;
};

// VP diffusion schedule subsampled for DDIM. alpha_bar has T+1 entries,
// alpha_bar[0] == 1 exactly and the sequence is strictly decreasing.
struct NoiseSchedule {
    int steps = 0; // T
    Eigen::VectorXd alpha_bar;
    int base_length = 0;
    double beta_min = 0.0;
    double beta_max = 0.0;
    std::vector<int> timestep_indices; // 1-based base-schedule step per DDIM step t=1..T
};

// Per-component parameters of the noisy marginal p_t.
struct MarginalComponent {
    double weight;
    Eigen::VectorXd mean;
    double variance;
};

NoiseSchedule build_schedule(int steps, int base_length, double beta_min, double beta_max);

std::vector<MarginalComponent> marginal_params(const MixtureModel& model,
                                               const NoiseSchedule& schedule, int t);

double log_density(const MixtureModel& model, const NoiseSchedule& schedule,
                   const Eigen::VectorXd& x, int t);

// grad_x log p_t(x)
Eigen::VectorXd score(const MixtureModel& model, const NoiseSchedule& schedule,
                      const Eigen::VectorXd& x, int t);

// eps(x, t) = -sqrt(1 - alpha_bar_t) * score(x, t); defined for t in [1, T].
Eigen::VectorXd epsilon_pred(const MixtureModel& model, const NoiseSchedule& schedule,
                             const Eigen::VectorXd& x, int t);

// Hessian-vector product of log p_t at x (the score Jacobian is symmetric,
// so VJP and JVP coincide).
Eigen::VectorXd score_vjp(const MixtureModel& model, const NoiseSchedule& schedule,
                          const Eigen::VectorXd& x, int t, const Eigen::VectorXd& cotangent);

struct RingParams {
    int count = 16;
    double variance = 0.01;
    double radius = 1.0;
};

struct SegmentParams {
    int count = 21;
    double variance = 0.0025;
};

struct ClusterParams {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
    double variance = 1.0;
};

MixtureModel make_ring(const RingParams& params = {});
MixtureModel make_segment(const SegmentParams& params = {});
MixtureModel make_cluster(const ClusterParams& params = {});
MixtureModel make_custom(std::vector<MixtureComponent> components);

// Presets addressable by name from configs: "ring", "segment", "cluster".
MixtureModel make_model(const std::string& kind);

std::vector<Eigen::VectorXd> sample_data(const MixtureModel& model, int count,
                                         std::uint64_t seed);

} // namespace dno
