#pragma once

#include "dno/rewards.hpp"
#include "dno/sampler.hpp"

#include <Eigen/Dense>

#include <cstdint>

namespace dno {

struct ZoConfig {
    double mu = 0.01;        // perturbation scale
    int q_samples = 16;      // perturbation count
    bool normalize_by_mu = true; // zo_sgd / hybrid1 only; hybrid2 is never normalized
    std::uint64_t seed = 0;
};

struct GradientEstimate {
    Eigen::VectorXd gradient;
    long reward_queries = 0;
    long sampler_passes = 0;
};

// Method 1: two-point estimator over the whole composite map.
// q+1 sampler passes, q+1 reward queries.
GradientEstimate zo_sgd_grad(const NoiseToSampleMap& map, const RewardSpec& reward,
                             const ZoConfig& cfg, const Eigen::VectorXd& z);

// Method 2: estimate the reward gradient by perturbing the sample, then pull
// it back through the exact sampler VJP. 1 sampler pass, q+1 reward queries.
GradientEstimate hybrid1_grad(const NoiseToSampleMap& map, const RewardSpec& reward,
                              const ZoConfig& cfg, const Eigen::VectorXd& z);

// Method 3: perturb the sample through the latent noise so every reward query
// stays on the generated manifold. q+1 sampler passes, q+1 reward queries.
GradientEstimate hybrid2_grad(const NoiseToSampleMap& map, const RewardSpec& reward,
                              const ZoConfig& cfg, const Eigen::VectorXd& z);

} // namespace dno
