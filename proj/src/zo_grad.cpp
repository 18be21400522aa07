#include "dno/zo_grad.hpp"

#include "dno/rng.hpp"

#include <stdexcept>

namespace dno {

namespace {

void check_zo(const ZoConfig& cfg) {
    if (!(cfg.mu > 0.0)) throw std::invalid_argument("zo config: mu must be positive");
    if (cfg.q_samples < 1) throw std::invalid_argument("zo config: q must be at least 1");
}

// Per-index substream so results are independent of evaluation order.
Eigen::VectorXd perturbation(const ZoConfig& cfg, int index, int dim) {
    Rng rng(substream(cfg.seed, static_cast<std::uint64_t>(index)));
    return rng.gaussian_vector(dim);
}

} // namespace

GradientEstimate zo_sgd_grad(const NoiseToSampleMap& map, const RewardSpec& reward,
                             const ZoConfig& cfg, const Eigen::VectorXd& z) {
    check_zo(cfg);
    const int n = map.noise_dim();
    if (z.size() != n) throw std::invalid_argument("zo_sgd_grad: noise dimension mismatch");

    GradientEstimate est;
    const double base = eval_reward(reward, map.forward(z));
    est.sampler_passes = 1;
    est.reward_queries = 1;

    const double scale = cfg.normalize_by_mu ? cfg.mu : 1.0;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < cfg.q_samples; ++i) {
        const Eigen::VectorXd xi = perturbation(cfg, i, n);
        const double r = eval_reward(reward, map.forward(z + cfg.mu * xi));
        ++est.sampler_passes;
        ++est.reward_queries;
        g += (r - base) / scale * xi;
    }
    est.gradient = g / cfg.q_samples;
    return est;
}

GradientEstimate hybrid1_grad(const NoiseToSampleMap& map, const RewardSpec& reward,
                              const ZoConfig& cfg, const Eigen::VectorXd& z) {
    check_zo(cfg);
    if (z.size() != map.noise_dim())
        throw std::invalid_argument("hybrid1_grad: noise dimension mismatch");
    const int d = map.sample_dim();

    GradientEstimate est;
    const auto taped = map.forward_taped(z);
    est.sampler_passes = 1;
    const double base = eval_reward(reward, taped.sample);
    est.reward_queries = 1;

    const double scale = cfg.normalize_by_mu ? cfg.mu : 1.0;
    Eigen::VectorXd h = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < cfg.q_samples; ++i) {
        const Eigen::VectorXd xi = perturbation(cfg, i, d);
        const double r = eval_reward(reward, taped.sample + cfg.mu * xi);
        ++est.reward_queries;
        h += (r - base) / scale * xi;
    }
    h /= cfg.q_samples;
    est.gradient = taped.pullback(h);
    return est;
}

GradientEstimate hybrid2_grad(const NoiseToSampleMap& map, const RewardSpec& reward,
                              const ZoConfig& cfg, const Eigen::VectorXd& z) {
    check_zo(cfg);
    const int n = map.noise_dim();
    if (z.size() != n) throw std::invalid_argument("hybrid2_grad: noise dimension mismatch");
    const int d = map.sample_dim();

    GradientEstimate est;
    const auto taped = map.forward_taped(z);
    est.sampler_passes = 1;
    const double base = eval_reward(reward, taped.sample);
    est.reward_queries = 1;

    Eigen::VectorXd h = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < cfg.q_samples; ++i) {
        const Eigen::VectorXd xi = perturbation(cfg, i, n);
        const Eigen::VectorXd x = map.forward(z + cfg.mu * xi);
        ++est.sampler_passes;
        const double r = eval_reward(reward, x);
        ++est.reward_queries;
        h += (r - base) * (x - taped.sample);
    }
    h /= cfg.q_samples;
    est.gradient = taped.pullback(h);
    return est;
}

} // namespace dno
