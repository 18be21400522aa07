#include "dno/toy_models.hpp"

#include "dno/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dno {

namespace {

void check_model(const MixtureModel& model) {
    if (model.components.empty()) throw std::invalid_argument("mixture needs at least one component");
    double wsum = 0.0;
    for (const auto& c : model.components) {
        if (c.weight <= 0.0) throw std::invalid_argument("component weight must be positive");
        if (c.variance <= 0.0) throw std::invalid_argument("component variance must be positive");
        if (c.mean.size() != model.dim) throw std::invalid_argument("component dimension mismatch");
        wsum += c.weight;
    }
    if (std::abs(wsum - 1.0) > 1e-12) throw std::invalid_argument("mixture weights must sum to 1");
}

// Responsibilities and per-component quantities shared by score / score_vjp.
struct Responsibilities {
    std::vector<double> gamma;
    std::vector<Eigen::VectorXd> u; // u_j = -(x - mean_j) / var_j
    std::vector<double> inv_var;
};

Responsibilities responsibilities(const MixtureModel& model, const NoiseSchedule& schedule,
                                  const Eigen::VectorXd& x, int t) {
    const auto params = marginal_params(model, schedule, t);
    const double d = static_cast<double>(model.dim);
    const std::size_t k = params.size();

    Responsibilities r;
    r.gamma.resize(k);
    r.u.resize(k);
    r.inv_var.resize(k);

    std::vector<double> logw(k);
    double max_logw = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
        const Eigen::VectorXd diff = x - params[j].mean;
        const double v = params[j].variance;
        r.inv_var[j] = 1.0 / v;
        r.u[j] = -diff / v;
        logw[j] = std::log(params[j].weight) - 0.5 * d * std::log(2.0 * std::numbers::pi * v)
                  - 0.5 * diff.squaredNorm() / v;
        max_logw = std::max(max_logw, logw[j]);
    }
    double denom = 0.0;
    for (std::size_t j = 0; j < k; ++j) denom += std::exp(logw[j] - max_logw);
    for (std::size_t j = 0; j < k; ++j) r.gamma[j] = std::exp(logw[j] - max_logw) / denom;
    return r;
}

} // namespace

NoiseSchedule build_schedule(int steps, int base_length, double beta_min, double beta_max) {
    if (steps < 1) throw std::invalid_argument("schedule needs at least one step");
    if (base_length < steps) throw std::invalid_argument("base schedule shorter than step count");
    if (!(beta_min > 0.0) || !(beta_min <= beta_max) || !(beta_max < 1.0))
        throw std::invalid_argument("beta range must satisfy 0 < beta_min <= beta_max < 1");

    // Linear beta over the base schedule, alpha_bar as running product of (1 - beta).
    Eigen::VectorXd base_alpha_bar(base_length);
    double prod = 1.0;
    for (int i = 0; i < base_length; ++i) {
        const double frac = base_length > 1 ? static_cast<double>(i) / (base_length - 1) : 0.0;
        const double beta = beta_min + (beta_max - beta_min) * frac;
        prod *= 1.0 - beta;
        base_alpha_bar[i] = prod;
    }

    NoiseSchedule s;
    s.steps = steps;
    s.base_length = base_length;
    s.beta_min = beta_min;
    s.beta_max = beta_max;
    s.alpha_bar.resize(steps + 1);
    s.alpha_bar[0] = 1.0;
    s.timestep_indices.resize(steps);
    for (int t = 1; t <= steps; ++t) {
        // Evenly spaced base steps with the last DDIM step pinned to the full product.
        const int base_step = static_cast<int>(std::llround(
            static_cast<double>(t) * base_length / steps));
        s.timestep_indices[t - 1] = base_step;
        s.alpha_bar[t] = base_alpha_bar[base_step - 1];
    }
    for (int t = 1; t <= steps; ++t) {
        if (!(s.alpha_bar[t] < s.alpha_bar[t - 1]))
            throw std::invalid_argument("alpha_bar not strictly decreasing");
    }
    return s;
}

std::vector<MarginalComponent> marginal_params(const MixtureModel& model,
                                               const NoiseSchedule& schedule, int t) {
    if (t < 0 || t > schedule.steps) throw std::out_of_range("marginal_params: t out of range");
    const double ab = schedule.alpha_bar[t];
    const double sqrt_ab = std::sqrt(ab);
    std::vector<MarginalComponent> out;
    out.reserve(model.components.size());
    for (const auto& c : model.components) {
        out.push_back({c.weight, sqrt_ab * c.mean, ab * c.variance + (1.0 - ab)});
    }
    return out;
}

double log_density(const MixtureModel& model, const NoiseSchedule& schedule,
                   const Eigen::VectorXd& x, int t) {
    const auto params = marginal_params(model, schedule, t);
    const double d = static_cast<double>(model.dim);
    double max_logw = -std::numeric_limits<double>::infinity();
    std::vector<double> logw(params.size());
    for (std::size_t j = 0; j < params.size(); ++j) {
        const double v = params[j].variance;
        logw[j] = std::log(params[j].weight) - 0.5 * d * std::log(2.0 * std::numbers::pi * v)
                  - 0.5 * (x - params[j].mean).squaredNorm() / v;
        max_logw = std::max(max_logw, logw[j]);
    }
    double sum = 0.0;
    for (double lw : logw) sum += std::exp(lw - max_logw);
    return max_logw + std::log(sum);
}

Eigen::VectorXd score(const MixtureModel& model, const NoiseSchedule& schedule,
                      const Eigen::VectorXd& x, int t) {
    const auto r = responsibilities(model, schedule, x, t);
    Eigen::VectorXd s = Eigen::VectorXd::Zero(model.dim);
    for (std::size_t j = 0; j < r.gamma.size(); ++j) s += r.gamma[j] * r.u[j];
    return s;
}

Eigen::VectorXd epsilon_pred(const MixtureModel& model, const NoiseSchedule& schedule,
                             const Eigen::VectorXd& x, int t) {
    if (t < 1 || t > schedule.steps) throw std::out_of_range("epsilon_pred: t out of range");
    return -std::sqrt(1.0 - schedule.alpha_bar[t]) * score(model, schedule, x, t);
}

Eigen::VectorXd score_vjp(const MixtureModel& model, const NoiseSchedule& schedule,
                          const Eigen::VectorXd& x, int t, const Eigen::VectorXd& cotangent) {
    const auto r = responsibilities(model, schedule, x, t);
    // H = sum_j gamma_j (u_j u_j^T - I / var_j) - s s^T, applied to the cotangent.
    Eigen::VectorXd s = Eigen::VectorXd::Zero(model.dim);
    double trace_coef = 0.0;
    Eigen::VectorXd hv = Eigen::VectorXd::Zero(model.dim);
    for (std::size_t j = 0; j < r.gamma.size(); ++j) {
        s += r.gamma[j] * r.u[j];
        trace_coef += r.gamma[j] * r.inv_var[j];
        hv += r.gamma[j] * r.u[j].dot(cotangent) * r.u[j];
    }
    hv -= trace_coef * cotangent;
    hv -= s.dot(cotangent) * s;
    return hv;
}

MixtureModel make_ring(const RingParams& params) {
    if (params.count < 1) throw std::invalid_argument("ring needs at least one component");
    MixtureModel m;
    m.dim = 2;
    m.components.reserve(params.count);
    const double w = 1.0 / params.count;
    for (int i = 0; i < params.count; ++i) {
        const double angle = 2.0 * std::numbers::pi * i / params.count;
        Eigen::VectorXd mean(2);
        mean << params.radius * std::cos(angle), params.radius * std::sin(angle);
        m.components.push_back({w, mean, params.variance});
    }
    check_model(m);
    return m;
}

MixtureModel make_segment(const SegmentParams& params) {
    if (params.count < 2) throw std::invalid_argument("segment needs at least two components");
    MixtureModel m;
    m.dim = 2;
    m.components.reserve(params.count);
    const double w = 1.0 / params.count;
    for (int i = 0; i < params.count; ++i) {
        Eigen::VectorXd mean(2);
        mean << -1.0 + 2.0 * i / (params.count - 1), 0.0;
        m.components.push_back({w, mean, params.variance});
    }
    check_model(m);
    return m;
}

MixtureModel make_cluster(const ClusterParams& params) {
    MixtureModel m;
    m.dim = static_cast<int>(params.mean.size());
    m.components.push_back({1.0, params.mean, params.variance});
    check_model(m);
    return m;
}

MixtureModel make_custom(std::vector<MixtureComponent> components) {
    MixtureModel m;
    m.components = std::move(components);
    if (m.components.empty()) throw std::invalid_argument("mixture needs at least one component");
    m.dim = static_cast<int>(m.components.front().mean.size());
    check_model(m);
    return m;
}

MixtureModel make_model(const std::string& kind) {
    if (kind == "ring") return make_ring();
    if (kind == "segment") return make_segment();
    if (kind == "cluster") return make_cluster();
    throw std::invalid_argument("unknown model kind: " + kind);
}

std::vector<Eigen::VectorXd> sample_data(const MixtureModel& model, int count,
                                         std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("sample_data: count must be positive");
    Rng rng(seed);
    std::vector<double> cdf(model.components.size());
    double acc = 0.0;
    for (std::size_t j = 0; j < model.components.size(); ++j) {
        acc += model.components[j].weight;
        cdf[j] = acc;
    }
    std::vector<Eigen::VectorXd> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        const double p = rng.uniform() * acc;
        std::size_t j = 0;
        while (j + 1 < cdf.size() && cdf[j] < p) ++j;
        const auto& c = model.components[j];
        out.push_back(c.mean + std::sqrt(c.variance) * rng.gaussian_vector(model.dim));
    }
    return out;
}

} // namespace dno
