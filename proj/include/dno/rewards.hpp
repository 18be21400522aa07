#pragma once

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <stdexcept>
#include <string>

namespace dno {

// Thrown when grad_reward is called on a gradient-hidden spec; callers are
// expected to fall back to a zeroth-order estimator.
struct GradientUnavailable : std::logic_error {
    using std::logic_error::logic_error;
};

using RewardParams = std::map<std::string, double>;

// A scalar objective on sample space with an optional analytic gradient.
struct RewardSpec {
    std::string name;
    int arity = 0;
    bool differentiable = false;
    RewardParams parameters;
    std::function<double(const Eigen::VectorXd&)> value;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
};

double eval_reward(const RewardSpec& spec, const Eigen::VectorXd& x);

Eigen::VectorXd grad_reward(const RewardSpec& spec, const Eigen::VectorXd& x);

// Built-ins: "example1", "quad_ood", "brightness", "darkness", "line_height".
// Setting params["hidden"] = 1 wraps the spec so grad_reward throws while
// eval values stay bit-identical.
RewardSpec make_reward(const std::string& name, const RewardParams& params = {});

RewardSpec hide_gradient(RewardSpec spec);

} // namespace dno
