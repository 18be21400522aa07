#include "dno/probreg.hpp"

#include "dno/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace dno {

namespace {

constexpr double kLog2 = 0.6931471805599453;

void check_dim(const Eigen::VectorXd& z, const FactorizationConfig& fac) {
    if (z.size() != fac.n) throw std::invalid_argument("factorization does not match vector size");
}

Eigen::VectorXd apply_permutation(const Eigen::VectorXd& z, const std::vector<int>& perm) {
    Eigen::VectorXd y(z.size());
    for (Eigen::Index j = 0; j < z.size(); ++j) y[j] = z[perm[j]];
    return y;
}

// Subvector mean over the strided split; slot c is the block [c*m, (c+1)*m).
Eigen::VectorXd subvector_mean(const Eigen::VectorXd& y, const FactorizationConfig& fac) {
    Eigen::VectorXd mean(fac.k);
    for (int c = 0; c < fac.k; ++c) mean[c] = y.segment(c * fac.m, fac.m).mean();
    return mean;
}

Eigen::MatrixXd covariance_deviation(const Eigen::VectorXd& y, const FactorizationConfig& fac) {
    Eigen::MatrixXd s(fac.k, fac.k);
    for (int c = 0; c < fac.k; ++c) {
        for (int d = c; d < fac.k; ++d) {
            const double dot = y.segment(c * fac.m, fac.m).dot(y.segment(d * fac.m, fac.m));
            s(c, d) = s(d, c) = dot / fac.m - (c == d ? 1.0 : 0.0);
        }
    }
    return s;
}

struct SpectralTop {
    double eigenvalue; // signed, largest magnitude
    Eigen::VectorXd eigenvector;
};

SpectralTop leading_eigenpair(const Eigen::MatrixXd& s) {
    if (s.rows() == 1) {
        Eigen::VectorXd v(1);
        v << 1.0;
        return {s(0, 0), v};
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s);
    const auto& vals = solver.eigenvalues();
    const int lo = 0;
    const int hi = static_cast<int>(vals.size()) - 1;
    int pick = std::abs(vals[hi]) >= std::abs(vals[lo]) ? hi : lo;
    if (std::abs(vals[hi]) == std::abs(vals[lo]) && hi != lo) {
        pick = lo; // deterministic tie-break; ties are measure-zero
        static std::atomic<bool> warned{false};
        if (!warned.exchange(true))
            std::fprintf(stderr, "note: spectral-norm eigenvalue tie encountered\n");
    }
    return {vals[pick], solver.eigenvectors().col(pick)};
}

} // namespace

FactorizationConfig FactorizationConfig::create(int n, int k) {
    if (k < 1 || n < 1) throw std::invalid_argument("factorization sizes must be positive");
    if (n % k != 0) throw std::invalid_argument("k must divide n exactly");
    return {n, k, n / k};
}

PermutationSet PermutationSet::create(int n, int count, std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("permutation set needs at least one entry");
    PermutationSet set = random(n, count - 1, seed);
    std::vector<int> identity(n);
    std::iota(identity.begin(), identity.end(), 0);
    set.permutations.insert(set.permutations.begin(), std::move(identity));
    return set;
}

PermutationSet PermutationSet::random(int n, int count, std::uint64_t seed) {
    if (count < 0) throw std::invalid_argument("permutation count must be non-negative");
    PermutationSet set;
    set.seed = seed;
    set.permutations.reserve(count);
    std::vector<int> base(n);
    std::iota(base.begin(), base.end(), 0);
    for (int i = 0; i < count; ++i) {
        Rng rng(substream(seed, static_cast<std::uint64_t>(i) + 1));
        std::vector<int> perm = base;
        // Fisher-Yates so the draw sequence is engine-defined only, not
        // std::shuffle-defined.
        for (int j = n - 1; j > 0; --j) std::swap(perm[j], perm[rng.uniform_index(j + 1)]);
        set.permutations.push_back(std::move(perm));
    }
    return set;
}

double m1_stat(const Eigen::VectorXd& z, const FactorizationConfig& fac) {
    check_dim(z, fac);
    return subvector_mean(z, fac).norm();
}

double m2_stat(const Eigen::VectorXd& z, const FactorizationConfig& fac) {
    check_dim(z, fac);
    const Eigen::MatrixXd s = covariance_deviation(z, fac);
    return std::abs(leading_eigenpair(s).eigenvalue);
}

double p1_bound(double m1, const FactorizationConfig& fac) {
    if (m1 < 0.0) throw std::invalid_argument("p1_bound: statistic must be non-negative");
    return std::min(2.0 * std::exp(-fac.m * m1 * m1 / (2.0 * fac.k)), 1.0);
}

double p2_bound(double m2, const FactorizationConfig& fac) {
    if (m2 < 0.0) throw std::invalid_argument("p2_bound: statistic must be non-negative");
    const double inner = std::max(std::sqrt(1.0 + m2) - 1.0
                                  - std::sqrt(static_cast<double>(fac.k) / fac.m), 0.0);
    return std::min(2.0 * std::exp(-fac.m * inner * inner / 2.0), 1.0);
}

double indicator_P(const Eigen::VectorXd& z, const FactorizationConfig& fac,
                   const PermutationSet& perms) {
    check_dim(z, fac);
    double best = 1.0;
    for (const auto& perm : perms.permutations) {
        const Eigen::VectorXd y = apply_permutation(z, perm);
        best = std::min(best, p1_bound(subvector_mean(y, fac).norm(), fac));
        best = std::min(best, p2_bound(std::abs(leading_eigenpair(
                                           covariance_deviation(y, fac)).eigenvalue), fac));
    }
    return best;
}

double reg_value(const Eigen::VectorXd& z, const FactorizationConfig& fac,
                 const PermutationSet& batch) {
    check_dim(z, fac);
    double total = 0.0;
    for (const auto& perm : batch.permutations) {
        const Eigen::VectorXd y = apply_permutation(z, perm);
        total += std::log(p1_bound(subvector_mean(y, fac).norm(), fac));
        total += std::log(p2_bound(std::abs(leading_eigenpair(
                                       covariance_deviation(y, fac)).eigenvalue), fac));
    }
    return total / static_cast<double>(batch.permutations.size());
}

Eigen::VectorXd reg_grad(const Eigen::VectorXd& z, const FactorizationConfig& fac,
                         const PermutationSet& batch) {
    check_dim(z, fac);
    const int m = fac.m;
    const int k = fac.k;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(fac.n);
    Eigen::VectorXd grad_y(fac.n);

    for (const auto& perm : batch.permutations) {
        const Eigen::VectorXd y = apply_permutation(z, perm);
        grad_y.setZero();

        // log p1 branch: unclamped iff log2 - m*M1^2/(2k) < 0.
        const Eigen::VectorXd mean = subvector_mean(y, fac);
        const double m1sq = mean.squaredNorm();
        if (kLog2 - m * m1sq / (2.0 * k) < 0.0) {
            for (int c = 0; c < k; ++c)
                grad_y.segment(c * m, m).array() -= mean[c] / k;
        }

        // log p2 branch: chain through the spectral norm's leading eigenpair.
        const Eigen::MatrixXd s = covariance_deviation(y, fac);
        const auto top = leading_eigenpair(s);
        const double m2 = std::abs(top.eigenvalue);
        const double inner = std::sqrt(1.0 + m2) - 1.0
                             - std::sqrt(static_cast<double>(k) / m);
        if (inner > 0.0 && kLog2 - m * inner * inner / 2.0 < 0.0) {
            const double sign = top.eigenvalue >= 0.0 ? 1.0 : -1.0;
            const double coef = -m * inner / (2.0 * std::sqrt(1.0 + m2))
                                * (2.0 * sign / m);
            // w_i = v . subvector_i
            Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
            for (int c = 0; c < k; ++c) w += top.eigenvector[c] * y.segment(c * m, m);
            for (int c = 0; c < k; ++c)
                grad_y.segment(c * m, m) += coef * top.eigenvector[c] * w;
        }

        for (int j = 0; j < fac.n; ++j) grad[perm[j]] += grad_y[j];
    }
    return grad / static_cast<double>(batch.permutations.size());
}

} // namespace dno
