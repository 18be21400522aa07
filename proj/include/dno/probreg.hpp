#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace dno {

// Split of a flat n-vector into m subvectors of dimension k (n = m*k).
// Subvector i gathers the strided entries (y[i], y[i+m], ..., y[i+(k-1)m]),
// so coordinate slot c occupies the contiguous range [c*m, (c+1)*m).
struct FactorizationConfig {
    int n = 0;
    int k = 2;
    int m = 0;

    static FactorizationConfig create(int n, int k);
};

// Index permutations used by the typicality indicator. The first entry is
// the identity so the unpermuted layout is always examined; the remainder
// are seeded uniform shuffles, giving nested sets for growing q.
struct PermutationSet {
    std::vector<std::vector<int>> permutations;
    std::uint64_t seed = 0;

    static PermutationSet create(int n, int count, std::uint64_t seed);
    // Uniformly random permutations only (no identity); used for the
    // per-step regularizer batches.
    static PermutationSet random(int n, int count, std::uint64_t seed);
};

// || mean of subvectors ||_2
double m1_stat(const Eigen::VectorXd& z, const FactorizationConfig& fac);

// Spectral norm of (1/m) sum z_i z_i^T - I_k.
double m2_stat(const Eigen::VectorXd& z, const FactorizationConfig& fac);

// Lemma tail bounds, clamped into [0, 1] from above.
double p1_bound(double m1, const FactorizationConfig& fac);
double p2_bound(double m2, const FactorizationConfig& fac);

// min over the ensemble of both bounds evaluated on the permuted vector.
double indicator_P(const Eigen::VectorXd& z, const FactorizationConfig& fac,
                   const PermutationSet& perms);

// Average over the batch of log p1 + log p2 (clamped bounds contribute 0).
double reg_value(const Eigen::VectorXd& z, const FactorizationConfig& fac,
                 const PermutationSet& batch);

// Exact gradient of reg_value; zero wherever the bounds are clamped.
Eigen::VectorXd reg_grad(const Eigen::VectorXd& z, const FactorizationConfig& fac,
                         const PermutationSet& batch);

} // namespace dno
