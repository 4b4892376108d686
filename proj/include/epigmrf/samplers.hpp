#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <vector>

#include "epigmrf/gmrf_field.hpp"
#include "epigmrf/time_grid.hpp"

namespace epigmrf {

using LogTarget = std::function<double(const Eigen::VectorXd&)>;

/// Adaptive Metropolis with global scaling: running mean/covariance of the
/// chain (Welford recursion) and a Robbins-Monro log-scale driven towards the
/// target acceptance rate with step size iter^-0.6. Frozen after burn-in.
class Adaptation {
public:
    struct State {
        long samples = 0;
        Eigen::VectorXd mean;
        Eigen::MatrixXd scatter; // sum of centred outer products
        double log_scale = 0.0;
    };

    Adaptation() = default;
    Adaptation(int dim, long burn_in, double target = 0.234, double initial_sd = 0.1);

    void update(const std::vector<bool>& accepted, const Eigen::VectorXd& u, long iter);

    /// Unscaled proposal covariance: initial_sd^2 * I until 2*dim samples, then
    /// the running covariance plus 1e-10 * I.
    Eigen::MatrixXd proposal_covariance() const;
    /// Running covariance with the (n-1) denominator.
    Eigen::MatrixXd covariance() const;
    const Eigen::VectorXd& mean() const { return state_.mean; }
    double log_scale() const { return state_.log_scale; }
    long samples() const { return state_.samples; }
    long burn_in() const { return burn_in_; }
    double target() const { return target_; }
    bool frozen(long iter) const { return iter > burn_in_; }

    const State& state() const { return state_; }
    void set_state(State s) { state_ = std::move(s); }

private:
    int dim_ = 0;
    long burn_in_ = 0;
    double target_ = 0.234;
    double initial_sd_ = 0.1;
    State state_;
};

/// Robbins-Monro gain used by all burn-in adaptations.
inline double adaptation_gain(long iter)
{
    return std::pow(static_cast<double>(iter < 1 ? 1 : iter), -0.6);
}

struct BlockUpdateStats {
    std::vector<bool> accepted; // one flag per non-empty block
    int non_finite = 0;
};

/// One sweep of randomised-block Metropolis: indices are assigned uniformly to
/// `n_blocks` blocks, then each non-empty block j is proposed from
/// N(u_j, exp(log_scale) * cov_jj) conditionally on the others.
BlockUpdateStats randomised_block_update(Eigen::VectorXd& u, double& log_target, const LogTarget& target,
                                         const Eigen::MatrixXd& cov, double log_scale, int n_blocks, Rng& rng);

/// Draws a uniform random partition of 0..dim-1 into n_blocks (possibly empty) blocks.
std::vector<std::vector<int>> random_partition(int dim, int n_blocks, Rng& rng);

/// The field acceptance rule: a function of likelihood values only.
inline bool accept_field_proposal(double g_proposed, double g_current, double log_uniform)
{
    return std::isfinite(g_proposed) && log_uniform < g_proposed - g_current;
}

/// Auxiliary-variable proposal for the latent field. With u ~ N(beta, c^2/2 I),
/// the proposal beta* ~ N((2/c^2) A^{-1} u, A^{-1}), A = Q + (2/c^2) I, leaves
/// the Gaussian prior invariant, so acceptance depends on the likelihood only.
class AuxiliaryFieldSampler {
public:
    AuxiliaryFieldSampler() = default;
    AuxiliaryFieldSampler(const SparsePrecision& q, double c);

    void reset(const SparsePrecision& q, double c) { op_.reset(q, c); }
    double c() const { return op_.c(); }
    const AuxiliaryOperator& op() const { return op_; }

    Eigen::VectorXd propose(const Eigen::VectorXd& current, Rng& rng) const;
    /// Proposes and accepts/rejects in place. Returns true when accepted.
    bool step(Eigen::VectorXd& current, double& g_current, const LogTarget& log_likelihood, Rng& rng) const;

private:
    AuxiliaryOperator op_;
};

/// Isotropic joint random-walk Metropolis with a burn-in-tuned global scale.
/// Used as the efficiency baseline.
class RandomWalkSampler {
public:
    RandomWalkSampler(int dim, long burn_in, double initial_sd = 0.1, double target = 0.234);

    bool step(Eigen::VectorXd& x, double& log_target, const LogTarget& target, Rng& rng, long iter);
    double scale() const { return std::exp(log_scale_); }

private:
    int dim_;
    long burn_in_;
    double log_scale_;
    double target_;
};

} // namespace epigmrf
