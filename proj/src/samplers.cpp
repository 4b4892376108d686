#include "epigmrf/samplers.hpp"

#include <cmath>

#include "epigmrf/errors.hpp"

namespace epigmrf {

namespace {

double log_uniform(Rng& rng)
{
    return std::log(std::uniform_real_distribution<double>(0.0, 1.0)(rng));
}

} // namespace

Adaptation::Adaptation(int dim, long burn_in, double target, double initial_sd)
    : dim_(dim)
    , burn_in_(burn_in)
    , target_(target)
    , initial_sd_(initial_sd)
{
    state_.mean = Eigen::VectorXd::Zero(dim);
    state_.scatter = Eigen::MatrixXd::Zero(dim, dim);
    state_.log_scale = dim > 0 ? std::log(2.38 * 2.38 / dim) : 0.0;
}

void Adaptation::update(const std::vector<bool>& accepted, const Eigen::VectorXd& u, long iter)
{
    if (frozen(iter) || dim_ == 0) {
        return;
    }
    if (u.size() != dim_) {
        throw DomainError("adaptation: vector dimension mismatch");
    }
    ++state_.samples;
    const Eigen::VectorXd previous = state_.mean;
    state_.mean += (u - previous) / static_cast<double>(state_.samples);
    state_.scatter += (u - previous) * (u - state_.mean).transpose();

    if (!accepted.empty()) {
        double rate = 0.0;
        for (bool a : accepted) {
            rate += a ? 1.0 : 0.0;
        }
        rate /= static_cast<double>(accepted.size());
        state_.log_scale += adaptation_gain(iter) * (rate - target_);
    }
}

Eigen::MatrixXd Adaptation::covariance() const
{
    if (state_.samples < 2) {
        return Eigen::MatrixXd::Zero(dim_, dim_);
    }
    Eigen::MatrixXd cov = state_.scatter / static_cast<double>(state_.samples - 1);
    // The recursion accumulates tiny asymmetries; the covariance is symmetric by definition.
    return 0.5 * (cov + cov.transpose());
}

Eigen::MatrixXd Adaptation::proposal_covariance() const
{
    if (state_.samples < 2L * dim_) {
        return initial_sd_ * initial_sd_ * Eigen::MatrixXd::Identity(dim_, dim_);
    }
    return covariance() + 1e-10 * Eigen::MatrixXd::Identity(dim_, dim_);
}

std::vector<std::vector<int>> random_partition(int dim, int n_blocks, Rng& rng)
{
    if (n_blocks < 1) {
        throw DomainError("block update: need at least one block");
    }
    std::vector<std::vector<int>> blocks(n_blocks);
    std::uniform_int_distribution<int> pick(0, n_blocks - 1);
    for (int i = 0; i < dim; ++i) {
        blocks[pick(rng)].push_back(i);
    }
    return blocks;
}

BlockUpdateStats randomised_block_update(Eigen::VectorXd& u, double& log_target, const LogTarget& target,
                                         const Eigen::MatrixXd& cov, double log_scale, int n_blocks, Rng& rng)
{
    BlockUpdateStats stats;
    const int dim = static_cast<int>(u.size());
    const double scale = std::exp(log_scale);
    for (const auto& block : random_partition(dim, n_blocks, rng)) {
        if (block.empty()) {
            continue;
        }
        const int n = static_cast<int>(block.size());
        Eigen::MatrixXd sub(n, n);
        for (int r = 0; r < n; ++r) {
            for (int c = 0; c < n; ++c) {
                sub(r, c) = scale * cov(block[r], block[c]);
            }
        }
        Eigen::LLT<Eigen::MatrixXd> llt(sub);
        if (llt.info() != Eigen::Success) {
            throw NumericalError("block update: proposal covariance is not positive definite");
        }
        const Eigen::VectorXd step = llt.matrixL() * standard_normal_vector(n, rng);
        Eigen::VectorXd proposal = u;
        for (int r = 0; r < n; ++r) {
            proposal(block[r]) += step(r);
        }
        const double proposed = target(proposal);
        const double lu = log_uniform(rng);
        if (!std::isfinite(proposed)) {
            ++stats.non_finite;
            stats.accepted.push_back(false);
            continue;
        }
        const bool accept = lu < proposed - log_target;
        if (accept) {
            u = std::move(proposal);
            log_target = proposed;
        }
        stats.accepted.push_back(accept);
    }
    return stats;
}

AuxiliaryFieldSampler::AuxiliaryFieldSampler(const SparsePrecision& q, double c)
    : op_(q, c)
{
}

Eigen::VectorXd AuxiliaryFieldSampler::propose(const Eigen::VectorXd& current, Rng& rng) const
{
    const double c = op_.c();
    const Eigen::VectorXd aux = current + (c / std::sqrt(2.0)) * standard_normal_vector(static_cast<int>(current.size()), rng);
    const Eigen::VectorXd mean = (2.0 / (c * c)) * op_.solve(aux);
    return op_.sample(mean, rng);
}

bool AuxiliaryFieldSampler::step(Eigen::VectorXd& current, double& g_current, const LogTarget& log_likelihood,
                                 Rng& rng) const
{
    Eigen::VectorXd proposal = propose(current, rng);
    const double g_proposed = log_likelihood(proposal);
    if (accept_field_proposal(g_proposed, g_current, log_uniform(rng))) {
        current = std::move(proposal);
        g_current = g_proposed;
        return true;
    }
    return false;
}

RandomWalkSampler::RandomWalkSampler(int dim, long burn_in, double initial_sd, double target)
    : dim_(dim)
    , burn_in_(burn_in)
    , log_scale_(std::log(initial_sd))
    , target_(target)
{
}

bool RandomWalkSampler::step(Eigen::VectorXd& x, double& log_target, const LogTarget& target, Rng& rng, long iter)
{
    Eigen::VectorXd proposal = x + std::exp(log_scale_) * standard_normal_vector(dim_, rng);
    const double proposed = target(proposal);
    const bool accept = std::isfinite(proposed) && log_uniform(rng) < proposed - log_target;
    if (accept) {
        x = std::move(proposal);
        log_target = proposed;
    }
    if (iter <= burn_in_) {
        log_scale_ += adaptation_gain(iter) * ((accept ? 1.0 : 0.0) - target_);
    }
    return accept;
}

} // namespace epigmrf
