#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <memory>

#include "epigmrf/time_grid.hpp"

namespace epigmrf {

using SparseMatrix = Eigen::SparseMatrix<double>;

enum class StructureKind { Rw1Tridiagonal, Identity };

/// Hyperparameters and lattice shape of the log-transmission prior
/// Q = tau * (rho_m * P_M (x) I_K + rho_time * I_M (x) P_K).
struct PrecisionSpec {
    double tau = 1.0;
    double rho_m = 0.5;
    double rho_time = 1.5;
    StructureKind strata_kind = StructureKind::Rw1Tridiagonal;
    StructureKind time_kind = StructureKind::Rw1Tridiagonal;
    int n_strata = 1;
    int n_knots = 2;
    double delta_beta = 1.0;

    void validate() const;
    PrecisionSpec with_knots(int knots) const
    {
        PrecisionSpec s = *this;
        s.n_knots = knots;
        return s;
    }
};

/// Log-transmission values on the knot x stratum lattice.
///
/// Stored as a (knots x strata) column-major matrix, so the flat vector is
/// stratum-major: flat index of (knot k, stratum m) is m*n_knots + k.
class TransmissionField {
public:
    TransmissionField() = default;
    TransmissionField(int n_knots, int n_strata);
    explicit TransmissionField(Eigen::MatrixXd values);

    static TransmissionField unflatten(const Eigen::VectorXd& flat, int n_knots, int n_strata);
    Eigen::VectorXd flatten() const;

    int n_knots() const { return static_cast<int>(values_.rows()); }
    int n_strata() const { return static_cast<int>(values_.cols()); }
    int size() const { return static_cast<int>(values_.size()); }
    static int flat_index(int knot, int stratum, int n_knots) { return stratum * n_knots + knot; }

    double operator()(int knot, int stratum) const { return values_(knot, stratum); }
    double& operator()(int knot, int stratum) { return values_(knot, stratum); }
    const Eigen::MatrixXd& values() const { return values_; }
    Eigen::MatrixXd& values() { return values_; }

    bool operator==(const TransmissionField& other) const { return values_ == other.values_; }

private:
    Eigen::MatrixXd values_;
};

/// Symmetric sparse precision with cached rank.
struct SparsePrecision {
    SparseMatrix matrix;
    int rank = 0;
    double tau = 1.0;

    int order() const { return static_cast<int>(matrix.rows()); }
    double quadratic_form(const Eigen::VectorXd& x) const;
};

enum class ExponentConvention {
    Rank,       ///< tau^{rank(Q/tau)/2}, the proper intrinsic-GMRF normaliser
    FullOrder,  ///< tau^{-K*M/2}, the literal printed form
};

SparseMatrix build_structure_matrix(StructureKind kind, int n);

SparsePrecision build_precision(const PrecisionSpec& spec);

/// Numeric rank from the dense eigenvalues, threshold 1e-10 * lambda_max.
int numeric_rank(const SparseMatrix& q);
/// Rank implied by the structure kinds (used for orders above 256).
int analytic_rank(const PrecisionSpec& spec);

/// Log of the (improper) prior density up to an additive constant.
/// `rank` is the rank of Q/tau; `tau` is the factored-out scale.
double log_prior_density(const TransmissionField& field, const SparsePrecision& q, double tau, int rank,
                         ExponentConvention convention = ExponentConvention::Rank);

/// Sparse Cholesky of a symmetric positive-definite matrix with AMD ordering.
/// The symbolic analysis is kept across `refactor` calls on the same pattern.
class SparseCholesky {
public:
    SparseCholesky() = default;
    explicit SparseCholesky(const SparseMatrix& a);

    void refactor(const SparseMatrix& a);
    int order() const { return order_; }

    Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
    /// Draw from N(0, A^{-1}).
    Eigen::VectorXd sample(Rng& rng) const;
    /// Draw from N(0, A^{-1}) given the standard-normal innovations.
    Eigen::VectorXd sample_from_innovations(const Eigen::VectorXd& z) const;

private:
    using Solver = Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;
    std::shared_ptr<Solver> solver_;
    int order_ = 0;
    Eigen::Index pattern_nnz_ = -1;
};

Eigen::VectorXd standard_normal_vector(int n, Rng& rng);

/// Draw from N(0, (Q + ridge*I)^{-1}); ridge regularises the intrinsic null space.
TransmissionField sample_field(const PrecisionSpec& spec, double ridge, Rng& rng);

/// Factorised A = Q + (2/c^2) I used by the auxiliary-variable field proposal.
class AuxiliaryOperator {
public:
    AuxiliaryOperator() = default;
    AuxiliaryOperator(const SparsePrecision& q, double c);

    /// Rebuilds for new (Q, c), reusing the symbolic factorisation.
    void reset(const SparsePrecision& q, double c);

    double c() const { return c_; }
    int order() const { return factor_.order(); }
    const SparseMatrix& matrix() const { return a_; }

    Eigen::VectorXd solve(const Eigen::VectorXd& v) const { return factor_.solve(v); }
    /// Draw from N(mean, A^{-1}).
    Eigen::VectorXd sample(const Eigen::VectorXd& mean, Rng& rng) const;

private:
    SparseMatrix a_;
    SparseCholesky factor_;
    double c_ = 1.0;
};

/// Gaussian law of the future knots given the past ones.
class ConditionalGaussian {
public:
    ConditionalGaussian(Eigen::VectorXd mean, SparseMatrix precision, int n_future_knots, int n_strata);

    const Eigen::VectorXd& mean() const { return mean_; }
    const SparseMatrix& precision() const { return precision_; }
    int n_future_knots() const { return n_future_knots_; }
    int n_strata() const { return n_strata_; }

    /// Sample as a (future knots x strata) field.
    TransmissionField sample(Rng& rng) const;

private:
    Eigen::VectorXd mean_;
    SparseMatrix precision_;
    SparseCholesky factor_;
    int n_future_knots_;
    int n_strata_;
};

/// Conditions the prior on K+L knots on the observed first K knots of each stratum.
/// Mean of the future block is -Q_FF^{-1} Q_FP beta_P, precision Q_FF.
ConditionalGaussian conditional_forecast_distribution(const SparsePrecision& q_extended,
                                                      const TransmissionField& observed);

} // namespace epigmrf
