#include "epigmrf/gmrf_field.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>
#include <vector>

#include "epigmrf/errors.hpp"

namespace epigmrf {

namespace {

using Triplet = Eigen::Triplet<double>;

void append_structure(std::vector<Triplet>& out, StructureKind kind, int n)
{
    if (kind == StructureKind::Identity) {
        for (int i = 0; i < n; ++i) {
            out.emplace_back(i, i, 1.0);
        }
        return;
    }
    // D^T D for the (n-1) x n first-difference operator D.
    for (int i = 0; i < n; ++i) {
        const double diag = (i == 0 || i == n - 1) ? 1.0 : 2.0;
        out.emplace_back(i, i, diag);
        if (i + 1 < n) {
            out.emplace_back(i, i + 1, -1.0);
            out.emplace_back(i + 1, i, -1.0);
        }
    }
}

int zero_eigenvalues(StructureKind kind, double rho, int n)
{
    if (rho == 0.0) {
        return n;
    }
    return kind == StructureKind::Rw1Tridiagonal ? 1 : 0;
}

} // namespace

void PrecisionSpec::validate() const
{
    if (!(tau > 0.0)) {
        throw DomainError("precision: tau must be positive");
    }
    if (!(rho_m >= 0.0) || !(rho_time >= 0.0)) {
        throw DomainError("precision: rho_m and rho_time must be non-negative");
    }
    if (n_strata < 1 || n_knots < 1) {
        throw DomainError("precision: lattice needs at least one stratum and one knot");
    }
    if (strata_kind == StructureKind::Rw1Tridiagonal && n_strata < 2) {
        throw DomainError("precision: random-walk strata structure needs at least 2 strata");
    }
    if (time_kind == StructureKind::Rw1Tridiagonal && n_knots < 2) {
        throw DomainError("precision: random-walk time structure needs at least 2 knots");
    }
    if (!(delta_beta > 0.0)) {
        throw DomainError("precision: delta_beta must be positive");
    }
}

TransmissionField::TransmissionField(int n_knots, int n_strata)
    : values_(Eigen::MatrixXd::Zero(n_knots, n_strata))
{
}

TransmissionField::TransmissionField(Eigen::MatrixXd values)
    : values_(std::move(values))
{
}

TransmissionField TransmissionField::unflatten(const Eigen::VectorXd& flat, int n_knots, int n_strata)
{
    if (flat.size() != static_cast<Eigen::Index>(n_knots) * n_strata) {
        throw DomainError("field: flat vector has length " + std::to_string(flat.size()) + ", expected " +
                          std::to_string(n_knots * n_strata));
    }
    return TransmissionField(Eigen::Map<const Eigen::MatrixXd>(flat.data(), n_knots, n_strata));
}

Eigen::VectorXd TransmissionField::flatten() const
{
    return Eigen::Map<const Eigen::VectorXd>(values_.data(), values_.size());
}

double SparsePrecision::quadratic_form(const Eigen::VectorXd& x) const
{
    if (x.size() != matrix.rows()) {
        throw DomainError("precision: vector length does not match matrix order");
    }
    return x.dot(matrix * x);
}

SparseMatrix build_structure_matrix(StructureKind kind, int n)
{
    if (n < 1) {
        throw DomainError("structure matrix: order must be at least 1");
    }
    if (kind == StructureKind::Rw1Tridiagonal && n < 2) {
        throw DomainError("structure matrix: random-walk structure of order " + std::to_string(n) +
                          " is degenerate");
    }
    std::vector<Triplet> triplets;
    append_structure(triplets, kind, n);
    SparseMatrix m(n, n);
    m.setFromTriplets(triplets.begin(), triplets.end());
    return m;
}

SparsePrecision build_precision(const PrecisionSpec& spec)
{
    spec.validate();
    const int n_m = spec.n_strata;
    const int n_k = spec.n_knots;

    std::vector<Triplet> strata;
    append_structure(strata, spec.strata_kind, n_m);
    std::vector<Triplet> time;
    append_structure(time, spec.time_kind, n_k);

    const double w_m = spec.tau * spec.rho_m;
    const double w_t = spec.tau * spec.rho_time;
    std::vector<Triplet> triplets;
    triplets.reserve(strata.size() * n_k + time.size() * n_m + n_m * n_k);
    // P_M (x) I_K couples strata at the same knot.
    for (const auto& t : strata) {
        for (int k = 0; k < n_k; ++k) {
            triplets.emplace_back(t.row() * n_k + k, t.col() * n_k + k, w_m * t.value());
        }
    }
    // I_M (x) P_K couples knots within a stratum.
    for (int m = 0; m < n_m; ++m) {
        for (const auto& t : time) {
            triplets.emplace_back(m * n_k + t.row(), m * n_k + t.col(), w_t * t.value());
        }
    }
    // Keep the diagonal in the pattern even if a term vanishes.
    for (int i = 0; i < n_m * n_k; ++i) {
        triplets.emplace_back(i, i, 0.0);
    }

    SparsePrecision q;
    q.matrix.resize(n_m * n_k, n_m * n_k);
    q.matrix.setFromTriplets(triplets.begin(), triplets.end());
    q.tau = spec.tau;
    q.rank = q.order() <= 256 ? numeric_rank(q.matrix) : analytic_rank(spec);
    return q;
}

int numeric_rank(const SparseMatrix& q)
{
    const Eigen::MatrixXd dense(q);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dense, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) {
        throw NumericalError("rank: eigen-decomposition failed");
    }
    const Eigen::VectorXd& values = eig.eigenvalues();
    const double lambda_max = values.cwiseAbs().maxCoeff();
    if (!(lambda_max > 0.0)) {
        return 0;
    }
    const double threshold = 1e-10 * lambda_max;
    int rank = 0;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (values(i) > threshold) {
            ++rank;
        }
    }
    return rank;
}

int analytic_rank(const PrecisionSpec& spec)
{
    // Eigenvalues of the Kronecker sum are rho_m*a_i + rho_time*b_j, zero only
    // when both summands vanish.
    const int deficiency = zero_eigenvalues(spec.strata_kind, spec.rho_m, spec.n_strata) *
                           zero_eigenvalues(spec.time_kind, spec.rho_time, spec.n_knots);
    return spec.n_strata * spec.n_knots - deficiency;
}

double log_prior_density(const TransmissionField& field, const SparsePrecision& q, double tau, int rank,
                         ExponentConvention convention)
{
    if (field.size() != q.order()) {
        throw DomainError("log prior: field has " + std::to_string(field.size()) + " values but Q has order " +
                          std::to_string(q.order()));
    }
    if (!(tau > 0.0)) {
        throw DomainError("log prior: tau must be positive");
    }
    const double quad = q.quadratic_form(field.flatten());
    const double exponent =
        convention == ExponentConvention::Rank ? 0.5 * rank : -0.5 * static_cast<double>(field.size());
    return exponent * std::log(tau) - 0.5 * quad;
}

SparseCholesky::SparseCholesky(const SparseMatrix& a)
{
    refactor(a);
}

void SparseCholesky::refactor(const SparseMatrix& a)
{
    if (a.rows() != a.cols()) {
        throw DomainError("cholesky: matrix is not square");
    }
    // Copies share the solver, so a shared one is never refactored in place.
    const bool same_pattern =
        solver_ && solver_.use_count() == 1 && order_ == a.rows() && pattern_nnz_ == a.nonZeros();
    if (!same_pattern) {
        solver_ = std::make_shared<Solver>();
        solver_->analyzePattern(a);
    }
    solver_->factorize(a);
    if (solver_->info() != Eigen::Success) {
        // The pattern may have changed; retry with a fresh analysis once.
        solver_ = std::make_shared<Solver>();
        solver_->compute(a);
        if (solver_->info() != Eigen::Success) {
            throw NumericalError("cholesky: matrix is not positive definite");
        }
    }
    order_ = static_cast<int>(a.rows());
    pattern_nnz_ = a.nonZeros();
}

Eigen::VectorXd SparseCholesky::solve(const Eigen::VectorXd& b) const
{
    if (!solver_ || b.size() != order_) {
        throw DomainError("cholesky: solve with mismatched dimension");
    }
    return solver_->solve(b);
}

Eigen::VectorXd SparseCholesky::sample_from_innovations(const Eigen::VectorXd& z) const
{
    if (!solver_ || z.size() != order_) {
        throw DomainError("cholesky: sample with mismatched dimension");
    }
    // A = P^T L L^T P, so x = P^T L^{-T} z has covariance A^{-1}.
    Eigen::VectorXd y = solver_->matrixU().solve(z);
    return solver_->permutationPinv() * y;
}

Eigen::VectorXd SparseCholesky::sample(Rng& rng) const
{
    return sample_from_innovations(standard_normal_vector(order_, rng));
}

Eigen::VectorXd standard_normal_vector(int n, Rng& rng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) {
        z(i) = normal(rng);
    }
    return z;
}

TransmissionField sample_field(const PrecisionSpec& spec, double ridge, Rng& rng)
{
    if (!(ridge > 0.0)) {
        throw DomainError("sample_field: ridge must be positive");
    }
    const SparsePrecision q = build_precision(spec);
    SparseMatrix a = q.matrix;
    for (int i = 0; i < a.rows(); ++i) {
        a.coeffRef(i, i) += ridge;
    }
    const SparseCholesky factor(a);
    return TransmissionField::unflatten(factor.sample(rng), spec.n_knots, spec.n_strata);
}

AuxiliaryOperator::AuxiliaryOperator(const SparsePrecision& q, double c)
{
    reset(q, c);
}

void AuxiliaryOperator::reset(const SparsePrecision& q, double c)
{
    if (!(c > 0.0) || !std::isfinite(c)) {
        throw DomainError("auxiliary operator: c must be positive and finite");
    }
    const double shift = 2.0 / (c * c);
    SparseMatrix a = q.matrix;
    for (int i = 0; i < a.rows(); ++i) {
        a.coeffRef(i, i) += shift;
    }
    a.makeCompressed();
    factor_.refactor(a);
    a_ = std::move(a);
    c_ = c;
}

Eigen::VectorXd AuxiliaryOperator::sample(const Eigen::VectorXd& mean, Rng& rng) const
{
    return mean + factor_.sample(rng);
}

ConditionalGaussian::ConditionalGaussian(Eigen::VectorXd mean, SparseMatrix precision, int n_future_knots,
                                         int n_strata)
    : mean_(std::move(mean))
    , precision_(std::move(precision))
    , factor_(precision_)
    , n_future_knots_(n_future_knots)
    , n_strata_(n_strata)
{
}

TransmissionField ConditionalGaussian::sample(Rng& rng) const
{
    const Eigen::VectorXd draw = mean_ + factor_.sample(rng);
    return TransmissionField::unflatten(draw, n_future_knots_, n_strata_);
}

ConditionalGaussian conditional_forecast_distribution(const SparsePrecision& q_extended,
                                                      const TransmissionField& observed)
{
    const int n_strata = observed.n_strata();
    const int n_past = observed.n_knots();
    if (n_strata < 1 || q_extended.order() % n_strata != 0) {
        throw DomainError("forecast distribution: Q order is not a multiple of the strata count");
    }
    const int n_total = q_extended.order() / n_strata;
    const int n_future = n_total - n_past;
    if (n_future <= 0) {
        throw DomainError("forecast distribution: empty future block");
    }

    // Maps an extended flat index to its position in the future block, or -1 for the past.
    auto future_index = [&](int flat) {
        const int m = flat / n_total;
        const int k = flat % n_total;
        return k >= n_past ? m * n_future + (k - n_past) : -1;
    };
    auto past_value = [&](int flat) {
        return observed(flat % n_total, flat / n_total);
    };

    std::vector<Eigen::Triplet<double>> ff;
    Eigen::VectorXd cross = Eigen::VectorXd::Zero(n_future * n_strata);
    for (int col = 0; col < q_extended.matrix.outerSize(); ++col) {
        const int fc = future_index(col);
        for (SparseMatrix::InnerIterator it(q_extended.matrix, col); it; ++it) {
            const int fr = future_index(static_cast<int>(it.row()));
            if (fr < 0) {
                continue;
            }
            if (fc >= 0) {
                ff.emplace_back(fr, fc, it.value());
            } else {
                cross(fr) += it.value() * past_value(col);
            }
        }
    }
    SparseMatrix q_ff(n_future * n_strata, n_future * n_strata);
    q_ff.setFromTriplets(ff.begin(), ff.end());
    const SparseCholesky factor(q_ff);
    Eigen::VectorXd mean = -factor.solve(cross);
    return ConditionalGaussian(std::move(mean), std::move(q_ff), n_future, n_strata);
}

} // namespace epigmrf
