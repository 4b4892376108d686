#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "epigmrf/seir_dynamics.hpp"
#include "epigmrf/time_grid.hpp"

namespace epigmrf {

enum class Transform { Log, Logit, Identity };

enum class PriorKind { Normal, LogNormal, LogitNormal, Gamma, Beta, Uniform };

/// Prior on the natural scale of a parameter. Parameter meaning of (a, b):
/// Normal/LogNormal/LogitNormal: (mean, sd) on the normal scale;
/// Gamma: (shape, rate); Beta: (alpha, beta); Uniform: (lower, upper).
struct Prior {
    PriorKind kind = PriorKind::Normal;
    double a = 0.0;
    double b = 1.0;

    double log_density(double x) const;
    double sample(Rng& rng) const;
    bool operator==(const Prior&) const = default;
};

struct ParamEntry {
    std::string name;
    Transform transform = Transform::Identity;
    double value = 0.0; // natural scale; the initial value for free entries
    Prior prior;
    bool fixed = false;
    bool operator==(const ParamEntry&) const = default;
};

double to_unconstrained(Transform t, double x);
double from_unconstrained(Transform t, double u);
/// log |dx/du| at u.
double log_jacobian(Transform t, double u);

/// Bijection between the free entries of StaticParams and an unconstrained vector.
///
/// Canonical entry order: eta, d_I, k_sens, k_spec, p[i], z[m][s], psi[m], ell0[m].
/// d_L is not part of the sampled vector and is carried separately.
class Parameterisation {
public:
    Parameterisation() = default;
    Parameterisation(int n_regions, int n_ages, std::vector<ParamEntry> entries, double d_latent);

    /// Default transforms and weakly-informative priors centred on `centre`.
    static Parameterisation with_defaults(const StaticParams& centre);
    static std::vector<std::string> canonical_names(int n_regions, int n_ages);
    static Transform canonical_transform(const std::string& name);

    int n_regions() const { return n_regions_; }
    int n_ages() const { return n_ages_; }
    int dim() const { return static_cast<int>(free_.size()); }
    double d_latent() const { return d_latent_; }

    const std::vector<ParamEntry>& entries() const { return entries_; }
    std::vector<ParamEntry>& entries() { return entries_; }
    const std::vector<int>& free_indices() const { return free_; }
    std::vector<std::string> free_names() const;
    int find(const std::string& name) const;

    /// All entries (fixed and free) on the natural scale, canonical order.
    Eigen::VectorXd natural_values(const Eigen::VectorXd& u) const;
    StaticParams to_params(const Eigen::VectorXd& u) const;
    StaticParams from_natural(const Eigen::VectorXd& values) const;
    Eigen::VectorXd natural_of(const StaticParams& theta) const;
    Eigen::VectorXd initial_unconstrained() const;
    Eigen::VectorXd to_unconstrained(const StaticParams& theta) const;

    double log_jacobian(const Eigen::VectorXd& u) const;
    /// Log prior density of the free entries in u-space (natural-scale prior plus Jacobian).
    double log_prior(const Eigen::VectorXd& u) const;
    /// Free entries drawn from their priors, as an unconstrained vector.
    Eigen::VectorXd sample_prior(Rng& rng) const;

    void refresh_free();

private:
    int n_regions_ = 0;
    int n_ages_ = 0;
    double d_latent_ = 3.0;
    std::vector<ParamEntry> entries_;
    std::vector<int> free_;
};

} // namespace epigmrf
