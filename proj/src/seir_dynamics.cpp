#include "epigmrf/seir_dynamics.hpp"

#include <cmath>
#include <string>

#include "epigmrf/errors.hpp"

namespace epigmrf {

namespace {

// 1 - exp(-x) without cancellation for small x.
inline double exposure_probability(double force, double delta)
{
    return -std::expm1(-delta * force);
}

inline void advance(std::span<const double> s, std::span<const double> e, std::span<const double> i,
                    std::span<const double> r, std::span<const double> lambda, const ExitFractions& exits,
                    std::span<double> s_out, std::span<double> e_out, std::span<double> i_out,
                    std::span<double> r_out, std::span<double> infections)
{
    for (std::size_t a = 0; a < s.size(); ++a) {
        const double infected = s[a] * lambda[a];
        const double become_infectious = e[a] * exits.latent;
        const double removed = i[a] * exits.infectious;
        s_out[a] = s[a] - infected;
        e_out[a] = e[a] + infected - become_infectious;
        i_out[a] = i[a] + become_infectious - removed;
        r_out[a] = r[a] + removed;
        infections[a] = infected;
    }
}

std::span<const double> view(const Eigen::VectorXd& v)
{
    return {v.data(), static_cast<std::size_t>(v.size())};
}

std::span<double> view(Eigen::VectorXd& v)
{
    return {v.data(), static_cast<std::size_t>(v.size())};
}

} // namespace

void PopulationStructure::validate() const
{
    if (counts.rows() < 1 || counts.cols() < 1) {
        throw DomainError("population: needs at least one region and one age group");
    }
    for (Eigen::Index m = 0; m < counts.rows(); ++m) {
        for (Eigen::Index i = 0; i < counts.cols(); ++i) {
            if (!(counts(m, i) > 0.0) || !std::isfinite(counts(m, i))) {
                throw DomainError("population: N[" + std::to_string(m) + "][" + std::to_string(i) +
                                  "] must be positive");
            }
        }
    }
}

const ContactPeriod& ContactSchedule::period_for_step(int region, int step, int steps_per_day) const
{
    const auto& list = periods.at(region);
    const int start_step = step - 1; // t_{k-1} in steps
    std::size_t chosen = 0;
    for (std::size_t p = 0; p < list.size(); ++p) {
        if (list[p].start_day * steps_per_day <= start_step) {
            chosen = p;
        }
    }
    return list[chosen];
}

void ContactSchedule::validate(int n_regions, int n_ages) const
{
    if (static_cast<int>(periods.size()) != n_regions) {
        throw DomainError("contacts: schedule has " + std::to_string(periods.size()) + " regions, expected " +
                          std::to_string(n_regions));
    }
    for (int m = 0; m < n_regions; ++m) {
        const auto& list = periods[m];
        if (list.empty() || list.front().start_day != 0) {
            throw DomainError("contacts: region " + std::to_string(m) + " must have a period starting on day 0");
        }
        for (std::size_t p = 0; p < list.size(); ++p) {
            const auto& period = list[p];
            if (p > 0 && period.start_day <= list[p - 1].start_day) {
                throw DomainError("contacts: periods of region " + std::to_string(m) +
                                  " overlap or are out of order");
            }
            if (period.multiplier_slot < 0 || period.multiplier_slot >= kMultiplierSlots) {
                throw DomainError("contacts: multiplier slot must be in 0..2");
            }
            if (period.matrix.rows() != n_ages || period.matrix.cols() != n_ages) {
                throw DomainError("contacts: matrix of region " + std::to_string(m) + " is not " +
                                  std::to_string(n_ages) + "x" + std::to_string(n_ages));
            }
            if ((period.matrix.array() < 0.0).any()) {
                throw DomainError("contacts: negative contact entry in region " + std::to_string(m));
            }
        }
    }
}

void StaticParams::validate(int n_regions, int n_ages) const
{
    auto probability = [](double x) { return x > 0.0 && x < 1.0; };
    if (!(eta > 0.0) || !(d_L > 0.0) || !(d_I > 0.0)) {
        throw DomainError("params: eta, d_L and d_I must be positive");
    }
    if (!probability(k_sens) || !probability(k_spec)) {
        throw DomainError("params: sensitivity and specificity must lie in (0,1)");
    }
    if (p.size() != n_ages || z.rows() != n_regions || z.cols() != ContactSchedule::kMultiplierSlots ||
        psi.size() != n_regions || ell0.size() != n_regions) {
        throw DomainError("params: vector dimensions do not match regions/ages");
    }
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (!probability(p(i))) {
            throw DomainError("params: IFR p[" + std::to_string(i) + "] must lie in (0,1)");
        }
    }
    if (!(z.array() > 0.0).all()) {
        throw DomainError("params: contact multipliers must be positive");
    }
}

EpidemicTrajectory::EpidemicTrajectory(int n_regions, int n_steps, int n_ages)
    : n_regions_(n_regions)
    , n_steps_(n_steps)
    , n_ages_(n_ages)
{
    const std::size_t n = static_cast<std::size_t>(n_regions) * (n_steps + 1) * n_ages;
    s_.assign(n, 0.0);
    e_.assign(n, 0.0);
    i_.assign(n, 0.0);
    r_.assign(n, 0.0);
    delta_.assign(n, 0.0);
}

RegionState EpidemicTrajectory::state(int region, int step) const
{
    RegionState st;
    st.S.resize(n_ages_);
    st.E.resize(n_ages_);
    st.I.resize(n_ages_);
    st.R.resize(n_ages_);
    for (int a = 0; a < n_ages_; ++a) {
        st.S(a) = S(region, step, a);
        st.E(a) = E(region, step, a);
        st.I(a) = I(region, step, a);
        st.R(a) = R(region, step, a);
    }
    return st;
}

Eigen::VectorXd infection_rate(double field_value, const Eigen::MatrixXd& contacts, double multiplier,
                               const Eigen::VectorXd& infectious_fraction, double delta)
{
    if ((contacts.array() < 0.0).any()) {
        throw DomainError("infection_rate: negative contact entry");
    }
    if (contacts.cols() != infectious_fraction.size()) {
        throw DomainError("infection_rate: contact matrix and prevalence vector disagree");
    }
    const double scale = std::exp(field_value) * multiplier;
    Eigen::VectorXd lambda(contacts.rows());
    for (Eigen::Index i = 0; i < contacts.rows(); ++i) {
        double force = 0.0;
        for (Eigen::Index j = 0; j < contacts.cols(); ++j) {
            force += contacts(i, j) * infectious_fraction(j);
        }
        lambda(i) = exposure_probability(scale * force, delta);
    }
    return lambda;
}

ExitFractions ExitFractions::make(const StaticParams& theta, double delta)
{
    return {-std::expm1(-delta / theta.d_L), -std::expm1(-delta / theta.d_I)};
}

StepResult step(const RegionState& state, const Eigen::VectorXd& lambda, const StaticParams& theta, double delta)
{
    const Eigen::Index n = state.S.size();
    StepResult out;
    out.state.S.resize(n);
    out.state.E.resize(n);
    out.state.I.resize(n);
    out.state.R.resize(n);
    out.new_infections.resize(n);
    advance(view(state.S), view(state.E), view(state.I), view(state.R), view(lambda),
            ExitFractions::make(theta, delta), view(out.state.S), view(out.state.E), view(out.state.I),
            view(out.state.R), view(out.new_infections));
    return out;
}

RegionState initial_state(const StaticParams& theta, const PopulationStructure& pop, int region)
{
    const int n_ages = pop.n_ages();
    const double region_total = pop.counts.row(region).sum();
    const double infectious = std::exp(theta.ell0(region));
    const double exposed = infectious * (theta.d_L / theta.d_I) * std::exp(theta.psi(region) * theta.d_L);

    RegionState st;
    st.S.resize(n_ages);
    st.E.resize(n_ages);
    st.I.resize(n_ages);
    st.R = Eigen::VectorXd::Zero(n_ages);
    for (int a = 0; a < n_ages; ++a) {
        const double share = pop(region, a) / region_total;
        st.I(a) = infectious * share;
        st.E(a) = exposed * share;
        st.S(a) = pop(region, a) - st.E(a) - st.I(a);
        if (!(st.S(a) >= 0.0)) {
            throw DomainError("initial_state: seed mass exceeds the population of region " +
                              std::to_string(region) + ", age " + std::to_string(a));
        }
    }
    return st;
}

void simulate_region(const StaticParams& theta, const TransmissionField& field, const ContactSchedule& schedule,
                     const PopulationStructure& pop, const TimeGrid& grid, int region, EpidemicTrajectory& out)
{
    const int n_ages = pop.n_ages();
    const int n_steps = grid.n_steps();
    if (field.n_knots() < grid.n_knots()) {
        throw DomainError("simulate: field has " + std::to_string(field.n_knots()) + " knots, grid needs " +
                          std::to_string(grid.n_knots()));
    }
    if (out.n_steps() != n_steps || out.n_ages() != n_ages || region >= out.n_regions()) {
        throw DomainError("simulate: trajectory buffer has the wrong shape");
    }

    const RegionState init = initial_state(theta, pop, region);
    for (int a = 0; a < n_ages; ++a) {
        out.S_row(region, 0)[a] = init.S(a);
        out.E_row(region, 0)[a] = init.E(a);
        out.I_row(region, 0)[a] = init.I(a);
        out.R_row(region, 0)[a] = init.R(a);
        out.new_infections_row(region, 0)[a] = 0.0;
    }

    const double delta = grid.delta();
    const ExitFractions exits = ExitFractions::make(theta, delta);
    thread_local std::vector<double> lambda;
    lambda.resize(n_ages);

    for (int k = 1; k <= n_steps; ++k) {
        const ContactPeriod& period = schedule.period_for_step(region, k, grid.steps_per_day);
        const double scale =
            std::exp(field(grid.knot_of_step(k), region)) * theta.z(region, period.multiplier_slot);
        const std::span<double> infectious = out.I_row(region, k - 1);
        for (int i = 0; i < n_ages; ++i) {
            double force = 0.0;
            for (int j = 0; j < n_ages; ++j) {
                force += period.matrix(i, j) * (infectious[j] / pop(region, j));
            }
            lambda[i] = exposure_probability(scale * force, delta);
        }
        advance(out.S_row(region, k - 1), out.E_row(region, k - 1), infectious, out.R_row(region, k - 1),
                lambda, exits, out.S_row(region, k), out.E_row(region, k), out.I_row(region, k),
                out.R_row(region, k), out.new_infections_row(region, k));
    }
}

EpidemicTrajectory simulate(const StaticParams& theta, const TransmissionField& field,
                            const ContactSchedule& schedule, const PopulationStructure& pop, const TimeGrid& grid)
{
    EpidemicTrajectory traj(pop.n_regions(), grid.n_steps(), pop.n_ages());
    for (int m = 0; m < pop.n_regions(); ++m) {
        simulate_region(theta, field, schedule, pop, grid, m, traj);
    }
    return traj;
}

double reproduction_number(const StaticParams& theta, double field_value, const Eigen::MatrixXd& contacts,
                           double multiplier, const Eigen::VectorXd& susceptible_fraction)
{
    const Eigen::Index n = contacts.rows();
    if (contacts.cols() != n || susceptible_fraction.size() != n) {
        throw DomainError("reproduction_number: dimension mismatch");
    }
    const Eigen::MatrixXd next_gen =
        susceptible_fraction.asDiagonal() * (std::exp(field_value) * multiplier * contacts);
    if (next_gen.cwiseAbs().maxCoeff() == 0.0) {
        return 0.0;
    }
    // A positive shift keeps periodic (bipartite) matrices from oscillating.
    const double shift = 0.1 * next_gen.rowwise().sum().maxCoeff();
    Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    double estimate = 0.0;
    for (int iter = 0; iter < 10000; ++iter) {
        Eigen::VectorXd w = next_gen * v + shift * v;
        const double norm = w.sum();
        const double next = norm - shift;
        v = w / norm;
        if (iter > 0 && std::abs(next - estimate) <= 1e-10 * std::max(1.0, std::abs(next))) {
            return theta.d_I * next;
        }
        estimate = next;
    }
    throw NumericalError("reproduction_number: power iteration did not converge in 10^4 iterations");
}

} // namespace epigmrf
