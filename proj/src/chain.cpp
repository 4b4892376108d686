#include "epigmrf/chain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "epigmrf/errors.hpp"

namespace epigmrf {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<double> to_std(const Eigen::VectorXd& v)
{
    return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd to_eigen(const std::vector<double>& v)
{
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<std::vector<double>> to_rows(const Eigen::MatrixXd& m)
{
    std::vector<std::vector<double>> out(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        out[r].resize(static_cast<std::size_t>(m.cols()));
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            out[r][c] = m(r, c);
        }
    }
    return out;
}

Eigen::MatrixXd from_rows(const std::vector<std::vector<double>>& rows, Eigen::Index cols)
{
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (static_cast<Eigen::Index>(rows[r].size()) != cols) {
            throw InputError("checkpoint: ragged matrix");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(static_cast<Eigen::Index>(r), c) = rows[r][c];
        }
    }
    return m;
}

double gamma_log_density(double x, const GammaPrior& prior)
{
    if (!(x > 0.0)) {
        return kNegInf;
    }
    return prior.shape * std::log(prior.rate) - std::lgamma(prior.shape) + (prior.shape - 1.0) * std::log(x) -
           prior.rate * x;
}

std::vector<std::string> field_names(int n_strata, int n_knots)
{
    std::vector<std::string> names;
    for (int m = 0; m < n_strata; ++m) {
        for (int k = 0; k < n_knots; ++k) {
            names.push_back("beta[" + std::to_string(m) + "][" + std::to_string(k) + "]");
        }
    }
    return names;
}

} // namespace

PrecisionSpec FieldPrior::spec(double tau_value, int n_strata, int n_knots, double delta_beta) const
{
    PrecisionSpec s;
    s.tau = tau_value;
    s.rho_m = rho_m;
    s.rho_time = rho_time;
    s.strata_kind = strata_kind;
    s.time_kind = time_kind;
    s.n_strata = n_strata;
    s.n_knots = n_knots;
    s.delta_beta = delta_beta;
    return s;
}

void SamplerSettings::validate() const
{
    if (iterations < 1) {
        throw DomainError("sampler: iterations must be positive");
    }
    if (burn_in < 0 || burn_in >= iterations) {
        throw DomainError("sampler: burn-in must lie in [0, iterations)");
    }
    if (thin < 1) {
        throw DomainError("sampler: thinning must be positive");
    }
    if (blocks < 1) {
        throw DomainError("sampler: block count must be positive");
    }
    if (!(target_acceptance > 0.0 && target_acceptance < 1.0)) {
        throw DomainError("sampler: target acceptance must lie in (0, 1)");
    }
    if (!(initial_theta_sd > 0.0) || !(initial_c > 0.0)) {
        throw DomainError("sampler: initial scales must be positive");
    }
}

void DrawStore::add(long iteration, std::vector<double> row)
{
    if (row.size() != names_.size()) {
        throw DomainError("draws: row has " + std::to_string(row.size()) + " values for " +
                          std::to_string(names_.size()) + " columns");
    }
    iterations_.push_back(iteration);
    rows_.push_back(std::move(row));
}

int DrawStore::column_index(const std::string& name) const
{
    const auto it = std::find(names_.begin(), names_.end(), name);
    return it == names_.end() ? -1 : static_cast<int>(it - names_.begin());
}

std::vector<double> DrawStore::column(const std::string& name) const
{
    const int index = column_index(name);
    if (index < 0) {
        throw DomainError("draws: no column '" + name + "'");
    }
    return column(index);
}

std::vector<double> DrawStore::column(int index) const
{
    std::vector<double> out;
    out.reserve(rows_.size());
    for (const auto& row : rows_) {
        out.push_back(row.at(static_cast<std::size_t>(index)));
    }
    return out;
}

std::uint64_t chain_seed(std::uint64_t master, int chain_id)
{
    std::seed_seq seq{static_cast<std::uint32_t>(master & 0xffffffffu), static_cast<std::uint32_t>(master >> 32),
                      static_cast<std::uint32_t>(chain_id)};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

Chain::Chain(const ModelDefinition& model, SamplerSettings settings, std::uint64_t seed, int chain_id)
    : model_(model)
    , settings_(settings)
    , likelihood_(model.pop, model.schedule, model.delay, model.data, model.grid)
    , rng_(chain_seed(seed, chain_id))
{
    settings_.validate();
    const auto& fp = model_.field_prior;
    if (fp.tau_mode == TauMode::Sampled && fp.exponent != ExponentConvention::Rank) {
        throw DomainError("chain: sampling tau requires the rank exponent convention");
    }
    if (fp.tau_mode == TauMode::Sampled && !(fp.tau_prior.shape > 0.0 && fp.tau_prior.rate > 0.0)) {
        throw DomainError("chain: tau prior needs positive shape and rate");
    }
    const int n = model_.n_strata() * model_.n_knots();
    if (model_.initial_field.size() == 0) {
        field_ = Eigen::VectorXd::Zero(n);
    } else if (model_.initial_field.size() == n) {
        field_ = model_.initial_field;
    } else {
        throw DomainError("chain: initial field has " + std::to_string(model_.initial_field.size()) +
                          " values, expected " + std::to_string(n));
    }
    tau_ = fp.tau;
    unit_precision_ = build_precision(fp.spec(1.0, model_.n_strata(), model_.n_knots(), model_.grid.delta_beta()));
    log_c_ = std::log(settings_.initial_c);
    rebuild_precision();

    u_ = model_.params.initial_unconstrained();
    adaptation_ = Adaptation(model_.params.dim(), settings_.burn_in, settings_.target_acceptance,
                             settings_.initial_theta_sd);
    draws_ = DrawStore(draw_names());

    g_ = evaluate_likelihood(theta(), field_);
    if (!std::isfinite(g_)) {
        throw NumericalError("chain: log-likelihood at the initial state is not finite");
    }
    log_prior_theta_ = model_.params.log_prior(u_);
    if (!std::isfinite(log_prior_theta_)) {
        throw NumericalError("chain: log prior at the initial state is not finite");
    }
    log_prior_field_ = field_log_prior(field_);
}

void Chain::rebuild_precision()
{
    precision_.matrix = tau_ * unit_precision_.matrix;
    precision_.rank = unit_precision_.rank;
    precision_.tau = tau_;
    sampler_.reset(precision_, std::exp(log_c_));
}

double Chain::field_log_prior(const Eigen::VectorXd& field_flat) const
{
    const auto& fp = model_.field_prior;
    const TransmissionField f = TransmissionField::unflatten(field_flat, model_.n_knots(), model_.n_strata());
    double total = log_prior_density(f, precision_, tau_, unit_precision_.rank, fp.exponent);
    if (fp.tau_mode == TauMode::Sampled) {
        total += gamma_log_density(tau_, fp.tau_prior);
    }
    return total;
}

TransmissionField Chain::field() const
{
    return TransmissionField::unflatten(field_, model_.n_knots(), model_.n_strata());
}

double Chain::evaluate_likelihood(const StaticParams& theta, const Eigen::VectorXd& field_flat)
{
    try {
        const TransmissionField f = TransmissionField::unflatten(field_flat, model_.n_knots(), model_.n_strata());
        const double g = likelihood_.evaluate(theta, f).total;
        return std::isfinite(g) ? g : kNegInf;
    } catch (const Error&) {
        return kNegInf;
    }
}

std::vector<bool> Chain::update_theta()
{
    if (model_.params.dim() == 0) {
        return {};
    }
    struct Candidate {
        Eigen::VectorXd u;
        double g;
        double prior;
    };
    std::vector<Candidate> candidates;
    const LogTarget target = [&](const Eigen::VectorXd& u) {
        const double prior = model_.params.log_prior(u);
        if (!std::isfinite(prior)) {
            return kNegInf;
        }
        const double g = evaluate_likelihood(model_.params.to_params(u), field_);
        candidates.push_back({u, g, prior});
        return g + prior;
    };
    double log_target = g_ + log_prior_theta_;
    const BlockUpdateStats stats = randomised_block_update(u_, log_target, target, adaptation_.proposal_covariance(),
                                                           adaptation_.log_scale(), settings_.blocks, rng_);
    for (const auto& c : candidates) {
        if (c.u == u_) {
            g_ = c.g;
            log_prior_theta_ = c.prior;
        }
    }
    counters_.theta_proposed += static_cast<long>(stats.accepted.size());
    counters_.theta_accepted += std::count(stats.accepted.begin(), stats.accepted.end(), true);
    counters_.non_finite += stats.non_finite;
    return stats.accepted;
}

bool Chain::update_field()
{
    const StaticParams th = theta();
    const LogTarget loglik = [&](const Eigen::VectorXd& f) { return evaluate_likelihood(th, f); };
    const bool accepted = sampler_.step(field_, g_, loglik, rng_);
    ++counters_.field_proposed;
    if (accepted) {
        ++counters_.field_accepted;
        log_prior_field_ = field_log_prior(field_);
    }
    return accepted;
}

void Chain::update_tau()
{
    const auto& fp = model_.field_prior;
    if (fp.tau_mode != TauMode::Sampled) {
        return;
    }
    const double quad = unit_precision_.quadratic_form(field_);
    if (quad < -1e-8 * (1.0 + field_.squaredNorm())) {
        throw NumericalError("tau update: negative quadratic form");
    }
    const double shape = fp.tau_prior.shape + 0.5 * unit_precision_.rank;
    const double rate = fp.tau_prior.rate + 0.5 * std::max(quad, 0.0);
    tau_ = std::gamma_distribution<double>(shape, 1.0 / rate)(rng_);
    rebuild_precision();
    log_prior_field_ = field_log_prior(field_);
}

void Chain::adapt(const std::vector<bool>& theta_accepted, bool field_accepted)
{
    if (iteration_ > settings_.burn_in) {
        return;
    }
    adaptation_.update(theta_accepted, u_, iteration_);
    if (settings_.adapt_c) {
        log_c_ += adaptation_gain(iteration_) * ((field_accepted ? 1.0 : 0.0) - settings_.target_acceptance);
        sampler_.reset(precision_, std::exp(log_c_));
    }
}

void Chain::iterate()
{
    ++iteration_;
    const std::vector<bool> theta_accepted = update_theta();
    const bool field_accepted = update_field();
    update_tau();
    adapt(theta_accepted, field_accepted);
    if (!std::isfinite(g_) || !std::isfinite(log_prior_theta_) || !std::isfinite(log_prior_field_)) {
        const char* what = !std::isfinite(g_) ? "log-likelihood" : !std::isfinite(log_prior_theta_) ? "theta prior"
                                                                                                    : "field prior";
        throw NumericalError("chain: non-finite " + std::string(what) + " at iteration " +
                             std::to_string(iteration_));
    }
    if (settings_.check_caches) {
        verify_caches();
    }
    if (iteration_ > settings_.burn_in && (iteration_ - settings_.burn_in) % settings_.thin == 0) {
        record();
    }
}

void Chain::run(long until)
{
    const long stop = until < 0 ? settings_.iterations : std::min(until, settings_.iterations);
    while (iteration_ < stop) {
        iterate();
    }
}

void Chain::verify_caches()
{
    const double g = evaluate_likelihood(theta(), field_);
    const double lp_theta = model_.params.log_prior(u_);
    const double lp_field = field_log_prior(field_);
    const auto close = [](double a, double b) { return std::abs(a - b) <= 1e-10 * (1.0 + std::abs(b)); };
    if (!close(g_, g) || !close(log_prior_theta_, lp_theta) || !close(log_prior_field_, lp_field)) {
        throw NumericalError("chain: cached densities drifted from recomputation at iteration " +
                             std::to_string(iteration_));
    }
}

std::vector<std::string> Chain::draw_names() const
{
    std::vector<std::string> names = {"log_lik", "tau"};
    for (const auto& e : model_.params.entries()) {
        names.push_back(e.name);
    }
    for (auto& n : field_names(model_.n_strata(), model_.n_knots())) {
        names.push_back(std::move(n));
    }
    return names;
}

void Chain::record()
{
    std::vector<double> row;
    row.reserve(draws_.names().size());
    row.push_back(g_);
    row.push_back(tau_);
    const Eigen::VectorXd natural = model_.params.natural_values(u_);
    row.insert(row.end(), natural.data(), natural.data() + natural.size());
    row.insert(row.end(), field_.data(), field_.data() + field_.size());
    draws_.add(iteration_, std::move(row));
}

nlohmann::json Chain::checkpoint() const
{
    std::ostringstream rng_state;
    rng_state << rng_;
    const auto& st = adaptation_.state();
    nlohmann::json j;
    j["settings"] = {{"iterations", settings_.iterations},
                     {"burn_in", settings_.burn_in},
                     {"thin", settings_.thin},
                     {"blocks", settings_.blocks},
                     {"target_acceptance", settings_.target_acceptance},
                     {"initial_theta_sd", settings_.initial_theta_sd},
                     {"initial_c", settings_.initial_c},
                     {"adapt_c", settings_.adapt_c},
                     {"check_caches", settings_.check_caches}};
    j["iteration"] = iteration_;
    j["rng"] = rng_state.str();
    j["u"] = to_std(u_);
    j["field"] = to_std(field_);
    j["tau"] = tau_;
    j["log_lik"] = g_;
    j["log_c"] = log_c_;
    j["adaptation"] = {{"samples", st.samples},
                       {"mean", to_std(st.mean)},
                       {"scatter", to_rows(st.scatter)},
                       {"log_scale", st.log_scale}};
    j["counters"] = {{"theta_proposed", counters_.theta_proposed},
                     {"theta_accepted", counters_.theta_accepted},
                     {"field_proposed", counters_.field_proposed},
                     {"field_accepted", counters_.field_accepted},
                     {"non_finite", counters_.non_finite}};
    j["draws"] = {{"names", draws_.names()}, {"iterations", draws_.iterations()}, {"rows", draws_.rows()}};
    return j;
}

Chain Chain::restore(const ModelDefinition& model, const nlohmann::json& state)
{
    try {
        const auto& js = state.at("settings");
        SamplerSettings settings;
        settings.iterations = js.at("iterations").get<long>();
        settings.burn_in = js.at("burn_in").get<long>();
        settings.thin = js.at("thin").get<long>();
        settings.blocks = js.at("blocks").get<int>();
        settings.target_acceptance = js.at("target_acceptance").get<double>();
        settings.initial_theta_sd = js.at("initial_theta_sd").get<double>();
        settings.initial_c = js.at("initial_c").get<double>();
        settings.adapt_c = js.at("adapt_c").get<bool>();
        settings.check_caches = js.at("check_caches").get<bool>();

        Chain chain(model, settings, 0, 0);
        std::istringstream rng_state(state.at("rng").get<std::string>());
        rng_state >> chain.rng_;
        if (rng_state.fail()) {
            throw InputError("checkpoint: malformed generator state");
        }
        chain.iteration_ = state.at("iteration").get<long>();
        const Eigen::VectorXd u = to_eigen(state.at("u").get<std::vector<double>>());
        const Eigen::VectorXd f = to_eigen(state.at("field").get<std::vector<double>>());
        if (u.size() != chain.u_.size() || f.size() != chain.field_.size()) {
            throw InputError("checkpoint: state dimensions do not match the model");
        }
        chain.u_ = u;
        chain.field_ = f;
        chain.tau_ = state.at("tau").get<double>();
        chain.log_c_ = state.at("log_c").get<double>();
        chain.rebuild_precision();
        chain.g_ = state.at("log_lik").get<double>();
        chain.log_prior_theta_ = model.params.log_prior(chain.u_);
        chain.log_prior_field_ = chain.field_log_prior(chain.field_);

        const auto& ja = state.at("adaptation");
        Adaptation::State st;
        st.samples = ja.at("samples").get<long>();
        st.mean = to_eigen(ja.at("mean").get<std::vector<double>>());
        st.scatter = from_rows(ja.at("scatter").get<std::vector<std::vector<double>>>(), u.size());
        st.log_scale = ja.at("log_scale").get<double>();
        if (st.mean.size() != u.size() || st.scatter.rows() != u.size()) {
            throw InputError("checkpoint: adaptation dimensions do not match the model");
        }
        chain.adaptation_.set_state(std::move(st));

        const auto& jc = state.at("counters");
        chain.counters_.theta_proposed = jc.at("theta_proposed").get<long>();
        chain.counters_.theta_accepted = jc.at("theta_accepted").get<long>();
        chain.counters_.field_proposed = jc.at("field_proposed").get<long>();
        chain.counters_.field_accepted = jc.at("field_accepted").get<long>();
        chain.counters_.non_finite = jc.at("non_finite").get<long>();

        const auto& jd = state.at("draws");
        DrawStore draws(jd.at("names").get<std::vector<std::string>>());
        if (draws.names() != chain.draw_names()) {
            throw InputError("checkpoint: draw columns do not match the model");
        }
        const auto iterations = jd.at("iterations").get<std::vector<long>>();
        const auto rows = jd.at("rows").get<std::vector<std::vector<double>>>();
        if (iterations.size() != rows.size()) {
            throw InputError("checkpoint: draw table is inconsistent");
        }
        for (std::size_t i = 0; i < rows.size(); ++i) {
            draws.add(iterations[i], rows[i]);
        }
        chain.draws_ = std::move(draws);
        return chain;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("checkpoint: ") + e.what());
    }
}

ChainResult run_chain(const ModelDefinition& model, const SamplerSettings& settings, std::uint64_t seed,
                      int chain_id)
{
    Chain chain(model, settings, seed, chain_id);
    chain.run();
    return {chain.draws(), chain.counters(), chain.c(), chain.adaptation().log_scale()};
}

ChainResult run_joint_random_walk(const ModelDefinition& model, const SamplerSettings& settings, std::uint64_t seed)
{
    settings.validate();
    // Reuse the chain for its cached likelihood, priors and draw layout.
    SamplerSettings fixed = settings;
    fixed.adapt_c = false;
    ModelDefinition m = model;
    m.field_prior.tau_mode = TauMode::Fixed;
    Chain chain(m, fixed, seed, 0);
    const int dim_u = m.params.dim();
    const int dim_f = m.n_strata() * m.n_knots();
    const SparsePrecision q =
        build_precision(m.field_prior.spec(m.field_prior.tau, m.n_strata(), m.n_knots(), m.grid.delta_beta()));

    Eigen::VectorXd x(dim_u + dim_f);
    x << chain.unconstrained(), chain.field().flatten();
    double last_g = 0.0;
    const LogTarget target = [&](const Eigen::VectorXd& v) {
        const Eigen::VectorXd u = v.head(dim_u);
        const Eigen::VectorXd f = v.tail(dim_f);
        const double prior_u = m.params.log_prior(u);
        if (!std::isfinite(prior_u)) {
            return kNegInf;
        }
        const double prior_f = -0.5 * q.quadratic_form(f);
        const double g = chain.evaluate_likelihood(m.params.to_params(u), f);
        last_g = g;
        return g + prior_u + prior_f;
    };
    double log_target = target(x);
    double g = last_g;
    if (!std::isfinite(log_target)) {
        throw NumericalError("random walk: initial log posterior is not finite");
    }

    Rng rng(chain_seed(seed, 0));
    RandomWalkSampler rw(dim_u + dim_f, settings.burn_in, settings.initial_theta_sd, settings.target_acceptance);
    ChainResult result;
    result.draws = DrawStore(chain.draw_names());
    for (long it = 1; it <= settings.iterations; ++it) {
        const bool accepted = rw.step(x, log_target, target, rng, it);
        if (accepted) {
            g = last_g;
        }
        ++result.counters.theta_proposed;
        result.counters.theta_accepted += accepted ? 1 : 0;
        if (it > settings.burn_in && (it - settings.burn_in) % settings.thin == 0) {
            std::vector<double> row = {g, m.field_prior.tau};
            const Eigen::VectorXd natural = m.params.natural_values(x.head(dim_u));
            row.insert(row.end(), natural.data(), natural.data() + natural.size());
            row.insert(row.end(), x.data() + dim_u, x.data() + x.size());
            result.draws.add(it, std::move(row));
        }
    }
    result.final_log_scale = std::log(rw.scale());
    return result;
}

} // namespace epigmrf
