#include "epigmrf/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "epigmrf/csv_io.hpp"
#include "epigmrf/errors.hpp"

namespace epigmrf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const json& j, const std::vector<std::string>& allowed, const std::string& where)
{
    if (!j.is_object()) {
        throw InputError("config: '" + where + "' must be an object");
    }
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw InputError("config: unknown key '" + key + "' in '" + where + "'");
        }
    }
}

template <typename T>
void read_opt(const json& j, const char* key, T& out)
{
    if (j.contains(key)) {
        out = j.at(key).get<T>();
    }
}

std::string exponent_name(ExponentConvention e)
{
    return e == ExponentConvention::Rank ? "rank" : "full_order";
}

ExponentConvention exponent_from_string(const std::string& s)
{
    if (s == "rank") {
        return ExponentConvention::Rank;
    }
    if (s == "full_order") {
        return ExponentConvention::FullOrder;
    }
    throw InputError("config: unknown exponent convention '" + s + "'");
}

} // namespace

std::string to_string(StructureKind kind)
{
    return kind == StructureKind::Rw1Tridiagonal ? "rw1" : "identity";
}

StructureKind structure_from_string(const std::string& s)
{
    if (s == "rw1") {
        return StructureKind::Rw1Tridiagonal;
    }
    if (s == "identity") {
        return StructureKind::Identity;
    }
    throw InputError("config: unknown structure '" + s + "' (expected rw1 or identity)");
}

std::string to_string(PriorKind kind)
{
    switch (kind) {
    case PriorKind::Normal:
        return "normal";
    case PriorKind::LogNormal:
        return "lognormal";
    case PriorKind::LogitNormal:
        return "logitnormal";
    case PriorKind::Gamma:
        return "gamma";
    case PriorKind::Beta:
        return "beta";
    case PriorKind::Uniform:
        return "uniform";
    }
    return "normal";
}

PriorKind prior_kind_from_string(const std::string& s)
{
    for (PriorKind k : {PriorKind::Normal, PriorKind::LogNormal, PriorKind::LogitNormal, PriorKind::Gamma,
                        PriorKind::Beta, PriorKind::Uniform}) {
        if (to_string(k) == s) {
            return k;
        }
    }
    throw InputError("config: unknown prior kind '" + s + "'");
}

json to_json(const ParamEntry& e)
{
    return {{"name", e.name},
            {"value", e.value},
            {"fixed", e.fixed},
            {"prior", {{"kind", to_string(e.prior.kind)}, {"a", e.prior.a}, {"b", e.prior.b}}}};
}

ParamEntry param_from_json(const json& j)
{
    check_keys(j, {"name", "value", "fixed", "prior"}, "params[]");
    ParamEntry e;
    e.name = j.at("name").get<std::string>();
    e.transform = Parameterisation::canonical_transform(e.name);
    e.value = j.at("value").get<double>();
    read_opt(j, "fixed", e.fixed);
    if (j.contains("prior")) {
        const json& p = j.at("prior");
        check_keys(p, {"kind", "a", "b"}, "prior of " + e.name);
        e.prior.kind = prior_kind_from_string(p.at("kind").get<std::string>());
        e.prior.a = p.at("a").get<double>();
        e.prior.b = p.at("b").get<double>();
    }
    return e;
}

RunConfig RunConfig::from_json(const json& j, const fs::path& base_dir)
{
    RunConfig c;
    c.base_dir = base_dir;
    try {
        check_keys(j, {"model", "mcmc", "data", "forecast", "metadata"}, "root");
        if (j.contains("model")) {
            const json& m = j.at("model");
            check_keys(m, {"delta", "delta_beta", "strata_structure", "time_structure", "rho_m", "rho_time", "tau",
                           "exponent", "d_latent", "params"},
                       "model");
            read_opt(m, "delta", c.model.delta);
            read_opt(m, "delta_beta", c.model.delta_beta);
            read_opt(m, "d_latent", c.model.d_latent);
            auto& fp = c.model.field_prior;
            if (m.contains("strata_structure")) {
                fp.strata_kind = structure_from_string(m.at("strata_structure").get<std::string>());
            }
            if (m.contains("time_structure")) {
                fp.time_kind = structure_from_string(m.at("time_structure").get<std::string>());
            }
            read_opt(m, "rho_m", fp.rho_m);
            read_opt(m, "rho_time", fp.rho_time);
            if (m.contains("exponent")) {
                fp.exponent = exponent_from_string(m.at("exponent").get<std::string>());
            }
            if (m.contains("tau")) {
                const json& t = m.at("tau");
                check_keys(t, {"mode", "value", "prior_shape", "prior_rate"}, "model.tau");
                read_opt(t, "value", fp.tau);
                if (t.contains("mode")) {
                    const auto mode = t.at("mode").get<std::string>();
                    if (mode == "fixed") {
                        fp.tau_mode = TauMode::Fixed;
                    } else if (mode == "sampled") {
                        fp.tau_mode = TauMode::Sampled;
                    } else {
                        throw InputError("config: tau mode must be 'fixed' or 'sampled'");
                    }
                }
                read_opt(t, "prior_shape", fp.tau_prior.shape);
                read_opt(t, "prior_rate", fp.tau_prior.rate);
            }
            if (m.contains("params")) {
                for (const auto& p : m.at("params")) {
                    c.model.params.push_back(param_from_json(p));
                }
            }
        }
        if (j.contains("mcmc")) {
            const json& m = j.at("mcmc");
            check_keys(m, {"iterations", "burn_in", "thin", "chains", "blocks", "seed", "target_acceptance",
                           "initial_theta_sd", "initial_c", "adapt_c", "check_caches"},
                       "mcmc");
            auto& s = c.mcmc.sampler;
            read_opt(m, "iterations", s.iterations);
            read_opt(m, "burn_in", s.burn_in);
            read_opt(m, "thin", s.thin);
            read_opt(m, "blocks", s.blocks);
            read_opt(m, "target_acceptance", s.target_acceptance);
            read_opt(m, "initial_theta_sd", s.initial_theta_sd);
            read_opt(m, "initial_c", s.initial_c);
            read_opt(m, "adapt_c", s.adapt_c);
            read_opt(m, "check_caches", s.check_caches);
            read_opt(m, "chains", c.mcmc.chains);
            read_opt(m, "seed", c.mcmc.seed);
        }
        if (j.contains("data")) {
            const json& d = j.at("data");
            check_keys(d, {"n_days", "deaths", "serology", "contacts", "populations", "delay"}, "data");
            read_opt(d, "n_days", c.data.n_days);
            read_opt(d, "deaths", c.data.deaths);
            read_opt(d, "serology", c.data.serology);
            read_opt(d, "contacts", c.data.contacts);
            read_opt(d, "populations", c.data.populations);
            read_opt(d, "delay", c.data.delay);
        }
        if (j.contains("forecast")) {
            const json& f = j.at("forecast");
            check_keys(f, {"horizon", "alpha", "truth"}, "forecast");
            read_opt(f, "horizon", c.forecast.horizon);
            read_opt(f, "alpha", c.forecast.alpha);
            read_opt(f, "truth", c.forecast.truth);
        }
    } catch (const json::exception& e) {
        throw InputError(std::string("config: ") + e.what());
    }
    return c;
}

json RunConfig::to_json() const
{
    const auto& fp = model.field_prior;
    json params = json::array();
    for (const auto& p : model.params) {
        params.push_back(epigmrf::to_json(p));
    }
    const auto& s = mcmc.sampler;
    json j;
    j["model"] = {{"delta", model.delta},
                  {"delta_beta", model.delta_beta},
                  {"strata_structure", to_string(fp.strata_kind)},
                  {"time_structure", to_string(fp.time_kind)},
                  {"rho_m", fp.rho_m},
                  {"rho_time", fp.rho_time},
                  {"tau",
                   {{"mode", fp.tau_mode == TauMode::Fixed ? "fixed" : "sampled"},
                    {"value", fp.tau},
                    {"prior_shape", fp.tau_prior.shape},
                    {"prior_rate", fp.tau_prior.rate}}},
                  {"exponent", exponent_name(fp.exponent)},
                  {"d_latent", model.d_latent},
                  {"params", params}};
    j["mcmc"] = {{"iterations", s.iterations},
                 {"burn_in", s.burn_in},
                 {"thin", s.thin},
                 {"chains", mcmc.chains},
                 {"blocks", s.blocks},
                 {"seed", mcmc.seed},
                 {"target_acceptance", s.target_acceptance},
                 {"initial_theta_sd", s.initial_theta_sd},
                 {"initial_c", s.initial_c},
                 {"adapt_c", s.adapt_c},
                 {"check_caches", s.check_caches}};
    j["data"] = {{"n_days", data.n_days},
                 {"deaths", data.deaths},
                 {"serology", data.serology},
                 {"contacts", data.contacts},
                 {"populations", data.populations},
                 {"delay", data.delay}};
    j["forecast"] = {{"horizon", forecast.horizon}, {"alpha", forecast.alpha}, {"truth", forecast.truth}};
    return j;
}

RunConfig RunConfig::load(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open config " + path.string());
    }
    json j;
    try {
        j = json::parse(in, nullptr, true, true);
    } catch (const json::exception& e) {
        throw InputError("config " + path.string() + ": " + e.what());
    }
    return from_json(j, path.parent_path());
}

void RunConfig::save(const fs::path& path, const std::string& metadata) const
{
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    json j = to_json();
    if (!metadata.empty()) {
        j["metadata"] = metadata;
    }
    out << j.dump(2) << '\n';
}

fs::path RunConfig::resolve(const std::string& relative) const
{
    const fs::path p(relative);
    return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
}

std::string RunConfig::hash() const
{
    return fnv1a_hex(to_json().dump());
}

void RunConfig::validate() const
{
    mcmc.sampler.validate();
    if (mcmc.chains < 1) {
        throw DomainError("config: need at least one chain");
    }
    (void)TimeGrid::from_spacing(model.delta, model.delta_beta, data.n_days);
    if (data.n_days < 1) {
        throw DomainError("config: data.n_days must be positive");
    }
    if (!(model.d_latent > 0.0)) {
        throw DomainError("config: d_latent must be positive");
    }
    if (forecast.horizon < 0 || !(forecast.alpha > 0.0 && forecast.alpha < 1.0)) {
        throw DomainError("config: forecast horizon must be nonnegative and alpha in (0, 1)");
    }
    const auto check = [&](const std::string& key, const std::string& value, bool optional) {
        if (value.empty()) {
            if (!optional) {
                throw InputError("config: data." + key + " is required");
            }
            return;
        }
        const fs::path p = resolve(value);
        if (!fs::exists(p)) {
            throw InputError("missing data file " + p.string() + " (data." + key + ")");
        }
    };
    check("deaths", data.deaths, false);
    check("serology", data.serology, true);
    check("contacts", data.contacts, false);
    check("populations", data.populations, false);
    check("delay", data.delay, false);
}

StaticParams default_centre(int n_regions, int n_ages, double d_latent)
{
    StaticParams c;
    c.d_L = d_latent;
    c.p = Eigen::VectorXd::Constant(n_ages, 0.01);
    c.z = Eigen::MatrixXd::Ones(n_regions, ContactSchedule::kMultiplierSlots);
    c.psi = Eigen::VectorXd::Constant(n_regions, 0.1);
    c.ell0 = Eigen::VectorXd::Constant(n_regions, std::log(100.0));
    return c;
}

Parameterisation build_parameterisation(const ModelConfig& model, int n_regions, int n_ages)
{
    Parameterisation defaults =
        Parameterisation::with_defaults(default_centre(n_regions, n_ages, model.d_latent));
    std::vector<ParamEntry> entries = defaults.entries();
    for (const auto& o : model.params) {
        const auto it = std::find_if(entries.begin(), entries.end(), [&](const ParamEntry& e) { return e.name == o.name; });
        if (it == entries.end()) {
            throw InputError("config: unknown parameter '" + o.name + "'");
        }
        *it = o;
    }
    return Parameterisation(n_regions, n_ages, std::move(entries), model.d_latent);
}

ModelDefinition build_model(const RunConfig& config)
{
    config.validate();
    ModelDefinition m;
    m.pop = read_populations(config.resolve(config.data.populations));
    const int n_regions = m.pop.n_regions();
    const int n_ages = m.pop.n_ages();
    m.schedule = read_contacts(config.resolve(config.data.contacts), n_regions, n_ages);
    m.delay = read_delay(config.resolve(config.data.delay));
    m.data = read_deaths(config.resolve(config.data.deaths), n_regions, n_ages, config.data.n_days);
    if (!config.data.serology.empty()) {
        read_serology(config.resolve(config.data.serology), m.data);
    }
    m.grid = TimeGrid::from_spacing(config.model.delta, config.model.delta_beta, config.data.n_days);
    m.params = build_parameterisation(config.model, n_regions, n_ages);
    m.field_prior = config.model.field_prior;
    return m;
}

} // namespace epigmrf
