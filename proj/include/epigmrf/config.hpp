#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "epigmrf/chain.hpp"
#include "epigmrf/params.hpp"

namespace epigmrf {

struct ModelConfig {
    double delta = 0.5;
    double delta_beta = 1.0;
    FieldPrior field_prior;
    double d_latent = 3.0;
    /// Overrides of the default parameter entries, matched by name.
    std::vector<ParamEntry> params;

    bool operator==(const ModelConfig&) const = default;
};

struct McmcConfig {
    SamplerSettings sampler;
    int chains = 1;
    std::uint64_t seed = 1;

    bool operator==(const McmcConfig&) const = default;
};

/// Paths as written in the file; relative ones resolve against the config's directory.
struct DataConfig {
    int n_days = 0;
    std::string deaths;
    std::string serology; // optional
    std::string contacts;
    std::string populations;
    std::string delay;

    bool operator==(const DataConfig&) const = default;
};

struct ForecastConfig {
    int horizon = 0;
    double alpha = 0.05;
    std::string truth; // optional deaths file covering the horizon

    bool operator==(const ForecastConfig&) const = default;
};

struct RunConfig {
    ModelConfig model;
    McmcConfig mcmc;
    DataConfig data;
    ForecastConfig forecast;
    std::filesystem::path base_dir; // not serialised

    static RunConfig load(const std::filesystem::path& path);
    static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
    nlohmann::json to_json() const;
    /// Writes the canonical form; a non-empty `metadata` line is embedded under the key "metadata".
    void save(const std::filesystem::path& path, const std::string& metadata = {}) const;

    std::filesystem::path resolve(const std::string& relative) const;
    /// Digest of the canonical serialisation.
    std::string hash() const;
    void validate() const;

    bool operator==(const RunConfig& other) const
    {
        return model == other.model && mcmc == other.mcmc && data == other.data && forecast == other.forecast;
    }
};

/// Default prior centre used when a parameter is not listed in the config.
StaticParams default_centre(int n_regions, int n_ages, double d_latent);

/// Merges overrides into the default entries for the given dimensions.
Parameterisation build_parameterisation(const ModelConfig& model, int n_regions, int n_ages);

/// Reads every data file named by the config and assembles the posterior definition.
ModelDefinition build_model(const RunConfig& config);

nlohmann::json to_json(const ParamEntry& e);
ParamEntry param_from_json(const nlohmann::json& j);

std::string to_string(StructureKind kind);
StructureKind structure_from_string(const std::string& s);
std::string to_string(PriorKind kind);
PriorKind prior_kind_from_string(const std::string& s);

} // namespace epigmrf
