#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "epigmrf/chain.hpp"
#include "epigmrf/diagnostics.hpp"
#include "epigmrf/forecast.hpp"
#include "epigmrf/observation_model.hpp"
#include "epigmrf/scoring.hpp"
#include "epigmrf/seir_dynamics.hpp"

namespace epigmrf {

/// Provenance written as the first line of every output file.
struct Metadata {
    std::string version = EPIGMRF_VERSION;
    std::uint64_t seed = 0;
    std::string config_hash;

    std::string line() const;
};

/// 64-bit FNV-1a digest rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

/// Shortest representation that parses back to the same double.
std::string format_double(double x);

/// A parsed delimited file: header plus rows, with source line numbers for errors.
struct CsvTable {
    std::filesystem::path path;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<int> lines;

    int column(const std::string& name) const;
    double number(std::size_t row, int column) const;
    long integer(std::size_t row, int column) const;
    [[noreturn]] void fail(std::size_t row, const std::string& message) const;
};

/// Reads a comma-separated file, skipping blank lines and lines starting with '#'.
/// Every header entry must satisfy `allowed`; missing `required` columns are errors.
CsvTable read_csv(const std::filesystem::path& path, const std::vector<std::string>& required,
                  const std::function<bool(const std::string&)>& allowed);
CsvTable read_csv(const std::filesystem::path& path, const std::vector<std::string>& columns);

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const Metadata& meta, const std::vector<std::string>& header);

    CsvWriter& operator<<(const std::string& field);
    CsvWriter& operator<<(const char* field) { return *this << std::string(field); }
    CsvWriter& operator<<(double x) { return *this << format_double(x); }
    CsvWriter& operator<<(int x) { return *this << std::to_string(x); }
    CsvWriter& operator<<(long x) { return *this << std::to_string(x); }
    CsvWriter& operator<<(std::size_t x) { return *this << std::to_string(x); }
    void end_row();
    void close();

private:
    std::filesystem::path path_;
    std::ofstream out_;
    bool row_started_ = false;
};

PopulationStructure read_populations(const std::filesystem::path& path);
void write_populations(const std::filesystem::path& path, const Metadata& meta, const PopulationStructure& pop);

ContactSchedule read_contacts(const std::filesystem::path& path, int n_regions, int n_ages);
void write_contacts(const std::filesystem::path& path, const Metadata& meta, const ContactSchedule& schedule);

DelayDistribution read_delay(const std::filesystem::path& path);
void write_delay(const std::filesystem::path& path, const Metadata& meta, const DelayDistribution& delay);

/// Deaths into a dense table over days [0, n_days); n_days < 0 infers it from the file.
SurveillanceData read_deaths(const std::filesystem::path& path, int n_regions, int n_ages, int n_days);
/// Writes every non-missing count.
void write_deaths(const std::filesystem::path& path, const Metadata& meta, const SurveillanceData& data);

/// Appends serosurveys to `data`; rows beyond data.n_days are rejected.
void read_serology(const std::filesystem::path& path, SurveillanceData& data);
void write_serology(const std::filesystem::path& path, const Metadata& meta, const SurveillanceData& data);

void write_field(const std::filesystem::path& path, const Metadata& meta, const TransmissionField& field,
                 double delta_beta);

void write_draws_wide(const std::filesystem::path& path, const Metadata& meta, const DrawStore& draws);
DrawStore read_draws_wide(const std::filesystem::path& path);
void write_draws_long(const std::filesystem::path& path, const Metadata& meta, const DrawStore& draws);

void write_forecast(const std::filesystem::path& path, const Metadata& meta, const ForecastDraws& fc);
ForecastDraws read_forecast(const std::filesystem::path& path);

void write_scores(const std::filesystem::path& dir, const Metadata& meta, const ScoreReport& report);
void write_diagnostics(const std::filesystem::path& path, const Metadata& meta, const DiagnosticsReport& report);

} // namespace epigmrf
