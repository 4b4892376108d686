#include "epigmrf/csv_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "epigmrf/errors.hpp"

namespace epigmrf {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_fields(const std::string& line)
{
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        const auto first = field.find_first_not_of(" \t\r");
        const auto last = field.find_last_not_of(" \t\r");
        out.push_back(first == std::string::npos ? std::string() : field.substr(first, last - first + 1));
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

void ensure_parent(const fs::path& path)
{
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
}

} // namespace

std::string Metadata::line() const
{
    return "# epigmrf version=" + version + " seed=" + std::to_string(seed) + " config_hash=" + config_hash;
}

std::string fnv1a_hex(const std::string& bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string format_double(double x)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

int CsvTable::column(const std::string& name) const
{
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

void CsvTable::fail(std::size_t row, const std::string& message) const
{
    throw InputError(path.string() + ":" + std::to_string(lines.at(row)) + ": " + message);
}

double CsvTable::number(std::size_t row, int col) const
{
    const std::string& s = rows[row][static_cast<std::size_t>(col)];
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        fail(row, "column '" + header[col] + "': '" + s + "' is not a number");
    }
    return v;
}

long CsvTable::integer(std::size_t row, int col) const
{
    const std::string& s = rows[row][static_cast<std::size_t>(col)];
    long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        fail(row, "column '" + header[col] + "': '" + s + "' is not an integer");
    }
    return v;
}

CsvTable read_csv(const fs::path& path, const std::vector<std::string>& required,
                  const std::function<bool(const std::string&)>& allowed)
{
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open " + path.string());
    }
    CsvTable table;
    table.path = path;
    std::string line;
    int line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line[0] == '#') {
            continue;
        }
        auto fields = split_fields(line);
        if (!have_header) {
            table.header = std::move(fields);
            have_header = true;
            std::set<std::string> seen;
            for (const auto& h : table.header) {
                if (!allowed(h)) {
                    throw InputError(path.string() + ":" + std::to_string(line_no) + ": unknown column '" + h + "'");
                }
                if (!seen.insert(h).second) {
                    throw InputError(path.string() + ":" + std::to_string(line_no) + ": duplicate column '" + h +
                                     "'");
                }
            }
            for (const auto& r : required) {
                if (table.column(r) < 0) {
                    throw InputError(path.string() + ":" + std::to_string(line_no) + ": missing column '" + r +
                                     "'");
                }
            }
            continue;
        }
        if (fields.size() != table.header.size()) {
            throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(table.header.size()) + " fields, found " +
                             std::to_string(fields.size()));
        }
        table.rows.push_back(std::move(fields));
        table.lines.push_back(line_no);
    }
    if (!have_header) {
        throw InputError(path.string() + ": no header line");
    }
    return table;
}

CsvTable read_csv(const fs::path& path, const std::vector<std::string>& columns)
{
    return read_csv(path, columns, [&](const std::string& h) {
        return std::find(columns.begin(), columns.end(), h) != columns.end();
    });
}

CsvWriter::CsvWriter(const fs::path& path, const Metadata& meta, const std::vector<std::string>& header)
    : path_(path)
{
    ensure_parent(path);
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) {
        throw InputError("cannot write " + path.string());
    }
    out_ << meta.line() << '\n';
    for (std::size_t i = 0; i < header.size(); ++i) {
        out_ << (i ? "," : "") << header[i];
    }
    out_ << '\n';
}

CsvWriter& CsvWriter::operator<<(const std::string& field)
{
    if (row_started_) {
        out_ << ',';
    }
    out_ << field;
    row_started_ = true;
    return *this;
}

void CsvWriter::end_row()
{
    out_ << '\n';
    row_started_ = false;
}

void CsvWriter::close()
{
    out_.close();
    if (out_.fail()) {
        throw InputError("failed writing " + path_.string());
    }
}

PopulationStructure read_populations(const fs::path& path)
{
    const CsvTable t = read_csv(path, {"region", "age", "N"});
    const int cr = t.column("region"), ca = t.column("age"), cn = t.column("N");
    std::map<std::pair<long, long>, double> values;
    long max_region = -1, max_age = -1;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const long region = t.integer(r, cr), age = t.integer(r, ca);
        if (region < 0 || age < 0) {
            t.fail(r, "negative index");
        }
        if (!values.emplace(std::make_pair(region, age), t.number(r, cn)).second) {
            t.fail(r, "duplicate entry for region " + std::to_string(region) + ", age " + std::to_string(age));
        }
        max_region = std::max(max_region, region);
        max_age = std::max(max_age, age);
    }
    if (values.empty()) {
        throw InputError(path.string() + ": no rows");
    }
    PopulationStructure pop;
    pop.counts.resize(max_region + 1, max_age + 1);
    if (static_cast<long>(values.size()) != (max_region + 1) * (max_age + 1)) {
        throw InputError(path.string() + ": population table is incomplete");
    }
    for (const auto& [key, n] : values) {
        pop.counts(key.first, key.second) = n;
    }
    pop.validate();
    return pop;
}

void write_populations(const fs::path& path, const Metadata& meta, const PopulationStructure& pop)
{
    CsvWriter w(path, meta, {"region", "age", "N"});
    for (int m = 0; m < pop.n_regions(); ++m) {
        for (int a = 0; a < pop.n_ages(); ++a) {
            w << m << a << pop(m, a);
            w.end_row();
        }
    }
    w.close();
}

ContactSchedule read_contacts(const fs::path& path, int n_regions, int n_ages)
{
    std::vector<std::string> required = {"region", "period_start_day", "multiplier_slot", "age"};
    for (int j = 0; j < n_ages; ++j) {
        required.push_back("c" + std::to_string(j));
    }
    const CsvTable t = read_csv(path, required);
    const int cr = t.column("region"), cd = t.column("period_start_day"), cs = t.column("multiplier_slot"),
              ca = t.column("age");
    // region -> start day -> (slot, matrix, rows seen)
    struct Pending {
        int slot = 0;
        Eigen::MatrixXd matrix;
        std::vector<bool> seen;
        std::size_t first_row = 0;
    };
    std::vector<std::map<long, Pending>> pending(static_cast<std::size_t>(n_regions));
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const long region = t.integer(r, cr), day = t.integer(r, cd), slot = t.integer(r, cs), age = t.integer(r, ca);
        if (region < 0 || region >= n_regions) {
            t.fail(r, "region " + std::to_string(region) + " out of range");
        }
        if (age < 0 || age >= n_ages) {
            t.fail(r, "age " + std::to_string(age) + " out of range");
        }
        if (slot < 0 || slot >= ContactSchedule::kMultiplierSlots) {
            t.fail(r, "multiplier slot must be in 0..2");
        }
        auto [it, inserted] = pending[region].try_emplace(day);
        Pending& p = it->second;
        if (inserted) {
            p.slot = static_cast<int>(slot);
            p.matrix = Eigen::MatrixXd::Zero(n_ages, n_ages);
            p.seen.assign(static_cast<std::size_t>(n_ages), false);
            p.first_row = r;
        } else if (p.slot != slot) {
            t.fail(r, "multiplier slot differs within one period");
        }
        if (p.seen[age]) {
            t.fail(r, "duplicate matrix row " + std::to_string(age));
        }
        p.seen[age] = true;
        for (int j = 0; j < n_ages; ++j) {
            p.matrix(age, j) = t.number(r, t.column("c" + std::to_string(j)));
        }
    }
    ContactSchedule schedule;
    schedule.periods.resize(static_cast<std::size_t>(n_regions));
    for (int m = 0; m < n_regions; ++m) {
        for (auto& [day, p] : pending[m]) {
            if (std::find(p.seen.begin(), p.seen.end(), false) != p.seen.end()) {
                t.fail(p.first_row, "period starting on day " + std::to_string(day) + " of region " +
                                        std::to_string(m) + " lacks matrix rows");
            }
            schedule.periods[m].push_back({static_cast<int>(day), p.slot, p.matrix});
        }
    }
    try {
        schedule.validate(n_regions, n_ages);
    } catch (const DomainError& e) {
        throw InputError(path.string() + ": " + e.what());
    }
    return schedule;
}

void write_contacts(const fs::path& path, const Metadata& meta, const ContactSchedule& schedule)
{
    const int n_ages = schedule.periods.empty() || schedule.periods[0].empty()
                           ? 0
                           : static_cast<int>(schedule.periods[0][0].matrix.rows());
    std::vector<std::string> header = {"region", "period_start_day", "multiplier_slot", "age"};
    for (int j = 0; j < n_ages; ++j) {
        header.push_back("c" + std::to_string(j));
    }
    CsvWriter w(path, meta, header);
    for (std::size_t m = 0; m < schedule.periods.size(); ++m) {
        for (const auto& p : schedule.periods[m]) {
            for (int i = 0; i < n_ages; ++i) {
                w << static_cast<int>(m) << p.start_day << p.multiplier_slot << i;
                for (int j = 0; j < n_ages; ++j) {
                    w << p.matrix(i, j);
                }
                w.end_row();
            }
        }
    }
    w.close();
}

DelayDistribution read_delay(const fs::path& path)
{
    const CsvTable t = read_csv(path, {"lag_day", "cdf"});
    const int cl = t.column("lag_day"), cc = t.column("cdf");
    std::vector<double> cdf;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        if (t.integer(r, cl) != static_cast<long>(r)) {
            t.fail(r, "lag_day must run 0, 1, 2, ... without gaps");
        }
        cdf.push_back(t.number(r, cc));
    }
    try {
        return DelayDistribution::from_cdf(cdf);
    } catch (const DomainError& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

void write_delay(const fs::path& path, const Metadata& meta, const DelayDistribution& delay)
{
    CsvWriter w(path, meta, {"lag_day", "cdf"});
    double cdf = 0.0;
    for (int l = 0; l <= delay.max_lag(); ++l) {
        cdf += delay[l];
        w << l << std::min(cdf, 1.0);
        w.end_row();
    }
    w.close();
}

SurveillanceData read_deaths(const fs::path& path, int n_regions, int n_ages, int n_days)
{
    const CsvTable t = read_csv(path, {"region", "day", "age", "count"});
    const int cr = t.column("region"), cd = t.column("day"), ca = t.column("age"), cc = t.column("count");
    if (n_days < 0) {
        n_days = 0;
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            n_days = std::max(n_days, static_cast<int>(t.integer(r, cd)) + 1);
        }
    }
    SurveillanceData data = SurveillanceData::empty(n_regions, n_days, n_ages);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const long region = t.integer(r, cr), day = t.integer(r, cd), age = t.integer(r, ca),
                   count = t.integer(r, cc);
        if (region < 0 || region >= n_regions) {
            t.fail(r, "region " + std::to_string(region) + " out of range");
        }
        if (age < 0 || age >= n_ages) {
            t.fail(r, "age " + std::to_string(age) + " out of range");
        }
        if (day < 0 || day >= n_days) {
            t.fail(r, "day " + std::to_string(day) + " outside [0, " + std::to_string(n_days) + ")");
        }
        if (count < 0) {
            t.fail(r, "negative count");
        }
        int& slot = data.death(static_cast<int>(region), static_cast<int>(day), static_cast<int>(age));
        if (slot >= 0) {
            t.fail(r, "duplicate entry");
        }
        slot = static_cast<int>(count);
    }
    return data;
}

void write_deaths(const fs::path& path, const Metadata& meta, const SurveillanceData& data)
{
    CsvWriter w(path, meta, {"region", "day", "age", "count"});
    for (int m = 0; m < data.n_regions; ++m) {
        for (int d = 0; d < data.n_days; ++d) {
            for (int a = 0; a < data.n_ages; ++a) {
                const int y = data.death(m, d, a);
                if (y >= 0) {
                    w << m << d << a << y;
                    w.end_row();
                }
            }
        }
    }
    w.close();
}

void read_serology(const fs::path& path, SurveillanceData& data)
{
    const CsvTable t = read_csv(path, {"region", "day", "age", "positives", "samples"});
    const int cr = t.column("region"), cd = t.column("day"), ca = t.column("age"), cp = t.column("positives"),
              cs = t.column("samples");
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        SeroObservation o;
        o.region = static_cast<int>(t.integer(r, cr));
        o.day = static_cast<int>(t.integer(r, cd));
        o.age = static_cast<int>(t.integer(r, ca));
        o.positives = static_cast<int>(t.integer(r, cp));
        o.samples = static_cast<int>(t.integer(r, cs));
        if (o.region < 0 || o.region >= data.n_regions || o.age < 0 || o.age >= data.n_ages) {
            t.fail(r, "region or age out of range");
        }
        if (o.day < 0 || o.day >= data.n_days) {
            t.fail(r, "day " + std::to_string(o.day) + " outside [0, " + std::to_string(data.n_days) + ")");
        }
        if (o.samples < 0 || o.positives < 0 || o.positives > o.samples) {
            t.fail(r, "positives must lie in [0, samples]");
        }
        data.serology.push_back(o);
    }
}

void write_serology(const fs::path& path, const Metadata& meta, const SurveillanceData& data)
{
    CsvWriter w(path, meta, {"region", "day", "age", "positives", "samples"});
    for (const auto& o : data.serology) {
        w << o.region << o.day << o.age << o.positives << o.samples;
        w.end_row();
    }
    w.close();
}

void write_field(const fs::path& path, const Metadata& meta, const TransmissionField& field, double delta_beta)
{
    CsvWriter w(path, meta, {"region", "knot", "start_day", "value"});
    for (int m = 0; m < field.n_strata(); ++m) {
        for (int k = 0; k < field.n_knots(); ++k) {
            w << m << k << k * delta_beta << field(k, m);
            w.end_row();
        }
    }
    w.close();
}

void write_draws_wide(const fs::path& path, const Metadata& meta, const DrawStore& draws)
{
    std::vector<std::string> header = {"iteration"};
    header.insert(header.end(), draws.names().begin(), draws.names().end());
    CsvWriter w(path, meta, header);
    for (std::size_t i = 0; i < draws.size(); ++i) {
        w << draws.iterations()[i];
        for (double v : draws.rows()[i]) {
            w << v;
        }
        w.end_row();
    }
    w.close();
}

DrawStore read_draws_wide(const fs::path& path)
{
    const CsvTable t = read_csv(path, {"iteration"}, [](const std::string& h) { return !h.empty(); });
    std::vector<std::string> names(t.header.begin() + 1, t.header.end());
    if (t.header.front() != "iteration") {
        throw InputError(path.string() + ": first column must be 'iteration'");
    }
    DrawStore draws(names);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        std::vector<double> row;
        row.reserve(names.size());
        for (std::size_t c = 1; c < t.header.size(); ++c) {
            row.push_back(t.number(r, static_cast<int>(c)));
        }
        draws.add(t.integer(r, 0), std::move(row));
    }
    return draws;
}

void write_draws_long(const fs::path& path, const Metadata& meta, const DrawStore& draws)
{
    CsvWriter w(path, meta, {"iteration", "parameter", "value"});
    for (std::size_t i = 0; i < draws.size(); ++i) {
        for (std::size_t j = 0; j < draws.names().size(); ++j) {
            w << draws.iterations()[i] << draws.names()[j] << draws.rows()[i][j];
            w.end_row();
        }
    }
    w.close();
}

void write_forecast(const fs::path& path, const Metadata& meta, const ForecastDraws& fc)
{
    CsvWriter w(path, meta, {"draw", "region", "day", "age", "count", "mean"});
    for (int d = 0; d < fc.n_draws; ++d) {
        for (int m = 0; m < fc.n_regions; ++m) {
            for (int h = 0; h < fc.horizon; ++h) {
                for (int a = 0; a < fc.n_ages; ++a) {
                    w << d << m << fc.first_day + h << a << fc.count(d, m, h, a) << fc.mean(d, m, h, a);
                    w.end_row();
                }
            }
        }
    }
    w.close();
}

ForecastDraws read_forecast(const fs::path& path)
{
    const CsvTable t = read_csv(path, {"draw", "region", "day", "age", "count", "mean"});
    const int cdr = t.column("draw"), cr = t.column("region"), cd = t.column("day"), ca = t.column("age"),
              cc = t.column("count"), cm = t.column("mean");
    ForecastDraws fc;
    if (t.rows.empty()) {
        return fc;
    }
    long max_draw = 0, max_region = 0, max_age = 0, min_day = t.integer(0, cd), max_day = min_day;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        max_draw = std::max(max_draw, t.integer(r, cdr));
        max_region = std::max(max_region, t.integer(r, cr));
        max_age = std::max(max_age, t.integer(r, ca));
        min_day = std::min(min_day, t.integer(r, cd));
        max_day = std::max(max_day, t.integer(r, cd));
    }
    fc.n_draws = static_cast<int>(max_draw + 1);
    fc.n_regions = static_cast<int>(max_region + 1);
    fc.n_ages = static_cast<int>(max_age + 1);
    fc.first_day = static_cast<int>(min_day);
    fc.horizon = static_cast<int>(max_day - min_day + 1);
    const std::size_t total = static_cast<std::size_t>(fc.n_draws) * fc.n_regions * fc.horizon * fc.n_ages;
    if (t.rows.size() != total) {
        throw InputError(path.string() + ": expected " + std::to_string(total) + " rows for a complete forecast, found " +
                         std::to_string(t.rows.size()));
    }
    fc.counts.assign(total, -1);
    fc.means.assign(total, 0.0);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const long d = t.integer(r, cdr), m = t.integer(r, cr), a = t.integer(r, ca);
        const long h = t.integer(r, cd) - fc.first_day;
        if (d < 0 || m < 0 || a < 0) {
            t.fail(r, "negative index");
        }
        const std::size_t i = fc.index(static_cast<int>(d), static_cast<int>(m), static_cast<int>(h),
                                       static_cast<int>(a));
        if (fc.counts[i] >= 0) {
            t.fail(r, "duplicate entry");
        }
        const long count = t.integer(r, cc);
        if (count < 0) {
            t.fail(r, "negative count");
        }
        fc.counts[i] = static_cast<int>(count);
        fc.means[i] = t.number(r, cm);
    }
    return fc;
}

void write_scores(const fs::path& dir, const Metadata& meta, const ScoreReport& report)
{
    {
        CsvWriter w(dir / "scores.csv", meta, {"region", "day", "interval_score", "crps", "width", "sq_error"});
        for (const auto& r : report.rows) {
            w << r.region << r.day << r.interval_score << r.crps << r.width << r.sq_error;
            w.end_row();
        }
        w.close();
    }
    const auto summary = [&](const fs::path& path, const char* key, const std::vector<ScoreSummary>& rows) {
        CsvWriter w(path, meta, {key, "interval_score", "crps", "width", "sq_error"});
        for (const auto& s : rows) {
            w << s.key << s.interval_score << s.crps << s.width << s.sq_error;
            w.end_row();
        }
        w.close();
    };
    summary(dir / "scores_by_day.csv", "day", report.by_day);
    summary(dir / "scores_by_region.csv", "region", report.by_region);
}

void write_diagnostics(const fs::path& path, const Metadata& meta, const DiagnosticsReport& report)
{
    CsvWriter w(path, meta, {"parameter", "mean", "sd", "ess", "rhat"});
    for (const auto& p : report.parameters) {
        w << p.name << p.mean << p.sd << p.ess << p.rhat;
        w.end_row();
    }
    w.close();
}

} // namespace epigmrf
