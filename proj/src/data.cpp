#include "fedgrid/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "fedgrid/errors.hpp"
#include "fedgrid/rng.hpp"
#include "json.hpp"

namespace fedgrid {

void LagSpec::validate() const {
    if (lag_minutes.empty()) throw InvalidSpecError("lag spec must not be empty");
    int prev = 0;
    for (int m : lag_minutes) {
        if (m <= 0 || m % kStepMinutes != 0)
            throw InvalidSpecError("lags must be positive multiples of 15 minutes");
        if (m <= prev) throw InvalidSpecError("lags must be strictly increasing");
        prev = m;
    }
}

bool CalendarFilter::removes(MinuteTime day_start) const {
    if (weekdays_only && is_weekend(day_start)) return true;
    return holidays.count(civil_from_minutes(day_start)) > 0;
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double weekday_shape(const BaseProfileParams& p, double h) {
    double v = p.level_kw;
    double m = (h - p.morning_center_h) / p.morning_width_h;
    v += p.morning_amp_kw * std::exp(-m * m);
    v += p.evening_amp_kw * sigmoid((h - p.evening_rise_h) / p.evening_rise_width_h) *
         sigmoid((p.evening_fall_h - h) / p.evening_fall_width_h);
    return v;
}

double weekend_shape(const BaseProfileParams& p, double h) {
    double v = p.level_kw + p.weekend_level_shift_kw;
    double m = (h - (p.morning_center_h + 1.9)) / (p.morning_width_h + 0.9);
    v += 0.5 * p.morning_amp_kw * std::exp(-m * m);
    v += 0.8 * p.evening_amp_kw * sigmoid((h - (p.evening_rise_h + 0.5)) / 0.55) *
         sigmoid(((p.evening_fall_h + 0.3) - h) / 0.9);
    return v;
}

}  // namespace

TimeSeries default_base_profile(std::size_t days, std::uint64_t seed,
                                const BaseProfileParams& params, MinuteTime start) {
    if (days < 1) throw InvalidParameterError("default_base_profile: days must be >= 1");
    TimeSeries s;
    s.node_id = 0;
    s.start = start;
    s.values.reserve(days * kSlotsPerDay);
    Rng rng(mix_seed(seed, 0x6261736570726f66ULL));
    for (std::size_t d = 0; d < days; ++d) {
        MinuteTime day_start = start + static_cast<MinuteTime>(d) * kMinutesPerDay;
        bool weekend = is_weekend(day_start);
        for (int slot = 0; slot < kSlotsPerDay; ++slot) {
            double h = slot * 0.25;
            double v = weekend ? weekend_shape(params, h) : weekday_shape(params, h);
            v += rng.normal(0.0, params.noise_kw);
            s.values.push_back(std::clamp(v, params.min_kw, params.max_kw));
        }
    }
    return s;
}

std::vector<TimeSeries> generate_feeder(const TimeSeries& base, std::size_t num_nodes,
                                        double sigma, std::uint64_t seed, ExecMode mode) {
    if (num_nodes < 1) throw InvalidParameterError("generate_feeder: num_nodes must be >= 1");
    if (sigma < 0.0) throw InvalidParameterError("generate_feeder: sigma must be >= 0");
    std::vector<TimeSeries> nodes(num_nodes);
    nodes[0] = base;
    nodes[0].node_id = 0;
    for_each_index(static_cast<std::int64_t>(num_nodes) - 1, mode, [&](std::size_t k) {
        std::size_t n = k + 1;
        TimeSeries t;
        t.node_id = static_cast<int>(n);
        t.start = base.start;
        t.values.resize(base.values.size());
        Rng rng(mix_seed(seed, n));
        for (std::size_t i = 0; i < base.values.size(); ++i) {
            double b = base.values[i];
            if (is_missing(b)) {
                t.values[i] = missing_value();
                rng.normal();  // keep the draw stream aligned with the grid
                continue;
            }
            double g = rng.normal(0.0, sigma);
            t.values[i] = std::max(b * (1.0 + g), 0.1 * b);
        }
        nodes[n] = std::move(t);
    });
    return nodes;
}

Dataset extract_samples(const TimeSeries& series, const LagSpec& lags) {
    lags.validate();
    Dataset d;
    d.node_id = series.node_id;
    const std::size_t warmup = static_cast<std::size_t>(lags.max_lag() / kStepMinutes);
    for (std::size_t i = warmup; i < series.values.size(); ++i) {
        double target = series.values[i];
        if (is_missing(target)) continue;
        std::vector<double> feats;
        feats.reserve(lags.lag_minutes.size());
        bool ok = true;
        for (int m : lags.lag_minutes) {
            double v = series.values[i - static_cast<std::size_t>(m / kStepMinutes)];
            if (is_missing(v)) {
                ok = false;
                break;
            }
            feats.push_back(v);
        }
        if (!ok) continue;
        d.samples.push_back(Sample{std::move(feats), target, series.time_at(i)});
    }
    if (d.samples.empty())
        throw EmptyDatasetError("extract_samples: no timestamp resolves all lags (node " +
                                std::to_string(series.node_id) + ")");
    return d;
}

TimeSeries filter_days(const TimeSeries& series, const CalendarFilter& f) {
    TimeSeries out = series;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        if (f.removes(start_of_day(out.time_at(i)))) out.values[i] = missing_value();
    }
    return out;
}

SplitResult split_train_test(const TimeSeries& series, const LagSpec& lags, YearMonth test_month,
                             int warmup_days) {
    MinuteTime boundary = first_minute_of_month(test_month);
    MinuteTime test_end = first_minute_of_month(next_month(test_month));
    if (boundary <= series.start || boundary >= series.end())
        throw SplitRangeError("split boundary " + std::to_string(test_month.year) + "-" +
                              std::to_string(test_month.month) + " outside the data range");

    auto clip = [&](MinuteTime lo, MinuteTime hi) {
        TimeSeries s;
        s.node_id = series.node_id;
        lo = std::max(lo, series.start);
        hi = std::min(hi, series.end());
        s.start = lo;
        for (MinuteTime t = lo; t < hi; t += kStepMinutes) s.values.push_back(series.at_time(t));
        return s;
    };

    SplitResult r;
    r.train = extract_samples(clip(series.start, boundary), lags);
    r.train.provenance = "split:train";

    // Test features may reach warmup_days back into the train range; targets
    // stay inside the test month.
    TimeSeries test_series =
        clip(boundary - static_cast<MinuteTime>(warmup_days) * kMinutesPerDay, test_end);
    Dataset test_all = extract_samples(test_series, lags);
    r.test.node_id = series.node_id;
    r.test.provenance = "split:test";
    for (auto& s : test_all.samples)
        if (s.timestamp >= boundary) r.test.samples.push_back(std::move(s));
    if (r.test.samples.empty())
        throw EmptyDatasetError("split_train_test: no test samples in the target month");
    return r;
}

// --- CSV ---

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

bool parse_double(const std::string& s, double& out) {
    const char* b = s.data();
    const char* e = b + s.size();
    while (b < e && *b == ' ') ++b;
    auto [p, ec] = std::from_chars(b, e, out);
    return ec == std::errc() && p == e && std::isfinite(out);
}

std::string format_double(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

}  // namespace

std::string IngestReport::to_json(const std::string& stamp_hash) const {
    nlohmann::ordered_json j;
    if (!stamp_hash.empty()) j["config_hash"] = stamp_hash;
    j["rows_read"] = rows_read;
    j["rows_used"] = rows_used;
    j["duplicates"] = duplicates;
    j["rejects"] = nlohmann::ordered_json::array();
    for (const auto& r : rejects) j["rejects"].push_back({{"line", r.line}, {"reason", r.reason}});
    return j.dump(2);
}

IngestResult ingest_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);

    IngestResult res;
    std::string line;
    std::size_t line_no = 0;

    // Leading comment lines may carry the config hash.
    std::string header_line;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line[0] == '#') {
            auto pos = line.find("config_hash=");
            if (pos != std::string::npos)
                res.report.config_hash = line.substr(pos + std::string("config_hash=").size());
            continue;
        }
        header_line = line;
        break;
    }
    if (header_line.empty()) throw CsvEmptyError("empty file: " + path);

    auto header = split_csv_line(header_line);
    auto find_col = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw CsvMissingColumnError("missing column '" + name + "' in " + path);
    };
    std::size_t c_ts = find_col(schema.timestamp_col);
    std::size_t c_node = find_col(schema.node_col);
    std::size_t c_pow = find_col(schema.power_col);

    // node -> (grid timestamp -> value); map keeps times sorted, insert-or-assign
    // implements last-wins for duplicates.
    std::map<int, std::map<MinuteTime, double>> grid;

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') continue;
        ++res.report.rows_read;
        auto cells = split_csv_line(line);
        if (cells.size() <= std::max({c_ts, c_node, c_pow})) {
            res.report.rejects.push_back({line_no, "too few columns"});
            continue;
        }
        MinuteTime t = 0;
        if (!try_parse_timestamp(cells[c_ts], t)) {
            // Sub-minute timestamps are parsed leniently here so that they can
            // be snapped; anything else is a hard error per the contract.
            int y, mo, d, h, mi, s;
            if (std::sscanf(cells[c_ts].c_str(), "%4d-%2d-%2d%*c%2d:%2d:%2d", &y, &mo, &d, &h,
                            &mi, &s) == 6 &&
                mo >= 1 && mo <= 12 && d >= 1 && d <= 31 && h >= 0 && h <= 23 && mi >= 0 &&
                mi <= 59 && s >= 0 && s <= 59) {
                t = minutes_from_civil({y, static_cast<unsigned>(mo), static_cast<unsigned>(d)}, h,
                                       mi);
                if (s >= 30) t += 1;  // round to the nearest minute before grid snapping
            } else {
                throw CsvTimestampError("unparsable timestamp '" + cells[c_ts] + "' at line " +
                                        std::to_string(line_no));
            }
        }
        double power = 0.0;
        if (!parse_double(cells[c_pow], power)) {
            res.report.rejects.push_back({line_no, "bad power value"});
            continue;
        }
        double node_d = 0.0;
        if (!parse_double(cells[c_node], node_d) || node_d != std::floor(node_d)) {
            res.report.rejects.push_back({line_no, "bad node id"});
            continue;
        }
        int node = static_cast<int>(node_d);

        MinuteTime rem = t % kStepMinutes;
        MinuteTime snapped;
        if (rem == 0) {
            snapped = t;
        } else if (rem == 1) {
            snapped = t - 1;
        } else if (rem == kStepMinutes - 1) {
            snapped = t + 1;
        } else {
            res.report.rejects.push_back({line_no, "timestamp off the 15-minute grid"});
            continue;
        }
        auto [it, inserted] = grid[node].insert_or_assign(snapped, power);
        (void)it;
        if (!inserted) ++res.report.duplicates;
        ++res.report.rows_used;
    }
    if (res.report.rows_read == 0) throw CsvEmptyError("no data rows in " + path);

    for (auto& [node, readings] : grid) {
        TimeSeries s;
        s.node_id = node;
        s.start = readings.begin()->first;
        MinuteTime last = readings.rbegin()->first;
        s.values.assign(static_cast<std::size_t>((last - s.start) / kStepMinutes) + 1,
                        missing_value());
        for (auto& [t, v] : readings)
            s.values[static_cast<std::size_t>((t - s.start) / kStepMinutes)] = v;
        res.series.push_back(std::move(s));
    }
    return res;
}

void write_series_csv(const std::string& path, const std::vector<TimeSeries>& series,
                      const std::string& config_hash) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    if (!config_hash.empty()) out << "# config_hash=" << config_hash << "\n";
    out << "timestamp,node_id,power_kw\n";
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            if (is_missing(s.values[i])) continue;
            out << format_timestamp(s.time_at(i)) << ',' << s.node_id << ','
                << format_double(s.values[i]) << '\n';
        }
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace fedgrid
