#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fedgrid/nn.hpp"
#include "fedgrid/parallel.hpp"
#include "fedgrid/series.hpp"

namespace fedgrid {

// Lag offsets in minutes used to build feature vectors; strictly increasing,
// each a positive multiple of 15.
struct LagSpec {
    std::vector<int> lag_minutes = {15, 30, 60, 90, 120, 1440};

    void validate() const;  // throws InvalidSpecError
    int max_lag() const { return lag_minutes.empty() ? 0 : lag_minutes.back(); }
};

struct CalendarFilter {
    bool weekdays_only = false;
    std::set<CivilDate> holidays;

    bool removes(MinuteTime day_start) const;
};

struct Dataset {
    int node_id = 0;
    std::vector<Sample> samples;
    std::string provenance;
};

// Shape parameters of the synthetic base load profile. The defaults give a
// weekday curve with a morning bump and a steep evening ramp peaking between
// 17:00 and 21:00, weekends level-shifted with flatter, later peaks.
struct BaseProfileParams {
    double level_kw = 9.0;
    double morning_amp_kw = 8.0;
    double morning_center_h = 7.6;
    double morning_width_h = 1.1;
    double evening_amp_kw = 16.0;
    double evening_rise_h = 17.9;
    double evening_rise_width_h = 0.30;
    double evening_fall_h = 21.5;
    double evening_fall_width_h = 0.8;
    double weekend_level_shift_kw = 2.0;
    double noise_kw = 0.35;
    double min_kw = 5.0;
    double max_kw = 45.0;
};

// Deterministic synthetic base profile, 96 readings per day.
TimeSeries default_base_profile(std::size_t days, std::uint64_t seed,
                                const BaseProfileParams& params = {},
                                MinuteTime start = minutes_from_civil({2023, 5, 1}));

// Node 0 is the base; nodes 1..n-1 are base[t] * (1 + g), g ~ N(0, sigma)
// i.i.d. per node per timestep, floored at 0.1 * base[t] to stay positive.
std::vector<TimeSeries> generate_feeder(const TimeSeries& base, std::size_t num_nodes,
                                        double sigma, std::uint64_t seed,
                                        ExecMode mode = ExecMode::OpenMP);

// One Sample per timestamp where the target and every lagged value resolve to
// a present reading. Throws EmptyDatasetError if none do.
Dataset extract_samples(const TimeSeries& series, const LagSpec& lags);

// Marks removed days' readings as missing; grid and indexing are unchanged so
// lag extraction can never reach into a removed day.
TimeSeries filter_days(const TimeSeries& series, const CalendarFilter& f);

// train: samples with target before test_month; test: targets inside
// test_month, features allowed to reach warmup_days back across the boundary.
struct SplitResult {
    Dataset train;
    Dataset test;
};
SplitResult split_train_test(const TimeSeries& series, const LagSpec& lags, YearMonth test_month,
                             int warmup_days = 1);

// --- CSV ingestion / export ---

struct CsvSchema {
    std::string timestamp_col = "timestamp";
    std::string node_col = "node_id";
    std::string power_col = "power_kw";
};

struct IngestReject {
    std::size_t line = 0;  // 1-based physical line in the file
    std::string reason;
};

struct IngestReport {
    std::size_t rows_read = 0;
    std::size_t rows_used = 0;
    std::size_t duplicates = 0;  // duplicate (node, timestamp), last wins
    std::vector<IngestReject> rejects;
    std::string config_hash;  // from a leading "# config_hash=..." comment, if any

    // {rows_read, rows_used, duplicates, rejects:[{line, reason}]}, plus a
    // config_hash field when stamping an artifact.
    std::string to_json(const std::string& stamp_hash = "") const;
};

struct IngestResult {
    std::vector<TimeSeries> series;  // sorted by node_id
    IngestReport report;
};

// Rows grouped by node, snapped to the 15-minute grid (tolerance +-1 minute),
// off-grid rows rejected with a reason, duplicates last-wins. Distinct hard
// errors: missing column, unparsable timestamp, empty file.
IngestResult ingest_csv(const std::string& path, const CsvSchema& schema = {});

// Header "timestamp,node_id,power_kw"; one row per present reading; missing
// readings are simply absent. Optional leading "# config_hash=..." comment.
void write_series_csv(const std::string& path, const std::vector<TimeSeries>& series,
                      const std::string& config_hash = "");

}  // namespace fedgrid
