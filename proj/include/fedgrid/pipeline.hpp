#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedgrid/config.hpp"
#include "fedgrid/protocol.hpp"

namespace fedgrid {

// Deterministic experiment stages: generate -> train -> forecast ->
// grid-services -> report. Every artifact is stamped with the config hash and
// later stages reject artifacts from a different hash.

struct GenDataSummary {
    std::size_t nodes = 0;
    std::size_t readings = 0;
    std::string path;
};
GenDataSummary run_gen_data(const ExperimentConfig& cfg);

struct TrainSummary {
    std::size_t rounds = 0;
    StopReason stop_reason = StopReason::EpochCapReached;
    double round1_loss = 0.0;
    double final_loss = 0.0;
    std::string model_path;
    std::string log_path;
};
TrainSummary run_train(const ExperimentConfig& cfg);

struct ForecastSummary {
    std::size_t nodes = 0;
    std::size_t records = 0;
    std::size_t in_sample_records = 0;
    std::string path;
};
ForecastSummary run_forecast(const ExperimentConfig& cfg);

struct GridSummary {
    double swing_threshold_kw = 0.0;  // DeltaP percentile
    double shave_cap_kw = 0.0;        // AbsolutePower percentile
    std::size_t actual_events = 0;
    std::size_t predicted_events = 0;
    std::size_t commands = 0;
    std::size_t swings_before = 0;
    std::size_t swings_after = 0;
    int peak_slot_actual = 0;
    int peak_slot_predicted = 0;
};
GridSummary run_grid_services(const ExperimentConfig& cfg);

struct ReportSummary {
    std::size_t nodes = 0;
    double fleet_mean_rmse = 0.0;
    double mean_load_kw = 0.0;
    std::string path;
};
ReportSummary run_report(const ExperimentConfig& cfg);

// Feeder series as the pipeline sees them: ingested, hash-checked, calendar
// filtered, sorted by node id. The ingest accounting is returned through
// `report` when the caller wants to persist it.
std::vector<TimeSeries> load_feeder(const ExperimentConfig& cfg, IngestReport* report = nullptr);

// "auto" resolves to the month of the last reading.
YearMonth resolve_test_month(const ExperimentConfig& cfg, const std::vector<TimeSeries>& series);

}  // namespace fedgrid
