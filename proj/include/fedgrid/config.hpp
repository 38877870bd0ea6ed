#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fedgrid/data.hpp"
#include "fedgrid/grid.hpp"
#include "fedgrid/nn.hpp"
#include "fedgrid/parallel.hpp"

namespace fedgrid {

// Full description of one experiment. Defaults reproduce the reference
// setup: 1000-node feeder, sigma 0.1, 61 days from 2023-05-01 (31-day
// training month + next-month test), 6 lags, 2x20 ReLU net, eta 0.001,
// day-sized mini-batches, 150 epochs.
struct ExperimentConfig {
    struct Topology {
        std::size_t num_nodes = 1000;
        double sigma = 0.1;
        std::uint64_t seed = 42;
        std::size_t days = 61;
        std::string start_date = "2023-05-01";
        BaseProfileParams profile;
    } topology;

    struct Model {
        std::vector<std::size_t> hidden_dims = {20, 20};
        ActivationKind activation = ActivationKind::ReLU;
    } model;

    struct Training {
        Hyperparams hyper;
        // "uniform" (1/N each) or explicit per-federate weights.
        std::vector<double> alpha;  // empty = uniform
        double normalization_scale = 10.0;
    } training;

    LagSpec lags;
    CalendarFilter calendar;

    struct Thresholds {
        double percentile = 90.0;
        SwingMode swing_mode = SwingMode::SignedUp;
        // swing detection uses DeltaP, shaving uses AbsolutePower, both pooled
        // over all nodes across the test horizon.
    } thresholds;

    ShaveMode shave_mode = ShaveMode::CapToThreshold;

    struct Split {
        std::string test_month = "auto";  // "auto" = month of the last reading
        int warmup_days = 1;
    } split;

    struct Forecast {
        std::size_t days = 0;  // 0 = whole test month
        bool include_last_train_day = false;
    } forecast;

    struct Paths {
        std::string data = "feeder.csv";  // relative paths resolve against out
        std::string out = "out";
    } paths;

    CsvSchema ingest;
    ExecMode exec_mode = ExecMode::OpenMP;

    // --- serialization ---
    static ExperimentConfig from_json_text(const std::string& text);  // throws ConfigError
    static ExperimentConfig load(const std::string& path);
    std::string to_json_text() const;  // canonical form, feeds the hash

    // 16-hex-digit FNV-1a over the canonical JSON; stamped into artifacts.
    std::string hash() const;

    std::string resolve_data_path() const;
    std::string out_path(const std::string& filename) const;

    MinuteTime start_time() const;  // throws ConfigError on a bad start_date
    void validate() const;
};

}  // namespace fedgrid
