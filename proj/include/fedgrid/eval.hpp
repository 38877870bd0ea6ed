#pragma once

#include <map>
#include <string>
#include <vector>

#include "fedgrid/series.hpp"

namespace fedgrid {

struct ForecastRecord {
    int node_id = 0;
    MinuteTime timestamp = 0;
    double predicted_kw = 0.0;
    double actual_kw = 0.0;
    bool in_sample = false;  // flagged when the record lies in the training range
};

// sqrt(mean squared error) in kW.
double rmse(const std::vector<ForecastRecord>& records);

struct FleetRmse {
    std::vector<std::pair<int, double>> per_node;  // sorted by node id
    double mean = 0.0;                             // unweighted mean over nodes
};

FleetRmse fleet_rmse(const std::map<int, std::vector<ForecastRecord>>& per_node_records);

// Report JSON {per_node, fleet_mean, config_hash, ...}.
std::string fleet_report_json(const FleetRmse& fleet, const std::string& config_hash);

void write_forecast_csv(const std::string& path, const std::vector<ForecastRecord>& records,
                        const std::string& config_hash = "");
struct ForecastCsv {
    std::vector<ForecastRecord> records;
    std::string config_hash;
};
ForecastCsv read_forecast_csv(const std::string& path);

}  // namespace fedgrid
