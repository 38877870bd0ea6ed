#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fedgrid/series.hpp"

namespace fedgrid {

enum class ThresholdQuantity { DeltaP, AbsolutePower };

// Nearest-rank percentile of the chosen quantity; the optional window limits
// which timestamps feed the pool (single-day vs multi-month horizons).
struct ThresholdPolicy {
    double percentile = 90.0;  // in (0, 100]
    ThresholdQuantity quantity = ThresholdQuantity::DeltaP;
    std::optional<MinuteTime> window_start;  // inclusive
    std::optional<MinuteTime> window_end;    // exclusive

    void validate() const;
};

enum class SwingSource { Actual, Predicted };

// Signed upswing detection by default; Magnitude compares |delta P|.
enum class SwingMode { SignedUp, Magnitude };

struct SwingEvent {
    int node_id = 0;
    MinuteTime timestamp = 0;  // T0, the later reading of the pair
    double delta_p = 0.0;      // kW
    SwingSource source = SwingSource::Actual;
};

enum class ShaveMode { CapToThreshold, ReduceByThreshold };

struct CurtailmentCommand {
    int node_id = 0;
    MinuteTime timestamp = 0;   // the capped interval
    MinuteTime issue_time = 0;  // timestamp - 24 h
    double cap_kw = 0.0;
};

// Nearest-rank percentile of the configured quantity over every present
// reading (or consecutive present pair, for DeltaP) in the window.
double compute_threshold(const std::vector<TimeSeries>& series, const ThresholdPolicy& policy);

std::vector<SwingEvent> detect_swings(const TimeSeries& series, double p_t,
                                      SwingMode mode = SwingMode::SignedUp);

// Same rule applied to a forecast series; events tagged Predicted.
std::vector<SwingEvent> predict_swings(const TimeSeries& predicted, double p_t,
                                       SwingMode mode = SwingMode::SignedUp);

struct ShaveResult {
    TimeSeries curtailed;
    std::vector<CurtailmentCommand> commands;
};

// For every T with forecast(T) > p_t a command is issued at T-24h; the
// curtailed series honors the cap at commanded timestamps (flexible loads).
ShaveResult peak_shave(const TimeSeries& actual, const TimeSeries& forecast, double p_t,
                       ShaveMode mode = ShaveMode::CapToThreshold);

// Average event count per time-of-day slot: bin = count(slot) / days.
std::array<double, kSlotsPerDay> swing_histogram(const std::vector<SwingEvent>& events,
                                                 std::size_t days);

struct DayReduction {
    CivilDate date;
    std::size_t before = 0;
    std::size_t after = 0;
    // negative values mirror over-prediction days
    long long reduction() const {
        return static_cast<long long>(before) - static_cast<long long>(after);
    }
};

// Per-day (count_before - count_after), covering every day seen in either set.
std::vector<DayReduction> swing_reduction_report(const std::vector<SwingEvent>& before,
                                                 const std::vector<SwingEvent>& after);

}  // namespace fedgrid
