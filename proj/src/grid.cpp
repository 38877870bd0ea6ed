#include "fedgrid/grid.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "fedgrid/errors.hpp"

namespace fedgrid {

void ThresholdPolicy::validate() const {
    if (!(percentile > 0.0 && percentile <= 100.0))
        throw InvalidParameterError("percentile must be in (0, 100]");
    if (window_start && window_end && *window_start >= *window_end)
        throw InvalidParameterError("threshold window is empty");
}

namespace {

bool in_window(const ThresholdPolicy& p, MinuteTime t) {
    if (p.window_start && t < *p.window_start) return false;
    if (p.window_end && t >= *p.window_end) return false;
    return true;
}

double nearest_rank(std::vector<double>& pool, double percentile) {
    std::sort(pool.begin(), pool.end());
    auto n = static_cast<double>(pool.size());
    auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * n));
    if (rank < 1) rank = 1;
    return pool[rank - 1];
}

}  // namespace

double compute_threshold(const std::vector<TimeSeries>& series, const ThresholdPolicy& policy) {
    policy.validate();
    std::vector<double> pool;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            MinuteTime t = s.time_at(i);
            if (!in_window(policy, t)) continue;
            if (policy.quantity == ThresholdQuantity::AbsolutePower) {
                if (!is_missing(s.values[i])) pool.push_back(s.values[i]);
            } else {
                if (i == 0) continue;
                if (is_missing(s.values[i]) || is_missing(s.values[i - 1])) continue;
                pool.push_back(s.values[i] - s.values[i - 1]);
            }
        }
    }
    if (pool.empty()) throw EmptyInputError("compute_threshold: empty window");
    return nearest_rank(pool, policy.percentile);
}

namespace {

std::vector<SwingEvent> swings_impl(const TimeSeries& series, double p_t, SwingMode mode,
                                    SwingSource source) {
    if (!std::isfinite(p_t)) throw InvalidParameterError("threshold must be finite");
    std::vector<SwingEvent> events;
    for (std::size_t i = 1; i < series.values.size(); ++i) {
        if (is_missing(series.values[i]) || is_missing(series.values[i - 1])) continue;
        double d = series.values[i] - series.values[i - 1];
        double tested = mode == SwingMode::Magnitude ? std::fabs(d) : d;
        if (tested > p_t)
            events.push_back(SwingEvent{series.node_id, series.time_at(i), d, source});
    }
    return events;
}

}  // namespace

std::vector<SwingEvent> detect_swings(const TimeSeries& series, double p_t, SwingMode mode) {
    return swings_impl(series, p_t, mode, SwingSource::Actual);
}

std::vector<SwingEvent> predict_swings(const TimeSeries& predicted, double p_t, SwingMode mode) {
    return swings_impl(predicted, p_t, mode, SwingSource::Predicted);
}

ShaveResult peak_shave(const TimeSeries& actual, const TimeSeries& forecast, double p_t,
                       ShaveMode mode) {
    if (forecast.values.size() < static_cast<std::size_t>(kSlotsPerDay))
        throw InsufficientHorizonError("forecast horizon shorter than 24 h");
    ShaveResult res;
    res.curtailed = actual;
    for (std::size_t i = 0; i < forecast.values.size(); ++i) {
        double f = forecast.values[i];
        if (is_missing(f) || !(f > p_t)) continue;
        MinuteTime t = forecast.time_at(i);
        std::size_t ai = actual.index_of(t);
        if (ai == TimeSeries::npos) continue;
        res.commands.push_back(CurtailmentCommand{actual.node_id, t, t - kMinutesPerDay, p_t});
        double a = actual.values[ai];
        if (is_missing(a)) continue;
        if (mode == ShaveMode::CapToThreshold)
            res.curtailed.values[ai] = std::min(a, p_t);
        else
            res.curtailed.values[ai] = std::max(a - p_t, 0.0);
    }
    return res;
}

std::array<double, kSlotsPerDay> swing_histogram(const std::vector<SwingEvent>& events,
                                                 std::size_t days) {
    if (days < 1) throw InvalidParameterError("swing_histogram: days must be >= 1");
    std::array<double, kSlotsPerDay> bins{};
    for (const auto& e : events) bins[static_cast<std::size_t>(slot_of_day(e.timestamp))] += 1.0;
    for (double& b : bins) b /= static_cast<double>(days);
    return bins;
}

std::vector<DayReduction> swing_reduction_report(const std::vector<SwingEvent>& before,
                                                 const std::vector<SwingEvent>& after) {
    std::map<CivilDate, DayReduction> by_day;
    for (const auto& e : before) {
        CivilDate d = civil_from_minutes(e.timestamp);
        auto& entry = by_day[d];
        entry.date = d;
        ++entry.before;
    }
    for (const auto& e : after) {
        CivilDate d = civil_from_minutes(e.timestamp);
        auto& entry = by_day[d];
        entry.date = d;
        ++entry.after;
    }
    std::vector<DayReduction> out;
    out.reserve(by_day.size());
    for (auto& [d, r] : by_day) out.push_back(r);
    return out;
}

}  // namespace fedgrid
