#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "fedgrid/timegrid.hpp"

namespace fedgrid {

// Missing readings (ingestion gaps, filtered days) are stored in place as NaN
// so the grid stays uniform and lag arithmetic never crosses a gap silently.
inline double missing_value() { return std::numeric_limits<double>::quiet_NaN(); }
inline bool is_missing(double v) { return std::isnan(v); }

// One node's power consumption on a fixed 15-minute grid, kW.
struct TimeSeries {
    int node_id = 0;
    MinuteTime start = 0;  // must lie on the 15-minute grid
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    MinuteTime time_at(std::size_t i) const {
        return start + static_cast<MinuteTime>(i) * kStepMinutes;
    }
    MinuteTime end() const { return time_at(values.size()); }

    // Index of timestamp t, or npos if t is off-grid or out of range.
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::size_t index_of(MinuteTime t) const {
        if (t < start) return npos;
        MinuteTime d = t - start;
        if (d % kStepMinutes != 0) return npos;
        auto i = static_cast<std::size_t>(d / kStepMinutes);
        return i < values.size() ? i : npos;
    }

    // Value at timestamp t; missing_value() if absent.
    double at_time(MinuteTime t) const {
        std::size_t i = index_of(t);
        return i == npos ? missing_value() : values[i];
    }

    std::size_t count_present() const {
        std::size_t n = 0;
        for (double v : values)
            if (!is_missing(v)) ++n;
        return n;
    }
};

}  // namespace fedgrid
