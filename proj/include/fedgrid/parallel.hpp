#pragma once

#include <cstdint>

namespace fedgrid {

// Every parallel loop in this library writes to disjoint per-index slots, so
// Serial and OpenMP produce bit-identical results; Serial is kept as the
// reference path for tests and fedgrid-bench compares the two.
enum class ExecMode { Serial, OpenMP };

template <class F>
void for_each_index(std::int64_t n, ExecMode mode, F&& body) {
    if (mode == ExecMode::OpenMP) {
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) body(static_cast<std::size_t>(i));
    } else {
        for (std::int64_t i = 0; i < n; ++i) body(static_cast<std::size_t>(i));
    }
}

}  // namespace fedgrid
