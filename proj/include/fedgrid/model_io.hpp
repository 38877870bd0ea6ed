#pragma once

#include <map>
#include <string>

#include "fedgrid/data.hpp"
#include "fedgrid/nn.hpp"
#include "fedgrid/protocol.hpp"

namespace fedgrid {

// Persisted global model: weights, the lag spec it expects, and per-node
// normalization stats. Versioned JSON with fixed-width float strings so
// save/load round-trips bit-exactly.
struct SavedModel {
    ModelWeights weights;
    LagSpec lags;
    double target_scale = 1.0;
    std::map<int, NormStats> per_node;
    std::string config_hash;
    std::uint64_t rounds = 0;
};

void save_model(const std::string& path, const SavedModel& model);
SavedModel load_model(const std::string& path);

}  // namespace fedgrid
