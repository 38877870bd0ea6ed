#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fedgrid/data.hpp"
#include "fedgrid/nn.hpp"
#include "fedgrid/parallel.hpp"
#include "fedgrid/rng.hpp"

namespace fedgrid {

enum class FederateKind { HomeEnergyManager, EdgeResource };

struct FederateId {
    int index = 0;
    FederateKind kind = FederateKind::HomeEnergyManager;
};

// Per-federate normalization: x' = (x - offset) / scale. Computed from local
// training features; never serialized into protocol messages.
struct NormStats {
    double offset = 0.0;
    double scale = 1.0;

    double normalize(double x) const { return (x - offset) / scale; }
    double denormalize(double y) const { return y * scale + offset; }
};

// One IoT participant. Local samples are already normalized; raw data never
// enters this struct, and nothing here is ever serialized except through the
// GradientReport it emits.
struct Federate {
    FederateId id;
    std::vector<Sample> samples;             // normalized, chronological
    NormStats stats;
    std::vector<std::size_t> day_offsets;    // start of each full 96-sample day
    std::uint64_t day_seed = 0;              // stream id for the day-choice RNG
    Rng rng{0};                              // re-seeded by train()
    std::uint64_t expected_round = 0;
};

// Normalizes the dataset with stats from its own features (scaled to
// target_scale standard deviations), and indexes full 96-sample days.
// Throws EmptyDatasetError when no full day exists.
Federate make_federate(FederateId id, const Dataset& raw, double target_scale,
                       std::uint64_t day_seed);

struct GlobalModel {
    ModelWeights weights;
    std::uint64_t round = 0;
};

struct AggregationWeights {
    std::vector<double> alpha;

    static AggregationWeights uniform(std::size_t n);
    void validate() const;
};

struct WeightBroadcast {
    std::uint64_t round = 0;
    ModelWeights weights;
};

// The only thing a federate ever sends: its scaled gradient step and the
// mini-batch loss at the broadcast weights. Payload size depends only on the
// layer spec, never on the local dataset.
struct GradientReport {
    std::uint64_t round = 0;
    int federate_index = 0;
    GradientStep step;
    double loss = 0.0;
};

enum class StopReason { ToleranceReached, EpochCapReached };
std::string to_string(StopReason r);

struct TrainingRound {
    std::uint64_t round = 0;  // 1-based
    double weighted_mean_loss = 0.0;
    std::vector<double> per_federate_loss;
};

struct TrainingLog {
    std::vector<TrainingRound> rounds;
    StopReason stop_reason = StopReason::EpochCapReached;
};

// One synchronous local step: adopt the broadcast weights, draw a random full
// day as the mini-batch, report delta = -eta * grad and the mini-batch loss.
GradientReport local_round(Federate& f, const WeightBroadcast& b, const Hyperparams& h);

// w_G <- w_G + sum_i alpha_i * delta_i, summed in ascending federate index
// order; expects exactly one report per federate, all for the current round.
GlobalModel aggregate(const GlobalModel& g, const std::vector<GradientReport>& reports,
                      const AggregationWeights& alpha);

struct TrainOptions {
    ExecMode mode = ExecMode::OpenMP;
    // Called after each aggregated round (progress logging, trajectory capture).
    std::function<void(const TrainingRound&, const GlobalModel&)> on_round;
};

struct TrainResult {
    GlobalModel model;
    TrainingLog log;
};

// Barrier-synchronous rounds: broadcast -> local_round for all -> aggregate,
// until the alpha-weighted mean loss drops below h.tolerance or h.max_epochs
// rounds ran. Each federate's day RNG is seeded from (seed, federate.day_seed)
// so results are independent of thread count and identical across runs.
TrainResult train(GlobalModel g, std::vector<Federate>& federates, const Hyperparams& h,
                  const AggregationWeights& alpha, std::uint64_t seed,
                  const TrainOptions& options = {});

// --- wire codec ---
// Frame: 4-byte little-endian body length + UTF-8 JSON body
// {"v":1,"type":"broadcast"|"report","round":...,"payload":{...}} with floats
// as fixed-width 17-significant-digit strings (see floatcodec.hpp).

std::vector<std::uint8_t> encode_message(const WeightBroadcast& m);
std::vector<std::uint8_t> encode_message(const GradientReport& m);

using DecodedMessage = std::variant<WeightBroadcast, GradientReport>;
DecodedMessage decode_message(std::span<const std::uint8_t> bytes);

}  // namespace fedgrid
