#include "fedgrid/protocol.hpp"

#include <algorithm>
#include <cmath>

#include "fedgrid/errors.hpp"
#include "fedgrid/floatcodec.hpp"
#include "json.hpp"

namespace fedgrid {

Federate make_federate(FederateId id, const Dataset& raw, double target_scale,
                       std::uint64_t day_seed) {
    if (!(target_scale > 0.0))
        throw InvalidParameterError("make_federate: target_scale must be > 0");
    if (raw.samples.empty())
        throw EmptyDatasetError("make_federate: node " + std::to_string(id.index) +
                                " has no samples");

    // Stats over the local training features only.
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (const auto& s : raw.samples)
        for (double v : s.features) {
            sum += v;
            sq += v * v;
            ++n;
        }
    double mean = sum / static_cast<double>(n);
    double var = std::max(sq / static_cast<double>(n) - mean * mean, 0.0);
    double sd = std::sqrt(var);

    Federate f;
    f.id = id;
    f.day_seed = day_seed;
    f.stats.offset = mean;
    f.stats.scale = sd > 1e-12 ? sd / target_scale : 1.0;

    f.samples.reserve(raw.samples.size());
    for (const auto& s : raw.samples) {
        Sample ns;
        ns.timestamp = s.timestamp;
        ns.target = f.stats.normalize(s.target);
        ns.features.reserve(s.features.size());
        for (double v : s.features) ns.features.push_back(f.stats.normalize(v));
        f.samples.push_back(std::move(ns));
    }

    // Index full 96-sample days (short days stay out of the random-day pool).
    std::size_t i = 0;
    while (i < f.samples.size()) {
        MinuteTime day = start_of_day(f.samples[i].timestamp);
        std::size_t j = i;
        while (j < f.samples.size() && start_of_day(f.samples[j].timestamp) == day) ++j;
        if (j - i == kSlotsPerDay) f.day_offsets.push_back(i);
        i = j;
    }
    if (f.day_offsets.empty())
        throw EmptyDatasetError("make_federate: node " + std::to_string(id.index) +
                                " has no full training day");
    return f;
}

AggregationWeights AggregationWeights::uniform(std::size_t n) {
    AggregationWeights w;
    w.alpha.assign(n, 1.0 / static_cast<double>(n));
    return w;
}

void AggregationWeights::validate() const {
    if (alpha.empty()) throw InvalidParameterError("aggregation weights must not be empty");
    for (double a : alpha)
        if (!(a >= 0.0)) throw InvalidParameterError("aggregation weights must be >= 0");
}

std::string to_string(StopReason r) {
    return r == StopReason::ToleranceReached ? "tolerance_reached" : "epoch_cap_reached";
}

GradientReport local_round(Federate& f, const WeightBroadcast& b, const Hyperparams& h) {
    if (b.round != f.expected_round)
        throw ProtocolDesyncError("federate " + std::to_string(f.id.index) + " expected round " +
                                  std::to_string(f.expected_round) + ", got " +
                                  std::to_string(b.round));
    if (f.day_offsets.empty())
        throw EmptyDatasetError("federate " + std::to_string(f.id.index) +
                                " has no full training day");
    std::size_t day = static_cast<std::size_t>(f.rng.below(f.day_offsets.size()));
    std::size_t begin = f.day_offsets[day];
    std::size_t count = std::min<std::size_t>(h.mini_batch_size, kSlotsPerDay);
    std::vector<Sample> batch(f.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                              f.samples.begin() + static_cast<std::ptrdiff_t>(begin + count));

    GradientReport r;
    r.round = b.round;
    r.federate_index = f.id.index;
    r.loss = batch_loss(b.weights, batch);
    r.step = gradient_step(b.weights, batch, h.learning_rate);
    f.expected_round = b.round + 1;
    return r;
}

GlobalModel aggregate(const GlobalModel& g, const std::vector<GradientReport>& reports,
                      const AggregationWeights& alpha) {
    alpha.validate();
    const std::size_t n = alpha.alpha.size();
    if (reports.size() != n)
        throw IncompleteRoundError("expected " + std::to_string(n) + " reports, got " +
                                   std::to_string(reports.size()));
    std::vector<const GradientReport*> ordered(n, nullptr);
    for (const auto& r : reports) {
        if (r.round != g.round)
            throw ProtocolDesyncError("report for round " + std::to_string(r.round) +
                                      " in round " + std::to_string(g.round));
        if (r.federate_index < 0 || static_cast<std::size_t>(r.federate_index) >= n)
            throw IncompleteRoundError("report from unknown federate " +
                                       std::to_string(r.federate_index));
        if (ordered[static_cast<std::size_t>(r.federate_index)] != nullptr)
            throw IncompleteRoundError("duplicate report from federate " +
                                       std::to_string(r.federate_index));
        ordered[static_cast<std::size_t>(r.federate_index)] = &r;
        check_congruent(g.weights, r.step);
    }

    // Fixed ascending-index summation keeps results independent of arrival
    // order and thread count.
    GradientStep acc;
    for (const auto& lp : g.weights.layers) {
        LayerParams z;
        z.weights = Matrix(lp.weights.rows, lp.weights.cols);
        z.bias.assign(lp.bias.size(), 0.0);
        acc.layers.push_back(std::move(z));
    }
    for (std::size_t i = 0; i < n; ++i) {
        double a = alpha.alpha[i];
        const GradientStep& d = ordered[i]->step;
        for (std::size_t l = 0; l < acc.layers.size(); ++l) {
            auto& al = acc.layers[l];
            const auto& dl = d.layers[l];
            for (std::size_t k = 0; k < al.weights.data.size(); ++k)
                al.weights.data[k] += a * dl.weights.data[k];
            for (std::size_t k = 0; k < al.bias.size(); ++k) al.bias[k] += a * dl.bias[k];
        }
    }

    GlobalModel out;
    out.weights = apply_step(g.weights, acc);
    out.round = g.round + 1;
    return out;
}

namespace {

void validate_hyperparams(const Hyperparams& h) {
    if (!(h.learning_rate > 0.0)) throw InvalidParameterError("learning_rate must be > 0");
    if (h.mini_batch_size < 1) throw InvalidParameterError("mini_batch_size must be >= 1");
    if (h.max_epochs < 1) throw InvalidParameterError("max_epochs must be >= 1");
    if (!(h.tolerance > 0.0)) throw InvalidParameterError("tolerance must be > 0");
}

bool weights_finite(const ModelWeights& w) {
    for (const auto& l : w.layers) {
        for (double v : l.weights.data)
            if (!std::isfinite(v)) return false;
        for (double v : l.bias)
            if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace

TrainResult train(GlobalModel g, std::vector<Federate>& federates, const Hyperparams& h,
                  const AggregationWeights& alpha, std::uint64_t seed,
                  const TrainOptions& options) {
    validate_hyperparams(h);
    alpha.validate();
    if (federates.empty()) throw EmptyInputError("train: no federates");
    if (alpha.alpha.size() != federates.size())
        throw InvalidParameterError("train: one aggregation weight per federate required");
    const std::size_t input_dim = g.weights.input_dim();
    for (auto& f : federates) {
        if (f.samples.front().features.size() != input_dim)
            throw ShapeError("federate " + std::to_string(f.id.index) + " feature width " +
                             std::to_string(f.samples.front().features.size()) +
                             " does not match model input " + std::to_string(input_dim));
        f.rng = Rng(mix_seed(seed, f.day_seed));
        f.expected_round = g.round;
    }

    double alpha_sum = 0.0;
    for (double a : alpha.alpha) alpha_sum += a;
    if (!(alpha_sum > 0.0)) throw InvalidParameterError("aggregation weights sum to zero");

    TrainResult res;
    res.model = std::move(g);
    const std::size_t n = federates.size();
    for (std::size_t epoch = 1; epoch <= h.max_epochs; ++epoch) {
        WeightBroadcast b{res.model.round, res.model.weights};
        std::vector<GradientReport> reports(n);
        for_each_index(static_cast<std::int64_t>(n), options.mode,
                       [&](std::size_t i) { reports[i] = local_round(federates[i], b, h); });

        TrainingRound entry;
        entry.round = epoch;
        entry.per_federate_loss.resize(n);
        double wsum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double loss = reports[i].loss;
            if (!std::isfinite(loss))
                throw DivergenceError("non-finite loss at round " + std::to_string(epoch) +
                                      " (federate " + std::to_string(i) + ")");
            entry.per_federate_loss[i] = loss;
            wsum += alpha.alpha[i] * loss;
        }
        entry.weighted_mean_loss = wsum / alpha_sum;

        res.model = aggregate(res.model, reports, alpha);
        if (!weights_finite(res.model.weights))
            throw DivergenceError("non-finite weights after round " + std::to_string(epoch));

        res.log.rounds.push_back(entry);
        if (options.on_round) options.on_round(entry, res.model);

        if (entry.weighted_mean_loss < h.tolerance) {
            res.log.stop_reason = StopReason::ToleranceReached;
            return res;
        }
    }
    res.log.stop_reason = StopReason::EpochCapReached;
    return res;
}

// --- wire codec ---

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json layers_to_json(const std::vector<LayerParams>& layers, const char* wkey,
                            const char* bkey) {
    ordered_json arr = ordered_json::array();
    for (const auto& l : layers) {
        ordered_json jl;
        jl["rows"] = l.weights.rows;
        jl["cols"] = l.weights.cols;
        ordered_json w = ordered_json::array();
        for (double v : l.weights.data) w.push_back(format_fixed_double(v));
        ordered_json b = ordered_json::array();
        for (double v : l.bias) b.push_back(format_fixed_double(v));
        jl[wkey] = std::move(w);
        jl[bkey] = std::move(b);
        arr.push_back(std::move(jl));
    }
    return arr;
}

std::vector<std::uint8_t> frame(const ordered_json& body) {
    std::string text = body.dump();
    std::vector<std::uint8_t> out;
    out.reserve(4 + text.size());
    auto len = static_cast<std::uint32_t>(text.size());
    out.push_back(static_cast<std::uint8_t>(len & 0xff));
    out.push_back(static_cast<std::uint8_t>((len >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>((len >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((len >> 24) & 0xff));
    out.insert(out.end(), text.begin(), text.end());
    return out;
}

double field_double(const ordered_json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_string())
        throw DecodeError(std::string("missing float field '") + key + "'", 4);
    double v = 0.0;
    if (!try_parse_fixed_double(j[key].get<std::string>(), v))
        throw DecodeError(std::string("malformed float in field '") + key + "'", 4);
    return v;
}

std::vector<LayerParams> layers_from_json(const ordered_json& arr, const char* wkey,
                                          const char* bkey) {
    if (!arr.is_array() || arr.empty()) throw DecodeError("payload has no layers", 4);
    std::vector<LayerParams> layers;
    for (const auto& jl : arr) {
        if (!jl.contains("rows") || !jl.contains("cols") || !jl.contains(wkey) ||
            !jl.contains(bkey))
            throw DecodeError("layer entry missing fields", 4);
        LayerParams l;
        l.weights = Matrix(jl["rows"].get<std::size_t>(), jl["cols"].get<std::size_t>());
        const auto& w = jl[wkey];
        const auto& b = jl[bkey];
        if (!w.is_array() || w.size() != l.weights.data.size())
            throw DecodeError("weight array size mismatch", 4);
        if (!b.is_array() || b.size() != l.weights.rows)
            throw DecodeError("bias array size mismatch", 4);
        for (std::size_t i = 0; i < l.weights.data.size(); ++i) {
            if (!w[i].is_string() ||
                !try_parse_fixed_double(w[i].get<std::string>(), l.weights.data[i]))
                throw DecodeError("malformed float in weight array", 4);
        }
        l.bias.resize(l.weights.rows);
        for (std::size_t i = 0; i < l.bias.size(); ++i) {
            if (!b[i].is_string() || !try_parse_fixed_double(b[i].get<std::string>(), l.bias[i]))
                throw DecodeError("malformed float in bias array", 4);
        }
        layers.push_back(std::move(l));
    }
    return layers;
}

}  // namespace

std::vector<std::uint8_t> encode_message(const WeightBroadcast& m) {
    ordered_json j;
    j["v"] = 1;
    j["type"] = "broadcast";
    j["round"] = m.round;
    ordered_json payload;
    payload["activation"] = to_string(m.weights.activation);
    payload["layers"] = layers_to_json(m.weights.layers, "w", "b");
    j["payload"] = std::move(payload);
    return frame(j);
}

std::vector<std::uint8_t> encode_message(const GradientReport& m) {
    ordered_json j;
    j["v"] = 1;
    j["type"] = "report";
    j["round"] = m.round;
    j["federate"] = m.federate_index;
    ordered_json payload;
    payload["loss"] = format_fixed_double(m.loss);
    payload["layers"] = layers_to_json(m.step.layers, "dw", "db");
    j["payload"] = std::move(payload);
    return frame(j);
}

DecodedMessage decode_message(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4) throw DecodeError("truncated length prefix", bytes.size());
    std::uint32_t len = static_cast<std::uint32_t>(bytes[0]) |
                        (static_cast<std::uint32_t>(bytes[1]) << 8) |
                        (static_cast<std::uint32_t>(bytes[2]) << 16) |
                        (static_cast<std::uint32_t>(bytes[3]) << 24);
    if (bytes.size() < 4 + static_cast<std::size_t>(len))
        throw DecodeError("truncated payload", bytes.size());
    if (bytes.size() > 4 + static_cast<std::size_t>(len))
        throw DecodeError("trailing bytes after frame", 4 + static_cast<std::size_t>(len));

    ordered_json j;
    try {
        j = ordered_json::parse(bytes.begin() + 4, bytes.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw DecodeError(std::string("invalid JSON: ") + e.what(), 4 + e.byte);
    }
    if (!j.contains("v") || !j["v"].is_number_integer())
        throw DecodeError("missing version field", 4);
    if (j["v"].get<int>() != 1)
        throw VersionError("unsupported message version " + j["v"].dump());
    if (!j.contains("type") || !j.contains("round") || !j.contains("payload"))
        throw DecodeError("missing required fields", 4);

    std::string type = j["type"].get<std::string>();
    const auto& payload = j["payload"];
    if (type == "broadcast") {
        WeightBroadcast m;
        m.round = j["round"].get<std::uint64_t>();
        if (!payload.contains("activation") ||
            !try_parse_activation(payload["activation"].get<std::string>(),
                                  m.weights.activation))
            throw DecodeError("unknown activation", 4);
        m.weights.layers = layers_from_json(payload["layers"], "w", "b");
        return m;
    }
    if (type == "report") {
        GradientReport m;
        m.round = j["round"].get<std::uint64_t>();
        if (!j.contains("federate")) throw DecodeError("report without federate id", 4);
        m.federate_index = j["federate"].get<int>();
        m.loss = field_double(payload, "loss");
        m.step.layers = layers_from_json(payload["layers"], "dw", "db");
        return m;
    }
    throw DecodeError("unknown message type '" + type + "'", 4);
}

}  // namespace fedgrid
