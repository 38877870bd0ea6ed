#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstring>
#include <string>

#include "doctest.h"
#include "fedgrid/data.hpp"
#include "fedgrid/errors.hpp"
#include "fedgrid/floatcodec.hpp"
#include "fedgrid/protocol.hpp"

using namespace fedgrid;

namespace {

// Synthetic dataset: `days` full days of 96 samples, simple sinusoid-ish.
Dataset make_dataset(int node, std::size_t days, double scale = 10.0) {
    Dataset d;
    d.node_id = node;
    MinuteTime start = minutes_from_civil({2023, 5, 2});
    for (std::size_t day = 0; day < days; ++day) {
        for (int slot = 0; slot < kSlotsPerDay; ++slot) {
            MinuteTime t = start + static_cast<MinuteTime>(day) * kMinutesPerDay +
                           static_cast<MinuteTime>(slot) * kStepMinutes;
            Sample s;
            s.timestamp = t;
            double base = scale + 3.0 * std::sin(slot * 0.13) + 0.01 * static_cast<double>(day);
            s.target = base;
            s.features = {base - 0.1, base - 0.2, base - 0.3, base + 0.1, base + 0.2, base - 0.4};
            d.samples.push_back(std::move(s));
        }
    }
    return d;
}

ModelWeights default_net(std::uint64_t seed = 42) {
    LayerSpec spec;  // 6 -> 20 -> 20 -> 1
    return init_weights(spec, seed);
}

bool bit_equal(const ModelWeights& a, const ModelWeights& b) {
    if (a.layers.size() != b.layers.size()) return false;
    for (std::size_t l = 0; l < a.layers.size(); ++l)
        if (a.layers[l].weights.data != b.layers[l].weights.data ||
            a.layers[l].bias != b.layers[l].bias)
            return false;
    return true;
}

double max_weight_diff(const ModelWeights& a, const ModelWeights& b) {
    double worst = 0.0;
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
        for (std::size_t i = 0; i < a.layers[l].weights.data.size(); ++i)
            worst = std::max(worst,
                             std::fabs(a.layers[l].weights.data[i] - b.layers[l].weights.data[i]));
        for (std::size_t i = 0; i < a.layers[l].bias.size(); ++i)
            worst = std::max(worst, std::fabs(a.layers[l].bias[i] - b.layers[l].bias[i]));
    }
    return worst;
}

}  // namespace

TEST_CASE("fixed-width float codec: constant width, bit-exact round-trip") {
    Rng rng(1);
    for (int i = 0; i < 2000; ++i) {
        double v;
        switch (i % 5) {
            case 0: v = rng.uniform(-1e3, 1e3); break;
            case 1: v = rng.normal() * 1e-200; break;
            case 2: v = rng.normal() * 1e200; break;
            case 3: v = rng.uniform(-1e-8, 1e-8); break;
            default: v = (i == 4) ? 0.0 : -0.0; break;
        }
        std::string text = format_fixed_double(v);
        CHECK(text.size() == kFixedDoubleWidth);
        double back = 0.0;
        REQUIRE(try_parse_fixed_double(text, back));
        CHECK(std::memcmp(&back, &v, sizeof(double)) == 0);
    }
    CHECK_THROWS_AS(format_fixed_double(std::nan("")), InvalidParameterError);
    double out;
    CHECK_FALSE(try_parse_fixed_double("1.0", out));
}

TEST_CASE("make_federate: stats come from local features, day pool indexed") {
    Dataset d = make_dataset(0, 5);
    Federate f = make_federate(FederateId{0}, d, 10.0, 123);
    CHECK(f.day_offsets.size() == 5);
    // normalized features have roughly the target scale
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (const auto& s : f.samples)
        for (double v : s.features) {
            sum += v;
            sq += v * v;
            ++n;
        }
    double mean = sum / static_cast<double>(n);
    double sd = std::sqrt(sq / static_cast<double>(n) - mean * mean);
    CHECK(std::fabs(mean) < 1e-9);
    CHECK(sd == doctest::Approx(10.0).epsilon(1e-9));
    // round trip back to raw
    CHECK(f.stats.denormalize(f.samples[0].target) == doctest::Approx(d.samples[0].target));
}

TEST_CASE("make_federate: no full day is an error") {
    Dataset d = make_dataset(0, 1);
    d.samples.resize(40);  // a short day only
    CHECK_THROWS_AS(make_federate(FederateId{0}, d, 10.0, 1), EmptyDatasetError);
}

TEST_CASE("local_round: loss-zero federate sends an all-zero step") {
    // Constant features and targets normalize to exactly zero; a zero network
    // then fits them perfectly.
    Dataset d;
    d.node_id = 0;
    MinuteTime start = minutes_from_civil({2023, 5, 2});
    for (int slot = 0; slot < kSlotsPerDay; ++slot) {
        Sample s;
        s.timestamp = start + static_cast<MinuteTime>(slot) * kStepMinutes;
        s.target = 7.5;
        s.features.assign(6, 7.5);
        d.samples.push_back(s);
    }
    Federate f = make_federate(FederateId{0}, d, 10.0, 5);
    f.rng = Rng(1);
    ModelWeights zero = default_net();
    for (auto& l : zero.layers) {
        for (auto& v : l.weights.data) v = 0.0;
        for (auto& b : l.bias) b = 0.0;
    }
    GradientReport r = local_round(f, WeightBroadcast{0, zero}, Hyperparams{});
    CHECK(r.loss == 0.0);
    for (const auto& l : r.step.layers) {
        for (double v : l.weights.data) CHECK(v == 0.0);
        for (double v : l.bias) CHECK(v == 0.0);
    }
}

TEST_CASE("local_round: stale round is a protocol desync") {
    Federate f = make_federate(FederateId{0}, make_dataset(0, 3), 10.0, 5);
    f.expected_round = 2;
    CHECK_THROWS_AS(local_round(f, WeightBroadcast{1, default_net()}, Hyperparams{}),
                    ProtocolDesyncError);
}

TEST_CASE("local_round: replay determinism, same day and bit-identical report") {
    auto run_once = [] {
        Federate f = make_federate(FederateId{0}, make_dataset(0, 10), 10.0, 99);
        f.rng = Rng(mix_seed(7, f.day_seed));
        return local_round(f, WeightBroadcast{0, default_net()}, Hyperparams{});
    };
    GradientReport a = run_once();
    GradientReport b = run_once();
    CHECK(a.loss == b.loss);
    CHECK(encode_message(a) == encode_message(b));
}

TEST_CASE("privacy: report payload size is independent of the dataset size") {
    Hyperparams h;
    std::size_t sizes[3] = {0, 0, 0};
    std::size_t days[3] = {3, 30, 300};
    for (int k = 0; k < 3; ++k) {
        Federate f = make_federate(FederateId{0}, make_dataset(0, days[k]), 10.0, 5);
        f.rng = Rng(k + 1);  // different draws, different values, same shape
        GradientReport r = local_round(f, WeightBroadcast{0, default_net()}, h);
        sizes[k] = encode_message(r).size();
    }
    CHECK(sizes[0] == sizes[1]);
    CHECK(sizes[1] == sizes[2]);
}

TEST_CASE("aggregate: one federate with alpha=1 reduces to apply_step exactly") {
    Federate f = make_federate(FederateId{0}, make_dataset(0, 4), 10.0, 7);
    f.rng = Rng(3);
    GlobalModel g{default_net(), 0};
    GradientReport r = local_round(f, WeightBroadcast{0, g.weights}, Hyperparams{});
    GlobalModel next = aggregate(g, {r}, AggregationWeights{{1.0}});
    CHECK(next.round == 1);
    CHECK(bit_equal(next.weights, apply_step(g.weights, r.step)));
}

TEST_CASE("aggregate: K identical reports with alpha=1/K equal the single step") {
    GlobalModel g{default_net(), 0};
    Federate f0 = make_federate(FederateId{0}, make_dataset(0, 4), 10.0, 7);
    f0.rng = Rng(3);
    GradientReport base = local_round(f0, WeightBroadcast{0, g.weights}, Hyperparams{});
    for (std::size_t k : {2u, 5u, 10u}) {
        std::vector<GradientReport> reports;
        for (std::size_t i = 0; i < k; ++i) {
            GradientReport r = base;
            r.federate_index = static_cast<int>(i);
            reports.push_back(std::move(r));
        }
        GlobalModel next = aggregate(g, reports, AggregationWeights::uniform(k));
        GlobalModel single = aggregate(g, {base}, AggregationWeights{{1.0}});
        CHECK(max_weight_diff(next.weights, single.weights) < 1e-12);
    }
}

TEST_CASE("aggregate: all-zero reports leave weights unchanged, round advances") {
    GlobalModel g{default_net(), 5};
    GradientStep zero;
    for (const auto& l : g.weights.layers) {
        LayerParams z;
        z.weights = Matrix(l.weights.rows, l.weights.cols);
        z.bias.assign(l.bias.size(), 0.0);
        zero.layers.push_back(z);
    }
    std::vector<GradientReport> reports;
    for (int i = 0; i < 3; ++i) reports.push_back(GradientReport{5, i, zero, 0.1});
    GlobalModel next = aggregate(g, reports, AggregationWeights::uniform(3));
    CHECK(next.round == 6);
    CHECK(bit_equal(next.weights, g.weights));
}

TEST_CASE("aggregate: incomplete or desynced rounds are rejected") {
    GlobalModel g{default_net(), 0};
    GradientStep zero;
    for (const auto& l : g.weights.layers) {
        LayerParams z;
        z.weights = Matrix(l.weights.rows, l.weights.cols);
        z.bias.assign(l.bias.size(), 0.0);
        zero.layers.push_back(z);
    }
    auto alpha = AggregationWeights::uniform(2);
    // missing federate 1
    std::vector<GradientReport> missing = {GradientReport{0, 0, zero, 0.1}};
    CHECK_THROWS_AS(aggregate(g, missing, alpha), IncompleteRoundError);
    // duplicate federate 0
    std::vector<GradientReport> dup = {GradientReport{0, 0, zero, 0.1},
                                       GradientReport{0, 0, zero, 0.1}};
    CHECK_THROWS_AS(aggregate(g, dup, alpha), IncompleteRoundError);
    // wrong round
    std::vector<GradientReport> stale = {GradientReport{1, 0, zero, 0.1},
                                         GradientReport{0, 1, zero, 0.1}};
    CHECK_THROWS_AS(aggregate(g, stale, alpha), ProtocolDesyncError);
}

TEST_CASE("train: infinite tolerance stops after exactly one round") {
    std::vector<Federate> feds;
    feds.push_back(make_federate(FederateId{0}, make_dataset(0, 5), 10.0, 1));
    Hyperparams h;
    h.tolerance = 1e300;
    TrainResult r = train(GlobalModel{default_net(), 0}, feds, h,
                          AggregationWeights::uniform(1), 42, {ExecMode::Serial, nullptr});
    CHECK(r.log.rounds.size() == 1);
    CHECK(r.log.stop_reason == StopReason::ToleranceReached);
    CHECK(r.model.round == 1);
}

TEST_CASE("train: unreachable tolerance stops at the epoch cap") {
    std::vector<Federate> feds;
    feds.push_back(make_federate(FederateId{0}, make_dataset(0, 5), 10.0, 1));
    feds.push_back(make_federate(FederateId{1}, make_dataset(1, 5, 14.0), 10.0, 2));
    Hyperparams h;
    h.tolerance = 1e-300;
    h.max_epochs = 17;
    TrainResult r = train(GlobalModel{default_net(), 0}, feds, h,
                          AggregationWeights::uniform(2), 42, {ExecMode::Serial, nullptr});
    CHECK(r.log.rounds.size() == 17);
    CHECK(r.log.stop_reason == StopReason::EpochCapReached);
    // monotone round counter and complete log
    for (std::size_t i = 0; i < r.log.rounds.size(); ++i) CHECK(r.log.rounds[i].round == i + 1);
}

TEST_CASE("train: runaway learning rate raises a divergence error naming the round") {
    std::vector<Federate> feds;
    feds.push_back(make_federate(FederateId{0}, make_dataset(0, 5), 10.0, 1));
    Hyperparams h;
    h.learning_rate = 1e130;  // one step overflows the next round's loss
    h.max_epochs = 50;
    h.tolerance = 1e-300;
    try {
        train(GlobalModel{default_net(), 0}, feds, h, AggregationWeights::uniform(1), 42,
              {ExecMode::Serial, nullptr});
        FAIL("expected DivergenceError");
    } catch (const DivergenceError& e) {
        CHECK(std::string(e.what()).find("round") != std::string::npos);
    }
}

TEST_CASE("train: serial and OpenMP runs are bit-identical") {
    auto build = [] {
        std::vector<Federate> feds;
        for (int i = 0; i < 12; ++i)
            feds.push_back(make_federate(FederateId{i}, make_dataset(i, 6, 8.0 + i), 10.0,
                                         static_cast<std::uint64_t>(i)));
        return feds;
    };
    Hyperparams h;
    h.max_epochs = 20;
    h.tolerance = 1e-300;
    auto feds_a = build();
    auto feds_b = build();
    TrainResult a = train(GlobalModel{default_net(), 0}, feds_a, h,
                          AggregationWeights::uniform(12), 7, {ExecMode::Serial, nullptr});
    TrainResult b = train(GlobalModel{default_net(), 0}, feds_b, h,
                          AggregationWeights::uniform(12), 7, {ExecMode::OpenMP, nullptr});
    CHECK(bit_equal(a.model.weights, b.model.weights));
    REQUIRE(a.log.rounds.size() == b.log.rounds.size());
    for (std::size_t i = 0; i < a.log.rounds.size(); ++i) {
        CHECK(a.log.rounds[i].weighted_mean_loss == b.log.rounds[i].weighted_mean_loss);
        CHECK(a.log.rounds[i].per_federate_loss == b.log.rounds[i].per_federate_loss);
    }
}

TEST_CASE("train: loss declines on learnable data") {
    std::vector<Federate> feds;
    for (int i = 0; i < 4; ++i)
        feds.push_back(make_federate(FederateId{i}, make_dataset(i, 10, 9.0 + i), 10.0,
                                     static_cast<std::uint64_t>(i)));
    Hyperparams h;
    h.max_epochs = 60;
    h.tolerance = 1e-300;
    TrainResult r = train(GlobalModel{default_net(), 0}, feds, h,
                          AggregationWeights::uniform(4), 3, {ExecMode::OpenMP, nullptr});
    CHECK(r.log.rounds.back().weighted_mean_loss < 0.5 * r.log.rounds.front().weighted_mean_loss);
}

TEST_CASE("codec: broadcast and report round-trip exactly") {
    GlobalModel g{default_net(123), 9};
    WeightBroadcast b{9, g.weights};
    auto bytes = encode_message(b);
    DecodedMessage m = decode_message(bytes);
    REQUIRE(std::holds_alternative<WeightBroadcast>(m));
    const auto& back = std::get<WeightBroadcast>(m);
    CHECK(back.round == 9);
    CHECK(bit_equal(back.weights, g.weights));

    Federate f = make_federate(FederateId{3}, make_dataset(3, 4), 10.0, 17);
    f.rng = Rng(2);
    GradientReport r = local_round(f, WeightBroadcast{0, g.weights}, Hyperparams{});
    r.round = 4;
    auto rbytes = encode_message(r);
    DecodedMessage rm = decode_message(rbytes);
    REQUIRE(std::holds_alternative<GradientReport>(rm));
    const auto& rback = std::get<GradientReport>(rm);
    CHECK(rback.round == 4);
    CHECK(rback.federate_index == 3);
    CHECK(rback.loss == r.loss);
    CHECK(encode_message(rback) == rbytes);
}

TEST_CASE("codec: truncation and garbage are decode errors, never partial messages") {
    WeightBroadcast b{1, default_net()};
    auto bytes = encode_message(b);
    CHECK_THROWS_AS(decode_message(std::span(bytes.data(), 2)), DecodeError);
    CHECK_THROWS_AS(decode_message(std::span(bytes.data(), bytes.size() - 10)), DecodeError);
    auto extra = bytes;
    extra.push_back(0x7b);
    CHECK_THROWS_AS(decode_message(extra), DecodeError);

    std::vector<std::uint8_t> garbage = {5, 0, 0, 0, 'h', 'e', 'l', 'l', 'o'};
    CHECK_THROWS_AS(decode_message(garbage), DecodeError);
}

TEST_CASE("codec: version mismatch is its own error") {
    WeightBroadcast b{1, default_net()};
    auto bytes = encode_message(b);
    // rewrite "\"v\":1" to "\"v\":2"
    std::string body(bytes.begin() + 4, bytes.end());
    auto pos = body.find("\"v\":1");
    REQUIRE(pos != std::string::npos);
    body[pos + 4] = '2';
    std::vector<std::uint8_t> hacked(bytes.begin(), bytes.begin() + 4);
    hacked.insert(hacked.end(), body.begin(), body.end());
    CHECK_THROWS_AS(decode_message(hacked), VersionError);
}

TEST_CASE("codec: planted sentinel values never appear in encoded messages") {
    const double sentinel = 1234.5678;
    Dataset d = make_dataset(0, 4);
    for (auto& s : d.samples) s.target = sentinel;  // plant raw values
    Federate f = make_federate(FederateId{0}, d, 10.0, 3);
    f.rng = Rng(4);
    GlobalModel g{default_net(), 0};
    WeightBroadcast b{0, g.weights};
    GradientReport r = local_round(f, b, Hyperparams{});

    std::vector<std::string> encodings;
    auto add = [&](const std::vector<std::uint8_t>& bytes) {
        encodings.emplace_back(bytes.begin(), bytes.end());
    };
    add(encode_message(b));
    add(encode_message(r));

    std::vector<std::string> needles = {"1234.5678", "1234,5678", "1.2345678",
                                        format_fixed_double(sentinel)};
    for (const auto& text : encodings)
        for (const auto& needle : needles) CHECK(text.find(needle) == std::string::npos);
}
