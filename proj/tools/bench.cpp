// Serial vs OpenMP timing for the data-parallel kernels: feeder generation,
// federated training rounds, and per-node forecasting.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#include "fedgrid/data.hpp"
#include "fedgrid/protocol.hpp"

using namespace fedgrid;

namespace {

double time_best_of(int reps, const std::function<void()>& fn) {
    double best = 1e300;
    for (int i = 0; i < reps; ++i) {
        auto t0 = std::chrono::steady_clock::now();
        fn();
        auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}

void row(const char* name, double serial_ms, double omp_ms) {
    std::printf("%-28s %10.1f ms %10.1f ms %8.2fx\n", name, serial_ms, omp_ms,
                serial_ms / omp_ms);
}

}  // namespace

int main() {
    const std::size_t nodes = 400;
    const std::size_t days = 61;
    const std::uint64_t seed = 42;

    std::printf("threads: %d\n", omp_get_max_threads());
    std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "openmp", "speedup");

    TimeSeries base = default_base_profile(days, seed);

    double gen_serial = time_best_of(
        3, [&] { (void)generate_feeder(base, nodes, 0.1, seed, ExecMode::Serial); });
    double gen_omp = time_best_of(
        3, [&] { (void)generate_feeder(base, nodes, 0.1, seed, ExecMode::OpenMP); });
    row("generate_feeder", gen_serial, gen_omp);

    auto feeder = generate_feeder(base, nodes, 0.1, seed, ExecMode::OpenMP);
    LagSpec lags;
    YearMonth test_month{2023, 6};

    auto build_federates = [&] {
        std::vector<Federate> feds;
        for (std::size_t i = 0; i < feeder.size(); ++i) {
            SplitResult split = split_train_test(feeder[i], lags, test_month, 1);
            feds.push_back(make_federate(FederateId{static_cast<int>(i)}, split.train, 10.0,
                                         mix_seed(seed, i)));
        }
        return feds;
    };
    auto federates = build_federates();

    Hyperparams hyper;
    hyper.max_epochs = 20;
    hyper.tolerance = 1e-30;  // run all rounds
    auto alpha = AggregationWeights::uniform(federates.size());
    LayerSpec spec;
    spec.input_dim = lags.lag_minutes.size();

    double train_serial = time_best_of(2, [&] {
        GlobalModel g{init_weights(spec, seed), 0};
        (void)train(std::move(g), federates, hyper, alpha, seed, {ExecMode::Serial, nullptr});
    });
    double train_omp = time_best_of(2, [&] {
        GlobalModel g{init_weights(spec, seed), 0};
        (void)train(std::move(g), federates, hyper, alpha, seed, {ExecMode::OpenMP, nullptr});
    });
    row("train (20 rounds)", train_serial, train_omp);

    // Forecast: one forward pass per test sample per node.
    GlobalModel g{init_weights(spec, seed), 0};
    auto trained = train(std::move(g), federates, hyper, alpha, seed, {ExecMode::OpenMP, nullptr});
    std::vector<Dataset> tests;
    for (const auto& s : feeder) tests.push_back(split_train_test(s, lags, test_month, 1).test);

    auto forecast_all = [&](ExecMode mode) {
        std::vector<double> sums(tests.size(), 0.0);
        for_each_index(static_cast<std::int64_t>(tests.size()), mode, [&](std::size_t i) {
            double acc = 0.0;
            for (const auto& sample : tests[i].samples)
                acc += forward(trained.model.weights, sample.features);
            sums[i] = acc;
        });
        return sums;
    };
    double fc_serial = time_best_of(3, [&] { (void)forecast_all(ExecMode::Serial); });
    double fc_omp = time_best_of(3, [&] { (void)forecast_all(ExecMode::OpenMP); });
    row("forecast (month, all nodes)", fc_serial, fc_omp);

    return 0;
}
