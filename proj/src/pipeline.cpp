#include "fedgrid/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "fedgrid/errors.hpp"
#include "fedgrid/eval.hpp"
#include "fedgrid/grid.hpp"
#include "fedgrid/log.hpp"
#include "fedgrid/model_io.hpp"
#include "json.hpp"

namespace fedgrid {

namespace {

using ordered_json = nlohmann::ordered_json;

void ensure_out_dir(const ExperimentConfig& cfg) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.paths.out, ec);
    if (ec) throw IoError("cannot create output directory " + cfg.paths.out);
}

void check_artifact_hash(const std::string& artifact, const std::string& found,
                         const std::string& expected) {
    if (found.empty()) return;  // external files carry no hash
    if (found != expected)
        throw IncompatibleModelError(artifact + " was produced under config hash " + found +
                                     ", current config hash is " + expected);
}

LayerSpec model_spec(const ExperimentConfig& cfg) {
    LayerSpec spec;
    spec.input_dim = cfg.lags.lag_minutes.size();
    spec.hidden_dims = cfg.model.hidden_dims;
    spec.activation = cfg.model.activation;
    return spec;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << text;
    if (!text.empty() && text.back() != '\n') out << "\n";
    if (!out) throw IoError("write failed: " + path);
}

std::string format_double(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

}  // namespace

std::vector<TimeSeries> load_feeder(const ExperimentConfig& cfg, IngestReport* report) {
    IngestResult res = ingest_csv(cfg.resolve_data_path(), cfg.ingest);
    check_artifact_hash("data file", res.report.config_hash, cfg.hash());
    if (report) *report = res.report;
    for (auto& s : res.series) s = filter_days(s, cfg.calendar);
    return std::move(res.series);
}

YearMonth resolve_test_month(const ExperimentConfig& cfg, const std::vector<TimeSeries>& series) {
    if (cfg.split.test_month != "auto") {
        YearMonth ym;
        try_parse_year_month(cfg.split.test_month, ym);  // validated at load
        return ym;
    }
    if (series.empty()) throw EmptyDatasetError("no series to infer the test month from");
    MinuteTime last = series.front().end();
    for (const auto& s : series) last = std::max(last, s.end());
    return month_of(last - kStepMinutes);
}

GenDataSummary run_gen_data(const ExperimentConfig& cfg) {
    ensure_out_dir(cfg);
    TimeSeries base = default_base_profile(cfg.topology.days, cfg.topology.seed,
                                           cfg.topology.profile, cfg.start_time());
    std::vector<TimeSeries> nodes =
        generate_feeder(base, cfg.topology.num_nodes, cfg.topology.sigma, cfg.topology.seed,
                        cfg.exec_mode);
    std::string path = cfg.resolve_data_path();
    write_series_csv(path, nodes, cfg.hash());

    GenDataSummary s;
    s.nodes = nodes.size();
    for (const auto& n : nodes) s.readings += n.count_present();
    s.path = path;
    log_info("gen-data: " + std::to_string(s.nodes) + " nodes, " + std::to_string(s.readings) +
             " readings -> " + path);
    return s;
}

TrainSummary run_train(const ExperimentConfig& cfg) {
    ensure_out_dir(cfg);
    IngestReport ingest_report;
    std::vector<TimeSeries> series = load_feeder(cfg, &ingest_report);
    if (series.empty()) throw EmptyDatasetError("no nodes in the data file");
    write_text(cfg.out_path("ingest_report.json"), ingest_report.to_json(cfg.hash()));
    YearMonth test_month = resolve_test_month(cfg, series);

    std::vector<Federate> federates;
    federates.reserve(series.size());
    SavedModel saved;
    for (std::size_t i = 0; i < series.size(); ++i) {
        SplitResult split = split_train_test(series[i], cfg.lags, test_month,
                                             cfg.split.warmup_days);
        FederateId id{static_cast<int>(i),
                      i % 2 == 0 ? FederateKind::HomeEnergyManager : FederateKind::EdgeResource};
        Federate f = make_federate(id, split.train, cfg.training.normalization_scale,
                                   mix_seed(cfg.topology.seed,
                                            static_cast<std::uint64_t>(series[i].node_id)));
        saved.per_node[series[i].node_id] = f.stats;
        federates.push_back(std::move(f));
    }

    AggregationWeights alpha = cfg.training.alpha.empty()
                                   ? AggregationWeights::uniform(federates.size())
                                   : AggregationWeights{cfg.training.alpha};
    if (alpha.alpha.size() != federates.size())
        throw ConfigError("training.alpha has " + std::to_string(alpha.alpha.size()) +
                          " weights for " + std::to_string(federates.size()) + " federates");

    GlobalModel g{init_weights(model_spec(cfg), cfg.topology.seed), 0};
    TrainOptions options;
    options.mode = cfg.exec_mode;
    options.on_round = [](const TrainingRound& r, const GlobalModel&) {
        log_debug("round " + std::to_string(r.round) + ": loss " +
                  std::to_string(r.weighted_mean_loss));
    };
    TrainResult result = train(std::move(g), federates, cfg.training.hyper, alpha,
                               cfg.topology.seed, options);

    saved.weights = result.model.weights;
    saved.lags = cfg.lags;
    saved.target_scale = cfg.training.normalization_scale;
    saved.config_hash = cfg.hash();
    saved.rounds = result.model.round;
    std::string model_path = cfg.out_path("model.json");
    save_model(model_path, saved);

    ordered_json log_json;
    log_json["config_hash"] = cfg.hash();
    log_json["stop_reason"] = to_string(result.log.stop_reason);
    log_json["rounds"] = ordered_json::array();
    for (const auto& r : result.log.rounds) {
        ordered_json jr;
        jr["round"] = r.round;
        jr["weighted_mean_loss"] = r.weighted_mean_loss;
        jr["per_federate_loss"] = r.per_federate_loss;
        log_json["rounds"].push_back(std::move(jr));
    }
    std::string log_path = cfg.out_path("training_log.json");
    write_text(log_path, log_json.dump(2));

    TrainSummary s;
    s.rounds = result.log.rounds.size();
    s.stop_reason = result.log.stop_reason;
    s.round1_loss = result.log.rounds.front().weighted_mean_loss;
    s.final_loss = result.log.rounds.back().weighted_mean_loss;
    s.model_path = model_path;
    s.log_path = log_path;
    log_info("train: " + std::to_string(s.rounds) + " rounds, stop " +
             to_string(s.stop_reason) + ", loss " + std::to_string(s.round1_loss) + " -> " +
             std::to_string(s.final_loss));
    return s;
}

ForecastSummary run_forecast(const ExperimentConfig& cfg) {
    ensure_out_dir(cfg);
    SavedModel model = load_model(cfg.out_path("model.json"));
    check_artifact_hash("model file", model.config_hash, cfg.hash());
    if (model.lags.lag_minutes != cfg.lags.lag_minutes)
        throw IncompatibleModelError("model lags do not match the configured lag spec");
    if (model.weights.input_dim() != cfg.lags.lag_minutes.size())
        throw IncompatibleModelError(
            "model input dim " + std::to_string(model.weights.input_dim()) + " vs " +
            std::to_string(cfg.lags.lag_minutes.size()) + " lags");

    std::vector<TimeSeries> series = load_feeder(cfg);
    YearMonth test_month = resolve_test_month(cfg, series);
    MinuteTime month_start = first_minute_of_month(test_month);
    MinuteTime horizon_end = first_minute_of_month(next_month(test_month));
    if (cfg.forecast.days > 0)
        horizon_end = std::min(horizon_end, month_start + static_cast<MinuteTime>(
                                                              cfg.forecast.days) *
                                                              kMinutesPerDay);

    std::vector<ForecastRecord> records;
    std::size_t in_sample = 0;
    for (const auto& s : series) {
        auto it = model.per_node.find(s.node_id);
        if (it == model.per_node.end())
            throw IncompatibleModelError("model has no normalization stats for node " +
                                         std::to_string(s.node_id));
        const NormStats& stats = it->second;
        SplitResult split = split_train_test(s, cfg.lags, test_month, cfg.split.warmup_days);

        auto predict = [&](const Sample& raw, bool flag) {
            std::vector<double> x(raw.features.size());
            for (std::size_t k = 0; k < x.size(); ++k) x[k] = stats.normalize(raw.features[k]);
            double y = forward(model.weights, x);
            records.push_back(ForecastRecord{s.node_id, raw.timestamp, stats.denormalize(y),
                                             raw.target, flag});
        };

        for (const auto& sample : split.test.samples) {
            if (sample.timestamp >= horizon_end) continue;
            predict(sample, false);
        }
        if (cfg.forecast.include_last_train_day) {
            MinuteTime last_day = start_of_day(split.train.samples.back().timestamp);
            for (const auto& sample : split.train.samples) {
                if (sample.timestamp >= last_day) {
                    predict(sample, true);
                    ++in_sample;
                }
            }
        }
    }
    std::string path = cfg.out_path("forecast.csv");
    write_forecast_csv(path, records, cfg.hash());

    ForecastSummary sum;
    sum.nodes = series.size();
    sum.records = records.size() - in_sample;
    sum.in_sample_records = in_sample;
    sum.path = path;
    log_info("forecast: " + std::to_string(sum.records) + " records (" +
             std::to_string(in_sample) + " in-sample) -> " + path);
    return sum;
}

namespace {

// Rebuild per-node series over the forecast horizon and check grid alignment
// against the actual feeder data.
struct HorizonSeries {
    std::vector<TimeSeries> actual;
    std::vector<TimeSeries> predicted;
    MinuteTime start = 0;
    MinuteTime end = 0;
    std::size_t days = 0;
};

HorizonSeries build_horizon(const std::vector<TimeSeries>& feeder,
                            const std::vector<ForecastRecord>& records) {
    std::map<int, const TimeSeries*> by_node;
    for (const auto& s : feeder) by_node[s.node_id] = &s;

    std::map<int, std::map<MinuteTime, double>> pred;
    MinuteTime lo = 0, hi = 0;
    bool first = true;
    for (const auto& r : records) {
        if (r.in_sample) continue;
        auto it = by_node.find(r.node_id);
        if (it == by_node.end())
            throw AlignmentError("forecast covers node " + std::to_string(r.node_id) +
                                 " absent from the data file");
        double actual = it->second->at_time(r.timestamp);
        if (is_missing(actual))
            throw AlignmentError("forecast record at " + format_timestamp(r.timestamp) +
                                 " has no matching reading for node " +
                                 std::to_string(r.node_id));
        if (first) {
            lo = r.timestamp;
            hi = r.timestamp;
            first = false;
        }
        lo = std::min(lo, r.timestamp);
        hi = std::max(hi, r.timestamp);
        pred[r.node_id][r.timestamp] = r.predicted_kw;
    }
    if (first) throw EmptyInputError("no out-of-sample forecast records");

    HorizonSeries h;
    h.start = lo;
    h.end = hi + kStepMinutes;
    h.days = static_cast<std::size_t>((h.end - start_of_day(h.start) + kMinutesPerDay - 1) /
                                      kMinutesPerDay);
    auto slots = static_cast<std::size_t>((h.end - lo) / kStepMinutes);
    for (auto& [node, readings] : pred) {
        TimeSeries p;
        p.node_id = node;
        p.start = lo;
        p.values.assign(slots, missing_value());
        for (auto& [t, v] : readings)
            p.values[static_cast<std::size_t>((t - lo) / kStepMinutes)] = v;
        TimeSeries a;
        a.node_id = node;
        a.start = lo;
        a.values.assign(slots, missing_value());
        const TimeSeries& src = *by_node.at(node);
        for (std::size_t i = 0; i < slots; ++i)
            a.values[i] = src.at_time(lo + static_cast<MinuteTime>(i) * kStepMinutes);
        h.predicted.push_back(std::move(p));
        h.actual.push_back(std::move(a));
    }
    return h;
}

void write_events_csv(const std::string& path, const std::vector<SwingEvent>& events,
                      const std::string& hash) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "# config_hash=" << hash << "\n";
    out << "node_id,timestamp,delta_p,source\n";
    for (const auto& e : events)
        out << e.node_id << ',' << format_timestamp(e.timestamp) << ',' << format_double(e.delta_p)
            << ',' << (e.source == SwingSource::Actual ? "actual" : "predicted") << '\n';
    if (!out) throw IoError("write failed: " + path);
}

int peak_slot(const std::array<double, kSlotsPerDay>& bins) {
    return static_cast<int>(std::max_element(bins.begin(), bins.end()) - bins.begin());
}

}  // namespace

GridSummary run_grid_services(const ExperimentConfig& cfg) {
    ensure_out_dir(cfg);
    ForecastCsv forecast = read_forecast_csv(cfg.out_path("forecast.csv"));
    check_artifact_hash("forecast file", forecast.config_hash, cfg.hash());
    std::vector<TimeSeries> feeder = load_feeder(cfg);
    HorizonSeries h = build_horizon(feeder, forecast.records);

    ThresholdPolicy swing_policy;
    swing_policy.percentile = cfg.thresholds.percentile;
    swing_policy.quantity = ThresholdQuantity::DeltaP;
    swing_policy.window_start = h.start;
    swing_policy.window_end = h.end;
    double p_t = compute_threshold(h.actual, swing_policy);

    ThresholdPolicy shave_policy = swing_policy;
    shave_policy.quantity = ThresholdQuantity::AbsolutePower;
    double cap = compute_threshold(h.actual, shave_policy);

    std::vector<SwingEvent> actual_events;
    std::vector<SwingEvent> predicted_events;
    std::vector<SwingEvent> after_events;
    std::vector<CurtailmentCommand> commands;
    for (std::size_t i = 0; i < h.actual.size(); ++i) {
        auto ev = detect_swings(h.actual[i], p_t, cfg.thresholds.swing_mode);
        actual_events.insert(actual_events.end(), ev.begin(), ev.end());
        auto pv = predict_swings(h.predicted[i], p_t, cfg.thresholds.swing_mode);
        predicted_events.insert(predicted_events.end(), pv.begin(), pv.end());
        ShaveResult shave = peak_shave(h.actual[i], h.predicted[i], cap, cfg.shave_mode);
        commands.insert(commands.end(), shave.commands.begin(), shave.commands.end());
        auto av = detect_swings(shave.curtailed, p_t, cfg.thresholds.swing_mode);
        after_events.insert(after_events.end(), av.begin(), av.end());
    }

    std::string hash = cfg.hash();
    write_events_csv(cfg.out_path("events_actual.csv"), actual_events, hash);
    write_events_csv(cfg.out_path("events_predicted.csv"), predicted_events, hash);

    {
        std::ofstream out(cfg.out_path("commands.csv"));
        if (!out) throw IoError("cannot write commands.csv");
        out << "# config_hash=" << hash << "\n";
        out << "node_id,timestamp,issue_time,cap_kw\n";
        for (const auto& c : commands)
            out << c.node_id << ',' << format_timestamp(c.timestamp) << ','
                << format_timestamp(c.issue_time) << ',' << format_double(c.cap_kw) << '\n';
    }

    auto hist_actual = swing_histogram(actual_events, h.days);
    auto hist_predicted = swing_histogram(predicted_events, h.days);
    ordered_json hist_json;
    hist_json["config_hash"] = hash;
    hist_json["days"] = h.days;
    hist_json["bins_actual"] = hist_actual;
    hist_json["bins_predicted"] = hist_predicted;
    hist_json["peak_slot_actual"] = peak_slot(hist_actual);
    hist_json["peak_slot_predicted"] = peak_slot(hist_predicted);
    write_text(cfg.out_path("swing_histogram.json"), hist_json.dump(2));

    auto reduction = swing_reduction_report(actual_events, after_events);
    ordered_json red_json;
    red_json["config_hash"] = hash;
    red_json["swing_threshold_kw"] = p_t;
    red_json["shave_cap_kw"] = cap;
    red_json["days"] = ordered_json::array();
    long long total_red = 0;
    for (const auto& d : reduction) {
        red_json["days"].push_back({{"date", format_date(d.date)},
                                    {"before", d.before},
                                    {"after", d.after},
                                    {"reduction", d.reduction()}});
        total_red += d.reduction();
    }
    red_json["total_before"] = actual_events.size();
    red_json["total_after"] = after_events.size();
    red_json["total_reduction"] = total_red;
    write_text(cfg.out_path("reduction_report.json"), red_json.dump(2));

    GridSummary s;
    s.swing_threshold_kw = p_t;
    s.shave_cap_kw = cap;
    s.actual_events = actual_events.size();
    s.predicted_events = predicted_events.size();
    s.commands = commands.size();
    s.swings_before = actual_events.size();
    s.swings_after = after_events.size();
    s.peak_slot_actual = peak_slot(hist_actual);
    s.peak_slot_predicted = peak_slot(hist_predicted);
    log_info("grid-services: P_T " + std::to_string(p_t) + " kW, cap " + std::to_string(cap) +
             " kW, swings " + std::to_string(s.swings_before) + " -> " +
             std::to_string(s.swings_after));
    return s;
}

ReportSummary run_report(const ExperimentConfig& cfg) {
    ensure_out_dir(cfg);
    ForecastCsv forecast = read_forecast_csv(cfg.out_path("forecast.csv"));
    check_artifact_hash("forecast file", forecast.config_hash, cfg.hash());

    std::map<int, std::vector<ForecastRecord>> out_of_sample;
    std::map<int, std::vector<ForecastRecord>> in_sample;
    double load_sum = 0.0;
    std::size_t load_count = 0;
    for (const auto& r : forecast.records) {
        if (r.in_sample) {
            in_sample[r.node_id].push_back(r);
        } else {
            out_of_sample[r.node_id].push_back(r);
            load_sum += r.actual_kw;
            ++load_count;
        }
    }
    if (out_of_sample.empty()) throw EmptyInputError("no out-of-sample forecast records");
    FleetRmse fleet = fleet_rmse(out_of_sample);

    ordered_json j;
    j["config_hash"] = cfg.hash();
    j["fleet_mean"] = fleet.mean;
    j["mean_load_kw"] = load_sum / static_cast<double>(load_count);
    j["per_node"] = ordered_json::array();
    for (const auto& [node, v] : fleet.per_node)
        j["per_node"].push_back({{"node", node}, {"rmse", v}});
    if (!in_sample.empty()) j["in_sample_fleet_mean"] = fleet_rmse(in_sample).mean;
    // Non-binding accuracy context; never asserted anywhere.
    j["reference"] = {{"synthetic_fleet_rmse", 1.642}, {"real_data_weekday_rmse", 1.98}};
    std::string path = cfg.out_path("report.json");
    write_text(path, j.dump(2));

    ReportSummary s;
    s.nodes = fleet.per_node.size();
    s.fleet_mean_rmse = fleet.mean;
    s.mean_load_kw = load_sum / static_cast<double>(load_count);
    s.path = path;
    log_info("report: fleet RMSE " + std::to_string(s.fleet_mean_rmse) + " kW over " +
             std::to_string(s.nodes) + " nodes -> " + path);
    return s;
}

}  // namespace fedgrid
