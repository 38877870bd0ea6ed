#include "fedgrid/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fedgrid/errors.hpp"
#include "json.hpp"

namespace fedgrid {

namespace {

using ordered_json = nlohmann::ordered_json;

void check_keys(const ordered_json& j, const char* section,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(std::string(section) + " must be an object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok) throw ConfigError("unknown key '" + key + "' in " + section);
    }
}

template <class T>
void read_field(const ordered_json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("bad value for '") + key + "'");
    }
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    check_keys(j, "config",
               {"topology", "model", "training", "lags", "calendar", "thresholds", "shaving",
                "split", "forecast", "paths", "ingest", "execution"});

    ExperimentConfig c;
    if (j.contains("topology")) {
        const auto& t = j["topology"];
        check_keys(t, "topology",
                   {"num_nodes", "sigma", "seed", "days", "start_date", "profile"});
        read_field(t, "num_nodes", c.topology.num_nodes);
        read_field(t, "sigma", c.topology.sigma);
        read_field(t, "seed", c.topology.seed);
        read_field(t, "days", c.topology.days);
        read_field(t, "start_date", c.topology.start_date);
        if (t.contains("profile")) {
            const auto& p = t["profile"];
            check_keys(p, "topology.profile",
                       {"level_kw", "morning_amp_kw", "morning_center_h", "morning_width_h",
                        "evening_amp_kw", "evening_rise_h", "evening_rise_width_h",
                        "evening_fall_h", "evening_fall_width_h", "weekend_level_shift_kw",
                        "noise_kw", "min_kw", "max_kw"});
            auto& bp = c.topology.profile;
            read_field(p, "level_kw", bp.level_kw);
            read_field(p, "morning_amp_kw", bp.morning_amp_kw);
            read_field(p, "morning_center_h", bp.morning_center_h);
            read_field(p, "morning_width_h", bp.morning_width_h);
            read_field(p, "evening_amp_kw", bp.evening_amp_kw);
            read_field(p, "evening_rise_h", bp.evening_rise_h);
            read_field(p, "evening_rise_width_h", bp.evening_rise_width_h);
            read_field(p, "evening_fall_h", bp.evening_fall_h);
            read_field(p, "evening_fall_width_h", bp.evening_fall_width_h);
            read_field(p, "weekend_level_shift_kw", bp.weekend_level_shift_kw);
            read_field(p, "noise_kw", bp.noise_kw);
            read_field(p, "min_kw", bp.min_kw);
            read_field(p, "max_kw", bp.max_kw);
        }
    }
    if (j.contains("model")) {
        const auto& m = j["model"];
        check_keys(m, "model", {"hidden_dims", "activation"});
        read_field(m, "hidden_dims", c.model.hidden_dims);
        if (m.contains("activation")) {
            std::string a = m["activation"].get<std::string>();
            if (!try_parse_activation(a, c.model.activation))
                throw ConfigError("unknown activation '" + a + "'");
        }
    }
    if (j.contains("training")) {
        const auto& t = j["training"];
        check_keys(t, "training",
                   {"learning_rate", "mini_batch_size", "max_epochs", "tolerance", "alpha",
                    "normalization_scale"});
        read_field(t, "learning_rate", c.training.hyper.learning_rate);
        read_field(t, "mini_batch_size", c.training.hyper.mini_batch_size);
        read_field(t, "max_epochs", c.training.hyper.max_epochs);
        read_field(t, "tolerance", c.training.hyper.tolerance);
        read_field(t, "normalization_scale", c.training.normalization_scale);
        if (t.contains("alpha")) {
            if (t["alpha"].is_string()) {
                if (t["alpha"].get<std::string>() != "uniform")
                    throw ConfigError("alpha must be \"uniform\" or an array of weights");
                c.training.alpha.clear();
            } else {
                read_field(t, "alpha", c.training.alpha);
            }
        }
    }
    if (j.contains("lags")) read_field(j, "lags", c.lags.lag_minutes);
    if (j.contains("calendar")) {
        const auto& cal = j["calendar"];
        check_keys(cal, "calendar", {"weekdays_only", "holidays"});
        read_field(cal, "weekdays_only", c.calendar.weekdays_only);
        if (cal.contains("holidays")) {
            for (const auto& h : cal["holidays"]) {
                MinuteTime t = 0;
                if (!try_parse_timestamp(h.get<std::string>() + " 00:00", t))
                    throw ConfigError("bad holiday date '" + h.get<std::string>() + "'");
                c.calendar.holidays.insert(civil_from_minutes(t));
            }
        }
    }
    if (j.contains("thresholds")) {
        const auto& t = j["thresholds"];
        check_keys(t, "thresholds", {"percentile", "swing_mode"});
        read_field(t, "percentile", c.thresholds.percentile);
        if (t.contains("swing_mode")) {
            std::string m = t["swing_mode"].get<std::string>();
            if (m == "signed")
                c.thresholds.swing_mode = SwingMode::SignedUp;
            else if (m == "magnitude")
                c.thresholds.swing_mode = SwingMode::Magnitude;
            else
                throw ConfigError("swing_mode must be \"signed\" or \"magnitude\"");
        }
    }
    if (j.contains("shaving")) {
        const auto& s = j["shaving"];
        check_keys(s, "shaving", {"mode"});
        if (s.contains("mode")) {
            std::string m = s["mode"].get<std::string>();
            if (m == "cap")
                c.shave_mode = ShaveMode::CapToThreshold;
            else if (m == "reduce_by")
                c.shave_mode = ShaveMode::ReduceByThreshold;
            else
                throw ConfigError("shaving.mode must be \"cap\" or \"reduce_by\"");
        }
    }
    if (j.contains("split")) {
        const auto& s = j["split"];
        check_keys(s, "split", {"test_month", "warmup_days"});
        read_field(s, "test_month", c.split.test_month);
        read_field(s, "warmup_days", c.split.warmup_days);
    }
    if (j.contains("forecast")) {
        const auto& f = j["forecast"];
        check_keys(f, "forecast", {"days", "include_last_train_day"});
        read_field(f, "days", c.forecast.days);
        read_field(f, "include_last_train_day", c.forecast.include_last_train_day);
    }
    if (j.contains("paths")) {
        const auto& p = j["paths"];
        check_keys(p, "paths", {"data", "out"});
        read_field(p, "data", c.paths.data);
        read_field(p, "out", c.paths.out);
    }
    if (j.contains("ingest")) {
        const auto& p = j["ingest"];
        check_keys(p, "ingest", {"timestamp_col", "node_col", "power_col"});
        read_field(p, "timestamp_col", c.ingest.timestamp_col);
        read_field(p, "node_col", c.ingest.node_col);
        read_field(p, "power_col", c.ingest.power_col);
    }
    if (j.contains("execution")) {
        const auto& e = j["execution"];
        check_keys(e, "execution", {"mode"});
        if (e.contains("mode")) {
            std::string m = e["mode"].get<std::string>();
            if (m == "openmp")
                c.exec_mode = ExecMode::OpenMP;
            else if (m == "serial")
                c.exec_mode = ExecMode::Serial;
            else
                throw ConfigError("execution.mode must be \"openmp\" or \"serial\"");
        }
    }
    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string ExperimentConfig::to_json_text() const {
    ordered_json j;
    const auto& bp = topology.profile;
    j["topology"] = {{"num_nodes", topology.num_nodes},
                     {"sigma", topology.sigma},
                     {"seed", topology.seed},
                     {"days", topology.days},
                     {"start_date", topology.start_date},
                     {"profile",
                      {{"level_kw", bp.level_kw},
                       {"morning_amp_kw", bp.morning_amp_kw},
                       {"morning_center_h", bp.morning_center_h},
                       {"morning_width_h", bp.morning_width_h},
                       {"evening_amp_kw", bp.evening_amp_kw},
                       {"evening_rise_h", bp.evening_rise_h},
                       {"evening_rise_width_h", bp.evening_rise_width_h},
                       {"evening_fall_h", bp.evening_fall_h},
                       {"evening_fall_width_h", bp.evening_fall_width_h},
                       {"weekend_level_shift_kw", bp.weekend_level_shift_kw},
                       {"noise_kw", bp.noise_kw},
                       {"min_kw", bp.min_kw},
                       {"max_kw", bp.max_kw}}}};
    j["model"] = {{"hidden_dims", model.hidden_dims},
                  {"activation", to_string(model.activation)}};
    ordered_json alpha;
    if (training.alpha.empty())
        alpha = "uniform";
    else
        alpha = training.alpha;
    j["training"] = {{"learning_rate", training.hyper.learning_rate},
                     {"mini_batch_size", training.hyper.mini_batch_size},
                     {"max_epochs", training.hyper.max_epochs},
                     {"tolerance", training.hyper.tolerance},
                     {"alpha", alpha},
                     {"normalization_scale", training.normalization_scale}};
    j["lags"] = lags.lag_minutes;
    ordered_json holidays = ordered_json::array();
    for (const auto& h : calendar.holidays) holidays.push_back(format_date(h));
    j["calendar"] = {{"weekdays_only", calendar.weekdays_only}, {"holidays", holidays}};
    j["thresholds"] = {
        {"percentile", thresholds.percentile},
        {"swing_mode", thresholds.swing_mode == SwingMode::SignedUp ? "signed" : "magnitude"}};
    j["shaving"] = {{"mode", shave_mode == ShaveMode::CapToThreshold ? "cap" : "reduce_by"}};
    j["split"] = {{"test_month", split.test_month}, {"warmup_days", split.warmup_days}};
    j["forecast"] = {{"days", forecast.days},
                     {"include_last_train_day", forecast.include_last_train_day}};
    j["paths"] = {{"data", paths.data}, {"out", paths.out}};
    j["ingest"] = {{"timestamp_col", ingest.timestamp_col},
                   {"node_col", ingest.node_col},
                   {"power_col", ingest.power_col}};
    j["execution"] = {{"mode", exec_mode == ExecMode::OpenMP ? "openmp" : "serial"}};
    return j.dump(2);
}

std::string ExperimentConfig::hash() const {
    std::uint64_t h = fnv1a64(to_json_text());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string ExperimentConfig::resolve_data_path() const {
    std::filesystem::path p(paths.data);
    if (p.is_absolute()) return p.string();
    return (std::filesystem::path(paths.out) / p).string();
}

std::string ExperimentConfig::out_path(const std::string& filename) const {
    return (std::filesystem::path(paths.out) / filename).string();
}

MinuteTime ExperimentConfig::start_time() const {
    MinuteTime t = 0;
    if (!try_parse_timestamp(topology.start_date + " 00:00", t))
        throw ConfigError("bad start_date '" + topology.start_date + "'");
    return t;
}

void ExperimentConfig::validate() const {
    if (topology.num_nodes < 1) throw ConfigError("topology.num_nodes must be >= 1");
    if (topology.sigma < 0.0) throw ConfigError("topology.sigma must be >= 0");
    if (topology.days < 1) throw ConfigError("topology.days must be >= 1");
    (void)start_time();
    try {
        LayerSpec spec;
        spec.input_dim = lags.lag_minutes.size();
        spec.hidden_dims = model.hidden_dims;
        spec.activation = model.activation;
        spec.validate();
        lags.validate();
    } catch (const InvalidSpecError& e) {
        throw ConfigError(e.what());
    }
    if (!(training.normalization_scale > 0.0))
        throw ConfigError("training.normalization_scale must be > 0");
    if (!(training.hyper.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (training.hyper.max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (!(training.hyper.tolerance > 0.0)) throw ConfigError("tolerance must be > 0");
    if (!(thresholds.percentile > 0.0 && thresholds.percentile <= 100.0))
        throw ConfigError("thresholds.percentile must be in (0, 100]");
    if (split.warmup_days < 0) throw ConfigError("split.warmup_days must be >= 0");
    if (split.test_month != "auto") {
        YearMonth ym;
        if (!try_parse_year_month(split.test_month, ym))
            throw ConfigError("split.test_month must be \"auto\" or \"YYYY-MM\"");
    }
    if (!training.alpha.empty() && training.alpha.size() != topology.num_nodes)
        throw ConfigError("training.alpha must have one weight per node");
}

}  // namespace fedgrid
