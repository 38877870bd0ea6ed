#include "fedgrid/model_io.hpp"

#include <fstream>
#include <sstream>

#include "fedgrid/errors.hpp"
#include "fedgrid/floatcodec.hpp"
#include "json.hpp"

namespace fedgrid {

namespace {
using ordered_json = nlohmann::ordered_json;

double json_fixed(const ordered_json& j, const std::string& where) {
    double v = 0.0;
    if (!j.is_string() || !try_parse_fixed_double(j.get<std::string>(), v))
        throw IoError("model file: malformed float in " + where);
    return v;
}
}  // namespace

void save_model(const std::string& path, const SavedModel& model) {
    ordered_json j;
    j["version"] = 1;
    j["config_hash"] = model.config_hash;
    j["rounds"] = model.rounds;
    j["activation"] = to_string(model.weights.activation);
    j["lags"] = model.lags.lag_minutes;
    ordered_json layers = ordered_json::array();
    for (const auto& l : model.weights.layers) {
        ordered_json jl;
        jl["rows"] = l.weights.rows;
        jl["cols"] = l.weights.cols;
        ordered_json w = ordered_json::array();
        for (double v : l.weights.data) w.push_back(format_fixed_double(v));
        ordered_json b = ordered_json::array();
        for (double v : l.bias) b.push_back(format_fixed_double(v));
        jl["w"] = std::move(w);
        jl["b"] = std::move(b);
        layers.push_back(std::move(jl));
    }
    j["layers"] = std::move(layers);
    ordered_json norm;
    norm["target_scale"] = format_fixed_double(model.target_scale);
    ordered_json per_node = ordered_json::array();
    for (const auto& [node, stats] : model.per_node)
        per_node.push_back({{"node", node},
                            {"offset", format_fixed_double(stats.offset)},
                            {"scale", format_fixed_double(stats.scale)}});
    norm["per_node"] = std::move(per_node);
    j["normalization"] = std::move(norm);

    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump(2) << "\n";
    if (!out) throw IoError("write failed: " + path);
}

SavedModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open model file " + path);
    ordered_json j;
    try {
        j = ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError("model file " + path + " is not valid JSON: " + e.what());
    }
    if (!j.contains("version") || j["version"].get<int>() != 1)
        throw VersionError("unsupported model file version in " + path);

    SavedModel m;
    m.config_hash = j.value("config_hash", std::string{});
    m.rounds = j.value("rounds", std::uint64_t{0});
    if (!try_parse_activation(j.value("activation", std::string{"relu"}), m.weights.activation))
        throw IoError("model file: unknown activation");
    m.lags.lag_minutes = j.at("lags").get<std::vector<int>>();
    for (const auto& jl : j.at("layers")) {
        LayerParams l;
        l.weights = Matrix(jl.at("rows").get<std::size_t>(), jl.at("cols").get<std::size_t>());
        const auto& w = jl.at("w");
        const auto& b = jl.at("b");
        if (w.size() != l.weights.data.size() || b.size() != l.weights.rows)
            throw IoError("model file: layer array size mismatch");
        for (std::size_t i = 0; i < l.weights.data.size(); ++i)
            l.weights.data[i] = json_fixed(w[i], "weights");
        l.bias.resize(l.weights.rows);
        for (std::size_t i = 0; i < l.bias.size(); ++i) l.bias[i] = json_fixed(b[i], "bias");
        m.weights.layers.push_back(std::move(l));
    }
    const auto& norm = j.at("normalization");
    m.target_scale = json_fixed(norm.at("target_scale"), "target_scale");
    for (const auto& pn : norm.at("per_node")) {
        NormStats s;
        s.offset = json_fixed(pn.at("offset"), "offset");
        s.scale = json_fixed(pn.at("scale"), "scale");
        m.per_node[pn.at("node").get<int>()] = s;
    }
    return m;
}

}  // namespace fedgrid
