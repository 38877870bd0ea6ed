#include "fedgrid/nn.hpp"

#include <cmath>

#include "fedgrid/errors.hpp"
#include "fedgrid/rng.hpp"

namespace fedgrid {

std::string to_string(ActivationKind k) {
    switch (k) {
        case ActivationKind::ReLU: return "relu";
        case ActivationKind::Tanh: return "tanh";
        case ActivationKind::Sigmoid: return "sigmoid";
    }
    return "relu";
}

bool try_parse_activation(const std::string& text, ActivationKind& out) {
    if (text == "relu") { out = ActivationKind::ReLU; return true; }
    if (text == "tanh") { out = ActivationKind::Tanh; return true; }
    if (text == "sigmoid") { out = ActivationKind::Sigmoid; return true; }
    return false;
}

double activate(ActivationKind k, double x) {
    switch (k) {
        case ActivationKind::ReLU: return x > 0.0 ? x : 0.0;
        case ActivationKind::Tanh: return std::tanh(x);
        case ActivationKind::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
    }
    return x;
}

double activate_deriv(ActivationKind k, double x) {
    switch (k) {
        case ActivationKind::ReLU: return x > 0.0 ? 1.0 : 0.0;
        case ActivationKind::Tanh: {
            double t = std::tanh(x);
            return 1.0 - t * t;
        }
        case ActivationKind::Sigmoid: {
            double s = 1.0 / (1.0 + std::exp(-x));
            return s * (1.0 - s);
        }
    }
    return 1.0;
}

std::vector<std::size_t> LayerSpec::dims() const {
    std::vector<std::size_t> d;
    d.reserve(hidden_dims.size() + 2);
    d.push_back(input_dim);
    d.insert(d.end(), hidden_dims.begin(), hidden_dims.end());
    d.push_back(output_dim);
    return d;
}

void LayerSpec::validate() const {
    if (input_dim < 1) throw InvalidSpecError("input_dim must be >= 1");
    if (output_dim != 1) throw InvalidSpecError("output_dim must be 1 (scalar forecast)");
    for (std::size_t h : hidden_dims)
        if (h < 1) throw InvalidSpecError("hidden layer dimension must be >= 1");
}

LayerSpec ModelWeights::spec() const {
    LayerSpec s;
    s.activation = activation;
    s.hidden_dims.clear();
    if (layers.empty()) {
        s.input_dim = 0;
        s.output_dim = 0;
        return s;
    }
    s.input_dim = layers.front().weights.cols;
    for (std::size_t i = 0; i + 1 < layers.size(); ++i)
        s.hidden_dims.push_back(layers[i].weights.rows);
    s.output_dim = layers.back().weights.rows;
    return s;
}

std::size_t ModelWeights::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.data.size() + l.bias.size();
    return n;
}

ModelWeights init_weights(const LayerSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    ModelWeights w;
    w.activation = spec.activation;
    auto dims = spec.dims();
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        LayerParams p;
        p.weights = Matrix(dims[l + 1], dims[l]);
        double bound = 1.0 / std::sqrt(static_cast<double>(dims[l]));
        for (double& v : p.weights.data) v = rng.uniform(-bound, bound);
        p.bias.assign(dims[l + 1], 0.0);
        w.layers.push_back(std::move(p));
    }
    return w;
}

namespace {

void check_input(const ModelWeights& w, const std::vector<double>& x) {
    if (w.layers.empty()) throw ShapeError("model has no layers");
    if (x.size() != w.layers.front().weights.cols)
        throw ShapeError("feature length " + std::to_string(x.size()) +
                         " does not match input_dim " +
                         std::to_string(w.layers.front().weights.cols));
}

// Forward pass keeping pre-activations and activations per layer, for backprop.
struct ForwardTrace {
    std::vector<std::vector<double>> pre;   // z per layer
    std::vector<std::vector<double>> act;   // a per layer (act[0] = input)
    double output = 0.0;
};

ForwardTrace forward_trace(const ModelWeights& w, const std::vector<double>& x) {
    ForwardTrace t;
    t.act.push_back(x);
    const std::size_t n_layers = w.layers.size();
    for (std::size_t l = 0; l < n_layers; ++l) {
        const auto& lp = w.layers[l];
        const auto& in = t.act.back();
        if (in.size() != lp.weights.cols) throw ShapeError("layer dimensions do not chain");
        std::vector<double> z(lp.weights.rows);
        for (std::size_t r = 0; r < lp.weights.rows; ++r) {
            double acc = lp.bias[r];
            const double* row = lp.weights.data.data() + r * lp.weights.cols;
            for (std::size_t c = 0; c < lp.weights.cols; ++c) acc += row[c] * in[c];
            z[r] = acc;
        }
        t.pre.push_back(z);
        if (l + 1 < n_layers) {
            std::vector<double> a(z.size());
            for (std::size_t r = 0; r < z.size(); ++r) a[r] = activate(w.activation, z[r]);
            t.act.push_back(std::move(a));
        } else {
            t.act.push_back(z);  // linear output layer
        }
    }
    t.output = t.act.back().at(0);
    return t;
}

GradientStep zero_like(const ModelWeights& w) {
    GradientStep g;
    for (const auto& lp : w.layers) {
        LayerParams z;
        z.weights = Matrix(lp.weights.rows, lp.weights.cols);
        z.bias.assign(lp.bias.size(), 0.0);
        g.layers.push_back(std::move(z));
    }
    return g;
}

}  // namespace

double forward(const ModelWeights& w, const std::vector<double>& x) {
    check_input(w, x);
    return forward_trace(w, x).output;
}

double batch_loss(const ModelWeights& w, const std::vector<Sample>& batch) {
    if (batch.empty()) throw EmptyInputError("batch_loss: empty batch");
    double acc = 0.0;
    for (const auto& s : batch) {
        double err = s.target - forward(w, s.features);
        acc += err * err;
    }
    return acc / static_cast<double>(batch.size());
}

GradientStep gradient_step(const ModelWeights& w, const std::vector<Sample>& batch, double eta) {
    if (batch.empty()) throw EmptyInputError("gradient_step: empty batch");
    if (!(eta > 0.0)) throw InvalidParameterError("gradient_step: eta must be > 0");
    GradientStep g = zero_like(w);
    const double n = static_cast<double>(batch.size());
    const std::size_t n_layers = w.layers.size();
    for (const auto& s : batch) {
        check_input(w, s.features);
        ForwardTrace t = forward_trace(w, s.features);
        // dL/dy for this sample, L = (1/n) sum (Y - y)^2.
        std::vector<double> delta = {-(2.0 / n) * (s.target - t.output)};
        for (std::size_t li = n_layers; li-- > 0;) {
            const auto& lp = w.layers[li];
            auto& gl = g.layers[li];
            const auto& in = t.act[li];
            for (std::size_t r = 0; r < lp.weights.rows; ++r) {
                gl.bias[r] += delta[r];
                double* grow = gl.weights.data.data() + r * lp.weights.cols;
                for (std::size_t c = 0; c < lp.weights.cols; ++c) grow[c] += delta[r] * in[c];
            }
            if (li == 0) break;
            std::vector<double> prev(lp.weights.cols, 0.0);
            for (std::size_t r = 0; r < lp.weights.rows; ++r) {
                const double* row = lp.weights.data.data() + r * lp.weights.cols;
                for (std::size_t c = 0; c < lp.weights.cols; ++c) prev[c] += delta[r] * row[c];
            }
            for (std::size_t c = 0; c < prev.size(); ++c)
                prev[c] *= activate_deriv(w.activation, t.pre[li - 1][c]);
            delta = std::move(prev);
        }
    }
    // delta = -eta * grad
    for (auto& gl : g.layers) {
        for (double& v : gl.weights.data) v *= -eta;
        for (double& v : gl.bias) v *= -eta;
    }
    return g;
}

void check_congruent(const ModelWeights& w, const GradientStep& delta) {
    if (w.layers.size() != delta.layers.size())
        throw ShapeError("layer count mismatch between weights and step");
    for (std::size_t l = 0; l < w.layers.size(); ++l) {
        const auto& a = w.layers[l];
        const auto& b = delta.layers[l];
        if (a.weights.rows != b.weights.rows || a.weights.cols != b.weights.cols ||
            a.bias.size() != b.bias.size())
            throw ShapeError("shape mismatch in layer " + std::to_string(l));
    }
}

ModelWeights apply_step(const ModelWeights& w, const GradientStep& delta) {
    check_congruent(w, delta);
    ModelWeights out = w;
    for (std::size_t l = 0; l < out.layers.size(); ++l) {
        auto& ol = out.layers[l];
        const auto& dl = delta.layers[l];
        for (std::size_t i = 0; i < ol.weights.data.size(); ++i)
            ol.weights.data[i] += dl.weights.data[i];
        for (std::size_t i = 0; i < ol.bias.size(); ++i) ol.bias[i] += dl.bias[i];
    }
    return out;
}

GradientStep numerical_gradient(const ModelWeights& w, const std::vector<Sample>& batch,
                                double h) {
    if (!(h > 0.0)) throw InvalidParameterError("numerical_gradient: h must be > 0");
    if (batch.empty()) throw EmptyInputError("numerical_gradient: empty batch");
    GradientStep g = zero_like(w);
    ModelWeights probe = w;
    for (std::size_t l = 0; l < w.layers.size(); ++l) {
        auto& pl = probe.layers[l];
        auto& gl = g.layers[l];
        for (std::size_t i = 0; i < pl.weights.data.size(); ++i) {
            double saved = pl.weights.data[i];
            pl.weights.data[i] = saved + h;
            double lp = batch_loss(probe, batch);
            pl.weights.data[i] = saved - h;
            double lm = batch_loss(probe, batch);
            pl.weights.data[i] = saved;
            gl.weights.data[i] = (lp - lm) / (2.0 * h);
        }
        for (std::size_t i = 0; i < pl.bias.size(); ++i) {
            double saved = pl.bias[i];
            pl.bias[i] = saved + h;
            double lp = batch_loss(probe, batch);
            pl.bias[i] = saved - h;
            double lm = batch_loss(probe, batch);
            pl.bias[i] = saved;
            gl.bias[i] = (lp - lm) / (2.0 * h);
        }
    }
    return g;
}

}  // namespace fedgrid
