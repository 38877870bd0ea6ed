#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedgrid/timegrid.hpp"

namespace fedgrid {

enum class ActivationKind { ReLU, Tanh, Sigmoid };

std::string to_string(ActivationKind k);
bool try_parse_activation(const std::string& text, ActivationKind& out);

double activate(ActivationKind k, double x);
// Derivative in terms of the pre-activation x. ReLU'(0) is defined as 0.
double activate_deriv(ActivationKind k, double x);

// Network architecture: input -> hidden... -> scalar output. Hidden layers
// use `activation`, the output layer is linear.
struct LayerSpec {
    std::size_t input_dim = 6;
    std::vector<std::size_t> hidden_dims = {20, 20};
    std::size_t output_dim = 1;
    ActivationKind activation = ActivationKind::ReLU;

    // Layer dimensions as a chain: [input, hidden..., output].
    std::vector<std::size_t> dims() const;
    void validate() const;  // throws InvalidSpecError

    bool operator==(const LayerSpec&) const = default;
};

// Dense row-major matrix, rows = layer output dim, cols = layer input dim.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // rows * cols

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

struct LayerParams {
    Matrix weights;
    std::vector<double> bias;  // length = weights.rows
};

struct ModelWeights {
    ActivationKind activation = ActivationKind::ReLU;
    std::vector<LayerParams> layers;

    LayerSpec spec() const;
    std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().weights.cols; }
    std::size_t parameter_count() const;
};

// delta = -eta * grad(L); same shapes as the ModelWeights it came from.
// numerical_gradient reuses the container for raw dL/dtheta values.
struct GradientStep {
    std::vector<LayerParams> layers;
};

struct Sample {
    std::vector<double> features;  // lagged power values
    double target = 0.0;           // power at T
    MinuteTime timestamp = 0;
};

// Training hyperparameters; defaults follow the reference configuration.
struct Hyperparams {
    double learning_rate = 0.001;
    std::size_t mini_batch_size = 96;
    std::size_t max_epochs = 150;
    double tolerance = 0.001;
};

// Deterministic init: weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)],
// biases zero.
ModelWeights init_weights(const LayerSpec& spec, std::uint64_t seed);

double forward(const ModelWeights& w, const std::vector<double>& x);

// Mean squared prediction error over the batch.
double batch_loss(const ModelWeights& w, const std::vector<Sample>& batch);

// delta = -eta * grad(batch_loss) by analytic backpropagation.
GradientStep gradient_step(const ModelWeights& w, const std::vector<Sample>& batch, double eta);

// w + delta, elementwise; inputs untouched.
ModelWeights apply_step(const ModelWeights& w, const GradientStep& delta);

// Central finite differences of batch_loss, one coordinate at a time.
// Verification oracle; returns raw dL/dtheta (not scaled by -eta).
GradientStep numerical_gradient(const ModelWeights& w, const std::vector<Sample>& batch, double h);

// Shape-congruence helpers (throw ShapeError on mismatch).
void check_congruent(const ModelWeights& w, const GradientStep& delta);

}  // namespace fedgrid
