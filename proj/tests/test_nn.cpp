#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "fedgrid/errors.hpp"
#include "fedgrid/nn.hpp"
#include "fedgrid/rng.hpp"

using namespace fedgrid;

namespace {

bool bit_equal(const ModelWeights& a, const ModelWeights& b) {
    if (a.layers.size() != b.layers.size()) return false;
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
        if (a.layers[l].weights.data != b.layers[l].weights.data) return false;
        if (a.layers[l].bias != b.layers[l].bias) return false;
    }
    return true;
}

ModelWeights random_net(const LayerSpec& spec, Rng& rng) {
    ModelWeights w = init_weights(spec, rng.next_u64());
    for (auto& l : w.layers)
        for (auto& b : l.bias) b = rng.uniform(-0.5, 0.5);
    return w;
}

std::vector<Sample> random_batch(std::size_t n, std::size_t dim, Rng& rng) {
    std::vector<Sample> batch(n);
    for (auto& s : batch) {
        s.features.resize(dim);
        for (auto& f : s.features) f = rng.uniform(-2.0, 2.0);
        s.target = rng.uniform(-2.0, 2.0);
    }
    return batch;
}

// Max relative error between analytic and finite-difference gradients,
// with an absolute floor near zero.
double grad_mismatch(const GradientStep& analytic, const GradientStep& numeric, double eta) {
    double worst = 0.0;
    for (std::size_t l = 0; l < analytic.layers.size(); ++l) {
        auto check = [&](double a, double nmr) {
            double g = a / -eta;  // undo the -eta scaling
            double denom = std::max({std::fabs(g), std::fabs(nmr), 1e-8 / 1e-4});
            worst = std::max(worst, std::fabs(g - nmr) / denom);
        };
        for (std::size_t i = 0; i < analytic.layers[l].weights.data.size(); ++i)
            check(analytic.layers[l].weights.data[i], numeric.layers[l].weights.data[i]);
        for (std::size_t i = 0; i < analytic.layers[l].bias.size(); ++i)
            check(analytic.layers[l].bias[i], numeric.layers[l].bias[i]);
    }
    return worst;
}

}  // namespace

TEST_CASE("init_weights is deterministic per seed") {
    LayerSpec spec;  // 6 -> 20 -> 20 -> 1
    ModelWeights a = init_weights(spec, 42);
    ModelWeights b = init_weights(spec, 42);
    CHECK(bit_equal(a, b));
    ModelWeights c = init_weights(spec, 43);
    CHECK_FALSE(bit_equal(a, c));
}

TEST_CASE("init_weights rejects degenerate specs") {
    LayerSpec spec;
    spec.hidden_dims = {0};
    CHECK_THROWS_AS(init_weights(spec, 42), InvalidSpecError);
    LayerSpec bad_out;
    bad_out.output_dim = 2;
    CHECK_THROWS_AS(init_weights(bad_out, 1), InvalidSpecError);
    LayerSpec bad_in;
    bad_in.input_dim = 0;
    CHECK_THROWS_AS(init_weights(bad_in, 1), InvalidSpecError);
}

TEST_CASE("init_weights: zero biases, weights within the fan-in bound") {
    LayerSpec spec;
    ModelWeights w = init_weights(spec, 42);
    REQUIRE(w.layers.size() == 3);
    auto dims = spec.dims();
    for (std::size_t l = 0; l < w.layers.size(); ++l) {
        double bound = 1.0 / std::sqrt(static_cast<double>(dims[l]));
        for (double v : w.layers[l].weights.data) CHECK(std::fabs(v) <= bound);
        for (double b : w.layers[l].bias) CHECK(b == 0.0);
    }
}

TEST_CASE("forward: zero network maps everything to zero") {
    LayerSpec spec;
    spec.input_dim = 4;
    ModelWeights w = init_weights(spec, 7);
    for (auto& l : w.layers) {
        for (auto& v : l.weights.data) v = 0.0;
        for (auto& b : l.bias) b = 0.0;
    }
    CHECK(forward(w, {1.0, -2.0, 3.5, 0.25}) == 0.0);
}

TEST_CASE("forward matches the hand-evaluated one-hidden-layer form near zero") {
    // 2-neuron tanh net with tiny weights: tanh(z) ~ z to first order.
    LayerSpec spec;
    spec.input_dim = 1;
    spec.hidden_dims = {2};
    spec.activation = ActivationKind::Tanh;
    ModelWeights w = init_weights(spec, 1);
    w.layers[0].weights.at(0, 0) = 0.001;
    w.layers[0].weights.at(1, 0) = -0.002;
    w.layers[0].bias = {0.0005, 0.001};
    w.layers[1].weights.at(0, 0) = 0.5;
    w.layers[1].weights.at(0, 1) = -0.3;
    w.layers[1].bias = {0.0};
    double x = 0.01;
    double linear = 0.5 * (0.001 * x + 0.0005) - 0.3 * (-0.002 * x + 0.001);
    CHECK(std::fabs(forward(w, {x}) - linear) < 1e-6);
}

TEST_CASE("forward: dead ReLU layer passes only the output bias") {
    LayerSpec spec;
    spec.input_dim = 3;
    spec.hidden_dims = {4};
    ModelWeights w = init_weights(spec, 3);
    for (auto& b : w.layers[0].bias) b = -100.0;  // all pre-activations negative
    w.layers[1].bias = {2.5};
    CHECK(forward(w, {0.1, 0.2, 0.3}) == 2.5);
}

TEST_CASE("forward rejects mismatched feature length") {
    LayerSpec spec;
    ModelWeights w = init_weights(spec, 42);
    CHECK_THROWS_AS(forward(w, {1.0, 2.0}), ShapeError);
}

TEST_CASE("batch_loss frozen examples") {
    LayerSpec spec;
    spec.input_dim = 1;
    spec.hidden_dims = {1};
    ModelWeights w = init_weights(spec, 5);
    // y = relu(x), identity for non-negative inputs
    w.layers[0].weights.at(0, 0) = 1.0;
    w.layers[1].weights.at(0, 0) = 1.0;

    // predictions equal targets -> 0
    std::vector<Sample> perfect = {{{2.0}, 2.0, 0}, {{0.5}, 0.5, 0}};
    CHECK(batch_loss(w, perfect) == 0.0);

    // one sample, Y = 3, y = 1 -> 4
    std::vector<Sample> one = {{{1.0}, 3.0, 0}};
    CHECK(batch_loss(w, one) == doctest::Approx(4.0));

    // errors 1 and 3 -> (1 + 9) / 2 = 5
    std::vector<Sample> two = {{{1.0}, 2.0, 0}, {{1.0}, 4.0, 0}};
    CHECK(batch_loss(w, two) == doctest::Approx(5.0));

    CHECK_THROWS_AS(batch_loss(w, {}), EmptyInputError);
}

TEST_CASE("gradient_step: zero at a perfect fit") {
    LayerSpec spec;
    spec.input_dim = 3;
    spec.hidden_dims = {5};
    Rng rng(11);
    ModelWeights w = random_net(spec, rng);
    std::vector<Sample> batch = random_batch(8, 3, rng);
    for (auto& s : batch) s.target = forward(w, s.features);  // loss is exactly 0
    GradientStep g = gradient_step(w, batch, 0.01);
    for (const auto& l : g.layers) {
        for (double v : l.weights.data) CHECK(v == 0.0);
        for (double v : l.bias) CHECK(v == 0.0);
    }
}

TEST_CASE("gradient_step matches central finite differences") {
    Rng rng(2024);
    for (int rep = 0; rep < 10; ++rep) {
        LayerSpec spec;
        spec.input_dim = 1 + rng.below(6);
        spec.hidden_dims = {1 + rng.below(6), 1 + rng.below(6)};
        spec.activation = static_cast<ActivationKind>(rng.below(3));
        ModelWeights w = random_net(spec, rng);
        auto batch = random_batch(1 + rng.below(12), spec.input_dim, rng);
        GradientStep analytic = gradient_step(w, batch, 1e-3);
        GradientStep numeric = numerical_gradient(w, batch, 1e-5);
        CHECK(grad_mismatch(analytic, numeric, 1e-3) < 1e-4);
    }
}

TEST_CASE("gradient_step is linear in eta") {
    LayerSpec spec;
    Rng rng(9);
    ModelWeights w = random_net(spec, rng);
    auto batch = random_batch(16, spec.input_dim, rng);
    GradientStep g1 = gradient_step(w, batch, 0.001);
    GradientStep g2 = gradient_step(w, batch, 0.002);
    for (std::size_t l = 0; l < g1.layers.size(); ++l) {
        for (std::size_t i = 0; i < g1.layers[l].weights.data.size(); ++i)
            CHECK(g2.layers[l].weights.data[i] == 2.0 * g1.layers[l].weights.data[i]);
        for (std::size_t i = 0; i < g1.layers[l].bias.size(); ++i)
            CHECK(g2.layers[l].bias[i] == 2.0 * g1.layers[l].bias[i]);
    }
}

TEST_CASE("gradient_step is deterministic") {
    LayerSpec spec;
    Rng rng(77);
    ModelWeights w = random_net(spec, rng);
    auto batch = random_batch(8, spec.input_dim, rng);
    GradientStep a = gradient_step(w, batch, 0.01);
    GradientStep b = gradient_step(w, batch, 0.01);
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
        CHECK(a.layers[l].weights.data == b.layers[l].weights.data);
        CHECK(a.layers[l].bias == b.layers[l].bias);
    }
}

TEST_CASE("apply_step identities") {
    LayerSpec spec;
    Rng rng(5);
    ModelWeights w = random_net(spec, rng);

    GradientStep zero;
    for (const auto& l : w.layers) {
        LayerParams z;
        z.weights = Matrix(l.weights.rows, l.weights.cols);
        z.bias.assign(l.bias.size(), 0.0);
        zero.layers.push_back(z);
    }
    CHECK(bit_equal(apply_step(w, zero), w));

    // w = 0 + delta = delta
    ModelWeights zeros = w;
    for (auto& l : zeros.layers) {
        for (auto& v : l.weights.data) v = 0.0;
        for (auto& b : l.bias) b = 0.0;
    }
    GradientStep d;
    for (const auto& l : w.layers) d.layers.push_back(l);
    ModelWeights applied = apply_step(zeros, d);
    CHECK(bit_equal(applied, w));
}

TEST_CASE("apply_step of a gradient step decreases the loss for small eta") {
    LayerSpec spec;
    Rng rng(13);
    ModelWeights w = random_net(spec, rng);
    auto batch = random_batch(12, spec.input_dim, rng);
    double before = batch_loss(w, batch);
    REQUIRE(before > 0.0);
    bool decreased_somewhere = false;
    for (double eta : {1e-2, 1e-3, 1e-4}) {
        double after = batch_loss(apply_step(w, gradient_step(w, batch, eta)), batch);
        if (after < before) decreased_somewhere = true;
    }
    CHECK(decreased_somewhere);
    // and the smallest step always descends at a non-stationary point
    double after = batch_loss(apply_step(w, gradient_step(w, batch, 1e-4)), batch);
    CHECK(after < before);
}

TEST_CASE("apply_step rejects mismatched shapes") {
    LayerSpec spec;
    ModelWeights w = init_weights(spec, 1);
    LayerSpec other;
    other.hidden_dims = {20, 19};
    ModelWeights v = init_weights(other, 1);
    GradientStep d;
    for (const auto& l : v.layers) d.layers.push_back(l);
    CHECK_THROWS_AS(apply_step(w, d), ShapeError);
}

TEST_CASE("shape congruence property: random mismatches always throw") {
    Rng rng(31);
    for (int rep = 0; rep < 40; ++rep) {
        LayerSpec spec;
        spec.input_dim = 1 + rng.below(5);
        spec.hidden_dims = {1 + rng.below(5)};
        ModelWeights w = init_weights(spec, rng.next_u64());
        LayerSpec other = spec;
        // perturb one dimension
        if (rng.below(2) == 0)
            other.input_dim += 1;
        else
            other.hidden_dims[0] += 1;
        ModelWeights v = init_weights(other, rng.next_u64());
        GradientStep d;
        for (const auto& l : v.layers) d.layers.push_back(l);
        CHECK_THROWS_AS(apply_step(w, d), ShapeError);
        std::vector<double> bad_x(spec.input_dim + 1, 0.5);
        CHECK_THROWS_AS(forward(w, bad_x), ShapeError);
    }
}

TEST_CASE("numerical_gradient: zero net with zero targets") {
    LayerSpec spec;
    spec.input_dim = 2;
    spec.hidden_dims = {3};
    ModelWeights w = init_weights(spec, 2);
    for (auto& l : w.layers)
        for (auto& v : l.weights.data) v = 0.0;
    std::vector<Sample> batch = {{{1.0, 2.0}, 0.0, 0}, {{-1.0, 0.5}, 0.0, 0}};
    GradientStep g = numerical_gradient(w, batch, 1e-5);
    for (const auto& l : g.layers) {
        for (double v : l.weights.data) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
        for (double v : l.bias) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("numerical_gradient: hand-derived single-weight derivative") {
    // 1 -> 1 -> 1 ReLU net in the positive regime behaves as y = w_out * x, so
    // dL/dw_out = 2 (y - Y) x.
    LayerSpec spec;
    spec.input_dim = 1;
    spec.hidden_dims = {1};
    ModelWeights w = init_weights(spec, 4);
    w.layers[0].weights.at(0, 0) = 1.0;
    w.layers[0].bias = {0.0};
    w.layers[1].weights.at(0, 0) = 0.7;
    w.layers[1].bias = {0.0};
    double x = 1.3, target = 2.0;
    std::vector<Sample> batch = {{{x}, target, 0}};
    double y = 0.7 * x;
    double expected = 2.0 * (y - target) * x;
    GradientStep g = numerical_gradient(w, batch, 1e-6);
    CHECK(g.layers[1].weights.data[0] == doctest::Approx(expected).epsilon(1e-7));
}

TEST_CASE("loss is non-negative with exact-fit zero on random nets") {
    Rng rng(99);
    for (int rep = 0; rep < 20; ++rep) {
        LayerSpec spec;
        spec.input_dim = 1 + rng.below(4);
        spec.hidden_dims = {1 + rng.below(4)};
        spec.activation = static_cast<ActivationKind>(rng.below(3));
        ModelWeights w = random_net(spec, rng);
        auto batch = random_batch(4, spec.input_dim, rng);
        CHECK(batch_loss(w, batch) >= 0.0);
        for (auto& s : batch) s.target = forward(w, s.features);
        CHECK(batch_loss(w, batch) == 0.0);
    }
}

TEST_CASE("activation derivatives are defined everywhere") {
    CHECK(activate_deriv(ActivationKind::ReLU, 0.0) == 0.0);
    CHECK(activate_deriv(ActivationKind::ReLU, 1.0) == 1.0);
    CHECK(activate_deriv(ActivationKind::ReLU, -1.0) == 0.0);
    CHECK(activate_deriv(ActivationKind::Tanh, 0.0) == doctest::Approx(1.0));
    CHECK(activate_deriv(ActivationKind::Sigmoid, 0.0) == doctest::Approx(0.25));
}
