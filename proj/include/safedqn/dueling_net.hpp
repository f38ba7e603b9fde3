#pragma once

// Dueling MLP Q-network with hand-written reverse mode.
//
//   input -> dense+ReLU (x3, default widths 128/64/32) -> {value: 1, advantage: A}
//   q[u] = v + (a[u] - max_u' a[u'])
//
// All parameters live in one contiguous buffer so gradients and Adam moments
// are plain vectors of the same length. Argmax ties resolve to the lowest index.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace safedqn::nn {

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct NetShape {
    std::size_t input_dim = 20;
    std::vector<std::size_t> hidden{128, 64, 32};
    std::size_t action_count = 9;
    // Adds a bias-free linear projection skip around every hidden layer.
    bool residual_projection = false;

    bool operator==(const NetShape&) const = default;
};

// One dense block inside the parameter buffer. bias_offset == npos for the
// bias-free projection skips.
struct LayerSlot {
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::size_t rows = 0;  // outputs
    std::size_t cols = 0;  // inputs
    std::size_t weight_offset = 0;
    std::size_t bias_offset = npos;
    bool operator==(const LayerSlot&) const = default;
};

using ParamVector = std::vector<double>;

class DuelingNet {
public:
    DuelingNet() = default;
    // All-zero parameters.
    explicit DuelingNet(NetShape shape);

    const NetShape& shape() const noexcept { return shape_; }
    std::size_t input_dim() const noexcept { return shape_.input_dim; }
    std::size_t action_count() const noexcept { return shape_.action_count; }
    std::size_t param_count() const noexcept { return params_.size(); }

    std::span<double> params() noexcept { return params_; }
    std::span<const double> params() const noexcept { return params_; }

    // Ordered hidden..., skips... (when residual), value head, advantage head.
    const std::vector<LayerSlot>& layers() const noexcept { return layers_; }
    const LayerSlot& hidden_layer(std::size_t i) const { return layers_.at(i); }
    const LayerSlot& skip_layer(std::size_t i) const;
    const LayerSlot& value_head() const noexcept { return layers_[layers_.size() - 2]; }
    const LayerSlot& advantage_head() const noexcept { return layers_.back(); }

    std::span<double> weights(const LayerSlot& l) noexcept {
        return {params_.data() + l.weight_offset, l.rows * l.cols};
    }
    std::span<const double> weights(const LayerSlot& l) const noexcept {
        return {params_.data() + l.weight_offset, l.rows * l.cols};
    }
    std::span<double> bias(const LayerSlot& l) noexcept;
    std::span<const double> bias(const LayerSlot& l) const noexcept;

    bool all_finite() const noexcept;
    bool operator==(const DuelingNet&) const = default;

private:
    NetShape shape_;
    std::vector<LayerSlot> layers_;
    ParamVector params_;
};

struct AdamState {
    ParamVector first_moments;
    ParamVector second_moments;
    std::uint64_t step_count = 0;
    double lr = 1e-4;
    double lr_decay = 0.9999;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    // When false the caller decays the learning rate itself via decay_lr().
    bool decay_per_update = true;

    void decay_lr() noexcept { lr *= lr_decay; }
    bool operator==(const AdamState&) const = default;
};

AdamState make_adam(std::size_t param_count, double lr = 1e-4, double lr_decay = 0.9999);

// Activations cached by a batched forward pass; everything backward needs.
struct ForwardTrace {
    std::size_t batch = 0;
    std::vector<double> input;               // batch x input_dim
    std::vector<std::vector<double>> pre;    // per hidden layer, batch x width
    std::vector<std::vector<double>> post;   // per hidden layer, batch x width
    std::vector<double> value;               // batch
    std::vector<double> advantage;           // batch x A
    std::vector<double> q;                   // batch x A
    std::vector<std::size_t> advantage_argmax;  // batch
};

struct ForwardResult {
    std::vector<double> q;
    double v = 0.0;
    std::vector<double> a;
    ForwardTrace trace;
};

// Throws std::invalid_argument on a dimension mismatch.
ForwardResult forward(const DuelingNet& net, std::span<const double> obs);

// Q-values only; skips building the public result.
std::vector<double> q_values(const DuelingNet& net, std::span<const double> obs);

// inputs is batch x input_dim, row-major.
void forward_batch(const DuelingNet& net, std::span<const double> inputs, std::size_t batch, ForwardTrace& trace);

// Reverse pass from dL/dq (batch x A). Accumulates parameter gradients into
// grads (when non-null, sized param_count) and writes dL/dinput
// (batch x input_dim) into input_grad (when non-null).
void backward_batch(const DuelingNet& net, const ForwardTrace& trace, std::span<const double> dq,
                    ParamVector* grads, std::vector<double>* input_grad);

struct BellmanBatch {
    std::vector<double> inputs;  // batch x input_dim
    std::vector<std::size_t> actions;
    std::vector<double> targets;

    std::size_t size() const noexcept { return actions.size(); }
    void add(std::span<const double> obs, std::size_t action, double target);
};

struct LossAndGrad {
    double loss = 0.0;
    ParamVector grads;
};

// Mean squared Bellman error over the batch and its exact gradient.
// Throws NumericError when activations or the loss are non-finite.
LossAndGrad bellman_loss_grad(const DuelingNet& net, const BellmanBatch& batch);

// In-place Adam step with bias correction; decays lr afterwards when
// state.decay_per_update is set.
void adam_update(DuelingNet& net, std::span<const double> grads, AdamState& state);

// Index of the largest entry, lowest index on ties.
std::size_t argmax(std::span<const double> v) noexcept;

// Max-shifted softmax at temperature T.
std::vector<double> softmax(std::span<const double> q, double temperature = 1.0);

// Cross-entropy between softmax(q) and the one-hot of argmax q.
double argmax_cross_entropy(std::span<const double> q);

// Gradient of argmax_cross_entropy(q(obs)) with respect to obs.
std::vector<double> input_gradient(const DuelingNet& net, std::span<const double> obs);

// dJ/dq for argmax_cross_entropy: softmax(q) - onehot(argmax q).
std::vector<double> cross_entropy_dq(std::span<const double> q);

// Gradient with respect to obs of sum_u dq[u] * q[u](obs).
std::vector<double> input_vjp(const DuelingNet& net, std::span<const double> obs, std::span<const double> dq);

// Scaled-uniform fan-in weights U(-1/sqrt(fan_in), 1/sqrt(fan_in)), zero biases.
DuelingNet init_net(const NetShape& shape, std::uint64_t seed);

struct InitResult {
    DuelingNet net;
    AdamState adam;
};
InitResult init(std::size_t input_dim, std::uint64_t seed);
InitResult init(const NetShape& shape, std::uint64_t seed);

inline DuelingNet clone(const DuelingNet& net) { return net; }

}  // namespace safedqn::nn
