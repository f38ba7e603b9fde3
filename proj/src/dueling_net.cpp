#include "safedqn/dueling_net.hpp"

#include "safedqn/kernels.hpp"
#include "safedqn/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace safedqn::nn {

namespace {

void require_dim(std::size_t got, std::size_t want, const char* what) {
    if (got != want)
        throw std::invalid_argument(std::string(what) + ": expected dimension " + std::to_string(want) + ", got " +
                                    std::to_string(got));
}

bool finite(std::span<const double> v) noexcept {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

DuelingNet::DuelingNet(NetShape shape) : shape_(std::move(shape)) {
    if (shape_.input_dim == 0 || shape_.action_count == 0 || shape_.hidden.empty())
        throw std::invalid_argument("NetShape: input_dim, action_count and hidden widths must be non-empty");
    std::size_t offset = 0;
    auto add = [&](std::size_t rows, std::size_t cols, bool with_bias) {
        LayerSlot l{rows, cols, offset, LayerSlot::npos};
        offset += rows * cols;
        if (with_bias) {
            l.bias_offset = offset;
            offset += rows;
        }
        layers_.push_back(l);
    };
    std::size_t prev = shape_.input_dim;
    for (std::size_t w : shape_.hidden) {
        if (w == 0) throw std::invalid_argument("NetShape: hidden width must be positive");
        add(w, prev, true);
        prev = w;
    }
    if (shape_.residual_projection) {
        prev = shape_.input_dim;
        for (std::size_t w : shape_.hidden) {
            add(w, prev, false);
            prev = w;
        }
    }
    add(1, prev, true);
    add(shape_.action_count, prev, true);
    params_.assign(offset, 0.0);
}

const LayerSlot& DuelingNet::skip_layer(std::size_t i) const {
    if (!shape_.residual_projection) throw std::logic_error("net has no projection skips");
    return layers_.at(shape_.hidden.size() + i);
}

std::span<double> DuelingNet::bias(const LayerSlot& l) noexcept {
    if (l.bias_offset == LayerSlot::npos) return {};
    return {params_.data() + l.bias_offset, l.rows};
}

std::span<const double> DuelingNet::bias(const LayerSlot& l) const noexcept {
    if (l.bias_offset == LayerSlot::npos) return {};
    return {params_.data() + l.bias_offset, l.rows};
}

bool DuelingNet::all_finite() const noexcept { return finite(params_); }

AdamState make_adam(std::size_t param_count, double lr, double lr_decay) {
    AdamState s;
    s.first_moments.assign(param_count, 0.0);
    s.second_moments.assign(param_count, 0.0);
    s.lr = lr;
    s.lr_decay = lr_decay;
    return s;
}

std::size_t argmax(std::span<const double> v) noexcept {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

void forward_batch(const DuelingNet& net, std::span<const double> inputs, std::size_t batch, ForwardTrace& t) {
    const auto& k = kernels::active();
    const NetShape& shape = net.shape();
    require_dim(inputs.size(), batch * shape.input_dim, "forward_batch inputs");
    const std::size_t L = shape.hidden.size();
    const std::size_t A = shape.action_count;

    t.batch = batch;
    t.input.assign(inputs.begin(), inputs.end());
    t.pre.resize(L);
    t.post.resize(L);
    std::vector<double> skip;
    const double* prev = t.input.data();
    std::size_t prev_w = shape.input_dim;
    for (std::size_t l = 0; l < L; ++l) {
        const LayerSlot& s = net.hidden_layer(l);
        t.pre[l].resize(batch * s.rows);
        t.post[l].resize(batch * s.rows);
        k.gemm_nt(batch, s.rows, s.cols, prev, net.weights(s).data(), net.bias(s).data(), t.pre[l].data());
        for (std::size_t i = 0; i < t.pre[l].size(); ++i) t.post[l][i] = std::max(0.0, t.pre[l][i]);
        if (shape.residual_projection) {
            const LayerSlot& p = net.skip_layer(l);
            skip.resize(batch * p.rows);
            k.gemm_nt(batch, p.rows, p.cols, prev, net.weights(p).data(), nullptr, skip.data());
            for (std::size_t i = 0; i < skip.size(); ++i) t.post[l][i] += skip[i];
        }
        prev = t.post[l].data();
        prev_w = s.rows;
    }
    const LayerSlot& vh = net.value_head();
    const LayerSlot& ah = net.advantage_head();
    t.value.resize(batch);
    t.advantage.resize(batch * A);
    t.q.resize(batch * A);
    t.advantage_argmax.resize(batch);
    k.gemm_nt(batch, 1, prev_w, prev, net.weights(vh).data(), net.bias(vh).data(), t.value.data());
    k.gemm_nt(batch, A, prev_w, prev, net.weights(ah).data(), net.bias(ah).data(), t.advantage.data());
    for (std::size_t b = 0; b < batch; ++b) {
        const double* a = t.advantage.data() + b * A;
        const std::size_t best = argmax({a, A});
        t.advantage_argmax[b] = best;
        const double amax = a[best];
        for (std::size_t u = 0; u < A; ++u) t.q[b * A + u] = t.value[b] + (a[u] - amax);
    }
}

void backward_batch(const DuelingNet& net, const ForwardTrace& t, std::span<const double> dq, ParamVector* grads,
                    std::vector<double>* input_grad) {
    const auto& k = kernels::active();
    const NetShape& shape = net.shape();
    const std::size_t B = t.batch;
    const std::size_t A = shape.action_count;
    const std::size_t L = shape.hidden.size();
    require_dim(dq.size(), B * A, "backward_batch dq");
    if (grads) require_dim(grads->size(), net.param_count(), "backward_batch grads");

    // Dueling aggregation: dq/dv = 1, dq[u]/da[j] = [u == j] - [j == argmax a].
    std::vector<double> dv(B), da(B * A);
    for (std::size_t b = 0; b < B; ++b) {
        double sum = 0.0;
        for (std::size_t u = 0; u < A; ++u) {
            sum += dq[b * A + u];
            da[b * A + u] = dq[b * A + u];
        }
        dv[b] = sum;
        da[b * A + t.advantage_argmax[b]] -= sum;
    }

    const std::size_t last_w = shape.hidden.back();
    const double* last = t.post[L - 1].data();
    const LayerSlot& vh = net.value_head();
    const LayerSlot& ah = net.advantage_head();
    double* g = grads ? grads->data() : nullptr;
    if (g) {
        k.gemm_tn_acc(1, last_w, B, dv.data(), last, g + vh.weight_offset);
        k.gemm_tn_acc(A, last_w, B, da.data(), last, g + ah.weight_offset);
        for (std::size_t b = 0; b < B; ++b) {
            g[vh.bias_offset] += dv[b];
            for (std::size_t u = 0; u < A; ++u) g[ah.bias_offset + u] += da[b * A + u];
        }
    }

    std::vector<double> dpost(B * last_w), tmp, dz;
    k.gemm_nn(B, last_w, 1, dv.data(), net.weights(vh).data(), dpost.data());
    tmp.resize(B * last_w);
    k.gemm_nn(B, last_w, A, da.data(), net.weights(ah).data(), tmp.data());
    for (std::size_t i = 0; i < dpost.size(); ++i) dpost[i] += tmp[i];

    for (std::size_t li = L; li-- > 0;) {
        const LayerSlot& s = net.hidden_layer(li);
        const double* prev = li == 0 ? t.input.data() : t.post[li - 1].data();
        const std::size_t in_w = s.cols;
        dz.resize(B * s.rows);
        for (std::size_t i = 0; i < dz.size(); ++i) dz[i] = t.pre[li][i] > 0.0 ? dpost[i] : 0.0;
        if (g) {
            k.gemm_tn_acc(s.rows, in_w, B, dz.data(), prev, g + s.weight_offset);
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t r = 0; r < s.rows; ++r) g[s.bias_offset + r] += dz[b * s.rows + r];
            if (shape.residual_projection) {
                const LayerSlot& p = net.skip_layer(li);
                k.gemm_tn_acc(p.rows, in_w, B, dpost.data(), prev, g + p.weight_offset);
            }
        }
        if (li == 0 && !input_grad) break;
        std::vector<double> dprev(B * in_w);
        k.gemm_nn(B, in_w, s.rows, dz.data(), net.weights(s).data(), dprev.data());
        if (shape.residual_projection) {
            const LayerSlot& p = net.skip_layer(li);
            tmp.resize(B * in_w);
            k.gemm_nn(B, in_w, p.rows, dpost.data(), net.weights(p).data(), tmp.data());
            for (std::size_t i = 0; i < dprev.size(); ++i) dprev[i] += tmp[i];
        }
        if (li == 0) {
            *input_grad = std::move(dprev);
        } else {
            dpost = std::move(dprev);
        }
    }
}

ForwardResult forward(const DuelingNet& net, std::span<const double> obs) {
    require_dim(obs.size(), net.input_dim(), "forward");
    ForwardResult r;
    forward_batch(net, obs, 1, r.trace);
    r.q = r.trace.q;
    r.v = r.trace.value[0];
    r.a = r.trace.advantage;
    return r;
}

std::vector<double> q_values(const DuelingNet& net, std::span<const double> obs) {
    require_dim(obs.size(), net.input_dim(), "q_values");
    ForwardTrace t;
    forward_batch(net, obs, 1, t);
    return std::move(t.q);
}

void BellmanBatch::add(std::span<const double> obs, std::size_t action, double target) {
    inputs.insert(inputs.end(), obs.begin(), obs.end());
    actions.push_back(action);
    targets.push_back(target);
}

LossAndGrad bellman_loss_grad(const DuelingNet& net, const BellmanBatch& batch) {
    const std::size_t B = batch.size();
    if (B == 0) throw std::invalid_argument("bellman_loss_grad: empty batch");
    if (batch.targets.size() != B) throw std::invalid_argument("bellman_loss_grad: targets/actions size mismatch");
    if (!finite(batch.targets)) throw NumericError("bellman_loss_grad: non-finite target");
    const std::size_t A = net.action_count();

    ForwardTrace t;
    forward_batch(net, batch.inputs, B, t);
    if (!finite(t.q))
        throw NumericError("bellman_loss_grad: non-finite Q-values in forward pass");

    LossAndGrad out;
    out.grads.assign(net.param_count(), 0.0);
    std::vector<double> dq(B * A, 0.0);
    double loss = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
        const std::size_t u = batch.actions[b];
        if (u >= A) throw std::invalid_argument("bellman_loss_grad: action out of range");
        const double diff = t.q[b * A + u] - batch.targets[b];
        loss += diff * diff;
        dq[b * A + u] = 2.0 * diff / static_cast<double>(B);
    }
    out.loss = loss / static_cast<double>(B);
    if (!std::isfinite(out.loss)) throw NumericError("bellman_loss_grad: non-finite loss");
    backward_batch(net, t, dq, &out.grads, nullptr);
    return out;
}

void adam_update(DuelingNet& net, std::span<const double> grads, AdamState& s) {
    require_dim(grads.size(), net.param_count(), "adam_update grads");
    if (s.first_moments.size() != grads.size()) s.first_moments.assign(grads.size(), 0.0);
    if (s.second_moments.size() != grads.size()) s.second_moments.assign(grads.size(), 0.0);
    ++s.step_count;
    const double t = static_cast<double>(s.step_count);
    const double c1 = 1.0 - std::pow(s.beta1, t);
    const double c2 = 1.0 - std::pow(s.beta2, t);
    auto p = net.params();
    for (std::size_t i = 0; i < grads.size(); ++i) {
        const double g = grads[i];
        double& m = s.first_moments[i];
        double& v = s.second_moments[i];
        m = s.beta1 * m + (1.0 - s.beta1) * g;
        v = s.beta2 * v + (1.0 - s.beta2) * g * g;
        p[i] -= s.lr * (m / c1) / (std::sqrt(v / c2) + s.epsilon);
    }
    if (s.decay_per_update) s.decay_lr();
}

std::vector<double> softmax(std::span<const double> q, double temperature) {
    std::vector<double> p(q.size());
    if (q.empty()) return p;
    const double mx = *std::max_element(q.begin(), q.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        p[i] = std::exp((q[i] - mx) / temperature);
        sum += p[i];
    }
    for (double& x : p) x /= sum;
    return p;
}

double argmax_cross_entropy(std::span<const double> q) {
    const std::size_t best = argmax(q);
    const double mx = q[best];
    double sum = 0.0;
    for (double x : q) sum += std::exp(x - mx);
    return std::log(sum);  // -log softmax(q)[best]
}

std::vector<double> cross_entropy_dq(std::span<const double> q) {
    auto dq = softmax(q, 1.0);
    dq[argmax(q)] -= 1.0;
    return dq;
}

std::vector<double> input_vjp(const DuelingNet& net, std::span<const double> obs, std::span<const double> dq) {
    require_dim(obs.size(), net.input_dim(), "input_vjp");
    ForwardTrace t;
    forward_batch(net, obs, 1, t);
    std::vector<double> gx;
    backward_batch(net, t, dq, nullptr, &gx);
    return gx;
}

std::vector<double> input_gradient(const DuelingNet& net, std::span<const double> obs) {
    require_dim(obs.size(), net.input_dim(), "input_gradient");
    ForwardTrace t;
    forward_batch(net, obs, 1, t);
    const auto dq = cross_entropy_dq(t.q);
    std::vector<double> gx;
    backward_batch(net, t, dq, nullptr, &gx);
    return gx;
}

DuelingNet init_net(const NetShape& shape, std::uint64_t seed) {
    DuelingNet net(shape);
    Rng rng(seed);
    for (const LayerSlot& l : net.layers()) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(l.cols));
        for (double& w : net.weights(l)) w = uniform(rng, -bound, bound);
    }
    return net;
}

InitResult init(const NetShape& shape, std::uint64_t seed) {
    InitResult r{init_net(shape, seed), {}};
    r.adam = make_adam(r.net.param_count());
    return r;
}

InitResult init(std::size_t input_dim, std::uint64_t seed) {
    NetShape shape;
    shape.input_dim = input_dim;
    return init(shape, seed);
}

}  // namespace safedqn::nn
