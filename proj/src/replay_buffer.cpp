#include "safedqn/replay_buffer.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace safedqn::agent {

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t obs_dim) : capacity_(capacity), dim_(obs_dim) {
    if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
    xs_.resize(capacity * obs_dim);
    xns_.resize(capacity * obs_dim);
    r_g_.resize(capacity);
    r_c_.resize(capacity);
    actions_.resize(capacity);
    done_.resize(capacity);
}

void ReplayBuffer::push(std::span<const double> x_t, std::span<const double> x_next, std::size_t action,
                        double r_g, double r_c, bool done) {
    if (x_t.size() != dim_ || x_next.size() != dim_)
        throw std::invalid_argument("ReplayBuffer::push: observation length " + std::to_string(x_t.size()) +
                                    " != " + std::to_string(dim_));
    std::copy(x_t.begin(), x_t.end(), xs_.begin() + static_cast<std::ptrdiff_t>(head_ * dim_));
    std::copy(x_next.begin(), x_next.end(), xns_.begin() + static_cast<std::ptrdiff_t>(head_ * dim_));
    actions_[head_] = action;
    r_g_[head_] = r_g;
    r_c_[head_] = r_c;
    done_[head_] = done ? 1 : 0;
    head_ = (head_ + 1) % capacity_;
    size_ = std::min(size_ + 1, capacity_);
}

void ReplayBuffer::push(const Transition& t) { push(t.x_t, t.x_next, t.action, t.r_g, t.r_c, t.done); }

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t count, Rng& rng) const {
    if (size_ == 0) throw std::logic_error("ReplayBuffer::sample_indices on an empty buffer");
    std::vector<std::size_t> out(count);
    for (auto& i : out) i = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(size_) - 1));
    return out;
}

Transition ReplayBuffer::at(std::size_t slot) const {
    if (slot >= size_) throw std::out_of_range("ReplayBuffer::at");
    Transition t;
    t.x_t.assign(x_t(slot).begin(), x_t(slot).end());
    t.x_next.assign(x_next(slot).begin(), x_next(slot).end());
    t.action = actions_[slot];
    t.r_g = r_g_[slot];
    t.r_c = r_c_[slot];
    t.done = done_[slot] != 0;
    return t;
}

ReplayBuffer::Storage ReplayBuffer::storage() const {
    Storage s;
    s.xs.assign(xs_.begin(), xs_.begin() + static_cast<std::ptrdiff_t>(size_ * dim_));
    s.xns.assign(xns_.begin(), xns_.begin() + static_cast<std::ptrdiff_t>(size_ * dim_));
    s.r_g.assign(r_g_.begin(), r_g_.begin() + static_cast<std::ptrdiff_t>(size_));
    s.r_c.assign(r_c_.begin(), r_c_.begin() + static_cast<std::ptrdiff_t>(size_));
    s.actions.assign(actions_.begin(), actions_.begin() + static_cast<std::ptrdiff_t>(size_));
    s.done.assign(done_.begin(), done_.begin() + static_cast<std::ptrdiff_t>(size_));
    return s;
}

void ReplayBuffer::restore(std::size_t capacity, std::size_t obs_dim, std::size_t size, std::size_t head,
                           Storage s) {
    if (size > capacity || head >= capacity || s.xs.size() != size * obs_dim || s.xns.size() != size * obs_dim ||
        s.r_g.size() != size || s.r_c.size() != size || s.actions.size() != size || s.done.size() != size)
        throw std::invalid_argument("ReplayBuffer::restore: inconsistent storage");
    *this = ReplayBuffer(capacity, obs_dim);
    std::copy(s.xs.begin(), s.xs.end(), xs_.begin());
    std::copy(s.xns.begin(), s.xns.end(), xns_.begin());
    std::copy(s.r_g.begin(), s.r_g.end(), r_g_.begin());
    std::copy(s.r_c.begin(), s.r_c.end(), r_c_.begin());
    std::copy(s.actions.begin(), s.actions.end(), actions_.begin());
    std::copy(s.done.begin(), s.done.end(), done_.begin());
    size_ = size;
    head_ = head;
}

}  // namespace safedqn::agent
