#pragma once

#include "safedqn/rng.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace safedqn::agent {

struct Transition {
    std::vector<double> x_t;
    std::vector<double> x_next;
    std::size_t action = 0;
    double r_g = 0.0;
    double r_c = 0.0;
    bool done = false;
};

// Fixed-capacity FIFO ring of transitions stored in flat arrays.
class ReplayBuffer {
public:
    ReplayBuffer() = default;
    ReplayBuffer(std::size_t capacity, std::size_t obs_dim);

    void push(const Transition& t);
    void push(std::span<const double> x_t, std::span<const double> x_next, std::size_t action, double r_g,
              double r_c, bool done);

    // Uniform with replacement over the current contents.
    std::vector<std::size_t> sample_indices(std::size_t count, Rng& rng) const;

    // Slot i in physical storage order, i < size().
    Transition at(std::size_t slot) const;
    std::span<const double> x_t(std::size_t slot) const noexcept { return {xs_.data() + slot * dim_, dim_}; }
    std::span<const double> x_next(std::size_t slot) const noexcept { return {xns_.data() + slot * dim_, dim_}; }
    std::size_t action(std::size_t slot) const noexcept { return actions_[slot]; }
    double r_g(std::size_t slot) const noexcept { return r_g_[slot]; }
    double r_c(std::size_t slot) const noexcept { return r_c_[slot]; }
    bool done(std::size_t slot) const noexcept { return done_[slot] != 0; }

    std::size_t size() const noexcept { return size_; }
    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t obs_dim() const noexcept { return dim_; }
    // Next slot to be written.
    std::size_t head() const noexcept { return head_; }

    // Raw storage, used by checkpointing.
    struct Storage {
        std::vector<double> xs, xns, r_g, r_c;
        std::vector<std::size_t> actions;
        std::vector<unsigned char> done;
    };
    Storage storage() const;
    void restore(std::size_t capacity, std::size_t obs_dim, std::size_t size, std::size_t head, Storage s);

    bool operator==(const ReplayBuffer&) const = default;

private:
    std::size_t capacity_ = 0;
    std::size_t dim_ = 0;
    std::size_t size_ = 0;
    std::size_t head_ = 0;
    std::vector<double> xs_, xns_, r_g_, r_c_;
    std::vector<std::size_t> actions_;
    std::vector<unsigned char> done_;
};

}  // namespace safedqn::agent
