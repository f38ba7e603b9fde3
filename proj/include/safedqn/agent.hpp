#pragma once

// Safety-decomposed DQN agent.
//
// A goal network learns from r_c (goal bonus and step penalty) and a safety
// network learns from r_g (conflict and collision penalties). Acting sums the
// two Q-vectors, then rejects candidates whose safety Q-value sits below the
// per-state mean safety Q-value. CoupledDQN mode trains the goal network alone
// on r_c + r_g and leaves the safety pair at zero, which turns the gate off.

#include "safedqn/airspace_env.hpp"
#include "safedqn/dueling_net.hpp"
#include "safedqn/replay_buffer.hpp"
#include "safedqn/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace safedqn::agent {

enum class Mode { SafeDQN, CoupledDQN };
// Joint: both heads bootstrap at argmax of the summed target Q.
// PerHead: each head bootstraps at its own argmax.
enum class TargetMode { Joint, PerHead };
enum class LrDecayCadence { PerUpdate, PerEpisode };

std::string_view to_string(Mode m) noexcept;
std::string_view to_string(TargetMode m) noexcept;
std::string_view to_string(LrDecayCadence m) noexcept;

struct AgentConfig {
    double gamma = 0.99;
    std::size_t batch_size = 64;
    std::size_t buffer_capacity = 100000;
    std::size_t target_sync_tau = 1000;
    std::size_t episodes = 20000;
    double eta_start = 1.0;
    double eta_end = 0.05;
    // Per-episode multiplicative factor; 0 selects the factor that reaches
    // eta_end at 80% of the episodes.
    double eta_decay = 0.0;
    std::size_t k = 3;
    Mode mode = Mode::SafeDQN;
    env::RouteCount route_training = env::RandomRoutes{};
    TargetMode target_mode = TargetMode::Joint;
    std::size_t warmup = 1000;
    std::size_t train_every = 1;
    double learning_rate = 1e-4;
    double lr_decay = 0.9999;
    LrDecayCadence lr_decay_cadence = LrDecayCadence::PerEpisode;
    std::vector<std::size_t> hidden{128, 64, 32};
    bool residual_projection = false;
    bool gate_in_training = true;

    bool operator==(const AgentConfig&) const = default;
};

// Throws std::invalid_argument naming the first offending field.
void validate(const AgentConfig& config);

double eta_decay_factor(const AgentConfig& config) noexcept;
// Exploration rate for a zero-based episode index.
double eta_at(const AgentConfig& config, std::size_t episode) noexcept;

nn::NetShape net_shape(const AgentConfig& config);

struct PolicyBundle {
    nn::DuelingNet goal_net, goal_target;
    nn::DuelingNet safety_net, safety_target;
    nn::AdamState goal_adam, safety_adam;
    AgentConfig config;

    std::size_t input_dim() const noexcept { return goal_net.input_dim(); }
    bool operator==(const PolicyBundle&) const = default;
};

PolicyBundle make_bundle(const AgentConfig& config, std::uint64_t seed);

// Arithmetic mean of the safety Q-values.
double safety_threshold(std::span<const double> q_g) noexcept;

struct GateResult {
    std::size_t action = 0;
    bool fallback = false;
};

// Greedy gated choice: argmax of q_c + q_g over the surviving candidates,
// dropping any candidate with q_g < delta; argmax q_g when none survive.
GateResult gated_argmax(std::span<const double> q_c, std::span<const double> q_g, double delta);

struct QPair {
    std::vector<double> q_c;
    std::vector<double> q_g;  // zeros in CoupledDQN mode
};

QPair evaluate_q(const PolicyBundle& bundle, std::span<const double> obs);

struct SelectOptions {
    // Overrides the mean-of-Q_g threshold; -inf disables the gate.
    std::optional<double> delta_override;
    bool gate = true;
};

env::ActionIndex select_action(const PolicyBundle& bundle, std::span<const double> obs, double eta, Rng& rng,
                               const SelectOptions& options = {});

// Gated greedy action from precomputed Q-values, honouring the bundle mode.
env::ActionIndex greedy_action(const PolicyBundle& bundle, const QPair& q, const SelectOptions& options = {});

struct Targets {
    std::vector<double> y_c;
    std::vector<double> y_g;  // empty in CoupledDQN mode (y_c then carries r_c + r_g)
};

// Bootstrapped targets for replay slots.
Targets compute_targets(const PolicyBundle& bundle, const ReplayBuffer& buffer, std::span<const std::size_t> slots);

struct TrainLosses {
    double loss_c = 0.0;
    double loss_g = 0.0;
};

// One uniform minibatch and one Adam step per trained network.
TrainLosses train_step(PolicyBundle& bundle, const ReplayBuffer& buffer, Rng& rng);
// Same update on explicit replay slots.
TrainLosses train_on_slots(PolicyBundle& bundle, const ReplayBuffer& buffer, std::span<const std::size_t> slots);

void sync_targets(PolicyBundle& bundle);

// Value-head output of the safety network.
double state_safety_value(const PolicyBundle& bundle, std::span<const double> obs);

struct EpisodeLog {
    std::size_t episode = 0;
    double score = 0.0;
    std::size_t steps = 0;
    env::Termination termination = env::Termination::None;
    double eta = 0.0;
    double lr = 0.0;
    bool operator==(const EpisodeLog&) const = default;
};

// Full training state; resuming from a copy reproduces the remaining episodes
// bit for bit.
struct TrainerState {
    PolicyBundle bundle;
    ReplayBuffer buffer;
    env::EnvConfig env_config;
    std::uint64_t seed = 0;
    std::size_t next_episode = 0;
    std::uint64_t global_step = 0;
    std::uint64_t sync_count = 0;
    Rng agent_rng;
};

class Trainer {
public:
    Trainer(const AgentConfig& config, const env::EnvConfig& env_config, std::uint64_t seed);
    explicit Trainer(TrainerState state);

    EpisodeLog run_episode();
    bool finished() const noexcept { return state_.next_episode >= state_.bundle.config.episodes; }

    const TrainerState& state() const noexcept { return state_; }
    TrainerState& mutable_state() noexcept { return state_; }
    const PolicyBundle& bundle() const noexcept { return state_.bundle; }

    // Env config used for training episodes (route count and k applied).
    static env::EnvConfig training_env(const AgentConfig& config, env::EnvConfig env_config);

private:
    TrainerState state_;
};

struct TrainHooks {
    std::function<void(const EpisodeLog&, const Trainer&)> on_episode;
    // Invoked with the trainer before a numeric failure propagates.
    std::function<void(const Trainer&)> on_numeric_failure;
};

struct TrainResult {
    PolicyBundle bundle;
    std::vector<EpisodeLog> log;
};

TrainResult train(const AgentConfig& config, const env::EnvConfig& env_config, std::uint64_t seed,
                  const TrainHooks& hooks = {});
// Continues until trainer.finished(); returns the episodes run here.
std::vector<EpisodeLog> train_until_done(Trainer& trainer, const TrainHooks& hooks = {});

}  // namespace safedqn::agent
