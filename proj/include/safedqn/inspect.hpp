#pragma once

// Per-state explainability report: the safety state-value and the 3x3
// action-probability maps (softmax at T = 1) of Q = Q_c + Q_g, Q_c and Q_g.
// Grid rows are the speed actions (acc, keep, dec); columns the heading
// actions (left, keep, right).

#include "safedqn/agent.hpp"
#include "safedqn/airspace_env.hpp"
#include "safedqn/trace.hpp"

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace safedqn::inspect {

using Grid = std::array<std::array<double, 3>, 3>;

struct StateReport {
    std::size_t t = 0;
    double safety_value = 0.0;
    Grid overall{};
    Grid goal{};
    Grid safety{};
};

Grid probability_grid(std::span<const double> q, double temperature = 1.0);

StateReport inspect_observation(const agent::PolicyBundle& bundle, std::span<const double> obs, std::size_t t = 0);

// Reconstructs the simulator state before step `index` of a trace (index 0 is
// the header's initial state, index i the state after step i).
env::AirspaceState state_at(const trace::Trace& trace, std::size_t index);

// One report per trace state, observations built with `env_config`
// normalization and the bundle's k.
std::vector<StateReport> inspect_trace(const agent::PolicyBundle& bundle, const env::EnvConfig& env_config,
                                       const trace::Trace& trace);

// t,safety_value,map,acc_left,acc_keep,acc_right,keep_left,...,dec_right
void write_csv(std::ostream& os, const std::vector<StateReport>& reports);

// Three side-by-side heat maps for one state.
std::string render_svg(const StateReport& report);

}  // namespace safedqn::inspect
