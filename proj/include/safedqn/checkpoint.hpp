#pragma once

// Versioned JSON checkpoints.
//
// Envelope: {"format_version": N, "checksum": crc32 of the serialized body,
// "body": {...}}. The body carries the config echo, every network as
// per-layer {rows, cols, weights (row-major), bias}, both Adam states and,
// for trainer checkpoints, the schedule and RNG cursors. The replay buffer of
// a trainer checkpoint lives in a binary sidecar "<path>.replay" whose crc32
// is recorded in the body.

#include "safedqn/agent.hpp"
#include "safedqn/airspace_env.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace safedqn::checkpoint {

inline constexpr int kFormatVersion = 1;

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LoadedBundle {
    agent::PolicyBundle bundle;
    env::EnvConfig env;
};

std::string serialize_bundle(const agent::PolicyBundle& bundle, const env::EnvConfig& env_config);
// Accepts bundle and trainer checkpoints.
LoadedBundle parse_bundle(std::string_view text);

void save_bundle(const std::filesystem::path& path, const agent::PolicyBundle& bundle,
                 const env::EnvConfig& env_config);
LoadedBundle load_bundle(const std::filesystem::path& path);

// Writes the JSON checkpoint and its replay sidecar.
void save_trainer(const std::filesystem::path& path, const agent::TrainerState& state);
agent::TrainerState load_trainer(const std::filesystem::path& path);

std::filesystem::path replay_sidecar(const std::filesystem::path& checkpoint_path);

}  // namespace safedqn::checkpoint
