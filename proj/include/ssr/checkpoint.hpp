#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "ssr/toy_policy.hpp"

namespace ssr::train {

// Last finished metrics row, carried inside checkpoints so a resumed run can
// report continuity.
struct MetricsSnapshot {
  int64_t step = 0;
  double mean_r_all = 0.0;
  double mean_r_self = 0.0;
  double format_rate = 0.0;
  double mean_answer_tokens = 0.0;
  double grad_norm = 0.0;
};

struct Checkpoint {
  int64_t step = 0;
  policy::ToyVocab vocab;
  policy::ToyPolicyParams params;
  std::string config_hash;
  MetricsSnapshot running;
};

// Single-file archive: 8-byte magic, little-endian u64 header length, JSON
// header (shapes, dtype "<f8", step, rng state, config hash, metrics
// snapshot), then the raw little-endian float64 parameter arrays in header
// order. Loading and resuming reproduces the interrupted trajectory
// bit-for-bit on the toy backend.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ssr::train
