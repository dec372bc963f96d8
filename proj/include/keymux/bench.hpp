// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0
//
// Latency-decomposition harness: runs full key establishments against
// locally launched services and splits each side's wall time into named
// components (key generation, processing, network, decryption,
// reconstruction, KEM overhead).  Summaries use nearest-rank percentiles so
// numbers reproduce bit-for-bit across implementations.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace keymux::bench {

struct BenchConfig {
  std::string config_id = "default";
  uint32_t runs = 1000;
  uint32_t key_bits = 256;
  uint16_t num_splits = 8;
  bool shuffle = true;
  uint32_t num_channels = 2;
  std::string mode = "classical";  // "classical" | "pq-tunnel"
  std::string kem = "stub";        // KEM provider in pq-tunnel mode
  std::string encrypt_mode = "direct-asymmetric";  // | "envelope"
  bool via_proxy = false;
  uint64_t seed = 1;
  int64_t trial_deadline_ms = 30'000;
};

void validate(const BenchConfig& cfg);

/// One side of one trial.  components_us holds only the components that
/// apply to the configuration's mode (pq_kem exists only under pq-tunnel).
struct TrialRecord {
  std::string config_id;
  std::string side;  // "qkms" | "client"
  uint64_t trial = 0;
  std::map<std::string, double> components_us;
  double wall_us = 0.0;
  int64_t timestamp_ms = 0;
  bool failed = false;
};

struct BenchResult {
  std::vector<TrialRecord> records;
  uint32_t failures = 0;
};

/// Launches the configured services on loopback and drives cfg.runs
/// two-party establishments.  Failed trials yield a `failed` record and
/// count toward `failures`; their timings never enter summaries.
BenchResult run_bench(const BenchConfig& cfg);

struct SummaryRow {
  std::string side;
  std::string component;
  double mean = 0.0;
  double median = 0.0;
  double p95 = 0.0;
  double p99 = 0.0;
  double stddev = 0.0;
  uint64_t samples = 0;
};

/// Per (side, component) statistics over the non-failed records; "wall"
/// appears as a pseudo-component.
std::vector<SummaryRow> summarize(const std::vector<TrialRecord>& records);

// Long-format CSV: config_id,side,trial,component,duration_us.
std::string records_to_csv(const std::vector<TrialRecord>& records);
std::vector<TrialRecord> records_from_csv(const std::string& csv);

std::string summary_to_csv(const std::vector<SummaryRow>& rows);

/// Log-scale horizontal bar chart of component means.
std::string render_svg(const std::vector<SummaryRow>& rows);

}  // namespace keymux::bench
