// Copyright 2026 The qfuse Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qfuse/common.hpp"

namespace qfuse::bench {

enum class Mode { Naive, Fused, FusedMemSave };

const char *to_string(Mode m);
Mode mode_from_string(const std::string &s);

struct BenchConfig {
    std::uint32_t qubits = 4;
    std::uint32_t layers = 1;
    std::uint32_t batch = 1;
    std::uint32_t shape_qubits = 0; // 0 = plain HEA; otherwise layer-shape replica
    Mode mode = Mode::Fused;
    std::uint32_t block = 0; // checkpoint block size in layers; 0 = off
    Precision precision = Precision::Single;
    std::uint64_t seed = 1234;
    std::string observable; // empty = IXYZ... repeated to the qubit count
    std::uint32_t reps = 5;
    std::uint32_t warmup = 3;
    std::uint32_t threads = 0; // 0 = library default
    std::string out;           // empty = stdout
    std::string format = "json";

    /// Throws std::invalid_argument on bad flag combinations and
    /// CapacityError when the predicted working set exceeds the limit.
    void validate() const;
};

struct BenchReport {
    std::uint32_t schema_version = 1;
    std::string tool_version = kVersion;
    BenchConfig config;

    // timing (excluded from round-trip equality)
    double wall_mean_s = 0.0;
    double wall_stddev_s = 0.0;
    double throughput_sps = 0.0;

    // deterministic results
    std::uint64_t forward_traversals = 0;
    std::uint64_t backward_traversals = 0;
    std::uint64_t observable_traversals = 0;
    double ledger_peak_units = 0.0;
    std::uint64_t ledger_peak_bytes = 0;
    double loss = 0.0;
    double gradient_checksum = 0.0; // sum of gradient components
};

/// Builds the HEA workload from the config, runs `warmup` untimed and
/// `reps` timed gradient evaluations, and collects counters from the last
/// run (all runs are bit-identical apart from wall clock).
BenchReport run_bench(const BenchConfig &config);

/// One run per block size; every entry must divide the layer count.
std::vector<BenchReport> scan_blocks(const BenchConfig &config,
                                     const std::vector<std::uint32_t> &blocks);

std::string report_to_json(const BenchReport &report);
std::string reports_to_json(const std::vector<BenchReport> &reports);
BenchReport report_from_json(const std::string &text);
std::vector<BenchReport> reports_from_json(const std::string &text);

std::string csv_header();
std::string report_to_csv_row(const BenchReport &report);
std::string reports_to_csv(const std::vector<BenchReport> &reports);
std::vector<BenchReport> reports_from_csv(const std::string &text);

/// Non-timing fields only (schema, config echo, counters, checksum).
bool deterministic_fields_equal(const BenchReport &a, const BenchReport &b);

} // namespace qfuse::bench
