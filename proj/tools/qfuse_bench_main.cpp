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
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qfuse/bench.hpp"
#include "qfuse/circuit.hpp"
#include "qfuse/common.hpp"

namespace {

void write_output(const std::string &path, const std::string &text) {
    if (path.empty()) {
        std::cout << text << std::endl;
        return;
    }
    std::ofstream os(path);
    if (!os) {
        throw std::invalid_argument("cannot open output file: " + path);
    }
    os << text << '\n';
}

} // namespace

int main(int argc, char **argv) {
    qfuse::bench::BenchConfig config;
    std::string mode = "fused";
    std::string precision = "single";
    std::vector<std::uint32_t> scan;
    std::string emit_circuit;

    CLI::App app{
        "qfuse-bench: gradient throughput, traversal, and memory-unit benchmarks "
        "for layered hardware-efficient circuits"};
    app.add_option("--qubits", config.qubits, "qubit count")->default_val(4);
    app.add_option("--layers", config.layers, "HEA layers")->default_val(1);
    app.add_option("--batch", config.batch, "batch size")->default_val(1);
    app.add_option("--shape-qubits", config.shape_qubits,
                   "replicate the layer shape of this circuit width on the "
                   "--qubits register (0 = plain HEA)")
        ->default_val(0);
    app.add_option("--mode", mode, "naive | fused | fused_mem_save")
        ->default_val("fused");
    app.add_option("--block", config.block,
                   "checkpoint block size in layers (0 = off; must divide --layers)")
        ->default_val(0);
    app.add_option("--precision", precision, "single | double")->default_val("single");
    app.add_option("--seed", config.seed, "PRNG seed")->default_val(1234);
    app.add_option("--observable", config.observable,
                   "Pauli label, leftmost char on the highest qubit "
                   "(default: IXYZ repeated)");
    app.add_option("--reps", config.reps, "timed repetitions")->default_val(5);
    app.add_option("--warmup", config.warmup, "untimed warmup runs")->default_val(3);
    app.add_option("--threads", config.threads, "worker threads (0 = default)")
        ->default_val(0);
    app.add_option("--out", config.out, "output path (default: stdout)");
    app.add_option("--format", config.format, "csv | json")->default_val("json");
    app.add_option("--scan-blocks", scan,
                   "comma-separated checkpoint block sizes; one run per entry")
        ->delimiter(',');
    app.add_option("--emit-circuit", emit_circuit,
                   "also write the generated circuit in text form to this path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        config.mode = qfuse::bench::mode_from_string(mode);
        config.precision = qfuse::precision_from_string(precision);

        if (!emit_circuit.empty()) {
            std::ofstream os(emit_circuit);
            if (!os) {
                throw std::invalid_argument("cannot open circuit file: " + emit_circuit);
            }
            qfuse::write_circuit(os, qfuse::build_hea(config.qubits, config.layers));
        }

        if (!scan.empty()) {
            const auto reports = qfuse::bench::scan_blocks(config, scan);
            write_output(config.out, config.format == "json"
                                         ? qfuse::bench::reports_to_json(reports)
                                         : qfuse::bench::reports_to_csv(reports));
        } else {
            const auto report = qfuse::bench::run_bench(config);
            write_output(config.out, config.format == "json"
                                         ? qfuse::bench::report_to_json(report)
                                         : qfuse::bench::reports_to_csv({report}));
        }
    } catch (const qfuse::CapacityError &e) {
        std::cerr << "capacity error: " << e.what() << std::endl;
        return 3;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 2;
    }
    return 0;
}
