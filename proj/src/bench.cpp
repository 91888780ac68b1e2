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
#include "qfuse/bench.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <omp.h>

#include <json.hpp>

#include "qfuse/checkpoint.hpp"
#include "qfuse/engine.hpp"

namespace qfuse::bench {

using nlohmann::json;

const char *to_string(Mode m) {
    switch (m) {
    case Mode::Naive:
        return "naive";
    case Mode::Fused:
        return "fused";
    case Mode::FusedMemSave:
    default:
        return "fused_mem_save";
    }
}

Mode mode_from_string(const std::string &s) {
    if (s == "naive") {
        return Mode::Naive;
    }
    if (s == "fused") {
        return Mode::Fused;
    }
    if (s == "fused_mem_save") {
        return Mode::FusedMemSave;
    }
    throw std::invalid_argument("unknown mode: " + s);
}

namespace {

std::string resolved_observable(const BenchConfig &config) {
    return config.observable.empty() ? repeated_ixyz_label(config.qubits)
                                     : config.observable;
}

std::size_t state_vector_bytes(const BenchConfig &config) {
    const std::size_t amp_bytes = config.precision == Precision::Single ? 8 : 16;
    return (std::size_t{1} << config.qubits) * config.batch * amp_bytes;
}

/// Predicted stored vectors plus working buffers, in state-vector units.
double predicted_units(const BenchConfig &config) {
    constexpr double kWorkingBuffers = 6.0;
    const std::uint32_t width = config.shape_qubits > 0 ? config.shape_qubits : config.qubits;
    const std::uint32_t l_var = 3 * width;
    const std::uint32_t l_const = width == 2 ? 1 : width;
    double stored = 0.0;
    if (config.block == 0) {
        if (config.mode == Mode::Naive) {
            stored = static_cast<double>(l_var + l_const) * config.layers;
        } else {
            const double unit = config.mode == Mode::FusedMemSave ? 0.5 : 1.0;
            stored = std::ceil(static_cast<double>(l_var) / 9.0) * unit * config.layers;
        }
    } else if (config.mode == Mode::Naive) {
        stored = model_native(config.block, l_var, l_const, config.layers);
    } else {
        const StorageMode mode = config.mode == Mode::FusedMemSave ? StorageMode::MemSave
                                                                   : StorageMode::Full;
        stored = model_fused(config.block, l_var, 9, config.layers, mode);
    }
    return stored + kWorkingBuffers;
}

template <class T> BenchReport run_bench_impl(const BenchConfig &config) {
    if (config.threads > 0) {
        omp_set_num_threads(static_cast<int>(config.threads));
    }

    Circuit circuit = config.shape_qubits > 0
                          ? build_hea_shape(config.qubits, config.layers,
                                            config.shape_qubits)
                          : build_hea(config.qubits, config.layers);
    circuit.theta() = random_parameters(circuit.n_params(), config.seed + 1);
    const PauliString pauli = parse_pauli(resolved_observable(config), config.qubits);
    const BatchedState<T> psi0 =
        new_random_state<T>(config.qubits, config.batch, config.seed);

    const FusedCircuit fused = fuse_circuit(circuit);
    const StorageMode mode =
        config.mode == Mode::FusedMemSave ? StorageMode::MemSave : StorageMode::Full;

    MemoryAccountant accountant(state_vector_bytes(config));
    auto run_once = [&]() -> GradientResult {
        accountant.reset();
        if (config.block == 0) {
            if (config.mode == Mode::Naive) {
                return naive_gradient(circuit, psi0, circuit.theta(), pauli,
                                      &accountant);
            }
            return gradient(fused, psi0, circuit.theta(), pauli, mode, &accountant);
        }
        if (config.mode == Mode::Naive) {
            const auto plan = CheckpointPlan::uniform(circuit.gates().size(),
                                                      config.layers, config.block);
            return run_checkpointed_naive(circuit, psi0, circuit.theta(), pauli, plan,
                                          &accountant);
        }
        const auto plan =
            CheckpointPlan::uniform(fused.ops.size(), config.layers, config.block);
        return run_checkpointed(fused, psi0, circuit.theta(), pauli, plan, mode,
                                &accountant);
    };

    for (std::uint32_t i = 0; i < config.warmup; ++i) {
        run_once();
    }

    std::vector<double> wall(config.reps, 0.0);
    GradientResult last;
    for (std::uint32_t i = 0; i < config.reps; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        last = run_once();
        const auto t1 = std::chrono::steady_clock::now();
        wall[i] = std::chrono::duration<double>(t1 - t0).count();
    }

    double mean = 0.0;
    for (const double w : wall) {
        mean += w;
    }
    mean /= static_cast<double>(config.reps);
    double var = 0.0;
    for (const double w : wall) {
        var += (w - mean) * (w - mean);
    }
    const double stddev =
        config.reps > 1 ? std::sqrt(var / static_cast<double>(config.reps - 1)) : 0.0;

    BenchReport report;
    report.config = config;
    report.config.observable = resolved_observable(config);
    report.wall_mean_s = mean;
    report.wall_stddev_s = stddev;
    report.throughput_sps = mean > 0.0 ? static_cast<double>(config.batch) / mean : 0.0;
    report.forward_traversals = last.stats.forward_traversals;
    report.backward_traversals = last.stats.backward_traversals;
    report.observable_traversals = last.stats.observable_traversals;
    report.ledger_peak_units = accountant.peak_units();
    report.ledger_peak_bytes = accountant.peak_bytes();
    report.loss = last.loss;
    double checksum = 0.0;
    for (const double g : last.gradient) {
        checksum += g;
    }
    report.gradient_checksum = checksum;
    return report;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

void BenchConfig::validate() const {
    if (qubits < 2) {
        throw std::invalid_argument("config: need at least 2 qubits");
    }
    if (layers == 0) {
        throw std::invalid_argument("config: need at least 1 layer");
    }
    if (batch == 0) {
        throw std::invalid_argument("config: batch must be >= 1");
    }
    if (shape_qubits != 0 && (shape_qubits < 2 || qubits < 3)) {
        throw std::invalid_argument(
            "config: shape replica needs shape >= 2 and at least 3 qubits");
    }
    if (reps == 0) {
        throw std::invalid_argument("config: repetitions must be >= 1");
    }
    if (block != 0 && layers % block != 0) {
        throw std::invalid_argument("config: block " + std::to_string(block) +
                                    " does not divide layer count " +
                                    std::to_string(layers));
    }
    if (format != "csv" && format != "json") {
        throw std::invalid_argument("config: format must be csv or json");
    }
    parse_pauli(resolved_observable(*this), qubits);
    const double bytes = predicted_units(*this) * static_cast<double>(state_vector_bytes(*this));
    if (bytes > static_cast<double>(alloc_limit())) {
        throw CapacityError("config: predicted working set of " +
                            std::to_string(bytes / (1024.0 * 1024.0)) +
                            " MiB exceeds the allocation limit");
    }
}

BenchReport run_bench(const BenchConfig &config) {
    config.validate();
    if (config.precision == Precision::Single) {
        return run_bench_impl<float>(config);
    }
    return run_bench_impl<double>(config);
}

std::vector<BenchReport> scan_blocks(const BenchConfig &config,
                                     const std::vector<std::uint32_t> &blocks) {
    if (blocks.empty()) {
        throw std::invalid_argument("scan_blocks: empty block list");
    }
    for (const std::uint32_t b : blocks) {
        if (b == 0 || config.layers % b != 0) {
            throw std::invalid_argument("scan_blocks: block " + std::to_string(b) +
                                        " does not divide layer count " +
                                        std::to_string(config.layers));
        }
    }
    std::vector<BenchReport> reports;
    reports.reserve(blocks.size());
    for (const std::uint32_t b : blocks) {
        BenchConfig scan_config = config;
        scan_config.block = b;
        reports.push_back(run_bench(scan_config));
    }
    return reports;
}

namespace {

json config_to_json(const BenchConfig &c) {
    return json{{"qubits", c.qubits},
                {"layers", c.layers},
                {"batch", c.batch},
                {"shape_qubits", c.shape_qubits},
                {"mode", to_string(c.mode)},
                {"block", c.block},
                {"precision", qfuse::to_string(c.precision)},
                {"seed", c.seed},
                {"observable", c.observable},
                {"reps", c.reps},
                {"warmup", c.warmup},
                {"threads", c.threads},
                {"out", c.out},
                {"format", c.format}};
}

BenchConfig config_from_json(const json &j) {
    BenchConfig c;
    c.qubits = j.at("qubits").get<std::uint32_t>();
    c.layers = j.at("layers").get<std::uint32_t>();
    c.batch = j.at("batch").get<std::uint32_t>();
    c.shape_qubits = j.at("shape_qubits").get<std::uint32_t>();
    c.mode = mode_from_string(j.at("mode").get<std::string>());
    c.block = j.at("block").get<std::uint32_t>();
    c.precision = precision_from_string(j.at("precision").get<std::string>());
    c.seed = j.at("seed").get<std::uint64_t>();
    c.observable = j.at("observable").get<std::string>();
    c.reps = j.at("reps").get<std::uint32_t>();
    c.warmup = j.at("warmup").get<std::uint32_t>();
    c.threads = j.at("threads").get<std::uint32_t>();
    c.out = j.at("out").get<std::string>();
    c.format = j.at("format").get<std::string>();
    return c;
}

json report_to_json_obj(const BenchReport &r) {
    return json{{"schema_version", r.schema_version},
                {"tool_version", r.tool_version},
                {"config", config_to_json(r.config)},
                {"results",
                 json{{"wall_mean_s", r.wall_mean_s},
                      {"wall_stddev_s", r.wall_stddev_s},
                      {"throughput_sps", r.throughput_sps},
                      {"forward_traversals", r.forward_traversals},
                      {"backward_traversals", r.backward_traversals},
                      {"observable_traversals", r.observable_traversals},
                      {"ledger_peak_units", r.ledger_peak_units},
                      {"ledger_peak_bytes", r.ledger_peak_bytes},
                      {"loss", r.loss},
                      {"gradient_checksum", r.gradient_checksum}}}};
}

BenchReport report_from_json_obj(const json &j) {
    BenchReport r;
    r.schema_version = j.at("schema_version").get<std::uint32_t>();
    r.tool_version = j.at("tool_version").get<std::string>();
    r.config = config_from_json(j.at("config"));
    const json &res = j.at("results");
    r.wall_mean_s = res.at("wall_mean_s").get<double>();
    r.wall_stddev_s = res.at("wall_stddev_s").get<double>();
    r.throughput_sps = res.at("throughput_sps").get<double>();
    r.forward_traversals = res.at("forward_traversals").get<std::uint64_t>();
    r.backward_traversals = res.at("backward_traversals").get<std::uint64_t>();
    r.observable_traversals = res.at("observable_traversals").get<std::uint64_t>();
    r.ledger_peak_units = res.at("ledger_peak_units").get<double>();
    r.ledger_peak_bytes = res.at("ledger_peak_bytes").get<std::uint64_t>();
    r.loss = res.at("loss").get<double>();
    r.gradient_checksum = res.at("gradient_checksum").get<double>();
    return r;
}

} // namespace

std::string report_to_json(const BenchReport &report) {
    return report_to_json_obj(report).dump(2);
}

std::string reports_to_json(const std::vector<BenchReport> &reports) {
    json arr = json::array();
    for (const auto &r : reports) {
        arr.push_back(report_to_json_obj(r));
    }
    return arr.dump(2);
}

BenchReport report_from_json(const std::string &text) {
    return report_from_json_obj(json::parse(text));
}

std::vector<BenchReport> reports_from_json(const std::string &text) {
    const json arr = json::parse(text);
    std::vector<BenchReport> reports;
    for (const auto &j : arr) {
        reports.push_back(report_from_json_obj(j));
    }
    return reports;
}

std::string csv_header() {
    return "schema_version,tool_version,qubits,layers,batch,shape_qubits,mode,block,"
           "precision,seed,observable,reps,warmup,threads,out,format,wall_mean_s,"
           "wall_stddev_s,throughput_sps,forward_traversals,backward_traversals,"
           "observable_traversals,ledger_peak_units,ledger_peak_bytes,loss,"
           "gradient_checksum";
}

std::string report_to_csv_row(const BenchReport &r) {
    std::ostringstream os;
    os << r.schema_version << ',' << r.tool_version << ',' << r.config.qubits << ','
       << r.config.layers << ',' << r.config.batch << ',' << r.config.shape_qubits
       << ',' << to_string(r.config.mode)
       << ',' << r.config.block << ',' << qfuse::to_string(r.config.precision) << ','
       << r.config.seed << ',' << r.config.observable << ',' << r.config.reps << ','
       << r.config.warmup << ',' << r.config.threads << ',' << r.config.out << ','
       << r.config.format << ',' << format_double(r.wall_mean_s) << ','
       << format_double(r.wall_stddev_s) << ',' << format_double(r.throughput_sps) << ','
       << r.forward_traversals << ',' << r.backward_traversals << ','
       << r.observable_traversals << ',' << format_double(r.ledger_peak_units) << ','
       << r.ledger_peak_bytes << ',' << format_double(r.loss) << ','
       << format_double(r.gradient_checksum);
    return os.str();
}

std::string reports_to_csv(const std::vector<BenchReport> &reports) {
    std::ostringstream os;
    os << csv_header() << '\n';
    for (const auto &r : reports) {
        os << report_to_csv_row(r) << '\n';
    }
    return os.str();
}

std::vector<BenchReport> reports_from_csv(const std::string &text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line != csv_header()) {
        throw std::invalid_argument("csv: missing or unexpected header");
    }
    std::vector<BenchReport> reports;
    while (std::getline(is, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ls(line);
        while (std::getline(ls, field, ',')) {
            fields.push_back(field);
        }
        if (line.back() == ',') {
            fields.emplace_back();
        }
        if (fields.size() != 26) {
            throw std::invalid_argument("csv: expected 26 fields, got " +
                                        std::to_string(fields.size()));
        }
        BenchReport r;
        std::size_t i = 0;
        r.schema_version = static_cast<std::uint32_t>(std::stoul(fields[i++]));
        r.tool_version = fields[i++];
        r.config.qubits = static_cast<std::uint32_t>(std::stoul(fields[i++]));
        r.config.layers = static_cast<std::uint32_t>(std::stoul(fields[i++]));
        r.config.batch = static_cast<std::uint32_t>(std::stoul(fields[i++]));
        r.config.shape_qubits = static_cast<std::uint32_t>(std::stoul(fields[i++]));
        r.config.mode = mode_from_string(fields[i++]);
        r.config.block = static_cast<std::uint32_t>(std::stoul(fields[i++]));
        r.config.precision = precision_from_string(fields[i++]);
        r.config.seed = std::stoull(fields[i++]);
        r.config.observable = fields[i++];
        r.config.reps = static_cast<std::uint32_t>(std::stoul(fields[i++]));
        r.config.warmup = static_cast<std::uint32_t>(std::stoul(fields[i++]));
        r.config.threads = static_cast<std::uint32_t>(std::stoul(fields[i++]));
        r.config.out = fields[i++];
        r.config.format = fields[i++];
        r.wall_mean_s = std::stod(fields[i++]);
        r.wall_stddev_s = std::stod(fields[i++]);
        r.throughput_sps = std::stod(fields[i++]);
        r.forward_traversals = std::stoull(fields[i++]);
        r.backward_traversals = std::stoull(fields[i++]);
        r.observable_traversals = std::stoull(fields[i++]);
        r.ledger_peak_units = std::stod(fields[i++]);
        r.ledger_peak_bytes = std::stoull(fields[i++]);
        r.loss = std::stod(fields[i++]);
        r.gradient_checksum = std::stod(fields[i++]);
        reports.push_back(std::move(r));
    }
    return reports;
}

bool deterministic_fields_equal(const BenchReport &a, const BenchReport &b) {
    const auto key = [](const BenchReport &r) {
        return std::tuple(r.schema_version, r.tool_version, r.config.qubits,
                          r.config.layers, r.config.batch, r.config.shape_qubits,
                          r.config.mode, r.config.block,
                          r.config.precision, r.config.seed, r.config.observable,
                          r.config.reps, r.config.warmup, r.config.threads, r.config.out,
                          r.config.format, r.forward_traversals, r.backward_traversals,
                          r.observable_traversals, r.ledger_peak_units,
                          r.ledger_peak_bytes, r.loss, r.gradient_checksum);
    };
    return key(a) == key(b);
}

} // namespace qfuse::bench
