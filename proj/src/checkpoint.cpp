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
#include "qfuse/checkpoint.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace qfuse {

namespace {

void check_divisible(std::uint32_t layers, std::uint32_t block_layers) {
    if (layers == 0 || block_layers == 0) {
        throw std::invalid_argument("checkpoint: layer counts must be positive");
    }
    if (layers % block_layers != 0) {
        throw std::invalid_argument("checkpoint: block size " +
                                    std::to_string(block_layers) +
                                    " does not divide layer count " +
                                    std::to_string(layers));
    }
}

} // namespace

CheckpointPlan CheckpointPlan::uniform(std::size_t total_ops, std::uint32_t layers,
                                       std::uint32_t block_layers) {
    check_divisible(layers, block_layers);
    if (total_ops == 0 || total_ops % layers != 0) {
        throw std::invalid_argument("checkpoint: op count is not layer-periodic");
    }
    CheckpointPlan plan;
    plan.layers = layers;
    plan.block_layers = block_layers;
    plan.ops_per_layer = total_ops / layers;
    return plan;
}

double model_native(std::uint32_t block_layers, std::uint32_t var_gates_per_layer,
                    std::uint32_t const_gates_per_layer, std::uint32_t layers) {
    check_divisible(layers, block_layers);
    return static_cast<double>(var_gates_per_layer + const_gates_per_layer) *
               block_layers +
           static_cast<double>(layers) / block_layers;
}

double model_fused(std::uint32_t block_layers, std::uint32_t var_gates_per_layer,
                   std::uint32_t max_constituents, std::uint32_t layers,
                   StorageMode mode) {
    check_divisible(layers, block_layers);
    if (max_constituents == 0) {
        throw std::invalid_argument("model_fused: constituent cap must be positive");
    }
    const auto entries_per_layer =
        (var_gates_per_layer + max_constituents - 1) / max_constituents;
    const double unit = mode == StorageMode::MemSave ? 0.5 : 1.0;
    return entries_per_layer * unit * block_layers +
           static_cast<double>(layers) / block_layers;
}

double optimal_block(double units_per_layer, std::uint32_t layers) {
    if (units_per_layer <= 0.0) {
        throw std::invalid_argument("optimal_block: units per layer must be positive");
    }
    return std::sqrt(static_cast<double>(layers) / units_per_layer);
}

namespace {

/// Shared protocol: forward stores one full-precision input per block and
/// runs blocks without a ledger; backward recomputes each block's ledger
/// from its stored input, consumes it, and frees both.
template <class T, class ForwardBlock, class BackwardBlock>
GradientResult run_checkpointed_impl(const BatchedState<T> &psi0,
                                     const PauliString &pauli,
                                     const CheckpointPlan &plan, StorageMode mode,
                                     std::size_t n_params, MemoryAccountant *accountant,
                                     ForwardBlock &&forward_block,
                                     BackwardBlock &&backward_block_fn) {
    MemoryAccountant local(BatchedState<T>::bytes(psi0.n_qubits(), psi0.batch()));
    MemoryAccountant *acct = accountant != nullptr ? accountant : &local;

    const std::size_t n_blocks = plan.block_count();
    RunStats stats;

    // forward: keep only each block's input, at full precision
    std::vector<BatchedState<T>> inputs;
    inputs.reserve(n_blocks);
    BatchedState<T> psi = psi0;
    const std::size_t input_bytes = BatchedState<T>::bytes(psi.n_qubits(), psi.batch());
    for (std::size_t b = 0; b < n_blocks; ++b) {
        if ((inputs.size() + 1) * input_bytes > alloc_limit()) {
            throw CapacityError("checkpoint inputs exceed the allocation limit");
        }
        inputs.push_back(psi);
        acct->add(1.0);
        const auto [begin, end] = plan.block_op_range(b);
        forward_block(begin, end, psi, nullptr, stats, nullptr);
    }

    GradientResult result;
    const std::vector<double> values = expectation(psi, pauli);
    ++stats.observable_traversals;
    for (const double v : values) {
        result.loss += v;
    }
    BatchedState<T> lambda = seed_adjoint(psi, pauli);
    ++stats.observable_traversals;

    result.gradient.assign(n_params, 0.0);
    for (std::size_t b = n_blocks; b-- > 0;) {
        const auto [begin, end] = plan.block_op_range(b);
        // recompute this block's ledger from its stored input
        StateLedger<T> ledger;
        ledger.mode = mode;
        BatchedState<T> replay = inputs[b];
        forward_block(begin, end, replay, &ledger, stats, acct);
        std::size_t cursor = ledger.entries.size();
        backward_block_fn(begin, end, ledger, cursor, lambda, result.gradient, stats);
        acct->release(ledger.units());
        acct->release(1.0);
        inputs.pop_back();
    }

    stats.ledger_peak_units = acct->peak_units();
    result.stats = stats;
    return result;
}

} // namespace

template <class T>
GradientResult run_checkpointed(const FusedCircuit &fused, const BatchedState<T> &psi0,
                                std::span<const double> theta, const PauliString &pauli,
                                const CheckpointPlan &plan, StorageMode mode,
                                MemoryAccountant *accountant) {
    if (plan.ops_per_layer * plan.layers != fused.ops.size()) {
        throw std::invalid_argument("run_checkpointed: plan does not cover the circuit");
    }
    return run_checkpointed_impl<T>(
        psi0, pauli, plan, mode, fused.n_params, accountant,
        [&](std::size_t begin, std::size_t end, BatchedState<T> &psi,
            StateLedger<T> *ledger, RunStats &stats, MemoryAccountant *acct) {
            forward_range(fused, begin, end, psi, theta, mode, ledger, stats, acct);
        },
        [&](std::size_t begin, std::size_t end, StateLedger<T> &ledger,
            std::size_t &cursor, BatchedState<T> &lambda, std::span<double> grad,
            RunStats &stats) {
            backward_range(fused, begin, end, ledger, cursor, lambda, theta, grad, stats);
        });
}

template <class T>
GradientResult run_checkpointed_naive(const Circuit &circuit,
                                      const BatchedState<T> &psi0,
                                      std::span<const double> theta,
                                      const PauliString &pauli,
                                      const CheckpointPlan &plan,
                                      MemoryAccountant *accountant) {
    if (plan.ops_per_layer * plan.layers != circuit.gates().size()) {
        throw std::invalid_argument(
            "run_checkpointed_naive: plan does not cover the circuit");
    }
    return run_checkpointed_impl<T>(
        psi0, pauli, plan, StorageMode::Full, circuit.n_params(), accountant,
        [&](std::size_t begin, std::size_t end, BatchedState<T> &psi,
            StateLedger<T> *ledger, RunStats &stats, MemoryAccountant *acct) {
            naive_forward_range(circuit, begin, end, psi, theta, ledger, stats, acct);
        },
        [&](std::size_t begin, std::size_t end, StateLedger<T> &ledger,
            std::size_t &cursor, BatchedState<T> &lambda, std::span<double> grad,
            RunStats &stats) {
            naive_backward_range(circuit, begin, end, ledger, cursor, lambda, theta,
                                 grad, stats);
        });
}

template GradientResult run_checkpointed<float>(const FusedCircuit &,
                                                const BatchedState<float> &,
                                                std::span<const double>,
                                                const PauliString &,
                                                const CheckpointPlan &, StorageMode,
                                                MemoryAccountant *);
template GradientResult run_checkpointed<double>(const FusedCircuit &,
                                                 const BatchedState<double> &,
                                                 std::span<const double>,
                                                 const PauliString &,
                                                 const CheckpointPlan &, StorageMode,
                                                 MemoryAccountant *);
template GradientResult run_checkpointed_naive<float>(const Circuit &,
                                                      const BatchedState<float> &,
                                                      std::span<const double>,
                                                      const PauliString &,
                                                      const CheckpointPlan &,
                                                      MemoryAccountant *);
template GradientResult run_checkpointed_naive<double>(const Circuit &,
                                                       const BatchedState<double> &,
                                                       std::span<const double>,
                                                       const PauliString &,
                                                       const CheckpointPlan &,
                                                       MemoryAccountant *);

} // namespace qfuse
