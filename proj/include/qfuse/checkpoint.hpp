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
#include <span>
#include <utility>

#include "qfuse/accounting.hpp"
#include "qfuse/engine.hpp"

namespace qfuse {

/// Layer-wise checkpointing layout for a circuit made of `layers` equal
/// repetitions: blocks of `block_layers` consecutive layers, where
/// block_layers divides layers.
struct CheckpointPlan {
    std::uint32_t layers = 1;
    std::uint32_t block_layers = 1;
    std::size_t ops_per_layer = 0;

    static CheckpointPlan uniform(std::size_t total_ops, std::uint32_t layers,
                                  std::uint32_t block_layers);

    std::size_t block_count() const { return layers / block_layers; }
    std::size_t ops_per_block() const { return ops_per_layer * block_layers; }
    std::pair<std::size_t, std::size_t> block_op_range(std::size_t block) const {
        const std::size_t begin = block * ops_per_block();
        return {begin, begin + ops_per_block()};
    }
};

/// Stored-vector units for the per-gate executor under checkpointing:
/// (l_var + l_const) * b + d / b.
double model_native(std::uint32_t block_layers, std::uint32_t var_gates_per_layer,
                    std::uint32_t const_gates_per_layer, std::uint32_t layers);

/// Stored-vector units for fused execution under checkpointing:
/// ceil(l_var / m) * b * u + d / b, with u = 1 full or 1/2 mem-save
/// (the effective per-entry divisor is m or 2m).
double model_fused(std::uint32_t block_layers, std::uint32_t var_gates_per_layer,
                   std::uint32_t max_constituents, std::uint32_t layers,
                   StorageMode mode);

/// Real-valued minimizer of u * b + d / b: b* = sqrt(d / u).
double optimal_block(double units_per_layer, std::uint32_t layers);

/// Checkpointed gradient: the forward pass stores only each block's input
/// state (always full precision) and keeps no intra-block ledger; the
/// backward pass re-runs each block forward from its stored input to
/// rebuild the block ledger, runs the block backward, then frees both.
/// Gradients match the non-checkpointed run; the accountant peak equals
/// model_fused exactly.
template <class T>
GradientResult run_checkpointed(const FusedCircuit &fused, const BatchedState<T> &psi0,
                                std::span<const double> theta, const PauliString &pauli,
                                const CheckpointPlan &plan, StorageMode mode,
                                MemoryAccountant *accountant = nullptr);

/// Same protocol over the per-gate executor (block ledgers hold every
/// gate's input); the accountant peak equals model_native exactly.
template <class T>
GradientResult run_checkpointed_naive(const Circuit &circuit,
                                      const BatchedState<T> &psi0,
                                      std::span<const double> theta,
                                      const PauliString &pauli,
                                      const CheckpointPlan &plan,
                                      MemoryAccountant *accountant = nullptr);

} // namespace qfuse
