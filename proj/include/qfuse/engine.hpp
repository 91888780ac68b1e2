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
#include <vector>

#include "qfuse/accounting.hpp"
#include "qfuse/circuit.hpp"
#include "qfuse/fusion.hpp"
#include "qfuse/statevec.hpp"

namespace qfuse {

/// How forward stores the states the backward pass will need: at full
/// compute precision, or narrowed to the half-width format (compute stays
/// at full precision either way).
enum class StorageMode { Full, MemSave };

/// States stored during a forward pass. In fused execution only the
/// output of each variational block is kept; the per-gate executor keeps
/// every gate's input. `traversals` counts full passes over the amplitude
/// array made while this ledger was active.
template <class T> struct StateLedger {
    struct Entry {
        std::size_t op_index = 0;
        std::vector<T> full;
        std::vector<narrow_t<T>> narrow;
    };

    StorageMode mode = StorageMode::Full;
    std::vector<Entry> entries;
    std::uint64_t traversals = 0;

    double unit_per_entry() const { return mode == StorageMode::MemSave ? 0.5 : 1.0; }
    double units() const {
        return static_cast<double>(entries.size()) * unit_per_entry();
    }
    std::size_t bytes() const;
};

struct RunStats {
    std::uint64_t forward_traversals = 0;
    std::uint64_t backward_traversals = 0;
    std::uint64_t observable_traversals = 0;
    double ledger_peak_units = 0.0;

    std::uint64_t total_traversals() const {
        return forward_traversals + backward_traversals + observable_traversals;
    }
};

struct GradientResult {
    double loss = 0.0;
    std::vector<double> gradient;
    RunStats stats;
};

// --- single-traversal fused kernels (out-of-place) ---

template <class T>
BatchedState<T> apply_fused_unitary(const BatchedState<T> &state,
                                    const FusedUnitaryBlock &block,
                                    std::span<const double> theta);

template <class T>
BatchedState<T> apply_fused_cz(const BatchedState<T> &state, const FusedCZBlock &block);

template <class T>
BatchedState<T> apply_fused_cnot(const BatchedState<T> &state,
                                 const FusedCNOTBlock &block);

template <class T>
BatchedState<T> apply_fused_op(const BatchedState<T> &state, const FusedOp &op,
                               std::span<const double> theta);

/// Matrix-free <psi|O|psi> per sample. Partial sums are combined in
/// ascending chunk order so results do not depend on the thread count.
template <class T>
std::vector<double> expectation(const BatchedState<T> &state, const PauliString &pauli);

/// Adjoint seed 2*O|psi> for the loss L = sum of per-sample expectations.
template <class T>
BatchedState<T> seed_adjoint(const BatchedState<T> &state, const PauliString &pauli);

/// Backward pass over one variational block: walking constituents last to
/// first, the block input is recomputed in thread-local tuple scratch
/// (psi <- u_k^dag psi), each parameter picks up Re[lambda^dag du_k psi],
/// and the adjoint advances (lambda <- u_k^dag lambda) -- one traversal
/// total, no intermediate state written to shared memory.
template <class T> struct BlockBackwardResult {
    BatchedState<T> psi_in;
    BatchedState<T> lambda_in;
    std::vector<double> gradient; // per constituent, block order
};

template <class T>
BlockBackwardResult<T> backward_block(const BatchedState<T> &psi_out,
                                      const BatchedState<T> &lambda_out,
                                      const FusedUnitaryBlock &block,
                                      std::span<const double> theta);

/// lambda <- G^dag lambda for a constant block (CZ: same parity kernel;
/// CNOT: gate order reversed, every gate self-inverse).
template <class T>
BatchedState<T> backward_constant(const BatchedState<T> &lambda, const FusedOp &op);

// --- drivers ---

template <class T> struct ForwardResult {
    BatchedState<T> state;
    StateLedger<T> ledger;
    RunStats stats;
};

/// Applies fused ops in order with double-buffered out-of-place kernels,
/// storing each variational block's output in the ledger (narrowed in
/// MemSave). Constant blocks store nothing.
template <class T>
ForwardResult<T> forward(const FusedCircuit &fused, const BatchedState<T> &psi0,
                         std::span<const double> theta, StorageMode mode,
                         MemoryAccountant *accountant = nullptr);

/// Adjoint-method gradient of L = sum_s <psi_M|O|psi_M> over the fused
/// circuit. Per-chunk gradient partials are combined in ascending chunk
/// order, so identical inputs give identical results for any thread count.
template <class T>
GradientResult gradient(const FusedCircuit &fused, const BatchedState<T> &psi0,
                        std::span<const double> theta, const PauliString &pauli,
                        StorageMode mode, MemoryAccountant *accountant = nullptr);

/// Baseline executor: one traversal per gate, every gate's input stored in
/// the ledger, backward reads stored inputs directly (no recompute).
template <class T>
GradientResult naive_gradient(const Circuit &circuit, const BatchedState<T> &psi0,
                              std::span<const double> theta, const PauliString &pauli,
                              MemoryAccountant *accountant = nullptr);

// --- op-range entry points shared with the checkpointing layer ---

template <class T>
void forward_range(const FusedCircuit &fused, std::size_t op_begin, std::size_t op_end,
                   BatchedState<T> &psi, std::span<const double> theta, StorageMode mode,
                   StateLedger<T> *ledger, RunStats &stats, MemoryAccountant *accountant);

/// Backward over ops [op_begin, op_end) in reverse; `entry_cursor` starts
/// one past the last ledger entry for the range and walks down. The
/// ledger entry count never changes here.
template <class T>
void backward_range(const FusedCircuit &fused, std::size_t op_begin, std::size_t op_end,
                    StateLedger<T> &ledger, std::size_t &entry_cursor,
                    BatchedState<T> &lambda, std::span<const double> theta,
                    std::span<double> gradient, RunStats &stats);

template <class T>
void naive_forward_range(const Circuit &circuit, std::size_t gate_begin,
                         std::size_t gate_end, BatchedState<T> &psi,
                         std::span<const double> theta, StateLedger<T> *ledger,
                         RunStats &stats, MemoryAccountant *accountant);

template <class T>
void naive_backward_range(const Circuit &circuit, std::size_t gate_begin,
                          std::size_t gate_end, StateLedger<T> &ledger,
                          std::size_t &entry_cursor, BatchedState<T> &lambda,
                          std::span<const double> theta, std::span<double> gradient,
                          RunStats &stats);

} // namespace qfuse
