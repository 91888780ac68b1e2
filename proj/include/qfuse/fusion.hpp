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

#include <array>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "qfuse/circuit.hpp"

namespace qfuse {

struct FusionPolicy {
    std::uint32_t group_size = 3;      // adjacent qubits per window, 1..3
    std::uint32_t max_constituents = 9; // rotations per block before it closes
};

/// Consecutive rotations on one fixed window of adjacent qubits, applied
/// as a single operator. Constituents keep circuit order; `local` is the
/// qubit position within the window (bit position of the tuple index).
struct FusedUnitaryBlock {
    std::uint32_t group_start = 0;
    std::uint32_t group_size = 1;

    struct Constituent {
        Axis axis;
        std::uint32_t local;
        std::uint32_t param;
        friend bool operator==(const Constituent &, const Constituent &) = default;
    };
    std::vector<Constituent> constituents;
    bool variational = false;

    std::uint32_t tuple_dim() const { return 1u << group_size; }
    friend bool operator==(const FusedUnitaryBlock &, const FusedUnitaryBlock &) = default;
};

/// A run of CZ gates folded into per-gate two-bit masks; the kernel flips
/// an amplitude's sign when the XOR'd mask-containment parity is odd.
/// `gates` keeps the original (control, target) orientation for flatten().
struct FusedCZBlock {
    std::vector<std::uint64_t> masks;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> gates;
    friend bool operator==(const FusedCZBlock &, const FusedCZBlock &) = default;
};

/// A run of CNOT gates applied by tracing each source index through the
/// gate list (order matters) to its destination.
struct FusedCNOTBlock {
    struct MaskPair {
        std::uint64_t control_mask;
        std::uint64_t target_mask;
        friend bool operator==(const MaskPair &, const MaskPair &) = default;
    };
    std::vector<MaskPair> gates;
    friend bool operator==(const FusedCNOTBlock &, const FusedCNOTBlock &) = default;
};

using FusedOp = std::variant<FusedUnitaryBlock, FusedCZBlock, FusedCNOTBlock>;

struct FusedCircuit {
    std::uint32_t n_qubits = 0;
    std::uint32_t n_params = 0;
    std::vector<FusedOp> ops;
    FusionPolicy policy;

    std::size_t variational_block_count() const;
};

/// Rewrites the circuit into fused ops. Rotations merge while they stay in
/// the current window [g*k, g*k+g) and under the constituent cap; any
/// two-qubit gate closes the open rotation block. Maximal CZ runs merge
/// into one FusedCZBlock, CNOT runs into one FusedCNOTBlock. Flattening
/// the result reproduces the input gate sequence exactly.
FusedCircuit fuse_circuit(const Circuit &circuit, FusionPolicy policy = {});

std::vector<Gate> flatten(const FusedCircuit &fused);

/// Dense operator of one block on its window, row-major 2^g x 2^g.
struct BlockUnitary {
    std::uint32_t dim = 1;
    std::array<std::complex<double>, 64> m{};

    std::complex<double> at(std::uint32_t r, std::uint32_t c) const {
        return m[r * dim + c];
    }
};

/// Product of the constituents' embedded 2x2 matrices in circuit order
/// (later constituents multiply on the left).
BlockUnitary compose_block_unitary(const FusedUnitaryBlock &block,
                                   std::span<const double> theta);

/// Debug listing with block boundaries.
std::string format_fused(const FusedCircuit &fused);

} // namespace qfuse
