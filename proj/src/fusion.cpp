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
#include "qfuse/fusion.hpp"

#include <algorithm>
#include <bit>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace qfuse {

std::size_t FusedCircuit::variational_block_count() const {
    return static_cast<std::size_t>(
        std::count_if(ops.begin(), ops.end(), [](const FusedOp &op) {
            return std::holds_alternative<FusedUnitaryBlock>(op);
        }));
}

FusedCircuit fuse_circuit(const Circuit &circuit, FusionPolicy policy) {
    if (policy.group_size == 0 || policy.group_size > 3) {
        throw std::invalid_argument("fuse_circuit: group size must be 1..3");
    }
    if (policy.max_constituents == 0) {
        throw std::invalid_argument("fuse_circuit: max constituents must be >= 1");
    }

    FusedCircuit fused;
    fused.n_qubits = circuit.n_qubits();
    fused.n_params = circuit.n_params();
    fused.policy = policy;

    const std::uint32_t g = policy.group_size;
    const std::uint32_t n = circuit.n_qubits();

    std::optional<FusedUnitaryBlock> open;
    enum class Run { None, CZ, CNOT };
    Run run = Run::None;

    auto close_open = [&] {
        if (open) {
            fused.ops.emplace_back(std::move(*open));
            open.reset();
        }
    };

    for (const Gate &gate : circuit.gates()) {
        switch (gate.kind) {
        case Gate::Kind::Rotation: {
            run = Run::None;
            const std::uint32_t start = (gate.q0 / g) * g;
            if (!open || open->group_start != start ||
                open->constituents.size() >= policy.max_constituents) {
                close_open();
                open.emplace();
                open->group_start = start;
                open->group_size = std::min(g, n - start);
            }
            open->constituents.push_back({gate.axis, gate.q0 - start, gate.param});
            open->variational = true;
            break;
        }
        case Gate::Kind::CZ: {
            close_open();
            if (run != Run::CZ) {
                fused.ops.emplace_back(FusedCZBlock{});
                run = Run::CZ;
            }
            auto &block = std::get<FusedCZBlock>(fused.ops.back());
            block.masks.push_back((std::uint64_t{1} << gate.q0) |
                                  (std::uint64_t{1} << gate.q1));
            block.gates.emplace_back(gate.q0, gate.q1);
            break;
        }
        case Gate::Kind::CNOT: {
            close_open();
            if (run != Run::CNOT) {
                fused.ops.emplace_back(FusedCNOTBlock{});
                run = Run::CNOT;
            }
            auto &block = std::get<FusedCNOTBlock>(fused.ops.back());
            block.gates.push_back(
                {std::uint64_t{1} << gate.q0, std::uint64_t{1} << gate.q1});
            break;
        }
        }
    }
    close_open();
    return fused;
}

std::vector<Gate> flatten(const FusedCircuit &fused) {
    std::vector<Gate> gates;
    for (const FusedOp &op : fused.ops) {
        if (const auto *block = std::get_if<FusedUnitaryBlock>(&op)) {
            for (const auto &c : block->constituents) {
                gates.push_back(Gate::rotation(c.axis, block->group_start + c.local,
                                               c.param));
            }
        } else if (const auto *cz = std::get_if<FusedCZBlock>(&op)) {
            for (const auto &[control, target] : cz->gates) {
                gates.push_back(Gate::cz(control, target));
            }
        } else {
            const auto &cnot = std::get<FusedCNOTBlock>(op);
            for (const auto &pair : cnot.gates) {
                gates.push_back(
                    Gate::cnot(static_cast<std::uint32_t>(std::countr_zero(pair.control_mask)),
                               static_cast<std::uint32_t>(std::countr_zero(pair.target_mask))));
            }
        }
    }
    return gates;
}

BlockUnitary compose_block_unitary(const FusedUnitaryBlock &block,
                                   std::span<const double> theta) {
    BlockUnitary u;
    u.dim = block.tuple_dim();
    for (std::uint32_t r = 0; r < u.dim; ++r) {
        u.m[r * u.dim + r] = 1.0;
    }
    for (const auto &c : block.constituents) {
        const Mat2 g = rotation_matrix(c.axis, theta[c.param]);
        const std::uint32_t bit = std::uint32_t{1} << c.local;
        // left-multiply the embedded 2x2: combine row pairs differing in `bit`
        for (std::uint32_t r0 = 0; r0 < u.dim; ++r0) {
            if (r0 & bit) {
                continue;
            }
            const std::uint32_t r1 = r0 | bit;
            for (std::uint32_t col = 0; col < u.dim; ++col) {
                const std::complex<double> a = u.m[r0 * u.dim + col];
                const std::complex<double> b = u.m[r1 * u.dim + col];
                u.m[r0 * u.dim + col] = g.m00 * a + g.m01 * b;
                u.m[r1 * u.dim + col] = g.m10 * a + g.m11 * b;
            }
        }
    }
    return u;
}

std::string format_fused(const FusedCircuit &fused) {
    std::ostringstream os;
    os << "fused circuit: " << fused.n_qubits << " qubits, " << fused.n_params
       << " params, policy g=" << fused.policy.group_size
       << " m=" << fused.policy.max_constituents << "\n";
    std::size_t idx = 0;
    for (const FusedOp &op : fused.ops) {
        os << "  [" << idx++ << "] ";
        if (const auto *block = std::get_if<FusedUnitaryBlock>(&op)) {
            os << "unitary block q[" << block->group_start << ".."
               << block->group_start + block->group_size - 1 << "]";
            for (const auto &c : block->constituents) {
                const char axis = c.axis == Axis::X ? 'x' : c.axis == Axis::Y ? 'y' : 'z';
                os << " r" << axis << "(q" << block->group_start + c.local << ",p"
                   << c.param << ")";
            }
        } else if (const auto *cz = std::get_if<FusedCZBlock>(&op)) {
            os << "cz block";
            for (const auto &[control, target] : cz->gates) {
                os << " (q" << control << ",q" << target << ")";
            }
        } else {
            const auto &cnot = std::get<FusedCNOTBlock>(op);
            os << "cnot block";
            for (const auto &pair : cnot.gates) {
                os << " (q" << std::countr_zero(pair.control_mask) << ",q"
                   << std::countr_zero(pair.target_mask) << ")";
            }
        }
        os << "\n";
    }
    return os.str();
}

} // namespace qfuse
