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

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qfuse {

enum class Axis : std::uint8_t { X, Y, Z };

/// One gate of the IR: a parameterized Pauli rotation, a CZ, or a CNOT.
struct Gate {
    enum class Kind : std::uint8_t { Rotation, CZ, CNOT };

    Kind kind = Kind::Rotation;
    Axis axis = Axis::X;     // rotation only
    std::uint32_t q0 = 0;    // rotation target, or control qubit
    std::uint32_t q1 = 0;    // target qubit of a two-qubit gate
    std::uint32_t param = 0; // rotation parameter slot

    static Gate rotation(Axis axis, std::uint32_t target, std::uint32_t param) {
        return Gate{Kind::Rotation, axis, target, 0, param};
    }
    static Gate cz(std::uint32_t control, std::uint32_t target) {
        return Gate{Kind::CZ, Axis::X, control, target, 0};
    }
    static Gate cnot(std::uint32_t control, std::uint32_t target) {
        return Gate{Kind::CNOT, Axis::X, control, target, 0};
    }

    bool is_rotation() const { return kind == Kind::Rotation; }
    bool is_two_qubit() const { return kind != Kind::Rotation; }

    friend bool operator==(const Gate &, const Gate &) = default;
};

/// Ordered gate list with a flat parameter vector. Each parameter slot is
/// used by exactly one rotation gate.
class Circuit {
  public:
    Circuit(std::uint32_t n_qubits, std::vector<Gate> gates, std::uint32_t n_params);

    std::uint32_t n_qubits() const { return n_qubits_; }
    std::uint32_t n_params() const { return n_params_; }
    const std::vector<Gate> &gates() const { return gates_; }

    std::vector<double> &theta() { return theta_; }
    const std::vector<double> &theta() const { return theta_; }

  private:
    std::uint32_t n_qubits_;
    std::uint32_t n_params_;
    std::vector<Gate> gates_;
    std::vector<double> theta_;
};

/// 2x2 complex matrix, row-major.
struct Mat2 {
    std::complex<double> m00, m01, m10, m11;
};

/// u(theta) = cos(theta/2) I - i sin(theta/2) P.
Mat2 rotation_matrix(Axis axis, double theta);

/// du/dtheta = -1/2 sin(theta/2) I - i/2 cos(theta/2) P,
/// equal to 1/2 * rotation_matrix(axis, theta + pi).
Mat2 rotation_derivative(Axis axis, double theta);

/// Hardware-efficient ansatz: per layer, Rx/Ry/Rz on each qubit (a fresh
/// parameter per rotation, qubit by qubit), then a CZ ring on pairs
/// (i, (i+1) mod n). The n=2 ring degenerates to a single CZ.
Circuit build_hea(std::uint32_t n_qubits, std::uint32_t layers);

/// Layer-shape replica for memory-model studies: each layer carries the
/// gate multiset of a `shape_qubits`-wide HEA layer (3*shape_qubits
/// rotations, then its CZ run) but acts on an n_qubits register, cycling
/// the three-qubit rotation windows so the fusion pass produces the same
/// per-layer block structure as the wide circuit. Requires n_qubits >= 3.
Circuit build_hea_shape(std::uint32_t n_qubits, std::uint32_t layers,
                        std::uint32_t shape_qubits);

/// Observable as a tensor product of Pauli factors, encoded with bitmasks
/// via Y = iXZ: x_mask marks X/Y positions, z_mask marks Z/Y positions.
struct PauliString {
    std::uint32_t n_qubits = 0;
    std::uint64_t x_mask = 0;
    std::uint64_t z_mask = 0;
    std::uint32_t y_count = 0;

    PauliString() = default;
    PauliString(std::uint32_t n, std::uint64_t x, std::uint64_t z);
};

/// Parses a label over {I,X,Y,Z}; the leftmost character acts on qubit
/// n-1. expected_n = 0 infers the width from the label length.
PauliString parse_pauli(std::string_view label, std::uint32_t expected_n = 0);

std::string pauli_label(const PauliString &p);

/// "IXYZIXYZ..." truncated to n characters (leftmost on qubit n-1).
std::string repeated_ixyz_label(std::uint32_t n_qubits);

/// Uniform angles in [0, 2*pi) from a SplitMix64 stream.
std::vector<double> random_parameters(std::size_t count, std::uint64_t seed);

/// Line-oriented text format:
///   qubits <n>
///   params <M>
///   rx q<t> p<j> | ry ... | rz ... | cz q<c> q<t> | cnot q<c> q<t>
void write_circuit(std::ostream &os, const Circuit &circuit);
Circuit read_circuit(std::istream &is);

} // namespace qfuse
