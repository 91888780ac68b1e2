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
#include <span>
#include <vector>

#include "qfuse/circuit.hpp"
#include "qfuse/statevec.hpp"

// Brute-force references for tests. Everything here is single-threaded,
// unbatched, and shares no execution path with the fused engine.
namespace qfuse::oracle {

using cdouble = std::complex<double>;

/// Dense 2^n x 2^n complex matrix, row-major. Guarded to n <= 12.
class DenseOperator {
  public:
    explicit DenseOperator(std::uint32_t n_qubits);
    static DenseOperator identity(std::uint32_t n_qubits);

    std::uint32_t n_qubits() const { return n_qubits_; }
    std::uint64_t dim() const { return std::uint64_t{1} << n_qubits_; }
    cdouble &at(std::uint64_t r, std::uint64_t c) { return m_[r * dim() + c]; }
    const cdouble &at(std::uint64_t r, std::uint64_t c) const {
        return m_[r * dim() + c];
    }

  private:
    std::uint32_t n_qubits_;
    std::vector<cdouble> m_;
};

/// Product of the embedded gate matrices in circuit order.
DenseOperator circuit_to_matrix(const Circuit &circuit, std::span<const double> theta);

/// Dense observable built from the per-qubit 2x2 Pauli factors.
DenseOperator pauli_matrix(const PauliString &pauli);

std::vector<cdouble> apply(const DenseOperator &op, std::span<const cdouble> state);

/// Gate-by-gate reference executor on a single state vector.
void run_circuit(const Circuit &circuit, std::span<const double> theta,
                 std::vector<cdouble> &state);

double expectation_ref(std::span<const cdouble> state, const PauliString &pauli);

/// Sample s of a batched double state as a plain complex vector.
std::vector<cdouble> extract_sample(const BatchedState<double> &state, std::uint32_t s);

/// L = sum over samples of <psi_M|O|psi_M>, via the reference executor.
double loss_ref(const Circuit &circuit, const BatchedState<double> &psi0,
                std::span<const double> theta, const PauliString &pauli);

/// Central differences (L(t+h) - L(t-h)) / 2h per parameter.
std::vector<double> fd_gradient(const Circuit &circuit, const BatchedState<double> &psi0,
                                std::span<const double> theta, const PauliString &pauli,
                                double h);

struct ParameterShiftResult {
    std::vector<double> gradient;
    std::size_t forward_count = 0; // full circuit executions, = 2M
};

/// Exact gradient for Pauli rotations: 1/2 [L(t + pi/2) - L(t - pi/2)].
ParameterShiftResult parameter_shift_gradient(const Circuit &circuit,
                                              const BatchedState<double> &psi0,
                                              std::span<const double> theta,
                                              const PauliString &pauli);

} // namespace qfuse::oracle
