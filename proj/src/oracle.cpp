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
#include "qfuse/oracle.hpp"

#include <bit>
#include <stdexcept>

namespace qfuse::oracle {

namespace {

constexpr std::uint32_t kMaxDenseQubits = 12;

void check_dense_capacity(std::uint32_t n_qubits) {
    if (n_qubits == 0 || n_qubits > kMaxDenseQubits) {
        throw std::invalid_argument("dense oracle supports 1.." +
                                    std::to_string(kMaxDenseQubits) + " qubits");
    }
}

/// 2x2 factor of a Pauli string at one qubit, from its (x, z) mask bits.
void pauli_factor(bool x, bool z, cdouble out[2][2]) {
    out[0][0] = out[0][1] = out[1][0] = out[1][1] = 0.0;
    if (!x && !z) { // I
        out[0][0] = 1.0;
        out[1][1] = 1.0;
    } else if (x && !z) { // X
        out[0][1] = 1.0;
        out[1][0] = 1.0;
    } else if (x && z) { // Y
        out[0][1] = {0.0, -1.0};
        out[1][0] = {0.0, 1.0};
    } else { // Z
        out[0][0] = 1.0;
        out[1][1] = -1.0;
    }
}

} // namespace

DenseOperator::DenseOperator(std::uint32_t n_qubits) : n_qubits_(n_qubits) {
    check_dense_capacity(n_qubits);
    m_.assign(dim() * dim(), cdouble{0.0, 0.0});
}

DenseOperator DenseOperator::identity(std::uint32_t n_qubits) {
    DenseOperator op(n_qubits);
    for (std::uint64_t i = 0; i < op.dim(); ++i) {
        op.at(i, i) = 1.0;
    }
    return op;
}

DenseOperator circuit_to_matrix(const Circuit &circuit, std::span<const double> theta) {
    check_dense_capacity(circuit.n_qubits());
    DenseOperator op = DenseOperator::identity(circuit.n_qubits());
    const std::uint64_t dim = op.dim();
    for (const Gate &g : circuit.gates()) {
        switch (g.kind) {
        case Gate::Kind::Rotation: {
            const Mat2 u = rotation_matrix(g.axis, theta[g.param]);
            const std::uint64_t bit = std::uint64_t{1} << g.q0;
            for (std::uint64_t r0 = 0; r0 < dim; ++r0) {
                if (r0 & bit) {
                    continue;
                }
                const std::uint64_t r1 = r0 | bit;
                for (std::uint64_t c = 0; c < dim; ++c) {
                    const cdouble a = op.at(r0, c);
                    const cdouble b = op.at(r1, c);
                    op.at(r0, c) = u.m00 * a + u.m01 * b;
                    op.at(r1, c) = u.m10 * a + u.m11 * b;
                }
            }
            break;
        }
        case Gate::Kind::CZ: {
            const std::uint64_t mask =
                (std::uint64_t{1} << g.q0) | (std::uint64_t{1} << g.q1);
            for (std::uint64_t r = 0; r < dim; ++r) {
                if ((r & mask) == mask) {
                    for (std::uint64_t c = 0; c < dim; ++c) {
                        op.at(r, c) = -op.at(r, c);
                    }
                }
            }
            break;
        }
        case Gate::Kind::CNOT: {
            const std::uint64_t control = std::uint64_t{1} << g.q0;
            const std::uint64_t target = std::uint64_t{1} << g.q1;
            for (std::uint64_t r = 0; r < dim; ++r) {
                if ((r & control) != 0 && (r & target) == 0) {
                    const std::uint64_t partner = r | target;
                    for (std::uint64_t c = 0; c < dim; ++c) {
                        std::swap(op.at(r, c), op.at(partner, c));
                    }
                }
            }
            break;
        }
        }
    }
    return op;
}

DenseOperator pauli_matrix(const PauliString &pauli) {
    check_dense_capacity(pauli.n_qubits);
    DenseOperator op(pauli.n_qubits);
    cdouble factors[64][2][2];
    for (std::uint32_t q = 0; q < pauli.n_qubits; ++q) {
        pauli_factor((pauli.x_mask >> q) & 1, (pauli.z_mask >> q) & 1, factors[q]);
    }
    const std::uint64_t dim = op.dim();
    for (std::uint64_t r = 0; r < dim; ++r) {
        for (std::uint64_t c = 0; c < dim; ++c) {
            cdouble v = 1.0;
            for (std::uint32_t q = 0; q < pauli.n_qubits && v != cdouble{0.0, 0.0}; ++q) {
                v *= factors[q][(r >> q) & 1][(c >> q) & 1];
            }
            op.at(r, c) = v;
        }
    }
    return op;
}

std::vector<cdouble> apply(const DenseOperator &op, std::span<const cdouble> state) {
    if (state.size() != op.dim()) {
        throw std::invalid_argument("oracle::apply: dimension mismatch");
    }
    std::vector<cdouble> out(op.dim(), cdouble{0.0, 0.0});
    for (std::uint64_t r = 0; r < op.dim(); ++r) {
        cdouble acc = 0.0;
        for (std::uint64_t c = 0; c < op.dim(); ++c) {
            acc += op.at(r, c) * state[c];
        }
        out[r] = acc;
    }
    return out;
}

void run_circuit(const Circuit &circuit, std::span<const double> theta,
                 std::vector<cdouble> &state) {
    const std::uint64_t dim = std::uint64_t{1} << circuit.n_qubits();
    if (state.size() != dim) {
        throw std::invalid_argument("oracle::run_circuit: dimension mismatch");
    }
    for (const Gate &g : circuit.gates()) {
        switch (g.kind) {
        case Gate::Kind::Rotation: {
            const Mat2 u = rotation_matrix(g.axis, theta[g.param]);
            const std::uint64_t bit = std::uint64_t{1} << g.q0;
            for (std::uint64_t i0 = 0; i0 < dim; ++i0) {
                if (i0 & bit) {
                    continue;
                }
                const std::uint64_t i1 = i0 | bit;
                const cdouble a = state[i0];
                const cdouble b = state[i1];
                state[i0] = u.m00 * a + u.m01 * b;
                state[i1] = u.m10 * a + u.m11 * b;
            }
            break;
        }
        case Gate::Kind::CZ: {
            const std::uint64_t mask =
                (std::uint64_t{1} << g.q0) | (std::uint64_t{1} << g.q1);
            for (std::uint64_t i = 0; i < dim; ++i) {
                if ((i & mask) == mask) {
                    state[i] = -state[i];
                }
            }
            break;
        }
        case Gate::Kind::CNOT: {
            const std::uint64_t control = std::uint64_t{1} << g.q0;
            const std::uint64_t target = std::uint64_t{1} << g.q1;
            for (std::uint64_t i = 0; i < dim; ++i) {
                if ((i & control) != 0 && (i & target) == 0) {
                    std::swap(state[i], state[i | target]);
                }
            }
            break;
        }
        }
    }
}

double expectation_ref(std::span<const cdouble> state, const PauliString &pauli) {
    const std::uint64_t dim = std::uint64_t{1} << pauli.n_qubits;
    if (state.size() != dim) {
        throw std::invalid_argument("oracle::expectation_ref: dimension mismatch");
    }
    double acc = 0.0;
    for (std::uint64_t x = 0; x < dim; ++x) {
        const std::uint64_t partner = x ^ pauli.x_mask;
        cdouble ket = state[partner];
        if (std::popcount(partner & pauli.z_mask) & 1) {
            ket = -ket;
        }
        switch (pauli.y_count & 3) {
        case 0:
            break;
        case 1:
            ket = cdouble{-ket.imag(), ket.real()};
            break;
        case 2:
            ket = -ket;
            break;
        case 3:
            ket = cdouble{ket.imag(), -ket.real()};
            break;
        }
        acc += (std::conj(state[x]) * ket).real();
    }
    return acc;
}

std::vector<cdouble> extract_sample(const BatchedState<double> &state, std::uint32_t s) {
    std::vector<cdouble> out(state.dim());
    const double *p = state.sample_data(s);
    for (std::uint64_t x = 0; x < state.dim(); ++x) {
        out[x] = {p[2 * x], p[2 * x + 1]};
    }
    return out;
}

double loss_ref(const Circuit &circuit, const BatchedState<double> &psi0,
                std::span<const double> theta, const PauliString &pauli) {
    double loss = 0.0;
    for (std::uint32_t s = 0; s < psi0.batch(); ++s) {
        std::vector<cdouble> state = extract_sample(psi0, s);
        run_circuit(circuit, theta, state);
        loss += expectation_ref(state, pauli);
    }
    return loss;
}

std::vector<double> fd_gradient(const Circuit &circuit, const BatchedState<double> &psi0,
                                std::span<const double> theta, const PauliString &pauli,
                                double h) {
    if (h <= 0.0) {
        throw std::invalid_argument("fd_gradient: step must be positive");
    }
    std::vector<double> shifted(theta.begin(), theta.end());
    std::vector<double> grad(theta.size(), 0.0);
    for (std::size_t j = 0; j < theta.size(); ++j) {
        shifted[j] = theta[j] + h;
        const double up = loss_ref(circuit, psi0, shifted, pauli);
        shifted[j] = theta[j] - h;
        const double down = loss_ref(circuit, psi0, shifted, pauli);
        shifted[j] = theta[j];
        grad[j] = (up - down) / (2.0 * h);
    }
    return grad;
}

ParameterShiftResult parameter_shift_gradient(const Circuit &circuit,
                                              const BatchedState<double> &psi0,
                                              std::span<const double> theta,
                                              const PauliString &pauli) {
    // every parameterized gate in this IR is a Pauli rotation, for which
    // the +-pi/2 shift formula is exact
    constexpr double kHalfPi = 3.14159265358979323846 / 2.0;
    std::vector<double> shifted(theta.begin(), theta.end());
    ParameterShiftResult result;
    result.gradient.assign(theta.size(), 0.0);
    for (std::size_t j = 0; j < theta.size(); ++j) {
        shifted[j] = theta[j] + kHalfPi;
        const double up = loss_ref(circuit, psi0, shifted, pauli);
        ++result.forward_count;
        shifted[j] = theta[j] - kHalfPi;
        const double down = loss_ref(circuit, psi0, shifted, pauli);
        ++result.forward_count;
        shifted[j] = theta[j];
        result.gradient[j] = 0.5 * (up - down);
    }
    return result;
}

} // namespace qfuse::oracle
