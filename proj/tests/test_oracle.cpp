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
#include <doctest.h>

#include <cmath>

#include "qfuse/bits.hpp"
#include "qfuse/oracle.hpp"

using namespace qfuse;
using oracle::cdouble;

TEST_CASE("empty circuit is the identity matrix") {
    const Circuit c(2, {}, 0);
    const auto op = oracle::circuit_to_matrix(c, {});
    for (std::uint64_t r = 0; r < 4; ++r) {
        for (std::uint64_t col = 0; col < 4; ++col) {
            CHECK(op.at(r, col) == cdouble{r == col ? 1.0 : 0.0, 0.0});
        }
    }
}

TEST_CASE("single cz is diag(1,1,1,-1)") {
    const Circuit c(2, {Gate::cz(0, 1)}, 0);
    const auto op = oracle::circuit_to_matrix(c, {});
    for (std::uint64_t r = 0; r < 4; ++r) {
        for (std::uint64_t col = 0; col < 4; ++col) {
            const double expected = r != col ? 0.0 : (r == 3 ? -1.0 : 1.0);
            CHECK(op.at(r, col) == cdouble{expected, 0.0});
        }
    }
}

TEST_CASE("circuit matrices are unitary and norm-preserving") {
    SplitMix64 rng(31);
    const Circuit c = build_hea(4, 2);
    const auto theta = random_parameters(c.n_params(), 3);
    const auto op = oracle::circuit_to_matrix(c, theta);
    const auto psi = new_random_state<double>(4, 1, 8);
    const auto v = oracle::extract_sample(psi, 0);
    const auto w = oracle::apply(op, v);
    double norm = 0.0;
    for (const cdouble &x : w) {
        norm += std::norm(x);
    }
    CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-12);
    (void)rng;
}

TEST_CASE("dense capacity guard") {
    CHECK_THROWS_AS(oracle::DenseOperator(13), std::invalid_argument);
}

TEST_CASE("reference executor agrees with the dense matrix route") {
    const Circuit c = build_hea(3, 1);
    const auto theta = random_parameters(c.n_params(), 21);
    const auto psi0 = new_random_state<double>(3, 1, 4);

    auto state = oracle::extract_sample(psi0, 0);
    oracle::run_circuit(c, theta, state);

    const auto op = oracle::circuit_to_matrix(c, theta);
    const auto dense = oracle::apply(op, oracle::extract_sample(psi0, 0));
    for (std::uint64_t x = 0; x < 8; ++x) {
        CHECK(std::abs(state[x] - dense[x]) < 1e-13);
    }
}

TEST_CASE("reference expectation agrees with the dense observable") {
    SplitMix64 rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        const std::uint32_t n = 2 + static_cast<std::uint32_t>(rng.next() % 5);
        std::string label(n, 'I');
        static constexpr char kChars[] = {'I', 'X', 'Y', 'Z'};
        for (auto &ch : label) {
            ch = kChars[rng.next() % 4];
        }
        const PauliString pauli = parse_pauli(label);
        const auto psi = new_random_state<double>(n, 1, rng.next());
        const auto v = oracle::extract_sample(psi, 0);

        const auto dense_op = oracle::pauli_matrix(pauli);
        const auto ov = oracle::apply(dense_op, v);
        cdouble acc = 0.0;
        for (std::uint64_t x = 0; x < v.size(); ++x) {
            acc += std::conj(v[x]) * ov[x];
        }
        CHECK(std::abs(acc.imag()) < 1e-12);
        CHECK(std::abs(oracle::expectation_ref(v, pauli) - acc.real()) < 1e-12);
    }
}

TEST_CASE("fd gradient: commuting parameter has zero derivative") {
    // Rz on |0> commutes with a Z measurement
    const Circuit c(1, {Gate::rotation(Axis::Z, 0, 0)}, 1);
    const auto psi0 = new_basis_state<double>(1, 1);
    const std::vector<double> theta{0.4};
    const auto grad =
        oracle::fd_gradient(c, psi0, theta, parse_pauli("Z"), 1e-5);
    CHECK(std::abs(grad[0]) <= 1e-9);
}

TEST_CASE("fd gradient: Rx against Z is -sin(theta)") {
    const Circuit c(1, {Gate::rotation(Axis::X, 0, 0)}, 1);
    const auto psi0 = new_basis_state<double>(1, 1);
    const std::vector<double> theta{0.3};
    const auto grad =
        oracle::fd_gradient(c, psi0, theta, parse_pauli("Z"), 1e-5);
    CHECK(std::abs(grad[0] - (-std::sin(0.3))) < 1e-9);
}

TEST_CASE("parameter shift: exact -sin(theta) and 2M forward executions") {
    const Circuit c(1, {Gate::rotation(Axis::X, 0, 0)}, 1);
    const auto psi0 = new_basis_state<double>(1, 1);
    const std::vector<double> theta{0.3};
    const auto result =
        oracle::parameter_shift_gradient(c, psi0, theta, parse_pauli("Z"));
    CHECK(std::abs(result.gradient[0] - (-std::sin(0.3))) <= 1e-14);
    CHECK(result.forward_count == 2);

    const Circuit hea = build_hea(4, 2);
    const auto theta2 = random_parameters(hea.n_params(), 2);
    const auto psi2 = new_random_state<double>(4, 2, 5);
    const auto shift =
        oracle::parameter_shift_gradient(hea, psi2, theta2, parse_pauli("IXYZ"));
    CHECK(shift.forward_count == 2 * hea.n_params());
}

TEST_CASE("fd and parameter-shift agree on a random instance") {
    const Circuit hea = build_hea(4, 1);
    const auto theta = random_parameters(hea.n_params(), 13);
    const auto psi0 = new_random_state<double>(4, 2, 6);
    const PauliString pauli = parse_pauli(repeated_ixyz_label(4));
    const auto fd = oracle::fd_gradient(hea, psi0, theta, pauli, 1e-5);
    const auto shift = oracle::parameter_shift_gradient(hea, psi0, theta, pauli);
    double max_ref = 0.0;
    for (const double g : shift.gradient) {
        max_ref = std::max(max_ref, std::abs(g));
    }
    for (std::size_t j = 0; j < fd.size(); ++j) {
        CHECK(std::abs(fd[j] - shift.gradient[j]) <= 1e-6 * std::max(1.0, max_ref));
    }
}
