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
#include <omp.h>

#include "qfuse/bits.hpp"
#include "qfuse/engine.hpp"
#include "qfuse/oracle.hpp"

using namespace qfuse;
using oracle::cdouble;

namespace {

Circuit random_circuit(std::uint32_t n_qubits, std::size_t n_gates, SplitMix64 &rng) {
    std::vector<Gate> gates;
    std::uint32_t param = 0;
    for (std::size_t i = 0; i < n_gates; ++i) {
        const std::uint64_t kind = rng.next() % 5;
        if (kind < 3) {
            const Axis axis = kind == 0 ? Axis::X : kind == 1 ? Axis::Y : Axis::Z;
            gates.push_back(Gate::rotation(
                axis, static_cast<std::uint32_t>(rng.next() % n_qubits), param++));
        } else {
            const auto c = static_cast<std::uint32_t>(rng.next() % n_qubits);
            auto t = static_cast<std::uint32_t>(rng.next() % (n_qubits - 1));
            if (t >= c) {
                ++t;
            }
            gates.push_back(kind == 3 ? Gate::cz(c, t) : Gate::cnot(c, t));
        }
    }
    return Circuit(n_qubits, std::move(gates), param);
}

double max_abs_diff(const BatchedState<double> &a, const BatchedState<double> &b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.components().size(); ++i) {
        m = std::max(m, std::abs(a.components()[i] - b.components()[i]));
    }
    return m;
}

double rel_diff(std::span<const double> got, std::span<const double> want) {
    double scale = 0.0;
    for (const double w : want) {
        scale = std::max(scale, std::abs(w));
    }
    double diff = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        diff = std::max(diff, std::abs(got[i] - want[i]));
    }
    return scale > 0.0 ? diff / scale : diff;
}

} // namespace

TEST_CASE("identity block leaves the state unchanged") {
    FusedUnitaryBlock block;
    block.group_start = 1;
    block.group_size = 2;
    const auto psi = new_random_state<double>(4, 2, 11);
    const auto out = apply_fused_unitary(psi, block, {});
    CHECK(max_abs_diff(out, psi) == 0.0);
}

TEST_CASE("Rx(pi) on qubit 0 maps |00> to -i|01>") {
    FusedUnitaryBlock block;
    block.group_start = 0;
    block.group_size = 2;
    block.constituents = {{Axis::X, 0, 0}};
    block.variational = true;
    const std::vector<double> theta{3.14159265358979323846};
    const auto out = apply_fused_unitary(new_basis_state<double>(2, 1), block, theta);
    CHECK(std::abs(out.amp(0, 1) - cdouble{0.0, -1.0}) < 1e-15);
    CHECK(std::abs(out.amp(0, 0)) < 1e-15);
    CHECK(std::abs(out.amp(0, 2)) < 1e-15);
    CHECK(std::abs(out.amp(0, 3)) < 1e-15);
}

TEST_CASE("fused block application equals sequential per-gate application") {
    SplitMix64 rng(41);
    const std::uint32_t n = 6;
    std::vector<Gate> gates;
    FusedUnitaryBlock block;
    block.group_start = 3;
    block.group_size = 3;
    block.variational = true;
    std::vector<double> theta;
    for (std::uint32_t k = 0; k < 9; ++k) {
        const Axis axis = k % 3 == 0 ? Axis::X : k % 3 == 1 ? Axis::Y : Axis::Z;
        const auto local = static_cast<std::uint32_t>(rng.next() % 3);
        block.constituents.push_back({axis, local, k});
        gates.push_back(Gate::rotation(axis, block.group_start + local, k));
        theta.push_back(rng.next_unit() * 6.28);
    }
    const Circuit seq(n, std::move(gates), 9);
    const auto psi0 = new_random_state<double>(n, 3, 12);

    const auto fused_out = apply_fused_unitary(psi0, block, theta);

    BatchedState<double> seq_out = psi0;
    RunStats stats;
    naive_forward_range<double>(seq, 0, seq.gates().size(), seq_out, theta, nullptr, stats,
                        nullptr);
    CHECK(max_abs_diff(fused_out, seq_out) <= 1e-12);
    CHECK(stats.forward_traversals == 9);
}

TEST_CASE("fused cz parity kernel") {
    FusedCZBlock one;
    one.masks = {0b11};
    one.gates = {{0, 1}};
    auto psi = new_basis_state<double>(2, 1);
    psi.set_amp(0, 0, {0.0, 0.0});
    psi.set_amp(0, 3, {1.0, 0.0}); // |11>
    const auto out = apply_fused_cz(psi, one);
    CHECK(out.amp(0, 3) == cdouble{-1.0, 0.0});

    FusedCZBlock twice;
    twice.masks = {0b11, 0b11};
    twice.gates = {{0, 1}, {0, 1}};
    const auto rnd = new_random_state<double>(4, 2, 3);
    FusedCZBlock twice4 = twice; // masks fit any register size
    const auto cancelled = apply_fused_cz(rnd, twice4);
    CHECK(max_abs_diff(cancelled, rnd) == 0.0);
}

TEST_CASE("20-gate cz ring equals sequential reference application") {
    const std::uint32_t n = 20;
    FusedCZBlock ring;
    std::vector<Gate> gates;
    for (std::uint32_t q = 0; q < n; ++q) {
        const std::uint32_t t = (q + 1) % n;
        ring.masks.push_back((std::uint64_t{1} << q) | (std::uint64_t{1} << t));
        ring.gates.emplace_back(q, t);
        gates.push_back(Gate::cz(q, t));
    }
    const auto psi0 = new_random_state<double>(n, 1, 19);
    const auto fused_out = apply_fused_cz(psi0, ring);

    const Circuit seq(n, std::move(gates), 0);
    auto ref = oracle::extract_sample(psi0, 0);
    oracle::run_circuit(seq, {}, ref);
    double diff = 0.0;
    for (std::uint64_t x = 0; x < psi0.dim(); ++x) {
        diff = std::max(diff, std::abs(fused_out.amp(0, x) - ref[x]));
    }
    CHECK(diff <= 1e-15);
}

TEST_CASE("fused cnot index tracing") {
    FusedCNOTBlock one;
    one.gates = {{0b01, 0b10}}; // control q0, target q1
    auto psi = new_basis_state<double>(2, 1);
    psi.set_amp(0, 0, {0.0, 0.0});
    psi.set_amp(0, 1, {1.0, 0.0}); // |01>
    const auto out = apply_fused_cnot(psi, one);
    CHECK(out.amp(0, 3) == cdouble{1.0, 0.0});
    CHECK(std::abs(out.amp(0, 1)) == 0.0);

    FusedCNOTBlock empty;
    const auto rnd = new_random_state<double>(3, 2, 8);
    CHECK(max_abs_diff(apply_fused_cnot(rnd, empty), rnd) == 0.0);
}

TEST_CASE("cnot run equals the dense product") {
    SplitMix64 rng(53);
    const std::uint32_t n = 4;
    FusedCNOTBlock block;
    std::vector<Gate> gates;
    for (int i = 0; i < 3; ++i) {
        const auto c = static_cast<std::uint32_t>(rng.next() % n);
        auto t = static_cast<std::uint32_t>(rng.next() % (n - 1));
        if (t >= c) {
            ++t;
        }
        block.gates.push_back({std::uint64_t{1} << c, std::uint64_t{1} << t});
        gates.push_back(Gate::cnot(c, t));
    }
    const auto psi0 = new_random_state<double>(n, 1, 31);
    const auto fused_out = apply_fused_cnot(psi0, block);

    const Circuit seq(n, std::move(gates), 0);
    const auto dense = oracle::circuit_to_matrix(seq, {});
    const auto ref = oracle::apply(dense, oracle::extract_sample(psi0, 0));
    for (std::uint64_t x = 0; x < psi0.dim(); ++x) {
        CHECK(std::abs(fused_out.amp(0, x) - ref[x]) <= 1e-15);
    }
}

TEST_CASE("forward stores one output per variational block") {
    const Circuit hea = build_hea(20, 1);
    const FusedCircuit fused = fuse_circuit(hea);
    const auto theta = random_parameters(hea.n_params(), 1);
    const auto psi0 = new_random_state<float>(20, 1, 2);

    const auto full = forward(fused, psi0, theta, StorageMode::Full);
    CHECK(full.ledger.entries.size() == 7);
    CHECK(full.ledger.units() == 7.0);
    CHECK(full.stats.forward_traversals == 8);
    CHECK(full.ledger.traversals == 8);

    const auto saved = forward(fused, psi0, theta, StorageMode::MemSave);
    CHECK(saved.ledger.entries.size() == 7);
    CHECK(saved.ledger.units() == 3.5);
}

TEST_CASE("zero-layer circuit leaves state and ledger empty") {
    const Circuit empty(3, {}, 0);
    const FusedCircuit fused = fuse_circuit(empty);
    const auto psi0 = new_random_state<double>(3, 2, 5);
    const auto result = forward(fused, psi0, {}, StorageMode::Full);
    CHECK(result.ledger.entries.empty());
    CHECK(result.stats.forward_traversals == 0);
    CHECK(max_abs_diff(result.state, psi0) == 0.0);
}

TEST_CASE("expectation on pinned states") {
    const auto zero = new_basis_state<double>(1, 1);
    CHECK(expectation(zero, parse_pauli("Z"))[0] == doctest::Approx(1.0).epsilon(1e-15));

    auto y_plus = new_basis_state<double>(1, 1);
    const double r = std::sqrt(0.5);
    y_plus.set_amp(0, 0, {r, 0.0});
    y_plus.set_amp(0, 1, {0.0, r});
    CHECK(expectation(y_plus, parse_pauli("Y"))[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("expectation matches the dense observable on random input") {
    const PauliString pauli = parse_pauli("IXYZXZ");
    const auto psi = new_random_state<double>(6, 4, 9);
    const auto values = expectation(psi, pauli);
    const auto dense = oracle::pauli_matrix(pauli);
    for (std::uint32_t s = 0; s < psi.batch(); ++s) {
        const auto v = oracle::extract_sample(psi, s);
        const auto ov = oracle::apply(dense, v);
        cdouble acc = 0.0;
        for (std::uint64_t x = 0; x < v.size(); ++x) {
            acc += std::conj(v[x]) * ov[x];
        }
        CHECK(std::abs(values[s] - acc.real()) <= 1e-12);
    }
}

TEST_CASE("adjoint seed is 2 O |psi>") {
    const auto zero = new_basis_state<double>(1, 1);
    const auto lz = seed_adjoint(zero, parse_pauli("Z"));
    CHECK(lz.amp(0, 0) == cdouble{2.0, 0.0});
    CHECK(lz.amp(0, 1) == cdouble{0.0, 0.0});

    auto one = new_basis_state<double>(1, 1);
    one.set_amp(0, 0, {0.0, 0.0});
    one.set_amp(0, 1, {1.0, 0.0});
    const auto lo = seed_adjoint(one, parse_pauli("Z"));
    CHECK(lo.amp(0, 1) == cdouble{-2.0, 0.0});

    const PauliString xy = parse_pauli("XY");
    const auto psi = new_random_state<double>(2, 3, 21);
    const auto lambda = seed_adjoint(psi, xy);
    const auto dense = oracle::pauli_matrix(xy);
    for (std::uint32_t s = 0; s < psi.batch(); ++s) {
        const auto ov = oracle::apply(dense, oracle::extract_sample(psi, s));
        for (std::uint64_t x = 0; x < psi.dim(); ++x) {
            CHECK(std::abs(lambda.amp(0, x) - 2.0 * ov[x]) <= 1e-12);
        }
        break; // sample 0 suffices for the componentwise check
    }
}

TEST_CASE("backward_block on a single Rx recovers -sin(theta)") {
    FusedUnitaryBlock block;
    block.group_start = 0;
    block.group_size = 1;
    block.constituents = {{Axis::X, 0, 0}};
    block.variational = true;
    const std::vector<double> theta{0.3};

    const auto psi0 = new_basis_state<double>(1, 1);
    const auto psi_out = apply_fused_unitary(psi0, block, theta);
    const auto loss = expectation(psi_out, parse_pauli("Z"));
    CHECK(loss[0] == doctest::Approx(std::cos(0.3)).epsilon(1e-12));

    const auto lambda = seed_adjoint(psi_out, parse_pauli("Z"));
    const auto back = backward_block(psi_out, lambda, block, theta);
    CHECK(back.gradient.size() == 1);
    CHECK(back.gradient[0] == doctest::Approx(-std::sin(0.3)).epsilon(1e-10));
    CHECK(max_abs_diff(back.psi_in, psi0) <= 1e-15);
}

TEST_CASE("backward_block with a zero adjoint yields zero everywhere") {
    FusedUnitaryBlock block;
    block.group_start = 0;
    block.group_size = 2;
    block.constituents = {{Axis::Y, 0, 0}, {Axis::Z, 1, 1}};
    block.variational = true;
    const std::vector<double> theta{0.7, 1.9};
    const auto psi = new_random_state<double>(2, 2, 6);
    const BatchedState<double> zero_lambda(2, 2);
    const auto back = backward_block(psi, zero_lambda, block, theta);
    CHECK(back.gradient[0] == 0.0);
    CHECK(back.gradient[1] == 0.0);
    double lambda_norm = 0.0;
    for (const double v : back.lambda_in.components()) {
        lambda_norm = std::max(lambda_norm, std::abs(v));
    }
    CHECK(lambda_norm == 0.0);
}

TEST_CASE("backward_block matches finite differences on a nine-gate block") {
    SplitMix64 rng(61);
    const std::uint32_t n = 6;
    FusedUnitaryBlock block;
    block.group_start = 0;
    block.group_size = 3;
    block.variational = true;
    std::vector<Gate> gates;
    std::vector<double> theta;
    for (std::uint32_t k = 0; k < 9; ++k) {
        const Axis axis = k % 3 == 0 ? Axis::Z : k % 3 == 1 ? Axis::X : Axis::Y;
        const auto local = static_cast<std::uint32_t>(rng.next() % 3);
        block.constituents.push_back({axis, local, k});
        gates.push_back(Gate::rotation(axis, local, k));
        theta.push_back(rng.next_unit() * 6.28);
    }
    const PauliString pauli = parse_pauli(repeated_ixyz_label(n));
    const auto psi0 = new_random_state<double>(n, 2, 14);

    const auto psi_out = apply_fused_unitary(psi0, block, theta);
    const auto lambda = seed_adjoint(psi_out, pauli);
    const auto back = backward_block(psi_out, lambda, block, theta);
    CHECK(max_abs_diff(back.psi_in, psi0) <= 1e-12);

    const Circuit block_circuit(n, std::move(gates), 9);
    const auto fd = oracle::fd_gradient(block_circuit, psi0, theta, pauli, 1e-5);
    CHECK(rel_diff(back.gradient, fd) <= 1e-6);
}

TEST_CASE("backward_constant: involution and dense adjoint") {
    const auto lambda = new_random_state<double>(4, 2, 77);

    FusedCZBlock cz;
    cz.masks = {0b0011, 0b0110};
    cz.gates = {{0, 1}, {1, 2}};
    const FusedOp cz_op = cz;
    const auto once = backward_constant(lambda, cz_op);
    const auto twice = backward_constant(once, cz_op);
    CHECK(max_abs_diff(twice, lambda) == 0.0);

    FusedCNOTBlock cnot;
    cnot.gates = {{0b0001, 0b0010}, {0b0100, 0b0001}, {0b0010, 0b1000}};
    const FusedOp cnot_op = cnot;
    const auto forward_applied = apply_fused_cnot(lambda, cnot);
    const auto back_applied = backward_constant(forward_applied, cnot_op);
    CHECK(max_abs_diff(back_applied, lambda) == 0.0);

    // dense reference for G^dag lambda: reversed gate order, each self-inverse
    std::vector<Gate> reversed{Gate::cnot(1, 3), Gate::cnot(2, 0), Gate::cnot(0, 1)};
    const auto dense = oracle::circuit_to_matrix(Circuit(4, reversed, 0), {});
    const auto adj = backward_constant(lambda, cnot_op);
    const auto ref = oracle::apply(dense, oracle::extract_sample(lambda, 0));
    for (std::uint64_t x = 0; x < lambda.dim(); ++x) {
        CHECK(std::abs(adj.amp(0, x) - ref[x]) <= 1e-15);
    }
}

TEST_CASE("adjoint gradient matches parameter shift on a random instance") {
    const Circuit hea = build_hea(4, 2);
    const auto theta = random_parameters(hea.n_params(), 42);
    const auto psi0 = new_random_state<double>(4, 2, 43);
    const PauliString pauli = parse_pauli(repeated_ixyz_label(4));

    const FusedCircuit fused = fuse_circuit(hea);
    const auto result = gradient(fused, psi0, theta, pauli, StorageMode::Full);
    const auto shift = oracle::parameter_shift_gradient(hea, psi0, theta, pauli);
    CHECK(rel_diff(result.gradient, shift.gradient) <= 1e-10);

    const double loss_ref = oracle::loss_ref(hea, psi0, theta, pauli);
    CHECK(result.loss == doctest::Approx(loss_ref).epsilon(1e-12));
}

TEST_CASE("gradient vanishes at the theta=0 stationary point") {
    const Circuit hea = build_hea(3, 1);
    const std::vector<double> theta(hea.n_params(), 0.0);
    const auto psi0 = new_basis_state<double>(3, 1);
    const auto result = gradient(fuse_circuit(hea), psi0, theta, parse_pauli("ZZZ"),
                                 StorageMode::Full);
    CHECK(result.loss == doctest::Approx(1.0).epsilon(1e-14));
    for (const double g : result.gradient) {
        CHECK(std::abs(g) <= 1e-14);
    }
}

TEST_CASE("naive ledger stores one input per gate") {
    const Circuit hea = build_hea(20, 1);
    const auto theta = random_parameters(hea.n_params(), 3);
    const auto psi0 = new_random_state<float>(20, 1, 4);
    MemoryAccountant acct(BatchedState<float>::bytes(20, 1));
    const auto result = naive_gradient(hea, psi0, theta,
                                       parse_pauli(repeated_ixyz_label(20)), &acct);
    CHECK(result.stats.forward_traversals == 80);
    CHECK(result.stats.backward_traversals == 80);
    CHECK(result.stats.observable_traversals == 2);
    CHECK(result.stats.ledger_peak_units == 80.0);
    CHECK(acct.peak_units() == 80.0);
    CHECK(acct.current_units() == 0.0);
}

TEST_CASE("shape mismatches and ledger overflow raise errors") {
    const auto psi = new_random_state<double>(3, 1, 1);
    CHECK_THROWS_AS(expectation(psi, parse_pauli("ZZ")), std::invalid_argument);
    CHECK_THROWS_AS(seed_adjoint(psi, parse_pauli("ZZZZ")), std::invalid_argument);

    const std::size_t saved = alloc_limit();
    set_alloc_limit(BatchedState<double>::bytes(10, 1) * 8); // room for ~8 vectors
    const Circuit hea = build_hea(10, 1);                    // naive needs 40 entries
    const auto theta = random_parameters(hea.n_params(), 2);
    const auto psi10 = new_random_state<double>(10, 1, 3);
    CHECK_THROWS_AS(
        naive_gradient(hea, psi10, theta, parse_pauli(repeated_ixyz_label(10))),
        CapacityError);
    set_alloc_limit(saved);
}

TEST_CASE("fused and naive executors agree on random circuits") {
    SplitMix64 rng(71);
    for (int trial = 0; trial < 6; ++trial) {
        const std::uint32_t n = 4 + static_cast<std::uint32_t>(rng.next() % 7); // 4..10
        const Circuit c = random_circuit(n, 30, rng);
        const auto theta = random_parameters(c.n_params(), rng.next());
        const auto psi0 = new_random_state<double>(n, 2, rng.next());
        const PauliString pauli = parse_pauli(repeated_ixyz_label(n));
        const FusedCircuit fused = fuse_circuit(c);

        BatchedState<double> fused_state = psi0;
        RunStats fstats;
        forward_range<double>(fused, 0, fused.ops.size(), fused_state, theta, StorageMode::Full,
                      nullptr, fstats, nullptr);
        BatchedState<double> naive_state = psi0;
        RunStats nstats;
        naive_forward_range<double>(c, 0, c.gates().size(), naive_state, theta, nullptr, nstats,
                            nullptr);
        CHECK(max_abs_diff(fused_state, naive_state) <= 1e-12);

        const auto fused_grad = gradient(fused, psi0, theta, pauli, StorageMode::Full);
        const auto naive_grad = naive_gradient(c, psi0, theta, pauli);
        CHECK(std::abs(fused_grad.loss - naive_grad.loss) <= 1e-12);
        double diff = 0.0;
        for (std::size_t j = 0; j < fused_grad.gradient.size(); ++j) {
            diff = std::max(diff,
                            std::abs(fused_grad.gradient[j] - naive_grad.gradient[j]));
        }
        CHECK(diff <= 1e-12);
    }
}

TEST_CASE("traversal counters: fused 8 vs naive 80 per layer") {
    const Circuit hea = build_hea(20, 1);
    const FusedCircuit fused = fuse_circuit(hea);
    CHECK(fused.ops.size() == 8);
    CHECK(hea.gates().size() == 80);

    // per-layer counts replicated at a small width
    const Circuit hea8 = build_hea(8, 2);
    const FusedCircuit fused8 = fuse_circuit(hea8);
    CHECK(fused8.ops.size() == 2 * 4);
    CHECK(hea8.gates().size() == 2 * 32);
}

TEST_CASE("norm is preserved through 100 fused layers") {
    const Circuit hea = build_hea(6, 100);
    const FusedCircuit fused = fuse_circuit(hea);
    const auto theta = random_parameters(hea.n_params(), 15);

    const auto single = forward(fused, new_random_state<float>(6, 2, 16), theta,
                                StorageMode::Full);
    for (std::uint32_t s = 0; s < 2; ++s) {
        CHECK(std::abs(single.state.sample_norm(s) - 1.0) < 1e-6);
    }

    const auto dbl = forward(fused, new_random_state<double>(6, 2, 16), theta,
                             StorageMode::Full);
    for (std::uint32_t s = 0; s < 2; ++s) {
        CHECK(std::abs(dbl.state.sample_norm(s) - 1.0) < 1e-12);
    }
}

TEST_CASE("mem_save gradients stay near full-precision gradients") {
    const Circuit hea = build_hea(10, 10);
    const FusedCircuit fused = fuse_circuit(hea);
    const auto theta = random_parameters(hea.n_params(), 33);
    const PauliString pauli = parse_pauli(repeated_ixyz_label(10));

    // bounds calibrated against the full-precision run over 20 random
    // instances of this workload (worst observed: 2.1e-3 and 3.6e-8)
    const auto psi_f = new_random_state<float>(10, 2, 34);
    const auto full_f = gradient(fused, psi_f, theta, pauli, StorageMode::Full);
    const auto saved_f = gradient(fused, psi_f, theta, pauli, StorageMode::MemSave);
    CHECK(rel_diff(saved_f.gradient, full_f.gradient) <= 5e-3);

    const auto psi_d = new_random_state<double>(10, 2, 34);
    const auto full_d = gradient(fused, psi_d, theta, pauli, StorageMode::Full);
    const auto saved_d = gradient(fused, psi_d, theta, pauli, StorageMode::MemSave);
    CHECK(rel_diff(saved_d.gradient, full_d.gradient) <= 1e-6);
}

TEST_CASE("gradients are deterministic and thread-count independent") {
    const Circuit hea = build_hea(6, 3);
    const FusedCircuit fused = fuse_circuit(hea);
    const auto theta = random_parameters(hea.n_params(), 51);
    const auto psi0 = new_random_state<double>(6, 3, 52);
    const PauliString pauli = parse_pauli(repeated_ixyz_label(6));

    const int saved_threads = omp_get_max_threads();
    omp_set_num_threads(1);
    const auto a = gradient(fused, psi0, theta, pauli, StorageMode::Full);
    const auto b = gradient(fused, psi0, theta, pauli, StorageMode::Full);
    CHECK(a.loss == b.loss);
    CHECK(a.gradient == b.gradient);

    omp_set_num_threads(4);
    const auto c = gradient(fused, psi0, theta, pauli, StorageMode::Full);
    omp_set_num_threads(saved_threads);

    CHECK(rel_diff(c.gradient, a.gradient) <= 1e-12);
    CHECK(c.loss == doctest::Approx(a.loss).epsilon(1e-15));
}

TEST_CASE("three gradient routes agree within their tolerances") {
    const Circuit hea = build_hea(6, 2);
    const auto theta = random_parameters(hea.n_params(), 91);
    const auto psi0 = new_random_state<double>(6, 2, 92);
    const PauliString pauli = parse_pauli(repeated_ixyz_label(6));

    const auto adjoint = gradient(fuse_circuit(hea), psi0, theta, pauli,
                                  StorageMode::Full);
    const auto shift = oracle::parameter_shift_gradient(hea, psi0, theta, pauli);
    const auto fd = oracle::fd_gradient(hea, psi0, theta, pauli, 1e-5);

    CHECK(rel_diff(adjoint.gradient, shift.gradient) <= 1e-10);
    CHECK(rel_diff(adjoint.gradient, fd) <= 1e-6);
}

TEST_CASE("ledger accounting during gradient: peak equals block count") {
    const Circuit hea = build_hea(6, 4);
    const FusedCircuit fused = fuse_circuit(hea);
    const auto theta = random_parameters(hea.n_params(), 1);
    const auto psi0 = new_random_state<double>(6, 1, 2);
    const PauliString pauli = parse_pauli(repeated_ixyz_label(6));

    MemoryAccountant acct(BatchedState<double>::bytes(6, 1));
    const auto result = gradient(fused, psi0, theta, pauli, StorageMode::Full, &acct);
    CHECK(acct.peak_units() == static_cast<double>(fused.variational_block_count()));
    CHECK(acct.current_units() == 0.0); // ledger never grew during backward
    CHECK(result.stats.forward_traversals == fused.ops.size());
    CHECK(result.stats.backward_traversals == fused.ops.size());
    CHECK(result.stats.observable_traversals == 2);

    MemoryAccountant acct_ms(BatchedState<double>::bytes(6, 1));
    gradient(fused, psi0, theta, pauli, StorageMode::MemSave, &acct_ms);
    CHECK(acct_ms.peak_units() ==
          0.5 * static_cast<double>(fused.variational_block_count()));
}
