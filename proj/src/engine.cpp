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
#include "qfuse/engine.hpp"

#include <algorithm>
#include <cmath>

#include "qfuse/bits.hpp"

namespace qfuse {

namespace {

// Work items per reduction chunk. Chunk boundaries are fixed per sample so
// partial sums (combined in ascending chunk order) do not depend on the
// thread count.
constexpr std::uint64_t kChunkItems = 1ull << 12;

std::uint64_t chunks_per_sample(std::uint64_t items) {
    return (items + kChunkItems - 1) / kChunkItems;
}

// u = c I - i s P applied to the amplitude pair (a, b) at one qubit.
// The same form covers u^dag (negate s) and du/dtheta (c -> -s/2, s -> c/2).
template <class T>
inline void pair_apply(Axis axis, T c, T s, T &ar, T &ai, T &br, T &bi) {
    const T a_re = ar, a_im = ai, b_re = br, b_im = bi;
    switch (axis) {
    case Axis::X:
        ar = c * a_re + s * b_im;
        ai = c * a_im - s * b_re;
        br = c * b_re + s * a_im;
        bi = c * b_im - s * a_re;
        break;
    case Axis::Y:
        ar = c * a_re - s * b_re;
        ai = c * a_im - s * b_im;
        br = s * a_re + c * b_re;
        bi = s * a_im + c * b_im;
        break;
    case Axis::Z:
        ar = c * a_re + s * a_im;
        ai = c * a_im - s * a_re;
        br = c * b_re - s * b_im;
        bi = c * b_im + s * b_re;
        break;
    }
}

template <class T>
void apply_block_unitary_kernel(const T *src, T *dst, std::uint32_t n_qubits,
                                std::uint32_t batch, const BlockUnitary &unitary,
                                std::uint32_t group_start, std::uint32_t group_size) {
    const std::uint32_t dim_g = unitary.dim;
    T m_re[64];
    T m_im[64];
    for (std::uint32_t i = 0; i < dim_g * dim_g; ++i) {
        m_re[i] = static_cast<T>(unitary.m[i].real());
        m_im[i] = static_cast<T>(unitary.m[i].imag());
    }
    const std::uint64_t tuples = std::uint64_t{1} << (n_qubits - group_size);
    const std::uint64_t lo_mask = (std::uint64_t{1} << group_start) - 1;
    const std::size_t stride = std::size_t{2} << n_qubits;
    const std::uint64_t cps = chunks_per_sample(tuples);
    const std::int64_t total = static_cast<std::int64_t>(cps * batch);

#pragma omp parallel for schedule(static)
    for (std::int64_t chunk = 0; chunk < total; ++chunk) {
        const auto s = static_cast<std::uint32_t>(chunk / cps);
        const std::uint64_t t0 = (static_cast<std::uint64_t>(chunk) % cps) * kChunkItems;
        const std::uint64_t t1 = std::min(t0 + kChunkItems, tuples);
        const T *in = src + s * stride;
        T *out = dst + s * stride;
        T v_re[8];
        T v_im[8];
        for (std::uint64_t t = t0; t < t1; ++t) {
            const std::uint64_t base = ((t & ~lo_mask) << group_size) | (t & lo_mask);
            for (std::uint32_t j = 0; j < dim_g; ++j) {
                const std::uint64_t idx = base | (std::uint64_t{j} << group_start);
                v_re[j] = in[2 * idx];
                v_im[j] = in[2 * idx + 1];
            }
            for (std::uint32_t r = 0; r < dim_g; ++r) {
                T acc_re = T(0);
                T acc_im = T(0);
                for (std::uint32_t j = 0; j < dim_g; ++j) {
                    const T mr = m_re[r * dim_g + j];
                    const T mi = m_im[r * dim_g + j];
                    acc_re += mr * v_re[j] - mi * v_im[j];
                    acc_im += mr * v_im[j] + mi * v_re[j];
                }
                const std::uint64_t idx = base | (std::uint64_t{r} << group_start);
                out[2 * idx] = acc_re;
                out[2 * idx + 1] = acc_im;
            }
        }
    }
}

template <class T>
void apply_cz_kernel(const T *src, T *dst, std::uint32_t n_qubits, std::uint32_t batch,
                     std::span<const std::uint64_t> masks) {
    const std::uint64_t dim = std::uint64_t{1} << n_qubits;
    const std::size_t stride = std::size_t{2} << n_qubits;
    const std::uint64_t cps = chunks_per_sample(dim);
    const std::int64_t total = static_cast<std::int64_t>(cps * batch);

#pragma omp parallel for schedule(static)
    for (std::int64_t chunk = 0; chunk < total; ++chunk) {
        const auto s = static_cast<std::uint32_t>(chunk / cps);
        const std::uint64_t x0 = (static_cast<std::uint64_t>(chunk) % cps) * kChunkItems;
        const std::uint64_t x1 = std::min(x0 + kChunkItems, dim);
        const T *in = src + s * stride;
        T *out = dst + s * stride;
        for (std::uint64_t x = x0; x < x1; ++x) {
            unsigned parity = 0;
            for (const std::uint64_t mask : masks) {
                parity ^= static_cast<unsigned>((x & mask) == mask);
            }
            const T sign = parity ? T(-1) : T(1);
            out[2 * x] = sign * in[2 * x];
            out[2 * x + 1] = sign * in[2 * x + 1];
        }
    }
}

// Destination tracing: fold the gate list over the index, then write the
// source amplitude at the traced destination (a pure permutation, so
// parallel writes stay disjoint). `reversed` folds the gates back to
// front, which is the adjoint of the block.
template <class T>
void apply_cnot_kernel(const T *src, T *dst, std::uint32_t n_qubits, std::uint32_t batch,
                       const FusedCNOTBlock &block, bool reversed) {
    const std::uint64_t dim = std::uint64_t{1} << n_qubits;
    const std::size_t stride = std::size_t{2} << n_qubits;
    const std::uint64_t cps = chunks_per_sample(dim);
    const std::int64_t total = static_cast<std::int64_t>(cps * batch);
    const std::size_t n_gates = block.gates.size();

#pragma omp parallel for schedule(static)
    for (std::int64_t chunk = 0; chunk < total; ++chunk) {
        const auto s = static_cast<std::uint32_t>(chunk / cps);
        const std::uint64_t x0 = (static_cast<std::uint64_t>(chunk) % cps) * kChunkItems;
        const std::uint64_t x1 = std::min(x0 + kChunkItems, dim);
        const T *in = src + s * stride;
        T *out = dst + s * stride;
        for (std::uint64_t x = x0; x < x1; ++x) {
            std::uint64_t idx = x;
            for (std::size_t g = 0; g < n_gates; ++g) {
                const auto &pair = block.gates[reversed ? n_gates - 1 - g : g];
                if ((idx & pair.control_mask) == pair.control_mask) {
                    idx ^= pair.target_mask;
                }
            }
            out[2 * idx] = in[2 * x];
            out[2 * idx + 1] = in[2 * x + 1];
        }
    }
}

template <class T>
void apply_rotation_kernel(const T *src, T *dst, std::uint32_t n_qubits,
                           std::uint32_t batch, Axis axis, T c, T s,
                           std::uint32_t target) {
    const std::uint64_t pairs = std::uint64_t{1} << (n_qubits - 1);
    const std::uint64_t mask = std::uint64_t{1} << target;
    const std::uint64_t lo_mask = mask - 1;
    const std::size_t stride = std::size_t{2} << n_qubits;
    const std::uint64_t cps = chunks_per_sample(pairs);
    const std::int64_t total = static_cast<std::int64_t>(cps * batch);

#pragma omp parallel for schedule(static)
    for (std::int64_t chunk = 0; chunk < total; ++chunk) {
        const auto smp = static_cast<std::uint32_t>(chunk / cps);
        const std::uint64_t k0 = (static_cast<std::uint64_t>(chunk) % cps) * kChunkItems;
        const std::uint64_t k1 = std::min(k0 + kChunkItems, pairs);
        const T *in = src + smp * stride;
        T *out = dst + smp * stride;
        for (std::uint64_t k = k0; k < k1; ++k) {
            const std::uint64_t i0 = pair_base(k, lo_mask);
            const std::uint64_t i1 = i0 | mask;
            T ar = in[2 * i0], ai = in[2 * i0 + 1];
            T br = in[2 * i1], bi = in[2 * i1 + 1];
            pair_apply(axis, c, s, ar, ai, br, bi);
            out[2 * i0] = ar;
            out[2 * i0 + 1] = ai;
            out[2 * i1] = br;
            out[2 * i1 + 1] = bi;
        }
    }
}

// One pass per rotation in the per-gate backward: accumulates the
// parameter's contribution Re[lambda^dag du psi_in] into per-chunk
// partials and advances lambda <- u^dag lambda.
template <class T>
void rotation_backward_kernel(const T *psi_in, const T *lambda_src, T *lambda_dst,
                              std::uint32_t n_qubits, std::uint32_t batch, Axis axis,
                              double cos_half, double sin_half, std::uint32_t target,
                              std::vector<double> &chunk_partials) {
    const std::uint64_t pairs = std::uint64_t{1} << (n_qubits - 1);
    const std::uint64_t mask = std::uint64_t{1} << target;
    const std::uint64_t lo_mask = mask - 1;
    const std::size_t stride = std::size_t{2} << n_qubits;
    const std::uint64_t cps = chunks_per_sample(pairs);
    const std::int64_t total = static_cast<std::int64_t>(cps * batch);
    chunk_partials.assign(static_cast<std::size_t>(total), 0.0);

    const T c = static_cast<T>(cos_half);
    const T s = static_cast<T>(sin_half);
    const double dc = -0.5 * sin_half; // du I coefficient
    const double ds = 0.5 * cos_half;  // du -iP coefficient

#pragma omp parallel for schedule(static)
    for (std::int64_t chunk = 0; chunk < total; ++chunk) {
        const auto smp = static_cast<std::uint32_t>(chunk / cps);
        const std::uint64_t k0 = (static_cast<std::uint64_t>(chunk) % cps) * kChunkItems;
        const std::uint64_t k1 = std::min(k0 + kChunkItems, pairs);
        const T *psi = psi_in + smp * stride;
        const T *lam = lambda_src + smp * stride;
        T *out = lambda_dst + smp * stride;
        double acc = 0.0;
        for (std::uint64_t k = k0; k < k1; ++k) {
            const std::uint64_t i0 = pair_base(k, lo_mask);
            const std::uint64_t i1 = i0 | mask;

            double war = psi[2 * i0], wai = psi[2 * i0 + 1];
            double wbr = psi[2 * i1], wbi = psi[2 * i1 + 1];
            pair_apply(axis, dc, ds, war, wai, wbr, wbi);
            acc += static_cast<double>(lam[2 * i0]) * war +
                   static_cast<double>(lam[2 * i0 + 1]) * wai +
                   static_cast<double>(lam[2 * i1]) * wbr +
                   static_cast<double>(lam[2 * i1 + 1]) * wbi;

            T lar = lam[2 * i0], lai = lam[2 * i0 + 1];
            T lbr = lam[2 * i1], lbi = lam[2 * i1 + 1];
            pair_apply(axis, c, static_cast<T>(-s), lar, lai, lbr, lbi);
            out[2 * i0] = lar;
            out[2 * i0 + 1] = lai;
            out[2 * i1] = lbr;
            out[2 * i1 + 1] = lbi;
        }
        chunk_partials[static_cast<std::size_t>(chunk)] = acc;
    }
}

struct ConstituentCoef {
    Axis axis;
    std::uint32_t bit;
    double cos_half;
    double sin_half;
};

// Fused backward over one variational block, one traversal total. Per
// tuple: load psi_out and lambda into scratch; for k = m..1 recompute
// psi <- u_k^dag psi, accumulate Re[lambda^dag du_k psi], advance
// lambda <- u_k^dag lambda; write both tuples out. Gradient partials are
// per (chunk, constituent) in double.
template <class T>
void block_backward_kernel(const T *psi_out, const T *lambda_src, T *psi_dst,
                           T *lambda_dst, std::uint32_t n_qubits, std::uint32_t batch,
                           std::uint32_t group_start, std::uint32_t group_size,
                           const std::vector<ConstituentCoef> &coef,
                           std::vector<double> &chunk_partials) {
    const std::uint32_t dim_g = 1u << group_size;
    const std::uint64_t tuples = std::uint64_t{1} << (n_qubits - group_size);
    const std::uint64_t lo_mask = (std::uint64_t{1} << group_start) - 1;
    const std::size_t stride = std::size_t{2} << n_qubits;
    const std::uint64_t cps = chunks_per_sample(tuples);
    const std::int64_t total = static_cast<std::int64_t>(cps * batch);
    const std::size_t m = coef.size();
    chunk_partials.assign(static_cast<std::size_t>(total) * m, 0.0);

#pragma omp parallel for schedule(static)
    for (std::int64_t chunk = 0; chunk < total; ++chunk) {
        const auto smp = static_cast<std::uint32_t>(chunk / cps);
        const std::uint64_t t0 = (static_cast<std::uint64_t>(chunk) % cps) * kChunkItems;
        const std::uint64_t t1 = std::min(t0 + kChunkItems, tuples);
        const T *psi_g = psi_out + smp * stride;
        const T *lam_g = lambda_src + smp * stride;
        T *psi_o = psi_dst + smp * stride;
        T *lam_o = lambda_dst + smp * stride;
        double *partial = chunk_partials.data() + static_cast<std::size_t>(chunk) * m;

        T p_re[8], p_im[8], l_re[8], l_im[8];
        for (std::uint64_t t = t0; t < t1; ++t) {
            const std::uint64_t base = ((t & ~lo_mask) << group_size) | (t & lo_mask);
            for (std::uint32_t j = 0; j < dim_g; ++j) {
                const std::uint64_t idx = base | (std::uint64_t{j} << group_start);
                p_re[j] = psi_g[2 * idx];
                p_im[j] = psi_g[2 * idx + 1];
                l_re[j] = lam_g[2 * idx];
                l_im[j] = lam_g[2 * idx + 1];
            }
            for (std::size_t k = m; k-- > 0;) {
                const auto &cc = coef[k];
                const T c = static_cast<T>(cc.cos_half);
                const T neg_s = static_cast<T>(-cc.sin_half);
                const double dc = -0.5 * cc.sin_half;
                const double ds = 0.5 * cc.cos_half;
                double acc = 0.0;
                for (std::uint32_t j = 0; j < dim_g; ++j) {
                    if (j & cc.bit) {
                        continue;
                    }
                    const std::uint32_t j1 = j | cc.bit;
                    // recompute the block-input amplitudes of this gate
                    pair_apply(cc.axis, c, neg_s, p_re[j], p_im[j], p_re[j1], p_im[j1]);
                    // gradient term from the recomputed pair
                    double war = p_re[j], wai = p_im[j];
                    double wbr = p_re[j1], wbi = p_im[j1];
                    pair_apply(cc.axis, dc, ds, war, wai, wbr, wbi);
                    acc += static_cast<double>(l_re[j]) * war +
                           static_cast<double>(l_im[j]) * wai +
                           static_cast<double>(l_re[j1]) * wbr +
                           static_cast<double>(l_im[j1]) * wbi;
                    // advance the adjoint pair
                    pair_apply(cc.axis, c, neg_s, l_re[j], l_im[j], l_re[j1], l_im[j1]);
                }
                partial[k] += acc;
            }
            for (std::uint32_t j = 0; j < dim_g; ++j) {
                const std::uint64_t idx = base | (std::uint64_t{j} << group_start);
                psi_o[2 * idx] = p_re[j];
                psi_o[2 * idx + 1] = p_im[j];
                lam_o[2 * idx] = l_re[j];
                lam_o[2 * idx + 1] = l_im[j];
            }
        }
    }
}

// Phase of <x|O|x ^ x_mask>: a sign from the Z-mask parity of the source
// index, times i^y_count.
template <class T>
inline void pauli_phase(std::uint64_t target_idx, const PauliString &pauli, T &re, T &im) {
    if (parity64(target_idx & pauli.z_mask)) {
        re = -re;
        im = -im;
    }
    switch (pauli.y_count & 3) {
    case 0:
        break;
    case 1: {
        const T t = re;
        re = -im;
        im = t;
        break;
    }
    case 2:
        re = -re;
        im = -im;
        break;
    case 3: {
        const T t = re;
        re = im;
        im = -t;
        break;
    }
    }
}

template <class T>
void expectation_kernel(const T *src, std::uint32_t n_qubits, std::uint32_t batch,
                        const PauliString &pauli, std::vector<double> &out) {
    const std::uint64_t dim = std::uint64_t{1} << n_qubits;
    const std::size_t stride = std::size_t{2} << n_qubits;
    const std::uint64_t cps = chunks_per_sample(dim);
    const std::int64_t total = static_cast<std::int64_t>(cps * batch);
    std::vector<double> partials(static_cast<std::size_t>(total), 0.0);

#pragma omp parallel for schedule(static)
    for (std::int64_t chunk = 0; chunk < total; ++chunk) {
        const auto s = static_cast<std::uint32_t>(chunk / cps);
        const std::uint64_t x0 = (static_cast<std::uint64_t>(chunk) % cps) * kChunkItems;
        const std::uint64_t x1 = std::min(x0 + kChunkItems, dim);
        const T *in = src + s * stride;
        double acc = 0.0;
        for (std::uint64_t x = x0; x < x1; ++x) {
            const std::uint64_t target = x ^ pauli.x_mask;
            T kr = in[2 * target];
            T ki = in[2 * target + 1];
            pauli_phase(target, pauli, kr, ki);
            acc += static_cast<double>(in[2 * x]) * static_cast<double>(kr) +
                   static_cast<double>(in[2 * x + 1]) * static_cast<double>(ki);
        }
        partials[static_cast<std::size_t>(chunk)] = acc;
    }

    out.assign(batch, 0.0);
    for (std::uint32_t s = 0; s < batch; ++s) {
        double acc = 0.0;
        for (std::uint64_t c = 0; c < cps; ++c) {
            acc += partials[s * cps + c];
        }
        out[s] = acc;
    }
}

template <class T>
void seed_adjoint_kernel(const T *src, T *dst, std::uint32_t n_qubits,
                         std::uint32_t batch, const PauliString &pauli) {
    const std::uint64_t dim = std::uint64_t{1} << n_qubits;
    const std::size_t stride = std::size_t{2} << n_qubits;
    const std::uint64_t cps = chunks_per_sample(dim);
    const std::int64_t total = static_cast<std::int64_t>(cps * batch);

#pragma omp parallel for schedule(static)
    for (std::int64_t chunk = 0; chunk < total; ++chunk) {
        const auto s = static_cast<std::uint32_t>(chunk / cps);
        const std::uint64_t x0 = (static_cast<std::uint64_t>(chunk) % cps) * kChunkItems;
        const std::uint64_t x1 = std::min(x0 + kChunkItems, dim);
        const T *in = src + s * stride;
        T *out = dst + s * stride;
        for (std::uint64_t x = x0; x < x1; ++x) {
            const std::uint64_t target = x ^ pauli.x_mask;
            T kr = in[2 * target];
            T ki = in[2 * target + 1];
            pauli_phase(target, pauli, kr, ki);
            out[2 * x] = T(2) * kr;
            out[2 * x + 1] = T(2) * ki;
        }
    }
}

template <class T>
void check_shape(const BatchedState<T> &state, std::uint32_t n_qubits) {
    if (state.n_qubits() != n_qubits) {
        throw std::invalid_argument("engine: state qubit count mismatch");
    }
}

template <class T>
void apply_op_kernel(const BatchedState<T> &src, BatchedState<T> &dst, const FusedOp &op,
                     std::span<const double> theta) {
    if (const auto *block = std::get_if<FusedUnitaryBlock>(&op)) {
        const BlockUnitary u = compose_block_unitary(*block, theta);
        apply_block_unitary_kernel(src.components().data(), dst.components().data(),
                                   src.n_qubits(), src.batch(), u, block->group_start,
                                   block->group_size);
    } else if (const auto *cz = std::get_if<FusedCZBlock>(&op)) {
        apply_cz_kernel(src.components().data(), dst.components().data(), src.n_qubits(),
                        src.batch(), cz->masks);
    } else {
        apply_cnot_kernel(src.components().data(), dst.components().data(),
                          src.n_qubits(), src.batch(), std::get<FusedCNOTBlock>(op),
                          /*reversed=*/false);
    }
}

template <class T>
std::vector<ConstituentCoef> constituent_coefs(const FusedUnitaryBlock &block,
                                               std::span<const double> theta) {
    std::vector<ConstituentCoef> coef;
    coef.reserve(block.constituents.size());
    for (const auto &c : block.constituents) {
        const double half = theta[c.param] / 2.0;
        coef.push_back({c.axis, 1u << c.local, std::cos(half), std::sin(half)});
    }
    return coef;
}

/// Combines per-chunk gradient partials (ascending chunk index) into
/// per-constituent sums.
std::vector<double> combine_partials(const std::vector<double> &partials, std::size_t m) {
    std::vector<double> sums(m, 0.0);
    const std::size_t chunks = m == 0 ? 0 : partials.size() / m;
    for (std::size_t c = 0; c < chunks; ++c) {
        for (std::size_t k = 0; k < m; ++k) {
            sums[k] += partials[c * m + k];
        }
    }
    return sums;
}

/// Ledger store plus capacity/accounting bookkeeping.
template <class T>
void store_ledger_entry(StateLedger<T> &ledger, std::size_t op_index,
                        const BatchedState<T> &state, MemoryAccountant *accountant) {
    typename StateLedger<T>::Entry entry;
    entry.op_index = op_index;
    const std::size_t entry_bytes =
        ledger.mode == StorageMode::MemSave
            ? state.components().size() * sizeof(narrow_t<T>)
            : state.components().size() * sizeof(T);
    if (ledger.bytes() + entry_bytes > alloc_limit()) {
        throw CapacityError("state ledger exceeds the allocation limit");
    }
    if (ledger.mode == StorageMode::MemSave) {
        const auto src = state.components();
        entry.narrow.resize(src.size());
        for (std::size_t i = 0; i < src.size(); ++i) {
            entry.narrow[i] = narrow_traits<T>::narrow(src[i]);
        }
    } else {
        entry.full.assign(state.components().begin(), state.components().end());
    }
    ledger.entries.push_back(std::move(entry));
    if (accountant != nullptr) {
        accountant->add(ledger.unit_per_entry());
    }
}

/// Widens a MemSave entry into `scratch` and returns a pointer to the
/// components to use as the stored block output (one widening pass per
/// block backward).
template <class T>
const T *ledger_entry_components(const StateLedger<T> &ledger,
                                 const typename StateLedger<T>::Entry &entry,
                                 std::vector<T> &scratch) {
    if (ledger.mode == StorageMode::Full) {
        return entry.full.data();
    }
    scratch.resize(entry.narrow.size());
    for (std::size_t i = 0; i < entry.narrow.size(); ++i) {
        scratch[i] = narrow_traits<T>::widen(entry.narrow[i]);
    }
    return scratch.data();
}

} // namespace

template <class T> std::size_t StateLedger<T>::bytes() const {
    std::size_t total = 0;
    for (const auto &entry : entries) {
        total += entry.full.size() * sizeof(T) + entry.narrow.size() * sizeof(narrow_t<T>);
    }
    return total;
}

template <class T>
BatchedState<T> apply_fused_unitary(const BatchedState<T> &state,
                                    const FusedUnitaryBlock &block,
                                    std::span<const double> theta) {
    if (block.group_start + block.group_size > state.n_qubits()) {
        throw std::invalid_argument("apply_fused_unitary: block outside register");
    }
    BatchedState<T> out(state.n_qubits(), state.batch());
    const BlockUnitary u = compose_block_unitary(block, theta);
    apply_block_unitary_kernel(state.components().data(), out.components().data(),
                               state.n_qubits(), state.batch(), u, block.group_start,
                               block.group_size);
    return out;
}

template <class T>
BatchedState<T> apply_fused_cz(const BatchedState<T> &state, const FusedCZBlock &block) {
    BatchedState<T> out(state.n_qubits(), state.batch());
    apply_cz_kernel(state.components().data(), out.components().data(), state.n_qubits(),
                    state.batch(), block.masks);
    return out;
}

template <class T>
BatchedState<T> apply_fused_cnot(const BatchedState<T> &state,
                                 const FusedCNOTBlock &block) {
    BatchedState<T> out(state.n_qubits(), state.batch());
    apply_cnot_kernel(state.components().data(), out.components().data(),
                      state.n_qubits(), state.batch(), block, /*reversed=*/false);
    return out;
}

template <class T>
BatchedState<T> apply_fused_op(const BatchedState<T> &state, const FusedOp &op,
                               std::span<const double> theta) {
    BatchedState<T> out(state.n_qubits(), state.batch());
    apply_op_kernel(state, out, op, theta);
    return out;
}

template <class T>
std::vector<double> expectation(const BatchedState<T> &state, const PauliString &pauli) {
    check_shape(state, pauli.n_qubits);
    std::vector<double> out;
    expectation_kernel(state.components().data(), state.n_qubits(), state.batch(), pauli,
                       out);
    return out;
}

template <class T>
BatchedState<T> seed_adjoint(const BatchedState<T> &state, const PauliString &pauli) {
    check_shape(state, pauli.n_qubits);
    BatchedState<T> out(state.n_qubits(), state.batch());
    seed_adjoint_kernel(state.components().data(), out.components().data(),
                        state.n_qubits(), state.batch(), pauli);
    return out;
}

template <class T>
BlockBackwardResult<T> backward_block(const BatchedState<T> &psi_out,
                                      const BatchedState<T> &lambda_out,
                                      const FusedUnitaryBlock &block,
                                      std::span<const double> theta) {
    if (psi_out.n_qubits() != lambda_out.n_qubits() ||
        psi_out.batch() != lambda_out.batch()) {
        throw std::invalid_argument("backward_block: state/adjoint shape mismatch");
    }
    BlockBackwardResult<T> result{BatchedState<T>(psi_out.n_qubits(), psi_out.batch()),
                                  BatchedState<T>(psi_out.n_qubits(), psi_out.batch()),
                                  {}};
    const auto coef = constituent_coefs<T>(block, theta);
    std::vector<double> partials;
    block_backward_kernel(psi_out.components().data(), lambda_out.components().data(),
                          result.psi_in.components().data(),
                          result.lambda_in.components().data(), psi_out.n_qubits(),
                          psi_out.batch(), block.group_start, block.group_size, coef,
                          partials);
    result.gradient = combine_partials(partials, coef.size());
    return result;
}

template <class T>
BatchedState<T> backward_constant(const BatchedState<T> &lambda, const FusedOp &op) {
    BatchedState<T> out(lambda.n_qubits(), lambda.batch());
    if (const auto *cz = std::get_if<FusedCZBlock>(&op)) {
        apply_cz_kernel(lambda.components().data(), out.components().data(),
                        lambda.n_qubits(), lambda.batch(), cz->masks);
    } else if (const auto *cnot = std::get_if<FusedCNOTBlock>(&op)) {
        apply_cnot_kernel(lambda.components().data(), out.components().data(),
                          lambda.n_qubits(), lambda.batch(), *cnot, /*reversed=*/true);
    } else {
        throw std::invalid_argument("backward_constant: op is a variational block");
    }
    return out;
}

template <class T>
void forward_range(const FusedCircuit &fused, std::size_t op_begin, std::size_t op_end,
                   BatchedState<T> &psi, std::span<const double> theta, StorageMode mode,
                   StateLedger<T> *ledger, RunStats &stats, MemoryAccountant *accountant) {
    check_shape(psi, fused.n_qubits);
    if (ledger != nullptr) {
        ledger->mode = mode;
    }
    BatchedState<T> scratch(psi.n_qubits(), psi.batch());
    for (std::size_t i = op_begin; i < op_end; ++i) {
        apply_op_kernel(psi, scratch, fused.ops[i], theta);
        std::swap(psi, scratch);
        ++stats.forward_traversals;
        if (ledger != nullptr) {
            ++ledger->traversals;
            if (std::holds_alternative<FusedUnitaryBlock>(fused.ops[i])) {
                store_ledger_entry(*ledger, i, psi, accountant);
            }
        }
    }
}

template <class T>
void backward_range(const FusedCircuit &fused, std::size_t op_begin, std::size_t op_end,
                    StateLedger<T> &ledger, std::size_t &entry_cursor,
                    BatchedState<T> &lambda, std::span<const double> theta,
                    std::span<double> gradient, RunStats &stats) {
    BatchedState<T> lambda_next(lambda.n_qubits(), lambda.batch());
    BatchedState<T> psi_scratch(lambda.n_qubits(), lambda.batch());
    std::vector<T> widen_scratch;
    std::vector<double> partials;
    for (std::size_t i = op_end; i-- > op_begin;) {
        const FusedOp &op = fused.ops[i];
        if (const auto *block = std::get_if<FusedUnitaryBlock>(&op)) {
            if (entry_cursor == 0) {
                throw std::logic_error("backward_range: ledger exhausted");
            }
            const auto &entry = ledger.entries[--entry_cursor];
            if (entry.op_index != i) {
                throw std::logic_error("backward_range: ledger out of step");
            }
            const T *psi_out = ledger_entry_components(ledger, entry, widen_scratch);
            const auto coef = constituent_coefs<T>(*block, theta);
            block_backward_kernel(psi_out, lambda.components().data(),
                                  psi_scratch.components().data(),
                                  lambda_next.components().data(), lambda.n_qubits(),
                                  lambda.batch(), block->group_start, block->group_size,
                                  coef, partials);
            const auto sums = combine_partials(partials, coef.size());
            for (std::size_t k = 0; k < sums.size(); ++k) {
                gradient[block->constituents[k].param] += sums[k];
            }
        } else if (const auto *cz = std::get_if<FusedCZBlock>(&op)) {
            apply_cz_kernel(lambda.components().data(), lambda_next.components().data(),
                            lambda.n_qubits(), lambda.batch(), cz->masks);
        } else {
            apply_cnot_kernel(lambda.components().data(), lambda_next.components().data(),
                              lambda.n_qubits(), lambda.batch(),
                              std::get<FusedCNOTBlock>(op), /*reversed=*/true);
        }
        std::swap(lambda, lambda_next);
        ++stats.backward_traversals;
        ++ledger.traversals;
    }
}

template <class T>
ForwardResult<T> forward(const FusedCircuit &fused, const BatchedState<T> &psi0,
                         std::span<const double> theta, StorageMode mode,
                         MemoryAccountant *accountant) {
    ForwardResult<T> result{psi0, StateLedger<T>{}, RunStats{}};
    result.ledger.mode = mode;
    forward_range(fused, 0, fused.ops.size(), result.state, theta, mode, &result.ledger,
                  result.stats, accountant);
    result.stats.ledger_peak_units = result.ledger.units();
    return result;
}

template <class T>
GradientResult gradient(const FusedCircuit &fused, const BatchedState<T> &psi0,
                        std::span<const double> theta, const PauliString &pauli,
                        StorageMode mode, MemoryAccountant *accountant) {
    check_shape(psi0, pauli.n_qubits);
    if (theta.size() != fused.n_params) {
        throw std::invalid_argument("gradient: theta length mismatch");
    }

    BatchedState<T> psi = psi0;
    RunStats stats;
    StateLedger<T> ledger;
    ledger.mode = mode;
    forward_range(fused, 0, fused.ops.size(), psi, theta, mode, &ledger, stats,
                  accountant);

    GradientResult result;
    const std::vector<double> values = expectation(psi, pauli);
    ++stats.observable_traversals;
    ++ledger.traversals;
    for (const double v : values) {
        result.loss += v;
    }

    BatchedState<T> lambda = seed_adjoint(psi, pauli);
    ++stats.observable_traversals;
    ++ledger.traversals;

    result.gradient.assign(fused.n_params, 0.0);
    std::size_t cursor = ledger.entries.size();
    backward_range(fused, 0, fused.ops.size(), ledger, cursor, lambda, theta,
                   result.gradient, stats);

    stats.ledger_peak_units = ledger.units();
    if (accountant != nullptr) {
        accountant->release(ledger.units());
    }
    result.stats = stats;
    return result;
}

template <class T>
void naive_forward_range(const Circuit &circuit, std::size_t gate_begin,
                         std::size_t gate_end, BatchedState<T> &psi,
                         std::span<const double> theta, StateLedger<T> *ledger,
                         RunStats &stats, MemoryAccountant *accountant) {
    check_shape(psi, circuit.n_qubits());
    BatchedState<T> scratch(psi.n_qubits(), psi.batch());
    for (std::size_t i = gate_begin; i < gate_end; ++i) {
        const Gate &g = circuit.gates()[i];
        if (ledger != nullptr) {
            store_ledger_entry(*ledger, i, psi, accountant); // gate input
        }
        switch (g.kind) {
        case Gate::Kind::Rotation: {
            const double half = theta[g.param] / 2.0;
            apply_rotation_kernel(psi.components().data(), scratch.components().data(),
                                  psi.n_qubits(), psi.batch(), g.axis,
                                  static_cast<T>(std::cos(half)),
                                  static_cast<T>(std::sin(half)), g.q0);
            break;
        }
        case Gate::Kind::CZ: {
            const std::uint64_t mask =
                (std::uint64_t{1} << g.q0) | (std::uint64_t{1} << g.q1);
            apply_cz_kernel(psi.components().data(), scratch.components().data(),
                            psi.n_qubits(), psi.batch(), std::span(&mask, 1));
            break;
        }
        case Gate::Kind::CNOT: {
            FusedCNOTBlock single;
            single.gates.push_back(
                {std::uint64_t{1} << g.q0, std::uint64_t{1} << g.q1});
            apply_cnot_kernel(psi.components().data(), scratch.components().data(),
                              psi.n_qubits(), psi.batch(), single, /*reversed=*/false);
            break;
        }
        }
        std::swap(psi, scratch);
        ++stats.forward_traversals;
        if (ledger != nullptr) {
            ++ledger->traversals;
        }
    }
}

template <class T>
void naive_backward_range(const Circuit &circuit, std::size_t gate_begin,
                          std::size_t gate_end, StateLedger<T> &ledger,
                          std::size_t &entry_cursor, BatchedState<T> &lambda,
                          std::span<const double> theta, std::span<double> gradient,
                          RunStats &stats) {
    BatchedState<T> lambda_next(lambda.n_qubits(), lambda.batch());
    std::vector<double> partials;
    for (std::size_t i = gate_end; i-- > gate_begin;) {
        const Gate &g = circuit.gates()[i];
        if (entry_cursor == 0) {
            throw std::logic_error("naive_backward_range: ledger exhausted");
        }
        const auto &entry = ledger.entries[--entry_cursor];
        if (entry.op_index != i) {
            throw std::logic_error("naive_backward_range: ledger out of step");
        }
        switch (g.kind) {
        case Gate::Kind::Rotation: {
            const double half = theta[g.param] / 2.0;
            rotation_backward_kernel(entry.full.data(), lambda.components().data(),
                                     lambda_next.components().data(), lambda.n_qubits(),
                                     lambda.batch(), g.axis, std::cos(half),
                                     std::sin(half), g.q0, partials);
            double acc = 0.0;
            for (const double p : partials) {
                acc += p;
            }
            gradient[g.param] += acc;
            break;
        }
        case Gate::Kind::CZ: {
            const std::uint64_t mask =
                (std::uint64_t{1} << g.q0) | (std::uint64_t{1} << g.q1);
            apply_cz_kernel(lambda.components().data(), lambda_next.components().data(),
                            lambda.n_qubits(), lambda.batch(), std::span(&mask, 1));
            break;
        }
        case Gate::Kind::CNOT: {
            FusedCNOTBlock single;
            single.gates.push_back(
                {std::uint64_t{1} << g.q0, std::uint64_t{1} << g.q1});
            apply_cnot_kernel(lambda.components().data(), lambda_next.components().data(),
                              lambda.n_qubits(), lambda.batch(), single,
                              /*reversed=*/true);
            break;
        }
        }
        std::swap(lambda, lambda_next);
        ++stats.backward_traversals;
        ++ledger.traversals;
    }
}

template <class T>
GradientResult naive_gradient(const Circuit &circuit, const BatchedState<T> &psi0,
                              std::span<const double> theta, const PauliString &pauli,
                              MemoryAccountant *accountant) {
    check_shape(psi0, pauli.n_qubits);
    if (theta.size() != circuit.n_params()) {
        throw std::invalid_argument("naive_gradient: theta length mismatch");
    }

    BatchedState<T> psi = psi0;
    RunStats stats;
    StateLedger<T> ledger; // always full precision
    naive_forward_range(circuit, 0, circuit.gates().size(), psi, theta, &ledger, stats,
                        accountant);

    GradientResult result;
    const std::vector<double> values = expectation(psi, pauli);
    ++stats.observable_traversals;
    ++ledger.traversals;
    for (const double v : values) {
        result.loss += v;
    }

    BatchedState<T> lambda = seed_adjoint(psi, pauli);
    ++stats.observable_traversals;
    ++ledger.traversals;

    result.gradient.assign(circuit.n_params(), 0.0);
    std::size_t cursor = ledger.entries.size();
    naive_backward_range(circuit, 0, circuit.gates().size(), ledger, cursor, lambda,
                         theta, result.gradient, stats);

    stats.ledger_peak_units = ledger.units();
    if (accountant != nullptr) {
        accountant->release(ledger.units());
    }
    result.stats = stats;
    return result;
}

#define QFUSE_INSTANTIATE_ENGINE(T)                                                      \
    template struct StateLedger<T>;                                                      \
    template BatchedState<T> apply_fused_unitary<T>(                                     \
        const BatchedState<T> &, const FusedUnitaryBlock &, std::span<const double>);    \
    template BatchedState<T> apply_fused_cz<T>(const BatchedState<T> &,                  \
                                               const FusedCZBlock &);                    \
    template BatchedState<T> apply_fused_cnot<T>(const BatchedState<T> &,                \
                                                 const FusedCNOTBlock &);                \
    template BatchedState<T> apply_fused_op<T>(const BatchedState<T> &, const FusedOp &, \
                                               std::span<const double>);                 \
    template std::vector<double> expectation<T>(const BatchedState<T> &,                 \
                                                const PauliString &);                    \
    template BatchedState<T> seed_adjoint<T>(const BatchedState<T> &,                    \
                                             const PauliString &);                       \
    template BlockBackwardResult<T> backward_block<T>(                                   \
        const BatchedState<T> &, const BatchedState<T> &, const FusedUnitaryBlock &,     \
        std::span<const double>);                                                        \
    template BatchedState<T> backward_constant<T>(const BatchedState<T> &,               \
                                                  const FusedOp &);                      \
    template void forward_range<T>(const FusedCircuit &, std::size_t, std::size_t,       \
                                   BatchedState<T> &, std::span<const double>,           \
                                   StorageMode, StateLedger<T> *, RunStats &,            \
                                   MemoryAccountant *);                                  \
    template void backward_range<T>(const FusedCircuit &, std::size_t, std::size_t,      \
                                    StateLedger<T> &, std::size_t &, BatchedState<T> &,  \
                                    std::span<const double>, std::span<double>,          \
                                    RunStats &);                                         \
    template ForwardResult<T> forward<T>(const FusedCircuit &, const BatchedState<T> &,  \
                                         std::span<const double>, StorageMode,           \
                                         MemoryAccountant *);                            \
    template GradientResult gradient<T>(const FusedCircuit &, const BatchedState<T> &,   \
                                        std::span<const double>, const PauliString &,    \
                                        StorageMode, MemoryAccountant *);                \
    template void naive_forward_range<T>(const Circuit &, std::size_t, std::size_t,      \
                                         BatchedState<T> &, std::span<const double>,     \
                                         StateLedger<T> *, RunStats &,                   \
                                         MemoryAccountant *);                            \
    template void naive_backward_range<T>(const Circuit &, std::size_t, std::size_t,     \
                                          StateLedger<T> &, std::size_t &,               \
                                          BatchedState<T> &, std::span<const double>,    \
                                          std::span<double>, RunStats &);                \
    template GradientResult naive_gradient<T>(const Circuit &, const BatchedState<T> &,  \
                                              std::span<const double>,                   \
                                              const PauliString &, MemoryAccountant *);

QFUSE_INSTANTIATE_ENGINE(float)
QFUSE_INSTANTIATE_ENGINE(double)

#undef QFUSE_INSTANTIATE_ENGINE

} // namespace qfuse
