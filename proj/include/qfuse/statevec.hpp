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
#include <cstring>
#include <iosfwd>
#include <span>
#include <type_traits>
#include <utility>
#include <vector>

#include "qfuse/common.hpp"

namespace qfuse {

/// bfloat16: 8-bit exponent (same range as float), 8-bit significand.
struct bfloat16 {
    std::uint16_t bits = 0;
    friend bool operator==(bfloat16, bfloat16) = default;
};

/// Round-to-nearest-even float -> bfloat16. Overflow rounds to infinity,
/// NaN stays NaN (quieted).
inline bfloat16 narrow_to_bf16(float v) {
    std::uint32_t u;
    std::memcpy(&u, &v, 4);
    if ((u & 0x7fffffffu) > 0x7f800000u) {
        return bfloat16{static_cast<std::uint16_t>((u >> 16) | 0x0040u)};
    }
    const std::uint32_t rounded = u + 0x7fffu + ((u >> 16) & 1u);
    return bfloat16{static_cast<std::uint16_t>(rounded >> 16)};
}

/// Exact embedding bfloat16 -> float.
inline float widen_bf16(bfloat16 b) {
    const std::uint32_t u = static_cast<std::uint32_t>(b.bits) << 16;
    float f;
    std::memcpy(&f, &u, 4);
    return f;
}

/// Half-width storage format paired with each compute precision:
/// bfloat16 for float compute, float for double compute.
template <class T> struct narrow_traits;

template <> struct narrow_traits<float> {
    using type = bfloat16;
    static type narrow(float v) { return narrow_to_bf16(v); }
    static float widen(type v) { return widen_bf16(v); }
};

template <> struct narrow_traits<double> {
    using type = float;
    static type narrow(double v) { return static_cast<float>(v); }
    static double widen(type v) { return static_cast<double>(v); }
};

template <class T> using narrow_t = typename narrow_traits<T>::type;

/// A batch of state vectors over the same qubit count.
///
/// Amplitudes are stored as interleaved (real, imag) component pairs in
/// basis-index order, one contiguous block per sample. Component (s, x)
/// lives at offsets s*sample_stride() + 2*x (+1 for the imaginary part).
template <class T> class BatchedState {
    static_assert(std::is_floating_point_v<T>);

  public:
    BatchedState(std::uint32_t n_qubits, std::uint32_t batch)
        : n_qubits_(n_qubits), batch_(batch) {
        if (n_qubits == 0) {
            throw std::invalid_argument("BatchedState: qubit count must be >= 1");
        }
        if (batch == 0) {
            throw std::invalid_argument("BatchedState: batch must be >= 1");
        }
        if (n_qubits > 40) {
            throw CapacityError("BatchedState: qubit count above supported range");
        }
        check_allocation(bytes(n_qubits, batch));
        amplitudes_.assign((std::size_t{2} << n_qubits) * batch, T(0));
    }

    static std::size_t bytes(std::uint32_t n_qubits, std::uint32_t batch) {
        return (std::size_t{2} << n_qubits) * batch * sizeof(T);
    }

    std::uint32_t n_qubits() const { return n_qubits_; }
    std::uint32_t batch() const { return batch_; }
    std::uint64_t dim() const { return std::uint64_t{1} << n_qubits_; }
    std::size_t sample_stride() const { return std::size_t{2} << n_qubits_; }
    Precision precision() const {
        return std::is_same_v<T, float> ? Precision::Single : Precision::Double;
    }

    std::span<T> components() { return amplitudes_; }
    std::span<const T> components() const { return amplitudes_; }
    T *sample_data(std::uint32_t s) {
        return amplitudes_.data() + s * sample_stride();
    }
    const T *sample_data(std::uint32_t s) const {
        return amplitudes_.data() + s * sample_stride();
    }

    std::complex<T> amp(std::uint32_t s, std::uint64_t x) const {
        const T *p = sample_data(s) + 2 * x;
        return {p[0], p[1]};
    }
    void set_amp(std::uint32_t s, std::uint64_t x, std::complex<T> v) {
        T *p = sample_data(s) + 2 * x;
        p[0] = v.real();
        p[1] = v.imag();
    }

    /// Euclidean norm of one sample, accumulated in double.
    double sample_norm(std::uint32_t s) const {
        const T *p = sample_data(s);
        double acc = 0.0;
        for (std::size_t i = 0; i < sample_stride(); ++i) {
            acc += static_cast<double>(p[i]) * static_cast<double>(p[i]);
        }
        return std::sqrt(acc);
    }

    friend bool operator==(const BatchedState &, const BatchedState &) = default;

  private:
    std::uint32_t n_qubits_;
    std::uint32_t batch_;
    std::vector<T> amplitudes_;
};

/// Same shape as BatchedState, components held in the half-width format.
template <class T> class NarrowedState {
  public:
    NarrowedState(std::uint32_t n_qubits, std::uint32_t batch)
        : n_qubits_(n_qubits), batch_(batch),
          components_((std::size_t{2} << n_qubits) * batch) {}

    std::uint32_t n_qubits() const { return n_qubits_; }
    std::uint32_t batch() const { return batch_; }
    std::span<narrow_t<T>> components() { return components_; }
    std::span<const narrow_t<T>> components() const { return components_; }

  private:
    std::uint32_t n_qubits_;
    std::uint32_t batch_;
    std::vector<narrow_t<T>> components_;
};

/// All samples set to |0...0>.
template <class T>
BatchedState<T> new_basis_state(std::uint32_t n_qubits, std::uint32_t batch);

/// Every component standard-normal from a SplitMix64 -> Box-Muller stream
/// (one stream for the whole batch, samples in order, two draws per
/// amplitude), then each sample normalized to unit norm. Generation and
/// normalization run in double; components are cast to T at the end, so a
/// given (seed, n, batch, precision) always produces the same state.
template <class T>
BatchedState<T> new_random_state(std::uint32_t n_qubits, std::uint32_t batch,
                                 std::uint64_t seed);

template <class T> NarrowedState<T> narrow(const BatchedState<T> &state);
template <class T> BatchedState<T> widen(const NarrowedState<T> &state);

/// All 2^(n-1) index pairs differing only in bit t, i0 with bit t clear,
/// in ascending i0 order. Intended for tests and small n.
std::vector<std::pair<std::uint64_t, std::uint64_t>>
pair_indices(std::uint32_t n_qubits, std::uint32_t target);

/// Raw binary dump: 12-byte header (magic "QSV1", endianness tag,
/// precision code, n, batch) followed by the component stream,
/// little-endian.
template <class T> void dump_state(const BatchedState<T> &state, std::ostream &os);
template <class T> BatchedState<T> load_state(std::istream &is);

} // namespace qfuse
