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
#include "qfuse/statevec.hpp"

#include <istream>
#include <ostream>

#include "qfuse/bits.hpp"

namespace qfuse {

template <class T>
BatchedState<T> new_basis_state(std::uint32_t n_qubits, std::uint32_t batch) {
    BatchedState<T> state(n_qubits, batch);
    for (std::uint32_t s = 0; s < batch; ++s) {
        state.sample_data(s)[0] = T(1);
    }
    return state;
}

template <class T>
BatchedState<T> new_random_state(std::uint32_t n_qubits, std::uint32_t batch,
                                 std::uint64_t seed) {
    BatchedState<T> state(n_qubits, batch);
    SplitMix64 rng(seed);
    std::vector<double> scratch(state.sample_stride());
    for (std::uint32_t s = 0; s < batch; ++s) {
        double norm_sq = 0.0;
        for (std::uint64_t x = 0; x < state.dim(); ++x) {
            const auto [re, im] = rng.next_normal_pair();
            scratch[2 * x] = re;
            scratch[2 * x + 1] = im;
            norm_sq += re * re + im * im;
        }
        const double inv_norm = 1.0 / std::sqrt(norm_sq);
        T *out = state.sample_data(s);
        for (std::size_t i = 0; i < scratch.size(); ++i) {
            out[i] = static_cast<T>(scratch[i] * inv_norm);
        }
    }
    return state;
}

template <class T> NarrowedState<T> narrow(const BatchedState<T> &state) {
    NarrowedState<T> out(state.n_qubits(), state.batch());
    const auto src = state.components();
    auto dst = out.components();
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = narrow_traits<T>::narrow(src[i]);
    }
    return out;
}

template <class T> BatchedState<T> widen(const NarrowedState<T> &state) {
    BatchedState<T> out(state.n_qubits(), state.batch());
    const auto src = state.components();
    auto dst = out.components();
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = narrow_traits<T>::widen(src[i]);
    }
    return out;
}

std::vector<std::pair<std::uint64_t, std::uint64_t>>
pair_indices(std::uint32_t n_qubits, std::uint32_t target) {
    if (target >= n_qubits) {
        throw std::out_of_range("pair_indices: target qubit out of range");
    }
    const std::uint64_t mask = std::uint64_t{1} << target;
    const std::uint64_t lo_mask = mask - 1;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> pairs;
    pairs.reserve(std::size_t{1} << (n_qubits - 1));
    for (std::uint64_t k = 0; k < (std::uint64_t{1} << (n_qubits - 1)); ++k) {
        const std::uint64_t i0 = pair_base(k, lo_mask);
        pairs.emplace_back(i0, i0 | mask);
    }
    return pairs;
}

namespace {

constexpr char kMagic[4] = {'Q', 'S', 'V', '1'};

template <class V> void write_le(std::ostream &os, V value) {
    unsigned char buf[sizeof(V)];
    for (std::size_t i = 0; i < sizeof(V); ++i) {
        buf[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff);
    }
    os.write(reinterpret_cast<const char *>(buf), sizeof(V));
}

template <class V> V read_le(std::istream &is) {
    unsigned char buf[sizeof(V)];
    is.read(reinterpret_cast<char *>(buf), sizeof(V));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(V); ++i) {
        v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    }
    return static_cast<V>(v);
}

bool host_is_little_endian() {
    const std::uint16_t probe = 1;
    unsigned char byte;
    std::memcpy(&byte, &probe, 1);
    return byte == 1;
}

} // namespace

template <class T> void dump_state(const BatchedState<T> &state, std::ostream &os) {
    os.write(kMagic, 4);
    write_le<std::uint8_t>(os, 1); // little-endian stream
    write_le<std::uint8_t>(os, state.precision() == Precision::Single ? 0 : 1);
    write_le<std::uint16_t>(os, 0);
    write_le<std::uint32_t>(os, state.n_qubits());
    write_le<std::uint32_t>(os, state.batch());
    const auto comps = state.components();
    if (host_is_little_endian()) {
        os.write(reinterpret_cast<const char *>(comps.data()),
                 static_cast<std::streamsize>(comps.size() * sizeof(T)));
    } else {
        for (const T v : comps) {
            if constexpr (sizeof(T) == 4) {
                std::uint32_t bits;
                std::memcpy(&bits, &v, 4);
                write_le<std::uint32_t>(os, bits);
            } else {
                std::uint64_t bits;
                std::memcpy(&bits, &v, 8);
                write_le<std::uint64_t>(os, bits);
            }
        }
    }
}

template <class T> BatchedState<T> load_state(std::istream &is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) {
        throw std::invalid_argument("load_state: bad magic");
    }
    const auto endian = read_le<std::uint8_t>(is);
    const auto precision_code = read_le<std::uint8_t>(is);
    read_le<std::uint16_t>(is);
    const auto n = read_le<std::uint32_t>(is);
    const auto batch = read_le<std::uint32_t>(is);
    if (endian != 1) {
        throw std::invalid_argument("load_state: unsupported endianness tag");
    }
    const std::uint8_t expected = std::is_same_v<T, float> ? 0 : 1;
    if (precision_code != expected) {
        throw std::invalid_argument("load_state: precision mismatch");
    }
    BatchedState<T> state(n, batch);
    auto comps = state.components();
    if (host_is_little_endian()) {
        is.read(reinterpret_cast<char *>(comps.data()),
                static_cast<std::streamsize>(comps.size() * sizeof(T)));
    } else {
        for (T &v : comps) {
            if constexpr (sizeof(T) == 4) {
                const std::uint32_t bits = read_le<std::uint32_t>(is);
                std::memcpy(&v, &bits, 4);
            } else {
                const std::uint64_t bits = read_le<std::uint64_t>(is);
                std::memcpy(&v, &bits, 8);
            }
        }
    }
    if (!is) {
        throw std::invalid_argument("load_state: truncated stream");
    }
    return state;
}

template BatchedState<float> new_basis_state<float>(std::uint32_t, std::uint32_t);
template BatchedState<double> new_basis_state<double>(std::uint32_t, std::uint32_t);
template BatchedState<float> new_random_state<float>(std::uint32_t, std::uint32_t,
                                                     std::uint64_t);
template BatchedState<double> new_random_state<double>(std::uint32_t, std::uint32_t,
                                                       std::uint64_t);
template NarrowedState<float> narrow<float>(const BatchedState<float> &);
template NarrowedState<double> narrow<double>(const BatchedState<double> &);
template BatchedState<float> widen<float>(const NarrowedState<float> &);
template BatchedState<double> widen<double>(const NarrowedState<double> &);
template void dump_state<float>(const BatchedState<float> &, std::ostream &);
template void dump_state<double>(const BatchedState<double> &, std::ostream &);
template BatchedState<float> load_state<float>(std::istream &);
template BatchedState<double> load_state<double>(std::istream &);

} // namespace qfuse
