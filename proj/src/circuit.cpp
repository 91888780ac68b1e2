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
#include "qfuse/circuit.hpp"

#include <bit>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "qfuse/bits.hpp"

namespace qfuse {

Circuit::Circuit(std::uint32_t n_qubits, std::vector<Gate> gates, std::uint32_t n_params)
    : n_qubits_(n_qubits), n_params_(n_params), gates_(std::move(gates)),
      theta_(n_params, 0.0) {
    if (n_qubits == 0) {
        throw std::invalid_argument("Circuit: qubit count must be >= 1");
    }
    std::vector<std::uint32_t> uses(n_params, 0);
    for (const Gate &g : gates_) {
        if (g.is_rotation()) {
            if (g.q0 >= n_qubits) {
                throw std::invalid_argument("Circuit: rotation target out of range");
            }
            if (g.param >= n_params) {
                throw std::invalid_argument("Circuit: parameter index out of range");
            }
            ++uses[g.param];
        } else {
            if (g.q0 >= n_qubits || g.q1 >= n_qubits) {
                throw std::invalid_argument("Circuit: two-qubit gate out of range");
            }
            if (g.q0 == g.q1) {
                throw std::invalid_argument("Circuit: control equals target");
            }
        }
    }
    for (std::uint32_t j = 0; j < n_params; ++j) {
        if (uses[j] != 1) {
            throw std::invalid_argument("Circuit: parameter " + std::to_string(j) +
                                        " used " + std::to_string(uses[j]) +
                                        " times (expected exactly once)");
        }
    }
}

Mat2 rotation_matrix(Axis axis, double theta) {
    const double c = std::cos(theta / 2.0);
    const double s = std::sin(theta / 2.0);
    switch (axis) {
    case Axis::X:
        return {{c, 0.0}, {0.0, -s}, {0.0, -s}, {c, 0.0}};
    case Axis::Y:
        return {{c, 0.0}, {-s, 0.0}, {s, 0.0}, {c, 0.0}};
    case Axis::Z:
    default:
        return {{c, -s}, {0.0, 0.0}, {0.0, 0.0}, {c, s}};
    }
}

Mat2 rotation_derivative(Axis axis, double theta) {
    const double a = -0.5 * std::sin(theta / 2.0); // I coefficient
    const double b = 0.5 * std::cos(theta / 2.0);  // coefficient of -iP
    switch (axis) {
    case Axis::X:
        return {{a, 0.0}, {0.0, -b}, {0.0, -b}, {a, 0.0}};
    case Axis::Y:
        return {{a, 0.0}, {-b, 0.0}, {b, 0.0}, {a, 0.0}};
    case Axis::Z:
    default:
        return {{a, -b}, {0.0, 0.0}, {0.0, 0.0}, {a, b}};
    }
}

Circuit build_hea(std::uint32_t n_qubits, std::uint32_t layers) {
    if (n_qubits < 2) {
        throw std::invalid_argument("build_hea: need at least 2 qubits");
    }
    if (layers == 0) {
        throw std::invalid_argument("build_hea: need at least 1 layer");
    }
    std::vector<Gate> gates;
    gates.reserve(static_cast<std::size_t>(layers) * (3u * n_qubits + n_qubits));
    std::uint32_t param = 0;
    for (std::uint32_t layer = 0; layer < layers; ++layer) {
        for (std::uint32_t q = 0; q < n_qubits; ++q) {
            gates.push_back(Gate::rotation(Axis::X, q, param++));
            gates.push_back(Gate::rotation(Axis::Y, q, param++));
            gates.push_back(Gate::rotation(Axis::Z, q, param++));
        }
        if (n_qubits == 2) {
            gates.push_back(Gate::cz(0, 1));
        } else {
            for (std::uint32_t q = 0; q < n_qubits; ++q) {
                gates.push_back(Gate::cz(q, (q + 1) % n_qubits));
            }
        }
    }
    return Circuit(n_qubits, std::move(gates), param);
}

Circuit build_hea_shape(std::uint32_t n_qubits, std::uint32_t layers,
                        std::uint32_t shape_qubits) {
    if (n_qubits < 3) {
        throw std::invalid_argument("build_hea_shape: need at least 3 qubits");
    }
    if (shape_qubits < 2) {
        throw std::invalid_argument("build_hea_shape: shape needs at least 2 qubits");
    }
    if (layers == 0) {
        throw std::invalid_argument("build_hea_shape: need at least 1 layer");
    }
    const std::uint32_t windows = n_qubits / 3;
    std::vector<Gate> gates;
    std::uint32_t param = 0;
    for (std::uint32_t layer = 0; layer < layers; ++layer) {
        for (std::uint32_t sq = 0; sq < shape_qubits; ++sq) {
            const std::uint32_t q = 3 * ((sq / 3) % windows) + (sq % 3);
            gates.push_back(Gate::rotation(Axis::X, q, param++));
            gates.push_back(Gate::rotation(Axis::Y, q, param++));
            gates.push_back(Gate::rotation(Axis::Z, q, param++));
        }
        const std::uint32_t entanglers = shape_qubits == 2 ? 1 : shape_qubits;
        for (std::uint32_t i = 0; i < entanglers; ++i) {
            gates.push_back(Gate::cz(i % n_qubits, (i + 1) % n_qubits));
        }
    }
    return Circuit(n_qubits, std::move(gates), param);
}

PauliString::PauliString(std::uint32_t n, std::uint64_t x, std::uint64_t z)
    : n_qubits(n), x_mask(x), z_mask(z) {
    if (n == 0 || n > 64) {
        throw std::invalid_argument("PauliString: unsupported qubit count");
    }
    const std::uint64_t width = n == 64 ? ~std::uint64_t{0}
                                        : (std::uint64_t{1} << n) - 1;
    if ((x & ~width) != 0 || (z & ~width) != 0) {
        throw std::invalid_argument("PauliString: mask wider than qubit count");
    }
    y_count = static_cast<std::uint32_t>(std::popcount(x & z));
}

PauliString parse_pauli(std::string_view label, std::uint32_t expected_n) {
    if (label.empty()) {
        throw std::invalid_argument("parse_pauli: empty label");
    }
    if (expected_n != 0 && label.size() != expected_n) {
        throw std::invalid_argument("parse_pauli: label length " +
                                    std::to_string(label.size()) +
                                    " does not match qubit count " +
                                    std::to_string(expected_n));
    }
    const auto n = static_cast<std::uint32_t>(label.size());
    std::uint64_t x = 0;
    std::uint64_t z = 0;
    for (std::uint32_t i = 0; i < n; ++i) {
        const std::uint64_t bit = std::uint64_t{1} << (n - 1 - i);
        switch (label[i]) {
        case 'I':
            break;
        case 'X':
            x |= bit;
            break;
        case 'Y':
            x |= bit;
            z |= bit;
            break;
        case 'Z':
            z |= bit;
            break;
        default:
            throw std::invalid_argument("parse_pauli: invalid character '" +
                                        std::string(1, label[i]) + "'");
        }
    }
    return PauliString(n, x, z);
}

std::string pauli_label(const PauliString &p) {
    std::string label(p.n_qubits, 'I');
    for (std::uint32_t i = 0; i < p.n_qubits; ++i) {
        const std::uint64_t bit = std::uint64_t{1} << (p.n_qubits - 1 - i);
        const bool x = (p.x_mask & bit) != 0;
        const bool z = (p.z_mask & bit) != 0;
        label[i] = x ? (z ? 'Y' : 'X') : (z ? 'Z' : 'I');
    }
    return label;
}

std::string repeated_ixyz_label(std::uint32_t n_qubits) {
    static constexpr char kCycle[] = {'I', 'X', 'Y', 'Z'};
    std::string label(n_qubits, 'I');
    for (std::uint32_t i = 0; i < n_qubits; ++i) {
        label[i] = kCycle[i % 4];
    }
    return label;
}

std::vector<double> random_parameters(std::size_t count, std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<double> theta(count);
    for (double &t : theta) {
        t = rng.next_unit() * 2.0 * 3.14159265358979323846;
    }
    return theta;
}

void write_circuit(std::ostream &os, const Circuit &circuit) {
    os << "qubits " << circuit.n_qubits() << '\n';
    os << "params " << circuit.n_params() << '\n';
    for (const Gate &g : circuit.gates()) {
        switch (g.kind) {
        case Gate::Kind::Rotation: {
            const char axis = g.axis == Axis::X ? 'x' : g.axis == Axis::Y ? 'y' : 'z';
            os << 'r' << axis << " q" << g.q0 << " p" << g.param << '\n';
            break;
        }
        case Gate::Kind::CZ:
            os << "cz q" << g.q0 << " q" << g.q1 << '\n';
            break;
        case Gate::Kind::CNOT:
            os << "cnot q" << g.q0 << " q" << g.q1 << '\n';
            break;
        }
    }
}

namespace {

std::uint32_t parse_ref(const std::string &token, char prefix, int line_no) {
    if (token.size() < 2 || token[0] != prefix) {
        throw std::invalid_argument("circuit line " + std::to_string(line_no) +
                                    ": expected '" + std::string(1, prefix) +
                                    "<index>', got '" + token + "'");
    }
    return static_cast<std::uint32_t>(std::stoul(token.substr(1)));
}

} // namespace

Circuit read_circuit(std::istream &is) {
    std::string line;
    std::uint32_t n_qubits = 0;
    std::uint32_t n_params = 0;
    std::vector<Gate> gates;
    bool have_qubits = false;
    bool have_params = false;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string head;
        if (!(ls >> head) || head[0] == '#') {
            continue;
        }
        if (head == "qubits") {
            ls >> n_qubits;
            have_qubits = true;
        } else if (head == "params") {
            ls >> n_params;
            have_params = true;
        } else if (head == "rx" || head == "ry" || head == "rz") {
            std::string q, p;
            if (!(ls >> q >> p)) {
                throw std::invalid_argument("circuit line " + std::to_string(line_no) +
                                            ": malformed rotation");
            }
            const Axis axis = head == "rx" ? Axis::X : head == "ry" ? Axis::Y : Axis::Z;
            gates.push_back(Gate::rotation(axis, parse_ref(q, 'q', line_no),
                                           parse_ref(p, 'p', line_no)));
        } else if (head == "cz" || head == "cnot") {
            std::string c, t;
            if (!(ls >> c >> t)) {
                throw std::invalid_argument("circuit line " + std::to_string(line_no) +
                                            ": malformed two-qubit gate");
            }
            const std::uint32_t control = parse_ref(c, 'q', line_no);
            const std::uint32_t target = parse_ref(t, 'q', line_no);
            gates.push_back(head == "cz" ? Gate::cz(control, target)
                                         : Gate::cnot(control, target));
        } else {
            throw std::invalid_argument("circuit line " + std::to_string(line_no) +
                                        ": unknown directive '" + head + "'");
        }
    }
    if (!have_qubits || !have_params) {
        throw std::invalid_argument("circuit: missing qubits/params header");
    }
    return Circuit(n_qubits, std::move(gates), n_params);
}

} // namespace qfuse
