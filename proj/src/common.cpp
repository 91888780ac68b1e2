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
#include "qfuse/common.hpp"

#include <atomic>

namespace qfuse {

namespace {
std::atomic<std::size_t> g_alloc_limit{std::size_t{8} << 30};
} // namespace

const char *to_string(Precision p) {
    return p == Precision::Single ? "single" : "double";
}

Precision precision_from_string(const std::string &s) {
    if (s == "single") {
        return Precision::Single;
    }
    if (s == "double") {
        return Precision::Double;
    }
    throw std::invalid_argument("unknown precision: " + s);
}

std::size_t alloc_limit() { return g_alloc_limit.load(); }

void set_alloc_limit(std::size_t bytes) { g_alloc_limit.store(bytes); }

void check_allocation(std::size_t bytes) {
    if (bytes > alloc_limit()) {
        throw CapacityError("allocation of " + std::to_string(bytes) +
                            " bytes exceeds the configured limit of " +
                            std::to_string(alloc_limit()));
    }
}

} // namespace qfuse
