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

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace qfuse {

inline constexpr const char *kVersion = "0.1.0";

enum class Precision { Single, Double };

const char *to_string(Precision p);
Precision precision_from_string(const std::string &s);

/// Thrown when a state-vector allocation (or a ledger growing past the
/// configured limit) would exceed the process-wide allocation budget.
class CapacityError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Process-wide allocation budget for amplitude buffers (default 8 GiB).
std::size_t alloc_limit();
void set_alloc_limit(std::size_t bytes);

/// Throws CapacityError if `bytes` exceeds the configured limit.
void check_allocation(std::size_t bytes);

} // namespace qfuse
