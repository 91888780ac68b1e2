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

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace qfuse {

/// Tracks stored state vectors in whole/half units (full-precision ledger
/// entry or checkpoint input = 1, narrowed entry = 1/2). Working buffers
/// are not counted; updates happen at op boundaries only.
class MemoryAccountant {
  public:
    MemoryAccountant() = default;
    explicit MemoryAccountant(std::size_t state_vector_bytes)
        : sv_bytes_(state_vector_bytes) {}

    void add(double units) {
        current_ += units;
        if (current_ > peak_) {
            peak_ = current_;
        }
    }

    void release(double units) {
        current_ -= units;
        if (current_ < 0.0) {
            throw std::logic_error("MemoryAccountant: released more than stored");
        }
    }

    double current_units() const { return current_; }
    double peak_units() const { return peak_; }
    std::size_t state_vector_bytes() const { return sv_bytes_; }
    std::uint64_t peak_bytes() const {
        return static_cast<std::uint64_t>(std::llround(peak_ * static_cast<double>(sv_bytes_)));
    }

    void reset() {
        current_ = 0.0;
        peak_ = 0.0;
    }

  private:
    double current_ = 0.0;
    double peak_ = 0.0;
    std::size_t sv_bytes_ = 0;
};

} // namespace qfuse
