/* Copyright 2026 The fvb authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License. */

#ifndef FVB_CORE_HPP
#define FVB_CORE_HPP

#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fvb {

// Error taxonomy. The CLI maps these onto its exit-code contract:
//   usage_error -> 2, format_error -> 3, shape_error -> 4, state_error -> 5.
struct usage_error : std::runtime_error {
    explicit usage_error(const std::string& m) : std::runtime_error(m) {}
};
struct format_error : std::runtime_error {
    explicit format_error(const std::string& m) : std::runtime_error(m) {}
};
struct shape_error : std::runtime_error {
    explicit shape_error(const std::string& m) : std::runtime_error(m) {}
};
struct state_error : std::runtime_error {
    explicit state_error(const std::string& m) : std::runtime_error(m) {}
};

// Deterministic 64-bit generator (splitmix64). The standard <random>
// distributions are not bit-stable across library implementations, and
// golden fixtures require byte-identical parameter streams, so the whole
// project draws from this one.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [lo, hi) with 24 bits of mantissa entropy.
    float uniform(float lo, float hi) {
        const float u = static_cast<float>(next_u64() >> 40) * (1.0f / 16777216.0f);
        return lo + (hi - lo) * u;
    }

    uint64_t state() const { return state_; }

private:
    uint64_t state_;
};

// Worker-thread cap. Defaults to the hardware count, capped by FVB_THREADS.
// An explicit set_thread_cap() (e.g. from the bench harness, which times
// single-threaded by default) overrides both.
namespace detail {
inline int& thread_cap_slot() {
    static int cap = 0; // 0 = not yet resolved
    return cap;
}
} // namespace detail

inline int resolve_default_threads() {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    if (const char* env = std::getenv("FVB_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1 && cap < n) n = cap;
    }
    return n;
}

inline int thread_cap() {
    int& slot = detail::thread_cap_slot();
    if (slot == 0) slot = resolve_default_threads();
    return slot;
}

inline void set_thread_cap(int n) {
    detail::thread_cap_slot() = n < 1 ? 1 : n;
}

// Parallel loop over [0, count). Each index owns disjoint outputs and the
// per-index arithmetic is identical in serial and parallel runs, so results
// are bit-identical regardless of the thread count.
template <typename F>
void parallel_for(int64_t count, F&& fn) {
    const int threads = thread_cap();
    if (threads <= 1 || count < 2) {
        for (int64_t i = 0; i < count; ++i) fn(i);
        return;
    }
#ifdef _OPENMP
#pragma omp parallel for num_threads(threads) schedule(static)
    for (int64_t i = 0; i < count; ++i) fn(i);
#else
    for (int64_t i = 0; i < count; ++i) fn(i);
#endif
}

} // namespace fvb

#endif // FVB_CORE_HPP
