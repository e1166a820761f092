#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace jers {

#ifdef JERS_REAL64
using real = double;
#else
using real = float;
#endif

// Error taxonomy. The C API maps these onto status codes and the CLI onto
// exit codes, so every throwing path in the core uses one of them.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ValueError : public Error { public: using Error::Error; };
class DimensionError : public Error { public: using Error::Error; };
class NumericError : public Error { public: using Error::Error; };
class ConfigError : public Error { public: using Error::Error; };
class FormatError : public Error { public: using Error::Error; };
class SingularityError : public Error { public: using Error::Error; };

// SplitMix64 generator. One word of state, bit-stable across platforms,
// trivially serialized into checkpoints so interrupted runs resume exactly.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller without a cached spare so the state stays a single word.
    double normal();

    // [0, n)
    int64_t uniform_int(int64_t n);

    uint64_t state() const { return state_; }
    void set_state(uint64_t s) { state_ = s; }

private:
    uint64_t state_;
};

// Kernel parallelism cap from JERS_THREADS (default 1). Kernels only split
// work over disjoint output ranges with a fixed per-output accumulation
// order, so results are identical at any thread count.
int thread_cap();

// Runs body(begin, end) over contiguous chunks of [0, n).
void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& body);

} // namespace jers
