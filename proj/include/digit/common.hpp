#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace digit {

inline constexpr const char* kVersion = "0.1.0";

// Thrown when a file cannot be read/written or its contents are malformed.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when a config file or CLI option is invalid.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when an experiment's built-in ordering/consistency gate fails.
struct InvariantError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// FNV-1a, used for config hashes and checkpoint fingerprints.
inline uint64_t fnv1a64(const void* data, size_t len, uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

std::string hex64(uint64_t v);

// Process-wide worker count. 1 (the default) means fully sequential.
void set_thread_count(int n);
int thread_count();

// Runs fn(i) for i in [0, n). Work is split into contiguous chunks so that
// writes to disjoint per-index slots stay deterministic regardless of the
// thread count. Reductions must be done by the caller in index order.
void parallel_for(int64_t n, const std::function<void(int64_t)>& fn);

}  // namespace digit
