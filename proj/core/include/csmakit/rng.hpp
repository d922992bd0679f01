#pragma once

#include <cstdint>
#include <random>

namespace csmakit {

// One reproducible random stream per node. Streams are derived from a
// (seed, stream id) pair so that simulations with the same seed replay the
// same per-node backoff draws regardless of how other nodes behave.
class RandomStream {
  public:
    RandomStream() : RandomStream(0, 0) {}

    RandomStream(std::uint64_t seed, std::uint64_t stream_id) {
        std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ull * (stream_id + 1));
        engine_.seed(mix(s));
    }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform integer in [0, bound), bound >= 1. Lemire's rejection method,
    // fully specified so results do not depend on the standard library.
    std::uint64_t next_below(std::uint64_t bound) {
        unsigned __int128 p = static_cast<unsigned __int128>(next_u64()) * bound;
        auto low = static_cast<std::uint64_t>(p);
        if (low < bound) {
            std::uint64_t threshold = (-bound) % bound;
            while (low < threshold) {
                p = static_cast<unsigned __int128>(next_u64()) * bound;
                low = static_cast<std::uint64_t>(p);
            }
        }
        return static_cast<std::uint64_t>(p >> 64);
    }

    // Uniform backoff draw from {1, ..., window}.
    int backoff_draw(int window) {
        return 1 + static_cast<int>(next_below(static_cast<std::uint64_t>(window)));
    }

    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::mt19937_64 engine_;
};

}  // namespace csmakit
