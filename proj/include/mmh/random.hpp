#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mmh {

// Independent random stream for one simulated path. The stream is a pure
// function of (seed, stream_id), so results never depend on how paths are
// distributed over workers.
class PathStream {
public:
    PathStream(std::uint64_t seed, std::uint64_t stream_id)
    {
        std::seed_seq seq{static_cast<std::uint32_t>(seed),
                          static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream_id),
                          static_cast<std::uint32_t>(stream_id >> 32),
                          0x9e3779b9u};
        engine_.seed(seq);
    }

    // Uniform on [0, 1).
    double uniform() { return uniform_(engine_); }

    double normal() { return normal_(engine_); }

    // Exponential with the given rate by inverse CDF.
    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

private:
    std::mt19937_64 engine_;
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
    std::normal_distribution<double> normal_{0.0, 1.0};
};

// Decorrelated child seed (splitmix64 finalizer) for independent sub-runs.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt)
{
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace mmh
