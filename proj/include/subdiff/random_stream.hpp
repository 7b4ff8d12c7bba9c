#pragma once

#include <cstdint>
#include <random>

namespace subdiff {

/// Mixes (master seed, stream index) into an engine seed. Distinct indices give
/// statistically independent streams; the mapping is fixed so runs reproduce.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t stream_index) noexcept;

/// Per-path source of randomness. Every draw a path needs goes through one of
/// these, so a path is a pure function of its seed.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed);

    static RandomStream for_path(std::uint64_t master_seed, std::uint64_t path_index) {
        return RandomStream(derive_seed(master_seed, path_index));
    }

    /// Uniform on the open interval (0, 1).
    double uniform();
    double uniform(double lo, double hi);
    double normal();
    double exponential();
    std::uint64_t poisson(double mean);

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_;
    std::exponential_distribution<double> exponential_;
};

}  // namespace subdiff
