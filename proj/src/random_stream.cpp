#include "subdiff/random_stream.hpp"

namespace subdiff {

namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t stream_index) noexcept {
    return splitmix64(splitmix64(master_seed) ^ (stream_index * 0xD1B54A32D192ED03ULL + 1));
}

RandomStream::RandomStream(std::uint64_t seed) : engine_(seed) {}

double RandomStream::uniform() {
    // 53-bit mantissa, shifted half a step off zero so the result is never 0 or 1.
    const auto bits = engine_() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double RandomStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double RandomStream::normal() { return normal_(engine_); }

double RandomStream::exponential() { return exponential_(engine_); }

std::uint64_t RandomStream::poisson(double mean) {
    if (!(mean > 0.0)) return 0;
    std::poisson_distribution<std::uint64_t> dist(mean);
    return dist(engine_);
}

}  // namespace subdiff
