#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace aerial_twin {

/// Seed for a named stochastic subsystem. Streams for different names are
/// independent, so enabling one subsystem never shifts another's draws.
uint64_t derive_stream_seed(uint64_t scenario_seed, std::string_view subsystem);

class RngStream {
public:
    RngStream(uint64_t scenario_seed, std::string_view subsystem)
        : engine_(derive_stream_seed(scenario_seed, subsystem)) {}

    /// Uniform in [0, 1) with 53 random bits; identical across standard libraries.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    double normal(double mean, double stddev) {
        return std::normal_distribution<double>(mean, stddev)(engine_);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace aerial_twin
