#pragma once

#include <cstdint>
#include <random>

namespace asied {

// SplitMix64 step; used to decorrelate user seeds and derive replicate streams.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seeded random stream. One instance per chain / per simulated trial; never
// shared across threads. All draws go through this wrapper so a fixed seed
// reproduces every result bit for bit.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(splitmix64(seed)) {}

    // Index-derived stream for replicate i of a master seed.
    static std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index) {
        return splitmix64(master ^ splitmix64(index + 1));
    }

    std::uint64_t u64() { return gen_(); }

    double uniform() {
        return std::uniform_real_distribution<double>(0.0, 1.0)(gen_);
    }

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(gen_);
    }

    // Uniform over {0, ..., n-1}.
    int uniform_int(int n) {
        return std::uniform_int_distribution<int>(0, n - 1)(gen_);
    }

    bool bernoulli(double p) { return uniform() < p; }

    double normal(double mean, double sd) {
        return std::normal_distribution<double>(mean, sd)(gen_);
    }

    double gamma(double shape, double scale) {
        return std::gamma_distribution<double>(shape, scale)(gen_);
    }

    double beta(double a, double b) {
        const double x = gamma(a, 1.0);
        const double y = gamma(b, 1.0);
        return x / (x + y);
    }

    // sigma^2 ~ IG(shape, rate): reciprocal of a Gamma(shape, rate) draw.
    double inverse_gamma(double shape, double rate) {
        return rate / gamma(shape, 1.0);
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace asied
