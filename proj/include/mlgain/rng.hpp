#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace mlgain {

// 64-bit finalizer used for seed derivation. Injective for fixed gamma,
// so distinct (master, index) pairs map to distinct stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t replication_seed(std::uint64_t master_seed, std::uint64_t replication) {
    return splitmix64(splitmix64(master_seed) ^ (replication * 0xd6e8feb86659fd93ULL + 0xa5a5a5a5a5a5a5a5ULL));
}

// Owned random stream; one per replication. Not thread-safe, never shared.
class RandomStream {
  public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return unif_(engine_); }

    double normal(double mean = 0.0, double stddev = 1.0) {
        return mean + stddev * norm_(engine_);
    }

    bool bernoulli(double p) { return unif_(engine_) < p; }

    // Uniform integer in [0, bound)
    std::uint64_t below(std::uint64_t bound) {
        return std::uniform_int_distribution<std::uint64_t>(0, bound - 1)(engine_);
    }

    // First k entries of a uniformly drawn k-subset, in sampled order
    // (partial Fisher-Yates over 0..n-1).
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

    std::mt19937_64& engine() { return engine_; }

  private:
    std::mt19937_64 engine_;
    std::uniform_real_distribution<double> unif_{0.0, 1.0};
    std::normal_distribution<double> norm_{0.0, 1.0};
};

inline std::vector<std::size_t> RandomStream::sample_without_replacement(std::size_t n, std::size_t k) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
        std::size_t j = i + static_cast<std::size_t>(below(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

}  // namespace mlgain
