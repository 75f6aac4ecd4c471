#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace diffudec {

// Deterministic seed derivation. Every independent random stream in the
// project is keyed by (master seed, string id [, position]) so that results
// do not depend on evaluation order or thread scheduling.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_key(std::uint64_t seed, std::string_view id) {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ splitmix64(seed);
    for (unsigned char c : id) {
        h ^= c;
        h *= 0x100000001b3ULL;  // FNV-1a
    }
    return splitmix64(h);
}

inline std::uint64_t hash_key(std::uint64_t seed, std::string_view id, std::uint64_t pos) {
    return splitmix64(hash_key(seed, id) ^ (0x9e3779b97f4a7c15ULL + pos));
}

inline std::mt19937_64 engine_for(std::uint64_t seed, std::string_view id) {
    return std::mt19937_64(hash_key(seed, id));
}

inline std::mt19937_64 engine_for(std::uint64_t seed, std::string_view id, std::uint64_t pos) {
    return std::mt19937_64(hash_key(seed, id, pos));
}

inline double beta_draw(std::mt19937_64& eng, double alpha, double beta) {
    std::gamma_distribution<double> ga(alpha, 1.0);
    std::gamma_distribution<double> gb(beta, 1.0);
    double x = ga(eng);
    double y = gb(eng);
    double s = x + y;
    if (s <= 0.0) return 0.5;  // both gammas underflowed; vanishing probability
    return x / s;
}

// Symmetric Dirichlet draw: normalized iid Gamma(concentration) vector.
inline std::vector<double> dirichlet_draw(std::mt19937_64& eng, std::size_t n, double concentration) {
    std::gamma_distribution<double> g(concentration, 1.0);
    std::vector<double> v(n);
    double total = 0.0;
    for (auto& x : v) {
        x = g(eng);
        total += x;
    }
    if (total <= 0.0) {
        // all draws underflowed (possible for very small concentration):
        // fall back to a single point mass at a uniformly chosen index
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        for (auto& x : v) x = 0.0;
        v[pick(eng)] = 1.0;
        return v;
    }
    for (auto& x : v) x /= total;
    return v;
}

// Inverse-CDF draw from an explicit distribution; walk order is the
// index order, so results are reproducible across platforms.
inline std::size_t categorical_draw(std::mt19937_64& eng, const std::vector<double>& probs) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    double u = u01(eng);
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return i;
    }
    return probs.size() - 1;
}

}  // namespace diffudec
