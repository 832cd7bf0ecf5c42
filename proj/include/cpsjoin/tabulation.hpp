#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string_view>

namespace cpsjoin {

/// SplitMix64 (Steele, Lea, Flood 2014; the seeding generator used by
/// xoshiro/xoroshiro). Every hash table in the library is filled from this
/// generator, so a seed fully determines all hash values on every platform.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

/// Stateless 64-bit finalizer (the SplitMix64 output function).
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives a child seed from a parent seed and a stream label.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t label) {
    return mix64(parent ^ mix64(label + 0x632be59bd9b4e019ULL));
}

/// FNV-1a over bytes, used to fold strings (dataset names etc.) into seeds.
constexpr std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Simple tabulation (Zobrist) hashing from 32-bit keys to 64-bit values,
/// using four 8-bit characters.
class Tabulation64 {
public:
    explicit Tabulation64(std::uint64_t seed = 0) : seed_(seed) {
        SplitMix64 gen(seed);
        for (auto& table : tables_)
            for (auto& entry : table) entry = gen.next();
    }

    std::uint64_t operator()(std::uint32_t key) const {
        return tables_[0][key & 0xff] ^ tables_[1][(key >> 8) & 0xff] ^
               tables_[2][(key >> 16) & 0xff] ^ tables_[3][key >> 24];
    }

    std::uint64_t seed() const { return seed_; }
    const std::array<std::array<std::uint64_t, 256>, 4>& tables() const { return tables_; }

    friend bool operator==(const Tabulation64& a, const Tabulation64& b) { return a.tables_ == b.tables_; }

private:
    std::array<std::array<std::uint64_t, 256>, 4> tables_{};
    std::uint64_t seed_;
};

/// 1-bit tabulation hash: the least significant bit of a Tabulation64.
class BitHash {
public:
    explicit BitHash(std::uint64_t seed = 0) : base_(seed) {}

    unsigned operator()(std::uint32_t key) const { return static_cast<unsigned>(base_(key) & 1U); }

    const Tabulation64& base() const { return base_; }

private:
    Tabulation64 base_;
};

/// Engine for sampling decisions (coordinate sampling, pooled sketches,
/// generators). std::mt19937_64 output is fully specified by the standard.
using Rng = std::mt19937_64;

/// Uniform integer in [0, n) by multiply-shift; n must be positive.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(rng()) * n) >> 64);
}

/// Uniform double in [0, 1) with 53 bits of precision.
inline double uniform_unit(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(Rng& rng, double p) {
    return p >= 1.0 || uniform_unit(rng) < p;
}

}  // namespace cpsjoin
