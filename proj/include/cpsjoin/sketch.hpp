#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "cpsjoin/common.hpp"
#include "cpsjoin/minhash.hpp"
#include "cpsjoin/tabulation.hpp"

namespace cpsjoin {

/// 1-bit minwise hashing (Li and König). Bit i of a sketch is
/// g_i(h_i(x)) where h_i is a MinHash function and g_i a 1-bit tabulation
/// hash. Bit i lives in word i / 64 at bit position i % 64.
class SketchFamily {
public:
    static constexpr std::size_t kDefaultWords = 8;

    explicit SketchFamily(std::size_t words = kDefaultWords, std::uint64_t master_seed = 0)
        : words_(words), master_seed_(master_seed) {
        if (words == 0) throw Error(ErrorCode::InvalidArgument, "sketch must have at least one word");
        const std::size_t b = bits();
        minhash_fns_.reserve(b);
        bit_fns_.reserve(b);
        for (std::size_t i = 0; i < b; ++i) {
            minhash_fns_.emplace_back(derive_seed(master_seed, 2 * i));
            bit_fns_.emplace_back(derive_seed(master_seed, 2 * i + 1));
        }
    }

    std::size_t words() const { return words_; }
    std::size_t bits() const { return 64 * words_; }
    std::uint64_t master_seed() const { return master_seed_; }

    void build_into(TokenView x, std::span<std::uint64_t> out) const {
        if (x.empty()) throw Error(ErrorCode::EmptySet, "cannot sketch an empty set");
        for (std::size_t w = 0; w < words_; ++w) {
            std::uint64_t word = 0;
            for (std::size_t j = 0; j < 64; ++j) {
                const std::size_t i = 64 * w + j;
                word |= static_cast<std::uint64_t>(bit_fns_[i](minhash(minhash_fns_[i], x))) << j;
            }
            out[w] = word;
        }
    }

private:
    std::size_t words_;
    std::uint64_t master_seed_;
    std::vector<Tabulation64> minhash_fns_;
    std::vector<BitHash> bit_fns_;
};

struct Sketch {
    std::vector<std::uint64_t> words;

    bool bit(std::size_t i) const { return (words[i / 64] >> (i % 64)) & 1U; }
    friend bool operator==(const Sketch&, const Sketch&) = default;
};

inline Sketch build_sketch(const SketchFamily& fam, TokenView x) {
    Sketch s;
    s.words.resize(fam.words());
    fam.build_into(x, s.words);
    return s;
}

/// Number of differing bits, word by word with popcount.
inline std::size_t hamming_distance(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
    std::size_t h = 0;
    for (std::size_t w = 0; w < a.size(); ++w) h += static_cast<std::size_t>(std::popcount(a[w] ^ b[w]));
    return h;
}

/// Ĵ = 1 - 2H/b, an unbiased estimate of the Jaccard similarity.
inline double estimate_similarity(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
    if (a.size() != b.size() || a.empty())
        throw Error(ErrorCode::SketchLengthMismatch,
                    "sketches of " + std::to_string(a.size()) + " and " + std::to_string(b.size()) + " words");
    const double bits = 64.0 * static_cast<double>(a.size());
    return 1.0 - 2.0 * static_cast<double>(hamming_distance(a, b)) / bits;
}

inline double estimate_similarity(const Sketch& a, const Sketch& b) {
    return estimate_similarity(std::span<const std::uint64_t>(a.words), std::span<const std::uint64_t>(b.words));
}

/// Estimation cutoff λ̂ such that Pr[Ĵ < λ̂ | J >= λ] <= δ.
///
/// From Hoeffding over b independent match indicators:
/// Pr[Ĵ < J - s] <= exp(-b s² / 2), solved for s at probability δ.
inline double threshold(double lambda, std::size_t bits, double delta) {
    if (!(lambda > 0.0 && lambda <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "lambda must lie in (0,1]");
    if (!(delta > 0.0 && delta <= 1.0)) throw Error(ErrorCode::InvalidArgument, "delta must lie in (0,1]");
    if (bits == 0) throw Error(ErrorCode::InvalidArgument, "sketch must have at least one bit");
    const double slack = std::sqrt(2.0 * std::log(1.0 / delta) / static_cast<double>(bits));
    return std::max(-1.0, lambda - slack);
}

/// Sketch of a collection: bit i is copied from bit i of a uniformly drawn
/// (with replacement) member. `row(k)` returns the sketch of member k.
template <class RowFn>
void pooled_sketch_into(std::size_t count, RowFn&& row, Rng& rng, std::span<std::uint64_t> out) {
    if (count == 0) throw Error(ErrorCode::EmptyBucket, "pooled sketch of an empty collection");
    for (std::size_t w = 0; w < out.size(); ++w) {
        std::uint64_t word = 0;
        for (std::size_t j = 0; j < 64; ++j) {
            const std::span<const std::uint64_t> sample = row(uniform_index(rng, count));
            word |= sample[w] & (std::uint64_t{1} << j);
        }
        out[w] = word;
    }
}

inline Sketch pooled_sketch(std::span<const Sketch> members, Rng& rng) {
    if (members.empty()) throw Error(ErrorCode::EmptyBucket, "pooled sketch of an empty collection");
    Sketch s;
    s.words.resize(members[0].words.size());
    pooled_sketch_into(
        members.size(), [&](std::size_t k) { return std::span<const std::uint64_t>(members[k].words); }, rng,
        s.words);
    return s;
}

}  // namespace cpsjoin
