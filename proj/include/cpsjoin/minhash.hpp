#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cpsjoin/common.hpp"
#include "cpsjoin/tabulation.hpp"

namespace cpsjoin {

/// h(x) = argmin_{j in x} g(j) for a tabulation hash g. Ties in g are
/// broken towards the smaller token so both sides of a pair agree.
inline std::uint32_t minhash(const Tabulation64& fn, TokenView x) {
    if (x.empty()) throw Error(ErrorCode::EmptySet, "minhash of an empty set");
    std::uint32_t best = x[0];
    std::uint64_t best_hash = fn(best);
    for (std::size_t i = 1; i < x.size(); ++i) {
        const std::uint64_t h = fn(x[i]);
        if (h < best_hash || (h == best_hash && x[i] < best)) {
            best_hash = h;
            best = x[i];
        }
    }
    return best;
}

/// t independent MinHash functions with seeds derived from one master seed.
class MinHashFamily {
public:
    static constexpr std::size_t kDefaultLength = 128;

    explicit MinHashFamily(std::size_t t = kDefaultLength, std::uint64_t master_seed = 0)
        : master_seed_(master_seed) {
        if (t == 0) throw Error(ErrorCode::InvalidArgument, "signature length must be at least 1");
        fns_.reserve(t);
        for (std::size_t i = 0; i < t; ++i) fns_.emplace_back(derive_seed(master_seed, i));
    }

    std::size_t size() const { return fns_.size(); }
    std::uint64_t master_seed() const { return master_seed_; }
    const Tabulation64& operator[](std::size_t i) const { return fns_[i]; }

private:
    std::vector<Tabulation64> fns_;
    std::uint64_t master_seed_;
};

/// The t MinHash values of one set; position i holds h_i(x).
struct Signature {
    std::vector<std::uint32_t> values;

    std::size_t size() const { return values.size(); }
    friend bool operator==(const Signature&, const Signature&) = default;
};

/// Writes h_0(x) .. h_{t-1}(x) into out (out.size() == fam.size()).
inline void embed_into(const MinHashFamily& fam, TokenView x, std::span<std::uint32_t> out) {
    if (x.empty()) throw Error(ErrorCode::EmptySet, "cannot embed an empty set");
    for (std::size_t i = 0; i < fam.size(); ++i) out[i] = minhash(fam[i], x);
}

inline Signature embed(const MinHashFamily& fam, TokenView x) {
    Signature sig;
    sig.values.resize(fam.size());
    embed_into(fam, x, sig.values);
    return sig;
}

/// Fraction of positions at which two equal-length signatures agree.
inline double bb_signature_similarity(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
    if (a.size() != b.size() || a.empty())
        throw Error(ErrorCode::SignatureLengthMismatch, "signatures of length " + std::to_string(a.size()) +
                                                            " and " + std::to_string(b.size()));
    std::size_t same = 0;
    for (std::size_t i = 0; i < a.size(); ++i) same += (a[i] == b[i]);
    return static_cast<double>(same) / static_cast<double>(a.size());
}

inline double bb_signature_similarity(const Signature& a, const Signature& b) {
    return bb_signature_similarity(std::span<const std::uint32_t>(a.values), std::span<const std::uint32_t>(b.values));
}

}  // namespace cpsjoin
