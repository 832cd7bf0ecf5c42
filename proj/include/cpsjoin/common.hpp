#pragma once

#include <algorithm>
#include <compare>
#include <iterator>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cpsjoin {

/// One input record: ascending, duplicate-free 32-bit tokens.
using TokenSet = std::vector<std::uint32_t>;
using TokenView = std::span<const std::uint32_t>;

using RecordId = std::uint32_t;

/// Unordered pair of record ids, stored with first < second.
struct RecordPair {
    RecordId first = 0;
    RecordId second = 0;

    RecordPair() = default;
    RecordPair(RecordId a, RecordId b) : first(a < b ? a : b), second(a < b ? b : a) {}

    auto operator<=>(const RecordPair&) const = default;
};

/// Sorted, duplicate-free list of result pairs.
using ResultPairSet = std::vector<RecordPair>;

enum class ErrorCode {
    EmptySet,
    SignatureLengthMismatch,
    SketchLengthMismatch,
    EmptyBucket,
    RequiresCanonicalOrder,
    TokenOverflow,
    ParseError,
    CapacityExceeded,
    InvalidArgument,
    IoError,
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::EmptySet: return "EmptySet";
        case ErrorCode::SignatureLengthMismatch: return "SignatureLengthMismatch";
        case ErrorCode::SketchLengthMismatch: return "SketchLengthMismatch";
        case ErrorCode::EmptyBucket: return "EmptyBucket";
        case ErrorCode::RequiresCanonicalOrder: return "RequiresCanonicalOrder";
        case ErrorCode::TokenOverflow: return "TokenOverflow";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::CapacityExceeded: return "CapacityExceeded";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Instrumentation shared by all join algorithms.
///
/// pre_candidates counts every pair handed to a brute-force comparison,
/// candidates the ones surviving the size and sketch filters, results the
/// pairs that passed exact verification.
struct JoinStats {
    std::uint64_t pre_candidates = 0;
    std::uint64_t candidates = 0;
    std::uint64_t results = 0;
    std::uint32_t max_depth = 0;
    double preprocess_seconds = 0.0;
    double join_seconds = 0.0;

    JoinStats& operator+=(const JoinStats& other) {
        pre_candidates += other.pre_candidates;
        candidates += other.candidates;
        results += other.results;
        if (other.max_depth > max_depth) max_depth = other.max_depth;
        preprocess_seconds += other.preprocess_seconds;
        join_seconds += other.join_seconds;
        return *this;
    }
};

struct JoinOutput {
    ResultPairSet pairs;
    JoinStats stats;
};

/// Sorts and removes duplicate pairs in place.
inline void dedup_pairs(std::vector<RecordPair>& pairs) {
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
}

/// Merges a batch of (possibly duplicated) pairs into an already sorted set.
inline void merge_into(ResultPairSet& into, std::vector<RecordPair> batch) {
    dedup_pairs(batch);
    ResultPairSet merged;
    merged.reserve(into.size() + batch.size());
    std::set_union(into.begin(), into.end(), batch.begin(), batch.end(), std::back_inserter(merged));
    into = std::move(merged);
}

/// |found ∩ exact| / |exact|, defined as 1 when the exact result is empty.
inline double recall(const ResultPairSet& found, const ResultPairSet& exact) {
    if (exact.empty()) return 1.0;
    std::size_t hits = 0;
    auto f = found.begin();
    for (const auto& p : exact) {
        while (f != found.end() && *f < p) ++f;
        if (f != found.end() && *f == p) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(exact.size());
}

}  // namespace cpsjoin
