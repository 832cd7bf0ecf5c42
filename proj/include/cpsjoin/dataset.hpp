#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cpsjoin/common.hpp"
#include "cpsjoin/tabulation.hpp"

namespace cpsjoin {

/// A pair of generated records with a target similarity and the exact
/// Jaccard similarity the generator actually produced.
struct PlantedPair {
    RecordId a = 0;
    RecordId b = 0;
    double target = 0.0;
    double realized = 0.0;
};

/// Preprocessed record collection.
///
/// In canonical form token ids are dense in [0, universe) and ordered by
/// ascending record frequency (ties by original id), each record is sorted,
/// and records are ordered by size and then lexicographically. Duplicate
/// records and records with fewer than two tokens have been removed.
struct Dataset {
    std::vector<TokenSet> records;
    std::vector<std::uint32_t> token_freq;
    std::uint32_t universe = 0;
    bool canonical = false;
    std::string provenance;
    std::vector<PlantedPair> planted;

    std::size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }

    std::uint64_t total_tokens() const {
        std::uint64_t n = 0;
        for (const auto& r : records) n += r.size();
        return n;
    }

    double avg_set_size() const {
        return records.empty() ? 0.0 : static_cast<double>(total_tokens()) / static_cast<double>(records.size());
    }

    double sets_per_token() const {
        return universe == 0 ? 0.0 : static_cast<double>(total_tokens()) / static_cast<double>(universe);
    }
};

/// Builds a canonical dataset from raw records. If `raw_to_canonical` is
/// given it receives, for every raw record, its canonical index or -1 when
/// the record was dropped. Duplicates map to the surviving copy.
inline Dataset canonicalize(std::vector<TokenSet> raw, std::vector<std::int64_t>* raw_to_canonical = nullptr) {
    for (auto& r : raw) {
        std::sort(r.begin(), r.end());
        r.erase(std::unique(r.begin(), r.end()), r.end());
    }

    // Deduplicate on the original token ids.
    std::vector<std::size_t> order(raw.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return raw[a] != raw[b] ? raw[a] < raw[b] : a < b;
    });
    std::vector<std::int64_t> raw_to_unique(raw.size(), -1);
    std::vector<std::size_t> unique_raw;
    for (std::size_t k = 0; k < order.size(); ++k) {
        const auto& rec = raw[order[k]];
        if (rec.size() < 2) continue;
        if (!unique_raw.empty() && raw[unique_raw.back()] == rec) {
            raw_to_unique[order[k]] = static_cast<std::int64_t>(unique_raw.size() - 1);
            continue;
        }
        raw_to_unique[order[k]] = static_cast<std::int64_t>(unique_raw.size());
        unique_raw.push_back(order[k]);
    }

    std::map<std::uint32_t, std::uint32_t> freq;
    for (std::size_t u : unique_raw)
        for (std::uint32_t tok : raw[u]) ++freq[tok];

    std::vector<std::pair<std::uint32_t, std::uint32_t>> by_freq;  // (freq, original id)
    by_freq.reserve(freq.size());
    for (const auto& [tok, f] : freq) by_freq.emplace_back(f, tok);
    std::sort(by_freq.begin(), by_freq.end());

    std::map<std::uint32_t, std::uint32_t> remap;
    Dataset ds;
    ds.token_freq.resize(by_freq.size());
    for (std::uint32_t i = 0; i < by_freq.size(); ++i) {
        remap[by_freq[i].second] = i;
        ds.token_freq[i] = by_freq[i].first;
    }
    ds.universe = static_cast<std::uint32_t>(by_freq.size());

    std::vector<TokenSet> remapped;
    remapped.reserve(unique_raw.size());
    for (std::size_t u : unique_raw) {
        TokenSet rec;
        rec.reserve(raw[u].size());
        for (std::uint32_t tok : raw[u]) rec.push_back(remap[tok]);
        std::sort(rec.begin(), rec.end());
        remapped.push_back(std::move(rec));
    }

    std::vector<std::size_t> final_order(remapped.size());
    std::iota(final_order.begin(), final_order.end(), 0);
    std::sort(final_order.begin(), final_order.end(), [&](std::size_t a, std::size_t b) {
        if (remapped[a].size() != remapped[b].size()) return remapped[a].size() < remapped[b].size();
        return remapped[a] < remapped[b];
    });
    std::vector<std::int64_t> unique_to_final(remapped.size());
    ds.records.reserve(remapped.size());
    for (std::size_t k = 0; k < final_order.size(); ++k) {
        unique_to_final[final_order[k]] = static_cast<std::int64_t>(k);
        ds.records.push_back(std::move(remapped[final_order[k]]));
    }

    if (raw_to_canonical) {
        raw_to_canonical->assign(raw.size(), -1);
        for (std::size_t i = 0; i < raw.size(); ++i)
            if (raw_to_unique[i] >= 0) (*raw_to_canonical)[i] = unique_to_final[raw_to_unique[i]];
    }
    ds.canonical = true;
    return ds;
}

/// Reads whitespace-separated decimal tokens, one record per line.
inline Dataset parse_records(std::istream& in, const std::string& source = "<stream>") {
    std::vector<TokenSet> raw;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        TokenSet rec;
        const char* p = line.data();
        const char* end = p + line.size();
        while (p < end) {
            if (*p == ' ' || *p == '\t') {
                ++p;
                continue;
            }
            std::uint64_t value = 0;
            auto [next, ec] = std::from_chars(p, end, value);
            if (ec == std::errc::result_out_of_range ||
                (ec == std::errc() && value > std::numeric_limits<std::uint32_t>::max()))
                throw Error(ErrorCode::TokenOverflow,
                            source + ":" + std::to_string(line_no) + ": token exceeds 32 bits");
            if (ec != std::errc() || (next < end && *next != ' ' && *next != '\t'))
                throw Error(ErrorCode::ParseError, source + ":" + std::to_string(line_no) + ": malformed token");
            rec.push_back(static_cast<std::uint32_t>(value));
            p = next;
        }
        raw.push_back(std::move(rec));
    }
    Dataset ds = canonicalize(std::move(raw));
    ds.provenance = source;
    return ds;
}

inline Dataset load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    return parse_records(in, path.string());
}

inline void write_records(const Dataset& ds, std::ostream& out) {
    for (const auto& rec : ds.records) {
        for (std::size_t i = 0; i < rec.size(); ++i) {
            if (i) out << ' ';
            out << rec[i];
        }
        out << '\n';
    }
}

inline void save(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    write_records(ds, out);
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

/// Exact Jaccard similarity of two sorted sets by linear merge.
inline double exact_jaccard(TokenView x, TokenView y) {
    std::size_t i = 0, j = 0, inter = 0;
    while (i < x.size() && j < y.size()) {
        if (x[i] < y[j]) ++i;
        else if (y[j] < x[i]) ++j;
        else { ++inter; ++i; ++j; }
    }
    const std::size_t uni = x.size() + y.size() - inter;
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// ---------------------------------------------------------------------------
// Synthetic generators

struct PlantedSpec {
    double similarity = 0.5;
    std::size_t pairs = 100;
};

/// Sets drawn from a small universe under a per-token frequency cap.
/// Background sets have expected pairwise Jaccard `background_similarity`;
/// each planted spec adds `pairs` pairs sharing a core sized for the target.
struct TokensSpec {
    std::uint32_t d = 1000;
    std::uint32_t max_freq = 10000;
    /// 0 means keep generating background sets until the caps bind.
    std::size_t background_count = 0;
    double background_similarity = 0.2;
    std::vector<PlantedSpec> planted;
    std::uint64_t seed = 1;

    std::string describe() const {
        std::ostringstream os;
        os << "tokens:d=" << d << ",max_freq=" << max_freq << ",background=" << background_count
           << ",background_sim=" << background_similarity;
        if (!planted.empty()) {
            os << ",planted=";
            for (std::size_t i = 0; i < planted.size(); ++i) os << (i ? "+" : "") << planted[i].similarity;
            os << ",pairs=" << planted.front().pairs;
        }
        os << ",seed=" << seed;
        return os.str();
    }
};

/// Size of a uniform random subset of [d] whose expected Jaccard similarity
/// with an independent subset of the same size is `similarity`.
inline std::size_t size_for_similarity(double similarity, std::uint32_t d) {
    return static_cast<std::size_t>(std::llround(2.0 * similarity / (1.0 + similarity) * d));
}

namespace detail {

/// Draws `count` distinct tokens from `pool` (partial Fisher-Yates; the
/// chosen tokens end up in pool[0, count)).
inline void draw_distinct(std::vector<std::uint32_t>& pool, std::size_t count, Rng& rng) {
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + uniform_index(rng, pool.size() - i);
        std::swap(pool[i], pool[j]);
    }
}

}  // namespace detail

inline Dataset gen_tokens(const TokensSpec& spec) {
    if (spec.d == 0 || spec.max_freq == 0) throw Error(ErrorCode::InvalidArgument, "d and max_freq must be positive");
    if (!(spec.background_similarity > 0.0 && spec.background_similarity < 1.0))
        throw Error(ErrorCode::InvalidArgument, "background similarity must lie in (0,1)");

    const std::size_t background_size = size_for_similarity(spec.background_similarity, spec.d);
    const std::uint64_t capacity = static_cast<std::uint64_t>(spec.d) * spec.max_freq;
    std::uint64_t demand = static_cast<std::uint64_t>(spec.background_count) * background_size;
    for (const auto& p : spec.planted) {
        if (!(p.similarity > 0.0 && p.similarity < 1.0))
            throw Error(ErrorCode::InvalidArgument, "planted similarity must lie in (0,1)");
        demand += 2 * static_cast<std::uint64_t>(size_for_similarity(p.similarity, spec.d)) * p.pairs;
    }
    if (demand > capacity)
        throw Error(ErrorCode::CapacityExceeded, "spec demands " + std::to_string(demand) + " token slots, capacity " +
                                                     std::to_string(capacity));

    Rng rng(spec.seed);
    std::vector<std::uint32_t> usage(spec.d, 0);
    std::vector<TokenSet> raw;
    struct RawPlanted {
        std::size_t a, b;
        double target;
    };
    std::vector<RawPlanted> raw_planted;

    auto available = [&] {
        std::vector<std::uint32_t> pool;
        for (std::uint32_t tok = 0; tok < spec.d; ++tok)
            if (usage[tok] < spec.max_freq) pool.push_back(tok);
        return pool;
    };
    auto take = [&](TokenSet rec) {
        for (std::uint32_t tok : rec) ++usage[tok];
        std::sort(rec.begin(), rec.end());
        raw.push_back(std::move(rec));
        return raw.size() - 1;
    };

    // Planted pairs: two sets of size s sharing a core of c tokens with
    // c / (2s - c) = λ', extras disjoint.
    for (const auto& p : spec.planted) {
        const std::size_t s = size_for_similarity(p.similarity, spec.d);
        const std::size_t c = static_cast<std::size_t>(std::llround(2.0 * p.similarity * s / (1.0 + p.similarity)));
        for (std::size_t k = 0; k < p.pairs; ++k) {
            std::vector<std::uint32_t> pool = available();
            if (pool.size() < 2 * s - c)
                throw Error(ErrorCode::CapacityExceeded,
                            "frequency cap leaves too few tokens for planted similarity " + std::to_string(p.similarity));
            detail::draw_distinct(pool, 2 * s - c, rng);
            TokenSet a(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(s));
            TokenSet b(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(c));
            b.insert(b.end(), pool.begin() + static_cast<std::ptrdiff_t>(s),
                     pool.begin() + static_cast<std::ptrdiff_t>(2 * s - c));
            const std::size_t ia = take(std::move(a));
            const std::size_t ib = take(std::move(b));
            raw_planted.push_back({ia, ib, p.similarity});
        }
    }

    for (std::size_t k = 0; spec.background_count == 0 || k < spec.background_count; ++k) {
        std::vector<std::uint32_t> pool = available();
        if (pool.size() < background_size) {
            if (spec.background_count == 0) break;
            throw Error(ErrorCode::CapacityExceeded, "frequency cap reached after " + std::to_string(k) +
                                                         " background sets");
        }
        detail::draw_distinct(pool, background_size, rng);
        take(TokenSet(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(background_size)));
    }

    std::vector<std::int64_t> index;
    Dataset ds = canonicalize(std::move(raw), &index);
    ds.provenance = spec.describe();
    for (const auto& p : raw_planted) {
        if (index[p.a] < 0 || index[p.b] < 0 || index[p.a] == index[p.b]) continue;
        PlantedPair pp;
        pp.a = static_cast<RecordId>(index[p.a]);
        pp.b = static_cast<RecordId>(index[p.b]);
        pp.target = p.target;
        pp.realized = exact_jaccard(ds.records[pp.a], ds.records[pp.b]);
        ds.planted.push_back(pp);
    }
    return ds;
}

/// The scaled-down TOKENS dataset used by the test suites: d = 1000,
/// max_freq = 2000, 100 planted sets (50 pairs) at each of 0.55, 0.65, ...,
/// 0.95 and background sets until the frequency caps bind (about 5200
/// records in total).
inline TokensSpec tokens_mini_spec(std::uint64_t seed = 1) {
    TokensSpec spec;
    spec.d = 1000;
    spec.max_freq = 2000;
    spec.background_count = 0;
    spec.planted = {{0.55, 50}, {0.65, 50}, {0.75, 50}, {0.85, 50}, {0.95, 50}};
    spec.seed = seed;
    return spec;
}

/// Records of Poisson(avg_size) size (at least 2) drawn uniformly without
/// replacement from [0, d).
inline Dataset gen_uniform(std::size_t n, double avg_size, std::uint32_t d, std::uint64_t seed) {
    if (!(avg_size >= 2.0)) throw Error(ErrorCode::InvalidArgument, "avg_size must be at least 2");
    if (static_cast<double>(d) < avg_size) throw Error(ErrorCode::InvalidArgument, "universe smaller than avg_size");
    Rng rng(seed);
    std::poisson_distribution<std::uint32_t> size_dist(avg_size);
    std::vector<std::uint32_t> pool(d);
    std::iota(pool.begin(), pool.end(), 0U);
    std::vector<TokenSet> raw;
    raw.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t size = std::clamp<std::size_t>(size_dist(rng), 2, d);
        detail::draw_distinct(pool, size, rng);
        raw.emplace_back(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(size));
    }
    Dataset ds = canonicalize(std::move(raw));
    std::ostringstream os;
    os << "uniform:n=" << n << ",avg=" << avg_size << ",d=" << d << ",seed=" << seed;
    ds.provenance = os.str();
    return ds;
}

// ---------------------------------------------------------------------------
// Generator specs as text: "tokens:d=1000,max_freq=500,planted=0.55+0.75"
// or "uniform:n=10000,avg=10,d=500", or a key=value file with a kind= line.

using GeneratorParams = std::map<std::string, std::string>;

namespace detail {

inline double to_double(const GeneratorParams& params, const std::string& key, double fallback) {
    auto it = params.find(key);
    if (it == params.end()) return fallback;
    try {
        std::size_t used = 0;
        const double v = std::stod(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument(key);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorCode::ParseError, "bad value for " + key + ": " + it->second);
    }
}

inline std::uint64_t to_uint(const GeneratorParams& params, const std::string& key, std::uint64_t fallback) {
    auto it = params.find(key);
    if (it == params.end()) return fallback;
    std::uint64_t v = 0;
    const auto& s = it->second;
    auto [next, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || next != s.data() + s.size())
        throw Error(ErrorCode::ParseError, "bad value for " + key + ": " + s);
    return v;
}

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace detail

inline Dataset generate(const GeneratorParams& params) {
    static const std::map<std::string, std::vector<std::string>> known = {
        {"tokens", {"kind", "d", "max_freq", "background", "background_sim", "planted", "pairs", "seed"}},
        {"tokens-mini", {"kind", "seed"}},
        {"uniform", {"kind", "n", "avg", "d", "seed"}},
    };
    auto kind_it = params.find("kind");
    if (kind_it == params.end()) throw Error(ErrorCode::ParseError, "generator spec has no kind");
    auto k = known.find(kind_it->second);
    if (k == known.end()) throw Error(ErrorCode::ParseError, "unknown generator kind " + kind_it->second);
    for (const auto& [key, value] : params)
        if (std::find(k->second.begin(), k->second.end(), key) == k->second.end())
            throw Error(ErrorCode::ParseError, "unknown key '" + key + "' for generator " + kind_it->second);

    const std::string& kind = kind_it->second;
    if (kind == "uniform") {
        return gen_uniform(detail::to_uint(params, "n", 100000), detail::to_double(params, "avg", 10.0),
                           static_cast<std::uint32_t>(detail::to_uint(params, "d", 209)),
                           detail::to_uint(params, "seed", 1));
    }
    if (kind == "tokens-mini") return gen_tokens(tokens_mini_spec(detail::to_uint(params, "seed", 1)));

    TokensSpec spec;
    spec.d = static_cast<std::uint32_t>(detail::to_uint(params, "d", spec.d));
    spec.max_freq = static_cast<std::uint32_t>(detail::to_uint(params, "max_freq", spec.max_freq));
    spec.background_count = detail::to_uint(params, "background", 0);
    spec.background_similarity = detail::to_double(params, "background_sim", spec.background_similarity);
    spec.seed = detail::to_uint(params, "seed", spec.seed);
    const std::size_t pairs = detail::to_uint(params, "pairs", 100);
    if (auto it = params.find("planted"); it != params.end() && !it->second.empty()) {
        std::stringstream ss(it->second);
        std::string item;
        while (std::getline(ss, item, '+')) {
            GeneratorParams one{{"v", item}};
            spec.planted.push_back({detail::to_double(one, "v", 0.0), pairs});
        }
    }
    return gen_tokens(spec);
}

/// Parses "kind:key=value,key=value".
inline GeneratorParams parse_generator_spec(std::string_view text) {
    GeneratorParams params;
    const auto colon = text.find(':');
    params["kind"] = detail::trim(text.substr(0, colon));
    if (colon == std::string_view::npos) return params;
    std::string rest(text.substr(colon + 1));
    std::stringstream ss(rest);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (detail::trim(item).empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::ParseError, "expected key=value, got '" + item + "'");
        params[detail::trim(item.substr(0, eq))] = detail::trim(item.substr(eq + 1));
    }
    return params;
}

/// Parses a key=value file; '#' starts a comment.
inline GeneratorParams parse_generator_config(std::istream& in) {
    GeneratorParams params;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (detail::trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::ParseError, "config line " + std::to_string(line_no) + ": expected key=value");
        params[detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
    }
    return params;
}

}  // namespace cpsjoin
