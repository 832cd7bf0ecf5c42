#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cpsjoin/allpairs.hpp"
#include "cpsjoin/common.hpp"
#include "cpsjoin/cpsjoin.hpp"
#include "cpsjoin/dataset.hpp"
#include "cpsjoin/minhash_lsh.hpp"

namespace cpsjoin::bench {

/// What to run: algorithms, thresholds, stopping rule and parameter overrides.
struct ExperimentSpec {
    std::vector<std::string> algorithms{"cpsjoin"};
    std::vector<double> lambdas{0.5};
    double recall_target = 0.9;
    /// Upper bound on CPSJoin repetitions; MinHash runs at most L tables.
    std::size_t max_reps = 10;
    /// With the oracle off, approximate joins run all repetitions and
    /// report no recall.
    bool use_oracle = true;
    std::size_t trials = 5;
    CpsConfig cps;
    /// 0 means automatic for both.
    std::size_t lsh_k = 0;
    std::size_t lsh_L = 0;
    std::uint64_t seed = 1;

    void validate() const {
        if (algorithms.empty()) throw Error(ErrorCode::InvalidArgument, "no algorithm given");
        for (const auto& a : algorithms)
            if (a != "cpsjoin" && a != "minhash" && a != "allpairs" && a != "bruteforce")
                throw Error(ErrorCode::InvalidArgument, "unknown algorithm '" + a + "'");
        if (lambdas.empty()) throw Error(ErrorCode::InvalidArgument, "no threshold given");
        for (double l : lambdas)
            if (!(l > 0.0 && l < 1.0)) throw Error(ErrorCode::InvalidArgument, "threshold must lie in (0,1)");
        if (!(recall_target > 0.0 && recall_target <= 1.0))
            throw Error(ErrorCode::InvalidArgument, "recall target must lie in (0,1]");
        if (max_reps == 0 || trials == 0) throw Error(ErrorCode::InvalidArgument, "reps and trials must be positive");
    }
};

struct ReportRow {
    std::string dataset;
    std::string algorithm;
    double lambda = 0.0;
    double join_time_s = 0.0;
    double preprocess_time_s = 0.0;
    std::optional<double> recall;
    std::size_t reps_used = 0;
    std::uint64_t pre_candidates = 0;
    std::uint64_t candidates = 0;
    std::uint64_t results = 0;
    std::uint32_t max_depth = 0;
    std::string params;
    std::optional<double> relative_time;

    friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

inline const char* const kCsvHeader =
    "dataset,algorithm,lambda,join_time_s,preprocess_time_s,recall,reps_used,pre_candidates,candidates,results,"
    "max_depth,params,relative_time";

namespace detail {

inline double elapsed(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

/// Shortest round-trip decimal form, independent of the C locale.
inline std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

inline std::string format_fixed(double v, int precision) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, precision);
    return std::string(buf, end);
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

template <class T>
T parse_number(const std::string& s) {
    T v{};
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size()) throw Error(ErrorCode::ParseError, "bad number '" + s + "'");
    return v;
}

inline std::string cps_params(const CpsConfig& c, std::size_t reps_cap) {
    std::ostringstream os;
    os << "t=" << c.t << ";l=" << c.sketch_words << ";delta=" << format_double(c.delta)
       << ";eps=" << format_double(c.eps) << ";limit=" << c.limit << ";max_reps=" << reps_cap
       << ";seed=" << c.seed;
    return os.str();
}

}  // namespace detail

inline void write_csv(const std::vector<ReportRow>& rows, std::ostream& out) {
    out << kCsvHeader << '\n';
    for (const auto& r : rows) {
        out << detail::csv_field(r.dataset) << ',' << r.algorithm << ',' << detail::format_double(r.lambda) << ','
            << detail::format_fixed(r.join_time_s, 3) << ',' << detail::format_fixed(r.preprocess_time_s, 3) << ','
            << (r.recall ? detail::format_double(*r.recall) : "") << ',' << r.reps_used << ',' << r.pre_candidates
            << ',' << r.candidates << ',' << r.results << ',' << r.max_depth << ',' << detail::csv_field(r.params)
            << ',' << (r.relative_time ? detail::format_double(*r.relative_time) : "") << '\n';
    }
}

/// Writes header plus one line per row. No file is created for an empty
/// row list.
inline void write_csv(const std::vector<ReportRow>& rows, const std::filesystem::path& path) {
    if (rows.empty()) throw Error(ErrorCode::InvalidArgument, "no rows to write");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    write_csv(rows, static_cast<std::ostream&>(out));
    out.flush();
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

/// Reads a file produced by write_csv. Timing fields come back rounded to
/// milliseconds.
inline std::vector<ReportRow> read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) throw Error(ErrorCode::ParseError, "missing CSV header");
    std::vector<ReportRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != 13) throw Error(ErrorCode::ParseError, "expected 13 fields, got " + std::to_string(f.size()));
        ReportRow r;
        r.dataset = f[0];
        r.algorithm = f[1];
        r.lambda = detail::parse_number<double>(f[2]);
        r.join_time_s = detail::parse_number<double>(f[3]);
        r.preprocess_time_s = detail::parse_number<double>(f[4]);
        if (!f[5].empty()) r.recall = detail::parse_number<double>(f[5]);
        r.reps_used = detail::parse_number<std::size_t>(f[6]);
        r.pre_candidates = detail::parse_number<std::uint64_t>(f[7]);
        r.candidates = detail::parse_number<std::uint64_t>(f[8]);
        r.results = detail::parse_number<std::uint64_t>(f[9]);
        r.max_depth = detail::parse_number<std::uint32_t>(f[10]);
        r.params = f[11];
        if (!f[12].empty()) r.relative_time = detail::parse_number<double>(f[12]);
        rows.push_back(std::move(r));
    }
    return rows;
}

/// Seed for one (dataset, algorithm, λ) row, so rows reproduce independently.
inline std::uint64_t row_seed(std::uint64_t master, const std::string& dataset, const std::string& algorithm,
                              double lambda) {
    return derive_seed(master, fnv1a(dataset + '\x1f' + algorithm + '\x1f' + detail::format_double(lambda)));
}

namespace detail {

/// Runs repetitions until the recall target is met (oracle given) or the
/// cap is reached. Returns the number of repetitions used.
template <class Join>
std::size_t run_repetitions(const Join& join, std::size_t cap, const ResultPairSet* exact, double target,
                            ResultPairSet& found, JoinStats& stats, double& join_seconds) {
    join_seconds = 0.0;
    std::vector<RecordPair> batch;
    std::size_t used = 0;
    while (used < cap) {
        batch.clear();
        const auto start = std::chrono::steady_clock::now();
        join.run_repetition(used, batch, stats);
        dedup_pairs(batch);
        join_seconds += elapsed(start);
        ++used;
        merge_into(found, std::move(batch));
        if (exact && recall(found, *exact) >= target) break;
    }
    return used;
}

}  // namespace detail

/// Measures one algorithm at one threshold. `exact` is the cached oracle
/// result (needed for recall-driven stopping of approximate joins).
inline ReportRow run_one(const Dataset& data, const std::string& dataset_name, const std::string& algorithm,
                         double lambda, const ExperimentSpec& spec, const ResultPairSet* exact) {
    ReportRow row;
    row.dataset = dataset_name;
    row.algorithm = algorithm;
    row.lambda = lambda;
    const std::uint64_t seed = row_seed(spec.seed, dataset_name, algorithm, lambda);
    const ResultPairSet* oracle = spec.use_oracle ? exact : nullptr;
    double total_time = 0.0;

    for (std::size_t trial = 0; trial < spec.trials; ++trial) {
        JoinStats stats;
        double join_seconds = 0.0;
        if (algorithm == "allpairs") {
            const auto start = std::chrono::steady_clock::now();
            const auto pairs = allpairs_join(data, lambda, &stats);
            join_seconds = detail::elapsed(start);
            stats.results = pairs.size();
            row.recall = 1.0;
            row.reps_used = 1;
            row.params = "";
        } else if (algorithm == "bruteforce") {
            const auto start = std::chrono::steady_clock::now();
            const auto pairs = brute_force_join(data, lambda);
            join_seconds = detail::elapsed(start);
            const std::uint64_t n = data.size();
            stats.pre_candidates = stats.candidates = n * (n - (n > 0)) / 2;
            stats.results = pairs.size();
            row.recall = 1.0;
            row.reps_used = 1;
            row.params = "";
        } else if (algorithm == "cpsjoin") {
            CpsConfig cfg = spec.cps;
            cfg.lambda = lambda;
            cfg.seed = seed;
            cfg.reps = spec.max_reps;
            const CpsJoin join(data, cfg);
            row.preprocess_time_s = join.preprocess_seconds();
            ResultPairSet found;
            row.reps_used = detail::run_repetitions(join, spec.max_reps, oracle, spec.recall_target, found, stats,
                                                    join_seconds);
            stats.results = found.size();
            row.recall = oracle ? std::optional<double>(recall(found, *oracle)) : std::nullopt;
            row.params = detail::cps_params(cfg, spec.max_reps);
        } else if (algorithm == "minhash") {
            LshConfig cfg;
            cfg.lambda = lambda;
            cfg.recall = spec.recall_target < 1.0 ? spec.recall_target : 0.99;
            cfg.k = spec.lsh_k;
            cfg.L = spec.lsh_L;
            cfg.t = spec.cps.t;
            cfg.sketch_words = spec.cps.sketch_words;
            cfg.delta = spec.cps.delta;
            cfg.seed = seed;
            const MinHashLsh join(data, cfg);
            row.preprocess_time_s = join.preprocess_seconds();
            ResultPairSet found;
            row.reps_used =
                detail::run_repetitions(join, join.L(), oracle, spec.recall_target, found, stats, join_seconds);
            stats.results = found.size();
            row.recall = oracle ? std::optional<double>(recall(found, *oracle)) : std::nullopt;
            std::ostringstream os;
            os << "t=" << cfg.t << ";l=" << cfg.sketch_words << ";delta=" << detail::format_double(cfg.delta)
               << ";k=" << join.k() << ";L=" << join.L() << ";seed=" << seed;
            row.params = os.str();
        } else {
            throw Error(ErrorCode::InvalidArgument, "unknown algorithm '" + algorithm + "'");
        }
        total_time += join_seconds;
        row.pre_candidates = stats.pre_candidates;
        row.candidates = stats.candidates;
        row.results = stats.results;
        row.max_depth = stats.max_depth;
    }
    row.join_time_s = total_time / static_cast<double>(spec.trials);
    return row;
}

/// One row per (algorithm, λ). The exact result is computed once per λ
/// with AllPairs and cached for recall measurement.
inline std::vector<ReportRow> run(const Dataset& data, const std::string& dataset_name, const ExperimentSpec& spec) {
    spec.validate();
    std::vector<ReportRow> rows;
    for (double lambda : spec.lambdas) {
        std::optional<ResultPairSet> exact;
        const bool needs_oracle =
            spec.use_oracle && std::any_of(spec.algorithms.begin(), spec.algorithms.end(),
                                           [](const std::string& a) { return a == "cpsjoin" || a == "minhash"; });
        if (needs_oracle) exact = allpairs_join(data, lambda);
        for (const auto& algorithm : spec.algorithms)
            rows.push_back(run_one(data, dataset_name, algorithm, lambda, spec, exact ? &*exact : nullptr));
    }
    return rows;
}

enum class SweepParam { Limit, Eps, SketchWords };

inline SweepParam parse_sweep_param(const std::string& name) {
    if (name == "limit") return SweepParam::Limit;
    if (name == "eps") return SweepParam::Eps;
    if (name == "sketch-words" || name == "l" || name == "w") return SweepParam::SketchWords;
    throw Error(ErrorCode::InvalidArgument, "unknown sweep parameter '" + name + "'");
}

/// CPSJoin join time for each value of one parameter, relative to the run
/// with that parameter at its default. Runs stop at 80% recall.
inline std::vector<ReportRow> sweep(const Dataset& data, const std::string& dataset_name, ExperimentSpec spec,
                                    SweepParam param, const std::vector<double>& values) {
    if (values.empty()) throw Error(ErrorCode::InvalidArgument, "sweep needs at least one value");
    spec.algorithms = {"cpsjoin"};
    spec.recall_target = 0.8;
    spec.validate();

    const CpsConfig defaults;
    auto with_value = [&](double v) {
        ExperimentSpec s = spec;
        switch (param) {
            case SweepParam::Limit: s.cps.limit = static_cast<std::size_t>(std::llround(v)); break;
            case SweepParam::Eps: s.cps.eps = v; break;
            case SweepParam::SketchWords: s.cps.sketch_words = static_cast<std::size_t>(std::llround(v)); break;
        }
        return s;
    };
    double default_value = 0.0;
    switch (param) {
        case SweepParam::Limit: default_value = static_cast<double>(defaults.limit); break;
        case SweepParam::Eps: default_value = defaults.eps; break;
        case SweepParam::SketchWords: default_value = static_cast<double>(defaults.sketch_words); break;
    }

    std::vector<ReportRow> rows;
    for (double lambda : spec.lambdas) {
        const ResultPairSet exact = allpairs_join(data, lambda);
        const ReportRow baseline =
            run_one(data, dataset_name, "cpsjoin", lambda, with_value(default_value), &exact);
        for (double v : values) {
            ReportRow row =
                v == default_value ? baseline : run_one(data, dataset_name, "cpsjoin", lambda, with_value(v), &exact);
            row.relative_time = baseline.join_time_s > 0.0 ? row.join_time_s / baseline.join_time_s : 1.0;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

}  // namespace cpsjoin::bench
