#include <filesystem>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "cpsjoin/bench.hpp"
#include "test_util.hpp"

using namespace cpsjoin;
using namespace cpsjoin::bench;

namespace {

Dataset small_tokens() {
    TokensSpec spec;
    spec.d = 300;
    spec.max_freq = 100;
    spec.planted = {{0.6, 10}, {0.8, 10}};
    spec.seed = 3;
    return gen_tokens(spec);
}

Dataset clustered(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return canonicalize(cpsjoin::testing::clustered_collection(rng, 40, 15, 30, 0.8, 3000));
}

ExperimentSpec quick_spec() {
    ExperimentSpec spec;
    spec.trials = 1;
    return spec;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

ReportRow strip_timing(ReportRow r) {
    r.join_time_s = 0;
    r.preprocess_time_s = 0;
    r.relative_time.reset();
    return r;
}

}  // namespace

TEST(Bench, AllPairsRowIsExact) {
    const Dataset ds = clustered(1);
    const auto row = run_one(ds, "c", "allpairs", 0.6, quick_spec(), nullptr);
    ASSERT_TRUE(row.recall.has_value());
    EXPECT_EQ(*row.recall, 1.0);
    EXPECT_EQ(row.reps_used, 1u);
    EXPECT_EQ(row.results, brute_force_join(ds, 0.6).size());
    EXPECT_GE(row.pre_candidates, row.candidates);
    EXPECT_GE(row.candidates, row.results);
}

TEST(Bench, BruteForceCountsEveryPair) {
    const Dataset ds = clustered(2);
    const auto bf = run_one(ds, "c", "bruteforce", 0.6, quick_spec(), nullptr);
    const auto ap = run_one(ds, "c", "allpairs", 0.6, quick_spec(), nullptr);
    const std::uint64_t n = ds.size();
    EXPECT_EQ(bf.pre_candidates, n * (n - 1) / 2);
    EXPECT_EQ(bf.results, ap.results);
}

TEST(Bench, CpsJoinReachesRecallTarget) {
    const Dataset ds = small_tokens();
    auto spec = quick_spec();
    spec.algorithms = {"cpsjoin", "minhash"};
    spec.lambdas = {0.5, 0.7};
    const auto rows = run(ds, "tokens-small", spec);
    ASSERT_EQ(rows.size(), 4u);
    for (const auto& r : rows) {
        ASSERT_TRUE(r.recall.has_value());
        EXPECT_GE(*r.recall, 0.9) << r.algorithm << " λ=" << r.lambda;
        if (r.algorithm == "cpsjoin") {
            EXPECT_LE(r.reps_used, 10u);
        }
        EXPECT_GE(r.pre_candidates, r.candidates);
        EXPECT_GE(r.candidates, r.results);
    }
}

TEST(Bench, RejectsUnknownAlgorithm) {
    auto spec = quick_spec();
    spec.algorithms = {"nope"};
    EXPECT_THROW((void)run(clustered(3), "c", spec), Error);
}

TEST(Bench, WithoutOracleRunsAllRepetitions) {
    auto spec = quick_spec();
    spec.use_oracle = false;
    spec.max_reps = 3;
    const auto row = run_one(clustered(4), "c", "cpsjoin", 0.6, spec, nullptr);
    EXPECT_FALSE(row.recall.has_value());
    EXPECT_EQ(row.reps_used, 3u);
}

TEST(Csv, OneRowGivesHeaderPlusOneLine) {
    const auto rows = run(clustered(5), "c", quick_spec());
    ASSERT_EQ(rows.size(), 1u);
    std::ostringstream os;
    write_csv(rows, os);
    EXPECT_EQ(count_lines(os.str()), 2u);
    EXPECT_EQ(os.str().substr(0, os.str().find('\n')), kCsvHeader);
}

TEST(Csv, EmptyRowsCreateNoFile) {
    const auto path = std::filesystem::temp_directory_path() / "cpsjoin_bench_test_empty.csv";
    std::filesystem::remove(path);
    EXPECT_THROW(write_csv({}, path), Error);
    EXPECT_FALSE(std::filesystem::exists(path));
}

TEST(Csv, RoundTrip) {
    ReportRow r;
    r.dataset = "name,with \"quotes\"";
    r.algorithm = "minhash";
    r.lambda = 0.7;
    r.join_time_s = 1.25;
    r.preprocess_time_s = 0.5;
    r.recall = 0.93;
    r.reps_used = 12;
    r.pre_candidates = 1000;
    r.candidates = 100;
    r.results = 10;
    r.max_depth = 0;
    r.params = "t=128;k=4";
    ReportRow s = r;
    s.recall.reset();
    s.relative_time = 1.5;
    std::stringstream ss;
    write_csv({r, s}, ss);
    const auto back = read_csv(ss);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0], r);
    EXPECT_EQ(back[1], s);
}

TEST(Csv, SameSeedSameOutputApartFromTiming) {
    const Dataset ds = clustered(6);
    auto spec = quick_spec();
    spec.algorithms = {"cpsjoin", "minhash", "allpairs"};
    spec.lambdas = {0.5, 0.8};
    const auto a = run(ds, "c", spec);
    const auto b = run(ds, "c", spec);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(strip_timing(a[i]), strip_timing(b[i]));
}

TEST(Bench, RecallGrowsWithRepetitions) {
    const Dataset ds = clustered(7);
    const ResultPairSet exact = allpairs_join(ds, 0.5);
    auto spec = quick_spec();
    spec.recall_target = 1.0;
    spec.cps.limit = 20;
    double previous = 0.0;
    for (std::size_t reps = 1; reps <= 5; ++reps) {
        spec.max_reps = reps;
        const auto row = run_one(ds, "c", "cpsjoin", 0.5, spec, &exact);
        EXPECT_GE(*row.recall, previous);
        previous = *row.recall;
    }
}

TEST(Sweep, DefaultValueIsTheBaseline) {
    const Dataset ds = clustered(8);
    auto spec = quick_spec();
    const auto rows = sweep(ds, "c", spec, SweepParam::Limit, {250});
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].relative_time, 1.0);
}

TEST(Sweep, SketchWordsKeepRecall) {
    const Dataset ds = small_tokens();
    auto spec = quick_spec();
    const auto rows = sweep(ds, "t", spec, SweepParam::SketchWords, {1, 2, 4, 8});
    ASSERT_EQ(rows.size(), 4u);
    for (const auto& r : rows) {
        EXPECT_GE(*r.recall, 0.8);
        EXPECT_TRUE(r.relative_time.has_value());
    }
}

TEST(Sweep, SmallerLimitRecursesDeeper) {
    std::mt19937_64 rng(9);
    const Dataset ds = canonicalize(cpsjoin::testing::clustered_collection(rng, 10, 80, 30, 0.85, 2000));
    auto spec = quick_spec();
    const auto rows = sweep(ds, "c", spec, SweepParam::Limit, {10, 250});
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_GE(rows[0].max_depth, rows[1].max_depth);
}

TEST(Sweep, ParamNames) {
    EXPECT_EQ(parse_sweep_param("limit"), SweepParam::Limit);
    EXPECT_EQ(parse_sweep_param("eps"), SweepParam::Eps);
    EXPECT_EQ(parse_sweep_param("sketch-words"), SweepParam::SketchWords);
    EXPECT_THROW((void)parse_sweep_param("depth"), Error);
}
