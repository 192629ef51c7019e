#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <set>

#include "icp/dataset.hpp"
#include "icp/rng.hpp"
#include "synthetic.hpp"
#include "testutil.hpp"

using namespace icp;
using testutil::temp_file;
using testutil::write_text;

TEST_CASE("load_csv extracts the label column") {
    const auto path = temp_file("basic.csv");
    write_text(path, "1,2,5\n3,4,6\n5,6,7\n");
    const Dataset ds = load_csv(path.string());
    CHECK(ds.size() == 3);
    CHECK(ds.attribute_count() == 2);
    CHECK(ds.labels(0) == 5.0);
    CHECK(ds.labels(2) == 7.0);
    CHECK(ds.attributes(1, 0) == 3.0);
    CHECK(ds.attributes(1, 1) == 4.0);

    SUBCASE("label by index keeps the remaining columns in order") {
        CsvOptions opts;
        opts.label_column = "0";
        const Dataset byidx = load_csv(path.string(), opts);
        CHECK(byidx.labels(0) == 1.0);
        CHECK(byidx.attributes(0, 0) == 2.0);
        CHECK(byidx.attributes(0, 1) == 5.0);
    }

    SUBCASE("header line with label by name") {
        const auto hpath = temp_file("header.csv");
        write_text(hpath, "a,b,y\r\n1,2,5\r\n3,4,6\r\n");
        CsvOptions opts;
        opts.has_header = true;
        opts.label_column = "y";
        const Dataset named = load_csv(hpath.string(), opts);
        CHECK(named.size() == 2);
        CHECK(named.column_names == std::vector<std::string>{"a", "b"});
        CHECK(named.labels(1) == 6.0);
    }
}

TEST_CASE("load_csv rejects malformed input with a location") {
    const auto empty = temp_file("empty.csv");
    write_text(empty, "");
    CHECK_THROWS_AS(load_csv(empty.string()), ParseError);

    const auto ragged = temp_file("ragged.csv");
    write_text(ragged, "1,2,3\n4,5\n");
    CHECK_THROWS_WITH_AS(load_csv(ragged.string()),
                         doctest::Contains("row 2"), ParseError);

    const auto alpha = temp_file("alpha.csv");
    write_text(alpha, "1,2,3\n4,x,6\n");
    try {
        load_csv(alpha.string());
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        const std::string message = e.what();
        CHECK(message.find("row 2") != std::string::npos);
        CHECK(message.find("column 2") != std::string::npos);
    }

    CHECK_THROWS_WITH_AS(load_csv("/nonexistent/path.csv"),
                         doctest::Contains("/nonexistent/path.csv"), ParseError);

    // values that parse as doubles but are not finite data
    const auto nan_csv = temp_file("nan.csv");
    write_text(nan_csv, "1,2\nnan,4\n");
    CHECK_THROWS_AS(load_csv(nan_csv.string()), ParseError);

    const auto inf_csv = temp_file("inf.csv");
    write_text(inf_csv, "1,2\n1e999,4\n");
    CHECK_THROWS_AS(load_csv(inf_csv.string()), ParseError);

    const auto single_col = temp_file("single.csv");
    write_text(single_col, "1\n2\n");
    CHECK_THROWS_AS(load_csv(single_col.string()), ParseError);
}

TEST_CASE("scaling maps the training range onto [-1, 1]") {
    Dataset train;
    train.attributes.resize(3, 2);
    train.attributes << 0.0, 7.0, 5.0, 7.0, 10.0, 7.0;
    train.labels.resize(3);
    train.labels << 100.0, 200.0, 300.0;

    const ScalingParams params = fit_scaling(train);
    const Dataset scaled = apply_scaling(params, train);
    CHECK(scaled.attributes(0, 0) == -1.0);
    CHECK(scaled.attributes(1, 0) == 0.0);
    CHECK(scaled.attributes(2, 0) == 1.0);
    // constant column collapses to zero
    CHECK(scaled.attributes(0, 1) == 0.0);
    CHECK(scaled.attributes(2, 1) == 0.0);
    // labels untouched
    CHECK(scaled.labels(1) == 200.0);

    SUBCASE("values outside the training range extend linearly") {
        Dataset test;
        test.attributes.resize(1, 2);
        test.attributes << 12.0, 7.0;
        test.labels.resize(1);
        test.labels << 0.0;
        const Dataset scaled_test = apply_scaling(params, test);
        CHECK(scaled_test.attributes(0, 0) == doctest::Approx(1.4));
    }

    SUBCASE("endpoints are attained exactly on random data") {
        const Dataset random = synthetic::benchmark(200, 5, 31);
        const ScalingParams p = fit_scaling(random);
        const Dataset s = apply_scaling(p, random);
        for (Eigen::Index c = 0; c < s.attributes.cols(); ++c) {
            CHECK(s.attributes.col(c).minCoeff() == -1.0);
            CHECK(s.attributes.col(c).maxCoeff() == 1.0);
        }
    }
}

TEST_CASE("split_icp partitions into proper training and calibration") {
    const Dataset ds = synthetic::benchmark(506, 3, 7);
    const IcpSplit split = split_icp(ds, 99, 12345);
    CHECK(split.proper_training.size() == 407);
    CHECK(split.calibration.size() == 99);

    // indices partition the full range
    std::set<std::size_t> seen(split.proper_indices.begin(), split.proper_indices.end());
    seen.insert(split.calibration_indices.begin(), split.calibration_indices.end());
    CHECK(seen.size() == 506);
    CHECK(*seen.rbegin() == 505);

    // rows were carried over intact
    CHECK(split.calibration.labels(0) ==
          ds.labels(static_cast<Eigen::Index>(split.calibration_indices[0])));

    CHECK_THROWS_AS(split_icp(ds, 0, 1), InvalidSplitError);
    CHECK_THROWS_AS(split_icp(ds, 506, 1), InvalidSplitError);
    // boundary: q = l - 1 leaves one proper example but is still legal
    const Dataset tiny = synthetic::benchmark(100, 2, 8);
    const IcpSplit boundary = split_icp(tiny, 99, 1);
    CHECK(boundary.proper_training.size() == 1);
}

TEST_CASE("is_canonical_calibration_size recognizes 100n-1") {
    CHECK(is_canonical_calibration_size(99));
    CHECK(is_canonical_calibration_size(299));
    CHECK(is_canonical_calibration_size(999));
    CHECK_FALSE(is_canonical_calibration_size(300));
    CHECK_FALSE(is_canonical_calibration_size(98));
    CHECK_FALSE(is_canonical_calibration_size(0));
}

TEST_CASE("kfold_plan builds near-equal folds that partition every repeat") {
    SplitPlan plan;
    plan.k = 2;
    plan.repeats = 2;
    plan.seed = 9;

    auto folds = kfold_plan(10, plan);
    REQUIRE(folds.size() == 2);
    CHECK(folds[0][0].test.size() == 5);
    CHECK(folds[0][1].test.size() == 5);

    auto folds11 = kfold_plan(11, plan);
    CHECK(folds11[0][0].test.size() == 6);
    CHECK(folds11[0][1].test.size() == 5);

    SplitPlan plan506;
    plan506.k = 10;
    plan506.repeats = 3;
    plan506.seed = 4;
    auto folds506 = kfold_plan(506, plan506);
    for (const auto& repeat : folds506) {
        std::multiset<std::size_t> sizes;
        std::set<std::size_t> all;
        for (const auto& fold : repeat) {
            sizes.insert(fold.test.size());
            all.insert(fold.test.begin(), fold.test.end());
            CHECK(fold.train.size() + fold.test.size() == 506);
        }
        CHECK(all.size() == 506);  // test folds partition the indices
        CHECK(sizes.count(51) == 6);
        CHECK(sizes.count(50) == 4);
    }

    // distinct permutations across repeats
    CHECK(folds506[0][0].test != folds506[1][0].test);

    CHECK_THROWS_AS(kfold_plan(5, plan506), InvalidInputError);
    SplitPlan bad;
    bad.k = 1;
    CHECK_THROWS_AS(kfold_plan(10, bad), InvalidInputError);
}

TEST_CASE("tec_features encodes hour and day on the unit circle") {
    const auto midnight = tec_features(0.0, 100.0);
    CHECK(midnight[0] == 0.0);
    CHECK(midnight[1] == 1.0);

    const auto morning = tec_features(6.0, 100.0);
    CHECK(morning[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(morning[1]) < 1e-12);

    // continuity across the year boundary: day 365 sits one step from day 1
    const auto end_of_year = tec_features(12.0, 365.0);
    const auto start_of_year = tec_features(12.0, 1.0);
    const double arc = 2.0 * std::numbers::pi / 365.0;
    CHECK(std::abs(end_of_year[2] - start_of_year[2]) <= arc + 1e-12);
    CHECK(std::abs(end_of_year[3] - start_of_year[3]) <= arc + 1e-12);

    CHECK_THROWS_AS(tec_features(24.0, 10.0), InvalidInputError);
    CHECK_THROWS_AS(tec_features(-0.1, 10.0), InvalidInputError);
    CHECK_THROWS_AS(tec_features(3.0, 0.5), InvalidInputError);
    CHECK_THROWS_AS(tec_features(3.0, 365.5), InvalidInputError);

    SUBCASE("sin^2 + cos^2 stays 1 to machine precision") {
        Rng rng(55);
        for (int i = 0; i < 300; ++i) {
            const double hour = rng.next_uniform(0.0, 24.0 - 1e-9);
            const double day = rng.next_uniform(1.0, 365.0);
            const auto f = tec_features(hour, day);
            CHECK(std::abs(f[0] * f[0] + f[1] * f[1] - 1.0) <= 1e-12);
            CHECK(std::abs(f[2] * f[2] + f[3] * f[3] - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("index lists round-trip through their text format") {
    const auto path = temp_file("indices.txt");
    const std::vector<std::vector<std::size_t>> lists{{4, 1, 3}, {0, 2}};
    write_index_lists(path.string(), lists, "sample lists");
    const auto loaded = read_index_lists(path.string());
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0] == lists[0]);
    CHECK(loaded[1] == lists[1]);

    CHECK_THROWS_AS(read_index_lists("/nonexistent/indices.txt"), ParseError);
}

TEST_CASE("abalone shape check when the dataset is available" * doctest::skip(false)) {
    const char* dir = std::getenv("ICPREG_DATA_DIR");
    const std::filesystem::path path =
        std::filesystem::path(dir ? dir : "data") / "abalone.csv";
    if (!std::filesystem::exists(path)) {
        MESSAGE("skipped: ", path.string(), " not present (see README for fetch instructions)");
        return;
    }
    const Dataset ds = load_csv(path.string());
    CHECK(ds.size() == 4177);
    CHECK(ds.attribute_count() == 8);
}
