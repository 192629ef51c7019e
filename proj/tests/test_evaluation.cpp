#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "icp/evaluation.hpp"
#include "icp/rng.hpp"
#include "synthetic.hpp"

using namespace icp;

namespace {

// independent percentile oracle: the same declared rule (interpolation at
// 1 + (n-1)p, 1-indexed) written from scratch over an explicit scan
double oracle_percentile(std::vector<double> values, double p) {
    std::sort(values.begin(), values.end());
    const double position = 1.0 + (static_cast<double>(values.size()) - 1.0) * p;  // 1-indexed
    const auto lo = static_cast<std::size_t>(std::floor(position));
    const auto hi = static_cast<std::size_t>(std::ceil(position));
    const double frac = position - static_cast<double>(lo);
    const double below = values.at(lo - 1);
    const double above = values.at(hi - 1);
    return below + (above - below) * frac;
}

double oracle_interdecile_mean(const std::vector<double>& values) {
    const double p10 = oracle_percentile(values, 0.10);
    const double p90 = oracle_percentile(values, 0.90);
    double sum = 0.0;
    std::size_t count = 0;
    for (double v : values) {
        if (v >= p10 && v <= p90) {
            sum += v;
            ++count;
        }
    }
    return sum / static_cast<double>(count);
}

}  // namespace

TEST_CASE("rmse and correlation match their definitions") {
    const std::vector<double> labels{1.0, 2.0, 3.0};
    CHECK(rmse(labels, labels) == 0.0);
    CHECK(correlation(labels, labels) == doctest::Approx(1.0));

    const std::vector<double> shifted{2.0, 3.0, 4.0};
    CHECK(rmse(shifted, labels) == doctest::Approx(1.0));
    CHECK(correlation(shifted, labels) == doctest::Approx(1.0));

    const std::vector<double> reversed{3.0, 2.0, 1.0};
    CHECK(correlation(reversed, labels) == doctest::Approx(-1.0));

    CHECK_THROWS_AS(rmse({1.0}, {1.0, 2.0}), InvalidInputError);
    CHECK_THROWS_AS(correlation({1.0, 1.0, 1.0}, labels), InvalidInputError);
    CHECK_THROWS_AS(correlation(labels, {5.0, 5.0, 5.0}), InvalidInputError);
}

TEST_CASE("width_stats follows the declared quantile rule") {
    std::vector<double> one_to_ten(10);
    std::iota(one_to_ten.begin(), one_to_ten.end(), 1.0);
    const WidthStats ten = width_stats(one_to_ten);
    CHECK(ten.median == doctest::Approx(5.5));

    const std::vector<double> constant(7, 3.25);
    const WidthStats flat = width_stats(constant);
    CHECK(flat.median == 3.25);
    CHECK(flat.interdecile_mean == 3.25);
    CHECK(flat.p10 == 3.25);
    CHECK(flat.p90 == 3.25);

    // 1..100: p10 = 10.9 and p90 = 90.1 under the interpolation rule, so the
    // interdecile region holds exactly the integers 11..90 and their mean is
    // 50.5 (verified by the oracle below)
    std::vector<double> one_to_hundred(100);
    std::iota(one_to_hundred.begin(), one_to_hundred.end(), 1.0);
    const WidthStats hundred = width_stats(one_to_hundred);
    CHECK(hundred.p10 == doctest::Approx(10.9));
    CHECK(hundred.p90 == doctest::Approx(90.1));
    CHECK(hundred.interdecile_mean == doctest::Approx(50.5));
    CHECK(hundred.interdecile_mean ==
          doctest::Approx(oracle_interdecile_mean(one_to_hundred)));

    CHECK_THROWS_AS(width_stats({}), InvalidInputError);

    SUBCASE("random vectors agree with the oracle and stay ordered") {
        Rng rng(404);
        for (int trial = 0; trial < 40; ++trial) {
            std::vector<double> values(1 + rng.next_index(200));
            for (auto& v : values) v = std::abs(rng.next_normal()) * 10.0;
            const WidthStats stats = width_stats(values);
            CHECK(stats.p10 == doctest::Approx(oracle_percentile(values, 0.10)));
            CHECK(stats.p25 == doctest::Approx(oracle_percentile(values, 0.25)));
            CHECK(stats.median == doctest::Approx(oracle_percentile(values, 0.50)));
            CHECK(stats.p75 == doctest::Approx(oracle_percentile(values, 0.75)));
            CHECK(stats.p90 == doctest::Approx(oracle_percentile(values, 0.90)));
            CHECK(stats.interdecile_mean == doctest::Approx(oracle_interdecile_mean(values)));
            CHECK(stats.p10 <= stats.p25);
            CHECK(stats.p25 <= stats.median);
            CHECK(stats.median <= stats.p75);
            CHECK(stats.p75 <= stats.p90);
        }
    }
}

TEST_CASE("miscoverage counts only labels strictly outside") {
    std::vector<PredictionInterval> intervals{{0.0, 2.0, 0.9}, {-1.0, 1.0, 0.9}};
    CHECK(miscoverage(intervals, {1.0, 0.0}) == 0.0);
    CHECK(miscoverage(intervals, {5.0, -3.0}) == 100.0);
    // boundary labels are covered
    CHECK(miscoverage(intervals, {2.0, -1.0}) == 0.0);
    CHECK(miscoverage(intervals, {2.0000001, -1.0}) == 50.0);
    CHECK_THROWS_AS(miscoverage(intervals, {1.0}), InvalidInputError);
}

TEST_CASE("run_experiment pools the grid deterministically") {
    const Dataset data = synthetic::sine(700, 0.2, 99);

    ExperimentConfig config;
    config.mlp.hidden_units = 4;
    config.mlp.restarts = 2;
    config.mlp.max_epochs = 150;
    config.mlp.patience = 15;
    config.mlp.seed = 7;
    config.plan.k = 2;
    config.plan.repeats = 2;
    config.plan.q = 99;
    config.plan.seed = 13;
    config.measure.kind = Measure::absolute;
    config.dataset_name = "sine";
    config.jobs = 1;

    const EvaluationReport report = run_experiment(data, config);
    CHECK(report.total_predictions == 700 * 2);
    REQUIRE(report.levels.size() == 3);

    for (const auto& level : report.levels) {
        CHECK(level.widths.p10 <= level.widths.p25);
        CHECK(level.widths.p25 <= level.widths.median);
        CHECK(level.widths.median <= level.widths.p75);
        CHECK(level.widths.p75 <= level.widths.p90);
        CHECK(level.error_percentage >= 0.0);
        // loose sanity bound; the acceptance suite pins the statistics
        CHECK(level.error_percentage <= 100.0 * level.significance + 5.0);
    }
    CHECK(report.rmse < 0.5);
    CHECK(report.correlation > 0.8);

    SUBCASE("identical configurations produce byte-identical reports") {
        const EvaluationReport again = run_experiment(data, config);
        std::ostringstream a, b;
        write_report_kv(a, report);
        write_report_kv(b, again);
        CHECK(a.str() == b.str());
    }

    SUBCASE("the thread count does not change the numbers") {
        ExperimentConfig parallel = config;
        parallel.jobs = 2;
        const EvaluationReport threaded = run_experiment(data, parallel);
        std::ostringstream a, b;
        write_report_kv(a, report);
        write_report_kv(b, threaded);
        CHECK(a.str() == b.str());
    }

    SUBCASE("normalized measure runs the full path") {
        ExperimentConfig norm = config;
        norm.measure.kind = Measure::normalized;
        norm.measure.beta = 0.5;
        const EvaluationReport normalized = run_experiment(data, norm);
        CHECK(normalized.total_predictions == report.total_predictions);
        for (const auto& level : normalized.levels) {
            CHECK(level.error_percentage <= 100.0 * level.significance + 5.0);
        }
    }

    SUBCASE("report writers emit their formats") {
        std::ostringstream kv, table, csv;
        write_report_kv(kv, report);
        CHECK(kv.str().rfind("icpreg-report v1\n", 0) == 0);
        CHECK(kv.str().find("level.0.median_width=") != std::string::npos);
        write_report_table(table, report);
        CHECK(table.str().find("median width") != std::string::npos);
        write_width_csv(csv, report);
        CHECK(csv.str().rfind("confidence,p10,p25,median,p75,p90\n", 0) == 0);
    }
}

TEST_CASE("run_experiment validates its configuration early") {
    const Dataset data = synthetic::sine(300, 0.2, 5);
    ExperimentConfig config;
    config.plan.k = 2;
    config.plan.repeats = 1;
    config.plan.q = 99;
    config.significances = {0.005};  // rank 0 at q=99
    CHECK_THROWS_AS(run_experiment(data, config), InsufficientCalibrationError);

    config.significances = {0.10};
    config.plan.q = 199;  // larger than the training fold of 150
    CHECK_THROWS_AS(run_experiment(data, config), InvalidSplitError);

    config.plan.q = 99;
    config.significances = {};
    CHECK_THROWS_AS(run_experiment(data, config), InvalidInputError);
}
