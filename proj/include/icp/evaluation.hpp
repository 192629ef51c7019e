#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "icp/conformal.hpp"
#include "icp/dataset.hpp"
#include "icp/mlp.hpp"

namespace icp {

double rmse(const std::vector<double>& predictions, const std::vector<double>& labels);

/// Pearson correlation; either sequence having zero variance is an error.
double correlation(const std::vector<double>& predictions, const std::vector<double>& labels);

/// Sample quantile on sorted values: linear interpolation between order
/// statistics at position 1 + (n-1)p (1-indexed).
double quantile_sorted(const std::vector<double>& sorted_values, double p);

struct WidthStats {
    double median = 0.0;
    double interdecile_mean = 0.0;  // mean of values v with p10 <= v <= p90
    double p10 = 0.0;
    double p25 = 0.0;
    double p75 = 0.0;
    double p90 = 0.0;
};

WidthStats width_stats(const std::vector<double>& widths);

/// Percentage (0..100) of intervals missing their label; endpoints covered.
double miscoverage(const std::vector<PredictionInterval>& intervals,
                   const std::vector<double>& labels);

struct LevelReport {
    double significance = 0.0;
    double confidence = 0.0;
    WidthStats widths;
    double error_percentage = 0.0;
};

struct EvaluationReport {
    std::vector<LevelReport> levels;  // one per requested significance
    double rmse = 0.0;
    double correlation = 0.0;
    std::size_t total_predictions = 0;
    // configuration echo, so reports are self-describing
    std::string dataset_name;
    MeasureSpec measure;
    SplitPlan plan;
    MlpConfig mlp;
};

struct ExperimentConfig {
    MlpConfig mlp;
    SplitPlan plan;
    MeasureSpec measure;
    std::vector<double> significances = {0.10, 0.05, 0.01};
    int jobs = 1;  // 0 = hardware concurrency
    std::string dataset_name;
};

/// The full protocol: for every (repeat, fold) cell, scale on the training
/// fold, carve out the calibration set, train the underlying net, fit the
/// residual model when the normalized measure is requested, and produce one
/// interval per test example and significance. All cells pool into a single
/// report. Bit-reproducible for a fixed config; independent of `jobs`.
EvaluationReport run_experiment(const Dataset& dataset, const ExperimentConfig& config);

/// Human-readable summary table.
void write_report_table(std::ostream& out, const EvaluationReport& report);

/// Machine-readable key=value document, first line "icpreg-report v1".
/// Identical configurations produce byte-identical output.
void write_report_kv(std::ostream& out, const EvaluationReport& report);

/// Width distribution per confidence level as CSV (deciles, quartiles,
/// median), for external plotting.
void write_width_csv(std::ostream& out, const EvaluationReport& report);

}  // namespace icp
