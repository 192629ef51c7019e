#include "icp/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <utility>

#include "icp/parallel.hpp"
#include "icp/residual.hpp"
#include "icp/rng.hpp"

namespace icp {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

template <typename E>
[[noreturn]] void rethrow_with_cell(const E& error, std::size_t repeat, std::size_t fold) {
    throw E("repeat " + std::to_string(repeat) + ", fold " + std::to_string(fold) + ": " +
            error.what());
}

[[noreturn]] void rethrow_in_context(std::exception_ptr ep, std::size_t repeat, std::size_t fold) {
    try {
        std::rethrow_exception(ep);
    } catch (const ParseError& e) {
        rethrow_with_cell(e, repeat, fold);
    } catch (const TrainingDivergedError& e) {
        rethrow_with_cell(e, repeat, fold);
    } catch (const InsufficientCalibrationError& e) {
        rethrow_with_cell(e, repeat, fold);
    } catch (const DegenerateConfidenceError& e) {
        rethrow_with_cell(e, repeat, fold);
    } catch (const InvalidSplitError& e) {
        rethrow_with_cell(e, repeat, fold);
    } catch (const DegenerateNormalizerError& e) {
        rethrow_with_cell(e, repeat, fold);
    } catch (const EmptyCalibrationError& e) {
        rethrow_with_cell(e, repeat, fold);
    } catch (const InvalidInputError& e) {
        rethrow_with_cell(e, repeat, fold);
    } catch (const Error& e) {
        rethrow_with_cell(e, repeat, fold);
    } catch (const std::exception& e) {
        throw Error("repeat " + std::to_string(repeat) + ", fold " + std::to_string(fold) + ": " +
                    e.what());
    }
}

struct CellOutcome {
    std::vector<double> predictions;
    std::vector<double> labels;
    std::vector<std::vector<double>> widths;   // per significance level
    std::vector<std::size_t> missed;           // per significance level
};

CellOutcome run_cell(const Dataset& dataset, const ExperimentConfig& config,
                     const FoldIndices& fold, std::size_t repeat, std::size_t fold_idx) {
    const Dataset train_fold = dataset.subset(fold.train);
    const Dataset test_fold = dataset.subset(fold.test);

    const ScalingParams scaling = fit_scaling(train_fold);
    const Dataset train_scaled = apply_scaling(scaling, train_fold);
    const Dataset test_scaled = apply_scaling(scaling, test_fold);

    const IcpSplit split = split_icp(
        train_scaled, config.plan.q,
        derive_seed(config.plan.seed, {0xCA11Bu, repeat, fold_idx}));

    MlpConfig cell_mlp = config.mlp;
    cell_mlp.seed = derive_seed(config.mlp.seed, {0x7EA1u, repeat, fold_idx});
    const TrainResult trained = train_mlp(split.proper_training, cell_mlp);

    const Eigen::VectorXd calib_pred = trained.model.predict_batch(split.calibration.attributes);

    std::vector<double> scores(split.calibration.size());
    Eigen::VectorXd calib_mu;
    ResidualModel residual_model{Eigen::VectorXd::Zero(1), 0.0};
    const bool normalized = config.measure.kind == Measure::normalized;
    if (normalized) {
        residual_model = fit_residual_model(split.proper_training, trained.model,
                                            config.measure.min_residual);
        calib_mu = residual_model.predict_mu_batch(split.calibration.attributes);
    }
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const auto idx = static_cast<Eigen::Index>(i);
        scores[i] = normalized
                        ? score_normalized(split.calibration.labels(idx), calib_pred(idx),
                                           {calib_mu(idx), config.measure.beta})
                        : score_absolute(split.calibration.labels(idx), calib_pred(idx));
    }
    const CalibrationScores calibration = CalibrationScores::build(std::move(scores));

    const Eigen::VectorXd test_pred = trained.model.predict_batch(test_scaled.attributes);
    Eigen::VectorXd test_mu;
    if (normalized) {
        test_mu = residual_model.predict_mu_batch(test_scaled.attributes);
    }

    CellOutcome outcome;
    const std::size_t n_test = test_scaled.size();
    outcome.predictions.resize(n_test);
    outcome.labels.resize(n_test);
    for (std::size_t i = 0; i < n_test; ++i) {
        outcome.predictions[i] = test_pred(static_cast<Eigen::Index>(i));
        outcome.labels[i] = test_scaled.labels(static_cast<Eigen::Index>(i));
    }
    outcome.widths.resize(config.significances.size());
    outcome.missed.assign(config.significances.size(), 0);
    for (std::size_t s = 0; s < config.significances.size(); ++s) {
        const double significance = config.significances[s];
        outcome.widths[s].resize(n_test);
        for (std::size_t i = 0; i < n_test; ++i) {
            const auto idx = static_cast<Eigen::Index>(i);
            const PredictionInterval interval =
                normalized ? interval_normalized(test_pred(idx),
                                                 {test_mu(idx), config.measure.beta},
                                                 calibration, significance)
                           : interval_absolute(test_pred(idx), calibration, significance);
            outcome.widths[s][i] = interval.width();
            if (!interval.covers(test_scaled.labels(idx))) ++outcome.missed[s];
        }
    }
    return outcome;
}

}  // namespace

double rmse(const std::vector<double>& predictions, const std::vector<double>& labels) {
    if (predictions.size() != labels.size()) {
        throw InvalidInputError("rmse: length mismatch");
    }
    if (predictions.empty()) {
        throw InvalidInputError("rmse: empty input");
    }
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions[i] - labels[i];
        sum_sq += d * d;
    }
    return std::sqrt(sum_sq / static_cast<double>(predictions.size()));
}

double correlation(const std::vector<double>& predictions, const std::vector<double>& labels) {
    if (predictions.size() != labels.size()) {
        throw InvalidInputError("correlation: length mismatch");
    }
    if (predictions.empty()) {
        throw InvalidInputError("correlation: empty input");
    }
    const auto n = static_cast<double>(predictions.size());
    double mean_p = 0.0, mean_l = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        mean_p += predictions[i];
        mean_l += labels[i];
    }
    mean_p /= n;
    mean_l /= n;
    double cov = 0.0, var_p = 0.0, var_l = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double dp = predictions[i] - mean_p;
        const double dl = labels[i] - mean_l;
        cov += dp * dl;
        var_p += dp * dp;
        var_l += dl * dl;
    }
    if (var_p == 0.0 || var_l == 0.0) {
        throw InvalidInputError("correlation: degenerate input (zero variance)");
    }
    return cov / std::sqrt(var_p * var_l);
}

double quantile_sorted(const std::vector<double>& sorted_values, double p) {
    if (sorted_values.empty()) {
        throw InvalidInputError("quantile of an empty sequence");
    }
    if (!(p >= 0.0 && p <= 1.0)) {
        throw InvalidInputError("quantile level must lie in [0, 1]");
    }
    const double position = (static_cast<double>(sorted_values.size()) - 1.0) * p;
    const auto below = static_cast<std::size_t>(std::floor(position));
    const auto above = static_cast<std::size_t>(std::ceil(position));
    if (below == above) return sorted_values[below];
    const double weight = position - static_cast<double>(below);
    return sorted_values[below] * (1.0 - weight) + sorted_values[above] * weight;
}

WidthStats width_stats(const std::vector<double>& widths) {
    if (widths.empty()) {
        throw InvalidInputError("width statistics need at least one value");
    }
    std::vector<double> sorted = widths;
    std::sort(sorted.begin(), sorted.end());

    WidthStats stats;
    stats.p10 = quantile_sorted(sorted, 0.10);
    stats.p25 = quantile_sorted(sorted, 0.25);
    stats.median = quantile_sorted(sorted, 0.50);
    stats.p75 = quantile_sorted(sorted, 0.75);
    stats.p90 = quantile_sorted(sorted, 0.90);

    double sum = 0.0;
    std::size_t count = 0;
    for (double v : sorted) {
        if (v >= stats.p10 && v <= stats.p90) {
            sum += v;
            ++count;
        }
    }
    stats.interdecile_mean = sum / static_cast<double>(count);
    return stats;
}

double miscoverage(const std::vector<PredictionInterval>& intervals,
                   const std::vector<double>& labels) {
    if (intervals.size() != labels.size()) {
        throw InvalidInputError("miscoverage: length mismatch");
    }
    if (intervals.empty()) {
        throw InvalidInputError("miscoverage: empty input");
    }
    std::size_t missed = 0;
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        if (!intervals[i].covers(labels[i])) ++missed;
    }
    return 100.0 * static_cast<double>(missed) / static_cast<double>(intervals.size());
}

EvaluationReport run_experiment(const Dataset& dataset, const ExperimentConfig& config) {
    const std::size_t n = dataset.size();
    if (config.significances.empty()) {
        throw InvalidInputError("at least one significance level is required");
    }
    // fail fast on rank problems before any training happens
    for (double s : config.significances) {
        (void)critical_index(s, config.plan.q);
    }
    const auto folds = kfold_plan(n, config.plan);
    const std::size_t k = static_cast<std::size_t>(config.plan.k);
    const std::size_t min_train_fold = n - (n / k + (n % k ? 1 : 0));
    if (config.plan.q >= min_train_fold) {
        throw InvalidSplitError("calibration size q=" + std::to_string(config.plan.q) +
                                " must be smaller than the training fold size " +
                                std::to_string(min_train_fold));
    }

    const std::size_t cells = static_cast<std::size_t>(config.plan.repeats) * k;
    std::vector<CellOutcome> outcomes(cells);
    parallel_for(cells, config.jobs, [&](std::size_t cell) {
        const std::size_t repeat = cell / k;
        const std::size_t fold_idx = cell % k;
        try {
            outcomes[cell] =
                run_cell(dataset, config, folds[repeat][fold_idx], repeat, fold_idx);
        } catch (...) {
            rethrow_in_context(std::current_exception(), repeat, fold_idx);
        }
    });

    // deterministic ordered reduction
    std::vector<double> all_predictions, all_labels;
    std::vector<std::vector<double>> all_widths(config.significances.size());
    std::vector<std::size_t> all_missed(config.significances.size(), 0);
    for (const auto& outcome : outcomes) {
        all_predictions.insert(all_predictions.end(), outcome.predictions.begin(),
                               outcome.predictions.end());
        all_labels.insert(all_labels.end(), outcome.labels.begin(), outcome.labels.end());
        for (std::size_t s = 0; s < config.significances.size(); ++s) {
            all_widths[s].insert(all_widths[s].end(), outcome.widths[s].begin(),
                                 outcome.widths[s].end());
            all_missed[s] += outcome.missed[s];
        }
    }

    EvaluationReport report;
    report.dataset_name = config.dataset_name;
    report.measure = config.measure;
    report.plan = config.plan;
    report.mlp = config.mlp;
    report.total_predictions = all_predictions.size();
    report.rmse = rmse(all_predictions, all_labels);
    report.correlation = correlation(all_predictions, all_labels);
    for (std::size_t s = 0; s < config.significances.size(); ++s) {
        LevelReport level;
        level.significance = config.significances[s];
        level.confidence = 1.0 - config.significances[s];
        level.widths = width_stats(all_widths[s]);
        level.error_percentage = 100.0 * static_cast<double>(all_missed[s]) /
                                 static_cast<double>(all_predictions.size());
        report.levels.push_back(level);
    }
    return report;
}

void write_report_table(std::ostream& out, const EvaluationReport& report) {
    char line[256];
    out << "dataset: " << report.dataset_name << "  measure: " << measure_name(report.measure.kind);
    if (report.measure.kind == Measure::normalized) {
        std::snprintf(line, sizeof(line), " (beta=%g)", report.measure.beta);
        out << line;
    }
    std::snprintf(line, sizeof(line), "  k=%d repeats=%d q=%zu seed=%llu\n", report.plan.k,
                  report.plan.repeats, report.plan.q,
                  static_cast<unsigned long long>(report.plan.seed));
    out << line;
    std::snprintf(line, sizeof(line), "rmse %.4f  correlation %.4f  (%zu test predictions)\n",
                  report.rmse, report.correlation, report.total_predictions);
    out << line;

    out << "confidence        ";
    for (const auto& level : report.levels) {
        std::snprintf(line, sizeof(line), "%11.4g%%", 100.0 * level.confidence);
        out << line;
    }
    out << "\nmedian width      ";
    for (const auto& level : report.levels) {
        std::snprintf(line, sizeof(line), "%12.4f", level.widths.median);
        out << line;
    }
    out << "\ninterdecile mean  ";
    for (const auto& level : report.levels) {
        std::snprintf(line, sizeof(line), "%12.4f", level.widths.interdecile_mean);
        out << line;
    }
    out << "\nerrors (%)        ";
    for (const auto& level : report.levels) {
        std::snprintf(line, sizeof(line), "%12.2f", level.error_percentage);
        out << line;
    }
    out << "\n";
}

void write_report_kv(std::ostream& out, const EvaluationReport& report) {
    out << "icpreg-report v1\n";
    out << "dataset=" << report.dataset_name << "\n";
    out << "measure=" << measure_name(report.measure.kind) << "\n";
    out << "beta=" << fmt_double(report.measure.beta) << "\n";
    out << "min_residual=" << fmt_double(report.measure.min_residual) << "\n";
    out << "k=" << report.plan.k << "\n";
    out << "repeats=" << report.plan.repeats << "\n";
    out << "q=" << report.plan.q << "\n";
    out << "seed=" << report.plan.seed << "\n";
    out << "hidden_units=" << report.mlp.hidden_units << "\n";
    out << "restarts=" << report.mlp.restarts << "\n";
    out << "max_epochs=" << report.mlp.max_epochs << "\n";
    out << "patience=" << report.mlp.patience << "\n";
    out << "validation_fraction=" << fmt_double(report.mlp.validation_fraction) << "\n";
    out << "total_predictions=" << report.total_predictions << "\n";
    out << "rmse=" << fmt_double(report.rmse) << "\n";
    out << "correlation=" << fmt_double(report.correlation) << "\n";
    for (std::size_t i = 0; i < report.levels.size(); ++i) {
        const auto& level = report.levels[i];
        const std::string prefix = "level." + std::to_string(i) + ".";
        out << prefix << "significance=" << fmt_double(level.significance) << "\n";
        out << prefix << "confidence=" << fmt_double(level.confidence) << "\n";
        out << prefix << "median_width=" << fmt_double(level.widths.median) << "\n";
        out << prefix << "interdecile_mean_width=" << fmt_double(level.widths.interdecile_mean)
            << "\n";
        out << prefix << "error_percentage=" << fmt_double(level.error_percentage) << "\n";
        out << prefix << "width_p10=" << fmt_double(level.widths.p10) << "\n";
        out << prefix << "width_p25=" << fmt_double(level.widths.p25) << "\n";
        out << prefix << "width_p75=" << fmt_double(level.widths.p75) << "\n";
        out << prefix << "width_p90=" << fmt_double(level.widths.p90) << "\n";
    }
}

void write_width_csv(std::ostream& out, const EvaluationReport& report) {
    out << "confidence,p10,p25,median,p75,p90\n";
    for (const auto& level : report.levels) {
        out << fmt_double(level.confidence) << ',' << fmt_double(level.widths.p10) << ','
            << fmt_double(level.widths.p25) << ',' << fmt_double(level.widths.median) << ','
            << fmt_double(level.widths.p75) << ',' << fmt_double(level.widths.p90) << "\n";
    }
}

}  // namespace icp
