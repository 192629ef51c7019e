#pragma once

#include <cstddef>
#include <vector>

#include "icp/errors.hpp"

namespace icp {

/// Parameters of the normalized nonconformity measure for one example:
/// the residual is divided by exp(mu) + beta, where mu is the predicted log
/// absolute residual and beta >= 0 controls how strongly that prediction
/// shapes the interval.
struct NormalizationParams {
    double mu = 0.0;
    double beta = 0.0;
};

struct PredictionInterval {
    double lower = 0.0;
    double upper = 0.0;
    double confidence = 0.0;  // 1 - significance

    double width() const { return upper - lower; }
    /// Labels exactly on an endpoint count as covered.
    bool covers(double label) const { return label >= lower && label <= upper; }
};

/// Nonconformity scores of the calibration set, sorted descending.
/// Immutable after construction.
class CalibrationScores {
public:
    /// Sorts a copy of the raw scores in descending order. Rejects empty
    /// input and any score that is negative or not finite.
    static CalibrationScores build(std::vector<double> raw_scores);

    std::size_t size() const { return scores_.size(); }

    /// rank-th largest score, 1-indexed (rank = 1 is the maximum).
    double kth_largest(std::size_t rank) const;

    const std::vector<double>& scores() const { return scores_; }

private:
    CalibrationScores() = default;
    std::vector<double> scores_;
};

/// |y - y_hat|
double score_absolute(double y, double y_hat);

/// |y - y_hat| / (exp(norm.mu) + norm.beta)
double score_normalized(double y, double y_hat, const NormalizationParams& norm);

/// Rank of the calibration score that bounds an interval at the given
/// significance: floor(significance * (q + 1)). Throws
/// InsufficientCalibrationError when the rank would be 0 (the interval
/// would be unbounded; a larger calibration set is needed) and
/// DegenerateConfidenceError when it exceeds the calibration size.
std::size_t critical_index(double significance, std::size_t calibration_size);

/// y_hat +/- a, where a is the critical calibration score.
PredictionInterval interval_absolute(double y_hat, const CalibrationScores& calib,
                                     double significance);

/// y_hat +/- a * (exp(norm.mu) + norm.beta); calib must hold normalized scores.
PredictionInterval interval_normalized(double y_hat, const NormalizationParams& norm,
                                       const CalibrationScores& calib, double significance);

/// Fraction of scores at least as large as the candidate's, counting the
/// candidate itself: (#{i : scores[i] >= candidate} + 1) / (q + 1).
/// Always a multiple of 1/(q+1) in [1/(q+1), 1].
double p_value(double candidate_score, const CalibrationScores& calib);

/// Which nonconformity measure an experiment or artifact uses.
enum class Measure { absolute, normalized };

struct MeasureSpec {
    Measure kind = Measure::absolute;
    double beta = 0.0;
    /// Residuals are clamped below at this value before taking logs when
    /// fitting the residual model (log of an exact zero is undefined).
    double min_residual = 1e-6;
};

const char* measure_name(Measure m);
Measure measure_from_name(const std::string& name);

}  // namespace icp
