#include "icp/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

namespace icp {

namespace {

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) {
        throw InvalidInputError(std::string(what) + " must be finite");
    }
}

}  // namespace

CalibrationScores CalibrationScores::build(std::vector<double> raw_scores) {
    if (raw_scores.empty()) {
        throw EmptyCalibrationError("calibration requires at least one nonconformity score");
    }
    for (double s : raw_scores) {
        if (!std::isfinite(s)) {
            throw InvalidInputError("nonconformity scores must be finite");
        }
        if (s < 0.0) {
            throw InvalidInputError("nonconformity scores must be non-negative");
        }
    }
    std::sort(raw_scores.begin(), raw_scores.end(), std::greater<double>());
    CalibrationScores out;
    out.scores_ = std::move(raw_scores);
    return out;
}

double CalibrationScores::kth_largest(std::size_t rank) const {
    if (rank < 1 || rank > scores_.size()) {
        throw InvalidInputError("calibration rank " + std::to_string(rank) +
                                " out of range [1, " + std::to_string(scores_.size()) + "]");
    }
    return scores_[rank - 1];
}

double score_absolute(double y, double y_hat) {
    require_finite(y, "label");
    require_finite(y_hat, "prediction");
    return std::abs(y - y_hat);
}

double score_normalized(double y, double y_hat, const NormalizationParams& norm) {
    require_finite(y, "label");
    require_finite(y_hat, "prediction");
    require_finite(norm.mu, "mu");
    require_finite(norm.beta, "beta");
    if (norm.beta < 0.0) {
        throw InvalidInputError("beta must be non-negative");
    }
    const double denom = std::exp(norm.mu) + norm.beta;
    if (!(denom > 0.0) || !std::isfinite(denom)) {
        throw DegenerateNormalizerError("exp(mu) + beta must be positive and finite");
    }
    return std::abs(y - y_hat) / denom;
}

std::size_t critical_index(double significance, std::size_t calibration_size) {
    if (!std::isfinite(significance) || significance <= 0.0 || significance >= 1.0) {
        throw InvalidInputError("significance must lie strictly between 0 and 1");
    }
    if (calibration_size < 1) {
        throw InvalidInputError("calibration size must be positive");
    }
    const auto rank = static_cast<std::size_t>(
        std::floor(significance * (static_cast<double>(calibration_size) + 1.0)));
    if (rank == 0) {
        // smallest q with a non-zero rank at this significance
        const auto needed = static_cast<std::size_t>(std::ceil(1.0 / significance - 1.0));
        throw InsufficientCalibrationError(
            "confidence too high for calibration size " + std::to_string(calibration_size) +
            "; increase q to at least " + std::to_string(needed));
    }
    if (rank > calibration_size) {
        throw DegenerateConfidenceError("significance yields rank beyond the calibration size");
    }
    return rank;
}

PredictionInterval interval_absolute(double y_hat, const CalibrationScores& calib,
                                     double significance) {
    require_finite(y_hat, "prediction");
    const std::size_t rank = critical_index(significance, calib.size());
    const double half_width = calib.kth_largest(rank);
    return {y_hat - half_width, y_hat + half_width, 1.0 - significance};
}

PredictionInterval interval_normalized(double y_hat, const NormalizationParams& norm,
                                       const CalibrationScores& calib, double significance) {
    require_finite(y_hat, "prediction");
    require_finite(norm.mu, "mu");
    require_finite(norm.beta, "beta");
    if (norm.beta < 0.0) {
        throw InvalidInputError("beta must be non-negative");
    }
    const double scale = std::exp(norm.mu) + norm.beta;
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw DegenerateNormalizerError("exp(mu) + beta must be positive and finite");
    }
    const std::size_t rank = critical_index(significance, calib.size());
    const double half_width = calib.kth_largest(rank) * scale;
    if (!std::isfinite(half_width)) {
        throw InvalidInputError("interval half-width overflowed");
    }
    return {y_hat - half_width, y_hat + half_width, 1.0 - significance};
}

double p_value(double candidate_score, const CalibrationScores& calib) {
    if (!std::isfinite(candidate_score) || candidate_score < 0.0) {
        throw InvalidInputError("candidate score must be finite and non-negative");
    }
    const auto& scores = calib.scores();
    // scores are descending; elements >= candidate form a prefix
    const auto first_below = std::upper_bound(scores.begin(), scores.end(), candidate_score,
                                              std::greater<double>());
    const auto at_least = static_cast<std::size_t>(first_below - scores.begin());
    return static_cast<double>(at_least + 1) / static_cast<double>(calib.size() + 1);
}

const char* measure_name(Measure m) {
    return m == Measure::absolute ? "absolute" : "normalized";
}

Measure measure_from_name(const std::string& name) {
    if (name == "absolute") return Measure::absolute;
    if (name == "normalized") return Measure::normalized;
    throw InvalidInputError("unknown measure '" + name + "' (expected absolute|normalized)");
}

}  // namespace icp
