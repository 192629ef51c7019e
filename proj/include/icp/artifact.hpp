#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "icp/conformal.hpp"
#include "icp/dataset.hpp"
#include "icp/mlp.hpp"
#include "icp/residual.hpp"

namespace icp {

/// Frozen output of a fit run: everything needed to produce intervals for
/// new inputs without retraining. Stored as versioned text; doubles are
/// written with 17 significant digits, so round-trips are exact.
struct ModelArtifact {
    MeasureSpec measure;
    ScalingParams scaling;
    MlpRegressor model;
    std::optional<ResidualModel> residual;  // present for the normalized measure
    CalibrationScores calibration;

    ModelArtifact(MeasureSpec measure_, ScalingParams scaling_, MlpRegressor model_,
                  std::optional<ResidualModel> residual_, CalibrationScores calibration_)
        : measure(measure_),
          scaling(std::move(scaling_)),
          model(std::move(model_)),
          residual(std::move(residual_)),
          calibration(std::move(calibration_)) {}

    /// Interval for one raw (unscaled) attribute vector.
    PredictionInterval predict_interval(const Eigen::Ref<const Eigen::VectorXd>& raw_attributes,
                                        double significance) const;
};

void write_artifact(std::ostream& out, const ModelArtifact& artifact);
ModelArtifact read_artifact(std::istream& in);

void save_artifact(const std::string& path, const ModelArtifact& artifact);
ModelArtifact load_artifact(const std::string& path);

}  // namespace icp
