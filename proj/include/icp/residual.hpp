#pragma once

#include <Eigen/Dense>

#include "icp/dataset.hpp"
#include "icp/mlp.hpp"

namespace icp {

/// Linear model of the log absolute residual of the underlying regressor.
/// Supplies mu for the normalized nonconformity measure.
class ResidualModel {
public:
    ResidualModel(Eigen::VectorXd weights, double bias);

    int input_dim() const { return static_cast<int>(weights_.size()); }

    double predict_mu(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    Eigen::VectorXd predict_mu_batch(const Eigen::Ref<const Eigen::MatrixXd>& X) const;

    const Eigen::VectorXd& weights() const { return weights_; }
    double bias() const { return bias_; }

private:
    Eigen::VectorXd weights_;
    double bias_;
};

/// Least-squares fit of ln(max(|y_j - y_hat_j|, min_residual)) against the
/// attributes, with an intercept. A tiny ridge term (1e-8) on the
/// non-intercept weights keeps singular designs solvable, so the fit never
/// hard-fails.
ResidualModel fit_residual_model(const Dataset& proper_training, const MlpRegressor& model,
                                 double min_residual = 1e-6);

}  // namespace icp
