#include "icp/residual.hpp"

#include <cmath>
#include <string>

namespace icp {

namespace {
constexpr double kRidgeDamping = 1e-8;
}

ResidualModel::ResidualModel(Eigen::VectorXd weights, double bias)
    : weights_(std::move(weights)), bias_(bias) {
    if (!weights_.allFinite() || !std::isfinite(bias_)) {
        throw InvalidInputError("residual model parameters must be finite");
    }
}

double ResidualModel::predict_mu(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (x.size() != weights_.size()) {
        throw InvalidInputError("input has " + std::to_string(x.size()) +
                                " attributes, residual model expects " +
                                std::to_string(weights_.size()));
    }
    return weights_.dot(x) + bias_;
}

Eigen::VectorXd ResidualModel::predict_mu_batch(const Eigen::Ref<const Eigen::MatrixXd>& X) const {
    if (X.cols() != weights_.size()) {
        throw InvalidInputError("input has " + std::to_string(X.cols()) +
                                " attributes, residual model expects " +
                                std::to_string(weights_.size()));
    }
    return (X * weights_).array() + bias_;
}

ResidualModel fit_residual_model(const Dataset& proper_training, const MlpRegressor& model,
                                 double min_residual) {
    if (proper_training.size() == 0) {
        throw InvalidInputError("cannot fit a residual model on an empty dataset");
    }
    if (!(min_residual > 0.0)) {
        throw InvalidInputError("min_residual must be positive");
    }

    const Eigen::Index n = proper_training.attributes.rows();
    const Eigen::Index d = proper_training.attributes.cols();

    const Eigen::VectorXd predictions = model.predict_batch(proper_training.attributes);
    Eigen::VectorXd targets(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double residual = std::abs(proper_training.labels(i) - predictions(i));
        targets(i) = std::log(std::max(residual, min_residual));
    }

    // design [1 | X]; ridge on the weight block only, so the intercept keeps
    // the exact least-squares mean property
    Eigen::MatrixXd design(n, d + 1);
    design.col(0).setOnes();
    design.rightCols(d) = proper_training.attributes;

    Eigen::MatrixXd normal = design.transpose() * design;
    normal.bottomRightCorner(d, d) += kRidgeDamping * Eigen::MatrixXd::Identity(d, d);
    const Eigen::VectorXd rhs = design.transpose() * targets;
    const Eigen::VectorXd solution = normal.ldlt().solve(rhs);

    if (!solution.allFinite()) {
        throw InvalidInputError("residual model fit produced non-finite parameters");
    }
    return {solution.tail(d), solution(0)};
}

}  // namespace icp
