#include "icp/mlp.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "icp/rng.hpp"

namespace icp {

namespace {

// resilient backpropagation (iRprop-): per-parameter step sizes adapt to
// gradient sign agreement, which handles the poor conditioning between the
// layers far better than a single global step
constexpr double kInitialStep = 0.01;
constexpr double kStepGrowth = 1.2;
constexpr double kStepShrink = 0.5;
constexpr double kStepMax = 1.0;
constexpr double kStepMin = 1e-12;

struct ValidationSplit {
    Eigen::MatrixXd train_x, val_x;
    Eigen::VectorXd train_y, val_y;
};

ValidationSplit make_validation_split(const Dataset& data, double fraction, std::uint64_t seed) {
    const std::size_t n = data.size();
    auto val_count = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(n)));
    if (val_count < 1) val_count = 1;
    if (val_count >= n) val_count = n - 1;

    Rng rng(derive_seed(seed, {0x5A1Du}));
    const std::vector<std::size_t> order = rng.permutation(n);

    ValidationSplit split;
    const std::size_t train_count = n - val_count;
    split.train_x.resize(static_cast<Eigen::Index>(train_count), data.attributes.cols());
    split.train_y.resize(static_cast<Eigen::Index>(train_count));
    split.val_x.resize(static_cast<Eigen::Index>(val_count), data.attributes.cols());
    split.val_y.resize(static_cast<Eigen::Index>(val_count));
    for (std::size_t i = 0; i < train_count; ++i) {
        split.train_x.row(static_cast<Eigen::Index>(i)) =
            data.attributes.row(static_cast<Eigen::Index>(order[i]));
        split.train_y(static_cast<Eigen::Index>(i)) =
            data.labels(static_cast<Eigen::Index>(order[i]));
    }
    for (std::size_t i = 0; i < val_count; ++i) {
        split.val_x.row(static_cast<Eigen::Index>(i)) =
            data.attributes.row(static_cast<Eigen::Index>(order[train_count + i]));
        split.val_y(static_cast<Eigen::Index>(i)) =
            data.labels(static_cast<Eigen::Index>(order[train_count + i]));
    }
    return split;
}

struct RestartOutcome {
    Eigen::VectorXd theta;
    double validation_mse = std::numeric_limits<double>::infinity();
    int epochs = 0;
    bool diverged = false;
};

RestartOutcome run_restart(const ValidationSplit& split, int input_dim, const MlpConfig& config,
                           std::uint64_t restart_seed) {
    RestartOutcome outcome;
    Rng rng(restart_seed);
    MlpRegressor net(input_dim, config.hidden_units);
    Eigen::VectorXd theta = initial_mlp_parameters(input_dim, config.hidden_units, rng);
    net.set_parameters(theta);

    Eigen::VectorXd gradient;
    double train_loss = mlp_loss_and_gradient(net, split.train_x, split.train_y, gradient);
    if (!std::isfinite(train_loss) || !gradient.allFinite()) {
        outcome.diverged = true;
        return outcome;
    }

    Eigen::VectorXd steps = Eigen::VectorXd::Constant(theta.size(), kInitialStep);
    Eigen::VectorXd previous_gradient = Eigen::VectorXd::Zero(theta.size());
    double best_val = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_theta = theta;
    int best_epoch = 0;
    int epochs_since_best = 0;

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        for (Eigen::Index i = 0; i < theta.size(); ++i) {
            const double agreement = gradient(i) * previous_gradient(i);
            if (agreement > 0.0) {
                steps(i) = std::min(steps(i) * kStepGrowth, kStepMax);
            } else if (agreement < 0.0) {
                steps(i) = std::max(steps(i) * kStepShrink, kStepMin);
                gradient(i) = 0.0;  // skip the update that just overshot
            }
            if (gradient(i) > 0.0) {
                theta(i) -= steps(i);
            } else if (gradient(i) < 0.0) {
                theta(i) += steps(i);
            }
        }
        previous_gradient = gradient;

        net.set_parameters(theta);
        train_loss = mlp_loss_and_gradient(net, split.train_x, split.train_y, gradient);
        if (!std::isfinite(train_loss) || !gradient.allFinite()) {
            outcome.diverged = true;
            return outcome;
        }

        const double val_mse = mlp_loss(net, split.val_x, split.val_y);
        if (!std::isfinite(val_mse)) {
            outcome.diverged = true;
            return outcome;
        }
        if (val_mse < best_val) {
            best_val = val_mse;
            best_theta = theta;
            best_epoch = epoch;
            epochs_since_best = 0;
        } else if (++epochs_since_best >= config.patience) {
            break;
        }
    }

    // epoch 1 always runs and sets the best snapshot (max_epochs >= 1)
    outcome.theta = std::move(best_theta);
    outcome.validation_mse = best_val;
    outcome.epochs = best_epoch;
    return outcome;
}

}  // namespace

Eigen::VectorXd initial_mlp_parameters(int input_dim, int hidden_units, Rng& rng) {
    const double hidden_bound = 1.0 / std::sqrt(static_cast<double>(input_dim));
    const double output_bound = 1.0 / std::sqrt(static_cast<double>(hidden_units));
    const int n_hidden = hidden_units * input_dim + hidden_units;
    Eigen::VectorXd theta(n_hidden + hidden_units + 1);
    for (int i = 0; i < n_hidden; ++i) theta(i) = rng.next_uniform(-hidden_bound, hidden_bound);
    for (Eigen::Index i = n_hidden; i < theta.size(); ++i)
        theta(i) = rng.next_uniform(-output_bound, output_bound);
    return theta;
}

MlpRegressor::MlpRegressor(int input_dim, int hidden_units) {
    if (input_dim < 1 || hidden_units < 1) {
        throw InvalidInputError("network needs at least one input and one hidden unit");
    }
    hidden_weights_ = Eigen::MatrixXd::Zero(hidden_units, input_dim);
    hidden_biases_ = Eigen::VectorXd::Zero(hidden_units);
    output_weights_ = Eigen::VectorXd::Zero(hidden_units);
}

int MlpRegressor::parameter_count() const {
    return hidden_units() * input_dim() + 2 * hidden_units() + 1;
}

double MlpRegressor::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (x.size() != hidden_weights_.cols()) {
        throw InvalidInputError("input has " + std::to_string(x.size()) +
                                " attributes, network expects " +
                                std::to_string(hidden_weights_.cols()));
    }
    const Eigen::VectorXd hidden = ((hidden_weights_ * x) + hidden_biases_).array().tanh();
    return output_weights_.dot(hidden) + output_bias_;
}

Eigen::VectorXd MlpRegressor::predict_batch(const Eigen::Ref<const Eigen::MatrixXd>& X) const {
    if (X.cols() != hidden_weights_.cols()) {
        throw InvalidInputError("input has " + std::to_string(X.cols()) +
                                " attributes, network expects " +
                                std::to_string(hidden_weights_.cols()));
    }
    const Eigen::MatrixXd hidden =
        ((X * hidden_weights_.transpose()).rowwise() + hidden_biases_.transpose())
            .array()
            .tanh();
    return (hidden * output_weights_).array() + output_bias_;
}

Eigen::VectorXd MlpRegressor::parameters() const {
    Eigen::VectorXd theta(parameter_count());
    Eigen::Index pos = 0;
    for (Eigen::Index r = 0; r < hidden_weights_.rows(); ++r) {
        theta.segment(pos, hidden_weights_.cols()) = hidden_weights_.row(r);
        pos += hidden_weights_.cols();
    }
    theta.segment(pos, hidden_biases_.size()) = hidden_biases_;
    pos += hidden_biases_.size();
    theta.segment(pos, output_weights_.size()) = output_weights_;
    pos += output_weights_.size();
    theta(pos) = output_bias_;
    return theta;
}

void MlpRegressor::set_parameters(const Eigen::Ref<const Eigen::VectorXd>& theta) {
    if (theta.size() != parameter_count()) {
        throw InvalidInputError("expected " + std::to_string(parameter_count()) +
                                " parameters, got " + std::to_string(theta.size()));
    }
    Eigen::Index pos = 0;
    for (Eigen::Index r = 0; r < hidden_weights_.rows(); ++r) {
        hidden_weights_.row(r) = theta.segment(pos, hidden_weights_.cols());
        pos += hidden_weights_.cols();
    }
    hidden_biases_ = theta.segment(pos, hidden_biases_.size());
    pos += hidden_biases_.size();
    output_weights_ = theta.segment(pos, output_weights_.size());
    pos += output_weights_.size();
    output_bias_ = theta(pos);
}

double mlp_loss(const MlpRegressor& net, const Eigen::Ref<const Eigen::MatrixXd>& X,
                const Eigen::Ref<const Eigen::VectorXd>& y) {
    const Eigen::VectorXd residual = net.predict_batch(X) - y;
    return residual.squaredNorm() / static_cast<double>(X.rows());
}

double mlp_loss_and_gradient(const MlpRegressor& net, const Eigen::Ref<const Eigen::MatrixXd>& X,
                             const Eigen::Ref<const Eigen::VectorXd>& y,
                             Eigen::VectorXd& gradient) {
    const auto m = static_cast<double>(X.rows());
    const Eigen::MatrixXd hidden =
        ((X * net.hidden_weights().transpose()).rowwise() + net.hidden_biases().transpose())
            .array()
            .tanh();
    const Eigen::VectorXd predictions = (hidden * net.output_weights()).array() + net.output_bias();
    const Eigen::VectorXd residual = predictions - y;
    const double loss = residual.squaredNorm() / m;

    const Eigen::VectorXd d_pred = (2.0 / m) * residual;
    const Eigen::VectorXd d_output_weights = hidden.transpose() * d_pred;
    const double d_output_bias = d_pred.sum();
    // tanh' = 1 - tanh^2
    const Eigen::MatrixXd d_pre =
        (d_pred * net.output_weights().transpose()).array() * (1.0 - hidden.array().square());
    const Eigen::MatrixXd d_hidden_weights = d_pre.transpose() * X;
    const Eigen::VectorXd d_hidden_biases = d_pre.colwise().sum();

    gradient.resize(net.parameter_count());
    Eigen::Index pos = 0;
    for (Eigen::Index r = 0; r < d_hidden_weights.rows(); ++r) {
        gradient.segment(pos, d_hidden_weights.cols()) = d_hidden_weights.row(r);
        pos += d_hidden_weights.cols();
    }
    gradient.segment(pos, d_hidden_biases.size()) = d_hidden_biases;
    pos += d_hidden_biases.size();
    gradient.segment(pos, d_output_weights.size()) = d_output_weights;
    pos += d_output_weights.size();
    gradient(pos) = d_output_bias;
    return loss;
}

TrainResult train_mlp(const Dataset& proper_training, const MlpConfig& config) {
    if (config.hidden_units < 1) throw InvalidInputError("hidden_units must be >= 1");
    if (config.restarts < 1) throw InvalidInputError("restarts must be >= 1");
    if (config.max_epochs < 1) throw InvalidInputError("max_epochs must be >= 1");
    if (config.patience < 1) throw InvalidInputError("patience must be >= 1");
    if (!(config.validation_fraction > 0.0 && config.validation_fraction < 1.0)) {
        throw InvalidInputError("validation_fraction must lie in (0, 1)");
    }
    if (proper_training.size() < 10) {
        throw InvalidInputError("training needs at least 10 examples, got " +
                                std::to_string(proper_training.size()));
    }
    if (!proper_training.labels.allFinite() || !proper_training.attributes.allFinite()) {
        throw InvalidInputError("training data must be finite");
    }

    // one validation split shared by all restarts, so their scores compare
    const ValidationSplit split =
        make_validation_split(proper_training, config.validation_fraction, config.seed);
    const int input_dim = static_cast<int>(proper_training.attribute_count());

    std::vector<RestartOutcome> outcomes(static_cast<std::size_t>(config.restarts));
    for (int r = 0; r < config.restarts; ++r) {
        outcomes[static_cast<std::size_t>(r)] =
            run_restart(split, input_dim, config, config.seed + static_cast<std::uint64_t>(r));
    }

    int best = -1;
    for (int r = 0; r < config.restarts; ++r) {
        const auto& o = outcomes[static_cast<std::size_t>(r)];
        if (o.diverged) continue;
        if (best < 0 || o.validation_mse < outcomes[static_cast<std::size_t>(best)].validation_mse) {
            best = r;
        }
    }
    if (best < 0) {
        throw TrainingDivergedError("all " + std::to_string(config.restarts) +
                                    " restarts produced non-finite losses");
    }

    TrainResult result{MlpRegressor(input_dim, config.hidden_units), 0.0, {}, 0, 0};
    result.model.set_parameters(outcomes[static_cast<std::size_t>(best)].theta);
    result.validation_mse = outcomes[static_cast<std::size_t>(best)].validation_mse;
    result.selected_restart = best;
    result.epochs_run = outcomes[static_cast<std::size_t>(best)].epochs;
    result.restart_validation_mse.reserve(outcomes.size());
    for (const auto& o : outcomes) result.restart_validation_mse.push_back(o.validation_mse);
    return result;
}

}  // namespace icp
