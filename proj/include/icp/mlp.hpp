#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "icp/dataset.hpp"
#include "icp/errors.hpp"

namespace icp {

struct MlpConfig {
    int hidden_units = 8;
    int max_epochs = 500;
    int restarts = 10;
    double validation_fraction = 0.1;
    int patience = 20;
    std::uint64_t seed = 0;
};

/// Two-layer perceptron: one tanh hidden layer, single linear output.
/// Immutable in normal use; prediction is a deterministic forward pass.
class MlpRegressor {
public:
    MlpRegressor(int input_dim, int hidden_units);

    int input_dim() const { return static_cast<int>(hidden_weights_.cols()); }
    int hidden_units() const { return static_cast<int>(hidden_weights_.rows()); }
    int parameter_count() const;

    double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    Eigen::VectorXd predict_batch(const Eigen::Ref<const Eigen::MatrixXd>& X) const;

    /// Flat layout: hidden weights row by row, hidden biases, output
    /// weights, output bias. Serialization and training share it.
    Eigen::VectorXd parameters() const;
    void set_parameters(const Eigen::Ref<const Eigen::VectorXd>& theta);

    const Eigen::MatrixXd& hidden_weights() const { return hidden_weights_; }
    const Eigen::VectorXd& hidden_biases() const { return hidden_biases_; }
    const Eigen::VectorXd& output_weights() const { return output_weights_; }
    double output_bias() const { return output_bias_; }

private:
    Eigen::MatrixXd hidden_weights_;  // h x d
    Eigen::VectorXd hidden_biases_;   // h
    Eigen::VectorXd output_weights_;  // h
    double output_bias_ = 0.0;
};

class Rng;

/// Restart initialization: uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)]
/// per layer, drawn in flat-parameter order.
Eigen::VectorXd initial_mlp_parameters(int input_dim, int hidden_units, Rng& rng);

/// Mean squared error of the net on (X, y).
double mlp_loss(const MlpRegressor& net, const Eigen::Ref<const Eigen::MatrixXd>& X,
                const Eigen::Ref<const Eigen::VectorXd>& y);

/// Loss plus its gradient with respect to the flat parameter vector.
double mlp_loss_and_gradient(const MlpRegressor& net, const Eigen::Ref<const Eigen::MatrixXd>& X,
                             const Eigen::Ref<const Eigen::VectorXd>& y,
                             Eigen::VectorXd& gradient);

struct TrainResult {
    MlpRegressor model;
    double validation_mse = 0.0;                // of the selected restart
    std::vector<double> restart_validation_mse; // +inf marks a diverged restart
    int selected_restart = 0;
    int epochs_run = 0;                         // accepted epochs of the selected restart
};

/// Full-batch gradient descent with an adaptive step (grow on success,
/// backtrack on failure), early stopping on a held-out validation split,
/// best-of-restarts selection. Deterministic for a fixed config and data:
/// restart r initializes from seed + r, ties in validation MSE go to the
/// lowest restart index.
TrainResult train_mlp(const Dataset& proper_training, const MlpConfig& config);

}  // namespace icp
