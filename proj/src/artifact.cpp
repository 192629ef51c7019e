#include "icp/artifact.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace icp {

namespace {

constexpr const char* kMagic = "icpreg-artifact";
constexpr const char* kVersion = "v1";

void write_value(std::ostream& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
}

void write_vector(std::ostream& out, const char* tag, const Eigen::VectorXd& v) {
    out << tag << ' ' << v.size();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out << ' ';
        write_value(out, v(i));
    }
    out << '\n';
}

std::string expect_tag(std::istream& in, const std::string& expected) {
    std::string tag;
    if (!(in >> tag) || tag != expected) {
        throw ArtifactError("expected '" + expected + "' section, found '" + tag + "'");
    }
    return tag;
}

Eigen::VectorXd read_vector(std::istream& in, const std::string& tag) {
    expect_tag(in, tag);
    Eigen::Index size = 0;
    if (!(in >> size) || size < 0) {
        throw ArtifactError("bad size for section '" + tag + "'");
    }
    Eigen::VectorXd v(size);
    for (Eigen::Index i = 0; i < size; ++i) {
        if (!(in >> v(i))) {
            throw ArtifactError("truncated section '" + tag + "'");
        }
    }
    return v;
}

}  // namespace

PredictionInterval ModelArtifact::predict_interval(
    const Eigen::Ref<const Eigen::VectorXd>& raw_attributes, double significance) const {
    if (raw_attributes.size() != static_cast<Eigen::Index>(scaling.attribute_count())) {
        throw ArtifactError("input has " + std::to_string(raw_attributes.size()) +
                            " attributes, model expects " +
                            std::to_string(scaling.attribute_count()));
    }
    const Eigen::VectorXd x = apply_scaling_row(scaling, raw_attributes);
    const double y_hat = model.predict(x);
    if (measure.kind == Measure::normalized) {
        return interval_normalized(y_hat, {residual->predict_mu(x), measure.beta}, calibration,
                                   significance);
    }
    return interval_absolute(y_hat, calibration, significance);
}

void write_artifact(std::ostream& out, const ModelArtifact& artifact) {
    out << kMagic << ' ' << kVersion << '\n';
    out << "measure " << measure_name(artifact.measure.kind) << ' ';
    write_value(out, artifact.measure.beta);
    out << ' ';
    write_value(out, artifact.measure.min_residual);
    out << '\n';

    write_vector(out, "scaling_min", artifact.scaling.min);
    write_vector(out, "scaling_max", artifact.scaling.max);

    out << "mlp " << artifact.model.input_dim() << ' ' << artifact.model.hidden_units() << '\n';
    write_vector(out, "mlp_parameters", artifact.model.parameters());

    if (artifact.measure.kind == Measure::normalized) {
        write_vector(out, "residual_weights", artifact.residual->weights());
        out << "residual_bias ";
        write_value(out, artifact.residual->bias());
        out << '\n';
    }

    Eigen::VectorXd scores(static_cast<Eigen::Index>(artifact.calibration.size()));
    for (std::size_t i = 0; i < artifact.calibration.size(); ++i) {
        scores(static_cast<Eigen::Index>(i)) = artifact.calibration.scores()[i];
    }
    write_vector(out, "calibration_scores", scores);
    out << "end\n";
}

ModelArtifact read_artifact(std::istream& in) {
    std::string magic, version;
    if (!(in >> magic >> version) || magic != kMagic) {
        throw ArtifactError("not a model artifact (bad magic)");
    }
    if (version != kVersion) {
        throw ArtifactError("unsupported artifact version '" + version + "' (expected " +
                            kVersion + ")");
    }

    expect_tag(in, "measure");
    std::string measure_token;
    MeasureSpec measure;
    if (!(in >> measure_token >> measure.beta >> measure.min_residual)) {
        throw ArtifactError("truncated measure section");
    }
    measure.kind = measure_from_name(measure_token);

    ScalingParams scaling;
    scaling.min = read_vector(in, "scaling_min");
    scaling.max = read_vector(in, "scaling_max");
    if (scaling.min.size() != scaling.max.size()) {
        throw ArtifactError("scaling sections disagree on the attribute count");
    }

    expect_tag(in, "mlp");
    int input_dim = 0, hidden_units = 0;
    if (!(in >> input_dim >> hidden_units) || input_dim < 1 || hidden_units < 1) {
        throw ArtifactError("bad network shape");
    }
    if (input_dim != scaling.min.size()) {
        throw ArtifactError("network input dimension disagrees with the scaling section");
    }
    MlpRegressor model(input_dim, hidden_units);
    const Eigen::VectorXd theta = read_vector(in, "mlp_parameters");
    if (theta.size() != model.parameter_count()) {
        throw ArtifactError("parameter count mismatch for the stored network shape");
    }
    if (!theta.allFinite()) {
        throw ArtifactError("stored network parameters are not finite");
    }
    model.set_parameters(theta);

    std::optional<ResidualModel> residual;
    if (measure.kind == Measure::normalized) {
        const Eigen::VectorXd weights = read_vector(in, "residual_weights");
        if (weights.size() != input_dim) {
            throw ArtifactError("residual model dimension disagrees with the network");
        }
        expect_tag(in, "residual_bias");
        double bias = 0.0;
        if (!(in >> bias)) {
            throw ArtifactError("truncated residual section");
        }
        residual.emplace(weights, bias);
    }

    const Eigen::VectorXd score_values = read_vector(in, "calibration_scores");
    std::vector<double> scores(score_values.data(), score_values.data() + score_values.size());
    CalibrationScores calibration = CalibrationScores::build(std::move(scores));

    expect_tag(in, "end");
    return {measure, std::move(scaling), std::move(model), std::move(residual),
            std::move(calibration)};
}

void save_artifact(const std::string& path, const ModelArtifact& artifact) {
    std::ofstream out(path);
    if (!out) {
        throw ArtifactError("cannot open '" + path + "' for writing");
    }
    write_artifact(out, artifact);
    if (!out) {
        throw ArtifactError("failed while writing '" + path + "'");
    }
}

ModelArtifact load_artifact(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ArtifactError("cannot open '" + path + "'");
    }
    return read_artifact(in);
}

}  // namespace icp
