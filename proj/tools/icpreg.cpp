// icpreg: prediction intervals for regression with guaranteed calibration.
//
// Subcommands:
//   run      full cross-validation benchmark, writes report files
//   fit      train once on a CSV, write a model artifact
//   predict  intervals for new inputs from a stored artifact (no retraining)
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 training/numeric
// failure.

#include <CLI11.hpp>

#include <Eigen/Dense>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "icp/artifact.hpp"
#include "icp/conformal.hpp"
#include "icp/dataset.hpp"
#include "icp/evaluation.hpp"
#include "icp/mlp.hpp"
#include "icp/residual.hpp"
#include "icp/rng.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitTraining = 3;

struct CommonOptions {
    std::string data_path;
    std::string label_column;
    bool has_header = false;
    std::size_t q = 0;
    int hidden_units = 8;
    std::string measure = "absolute";
    double beta = 0.0;
    std::uint64_t seed = 42;
    int restarts = 10;
    int max_epochs = 500;
    int patience = 20;
    double validation_fraction = 0.1;
};

void add_training_flags(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--data", opts.data_path, "input CSV file")->required();
    cmd->add_option("--label", opts.label_column,
                    "label column: name (with --header) or 0-based index; default last");
    cmd->add_flag("--header", opts.has_header, "first CSV line is a header");
    cmd->add_option("--q", opts.q, "calibration set size (must be 100n-1)")->required();
    cmd->add_option("--hidden", opts.hidden_units, "hidden units of the underlying network");
    cmd->add_option("--measure", opts.measure, "nonconformity measure: absolute|normalized")
        ->check(CLI::IsMember({"absolute", "normalized"}));
    cmd->add_option("--beta", opts.beta, "sensitivity constant of the normalized measure");
    cmd->add_option("--seed", opts.seed, "master seed; all randomness derives from it");
    cmd->add_option("--restarts", opts.restarts, "random restarts per trained network");
    cmd->add_option("--max-epochs", opts.max_epochs, "epoch cap per restart");
    cmd->add_option("--patience", opts.patience, "early-stopping patience (epochs)");
    cmd->add_option("--validation-fraction", opts.validation_fraction,
                    "share of proper training held out for early stopping");
}

icp::MlpConfig make_mlp_config(const CommonOptions& opts) {
    icp::MlpConfig config;
    config.hidden_units = opts.hidden_units;
    config.max_epochs = opts.max_epochs;
    config.restarts = opts.restarts;
    config.validation_fraction = opts.validation_fraction;
    config.patience = opts.patience;
    config.seed = icp::derive_seed(opts.seed, {0x331Au});
    return config;
}

icp::MeasureSpec make_measure(const CommonOptions& opts) {
    icp::MeasureSpec measure;
    measure.kind = icp::measure_from_name(opts.measure);
    measure.beta = opts.beta;
    return measure;
}

void require_canonical_q(std::size_t q) {
    if (!icp::is_canonical_calibration_size(q)) {
        throw icp::InvalidInputError(
            "calibration size q=" + std::to_string(q) +
            " rejected: must be of the form 100n-1 (99, 199, 299, ...)");
    }
}

int cmd_run(const CommonOptions& opts, int k, int repeats,
            const std::vector<double>& significances, const std::string& out_prefix, int jobs,
            const std::string& indices_path) {
    require_canonical_q(opts.q);

    icp::ExperimentConfig config;
    config.mlp = make_mlp_config(opts);
    config.measure = make_measure(opts);
    config.plan.k = k;
    config.plan.repeats = repeats;
    config.plan.q = opts.q;
    config.plan.seed = icp::derive_seed(opts.seed, {0x9EEDu});
    if (!significances.empty()) {
        for (double s : significances) {
            if (!(s > 0.0 && s < 1.0)) {
                throw icp::InvalidInputError("--delta values must lie strictly between 0 and 1");
            }
        }
        config.significances = significances;
    }
    config.jobs = jobs;
    config.dataset_name = opts.data_path;

    icp::CsvOptions csv;
    csv.has_header = opts.has_header;
    csv.label_column = opts.label_column;
    const icp::Dataset dataset = icp::load_csv(opts.data_path, csv);

    if (!indices_path.empty()) {
        const auto folds = icp::kfold_plan(dataset.size(), config.plan);
        std::vector<std::vector<std::size_t>> test_lists;
        for (const auto& repeat : folds) {
            for (const auto& fold : repeat) test_lists.push_back(fold.test);
        }
        icp::write_index_lists(indices_path, test_lists,
                               "test-fold indices, repeat-major, one fold per line");
    }

    const icp::EvaluationReport report = icp::run_experiment(dataset, config);

    icp::write_report_table(std::cout, report);

    const std::string table_path = out_prefix + ".report.txt";
    const std::string kv_path = out_prefix + ".report.kv";
    const std::string widths_path = out_prefix + ".widths.csv";
    {
        std::ofstream out(table_path);
        if (!out) throw icp::ParseError("cannot open '" + table_path + "' for writing");
        icp::write_report_table(out, report);
    }
    {
        std::ofstream out(kv_path);
        if (!out) throw icp::ParseError("cannot open '" + kv_path + "' for writing");
        icp::write_report_kv(out, report);
    }
    {
        std::ofstream out(widths_path);
        if (!out) throw icp::ParseError("cannot open '" + widths_path + "' for writing");
        icp::write_width_csv(out, report);
    }
    std::cout << "report written to " << table_path << ", " << kv_path << ", " << widths_path
              << "\n";
    return kExitOk;
}

int cmd_fit(const CommonOptions& opts, const std::string& out_path,
            const std::string& save_split_path, const std::string& load_split_path) {
    require_canonical_q(opts.q);

    icp::CsvOptions csv;
    csv.has_header = opts.has_header;
    csv.label_column = opts.label_column;
    const icp::Dataset dataset = icp::load_csv(opts.data_path, csv);

    const icp::ScalingParams scaling = icp::fit_scaling(dataset);
    const icp::Dataset scaled = icp::apply_scaling(scaling, dataset);

    icp::IcpSplit split;
    if (!load_split_path.empty()) {
        const auto lists = icp::read_index_lists(load_split_path);
        if (lists.size() != 2) {
            throw icp::ParseError("split file must hold two lines: proper indices, then "
                                  "calibration indices");
        }
        split.proper_indices = lists[0];
        split.calibration_indices = lists[1];
        if (split.proper_indices.size() + split.calibration_indices.size() != scaled.size() ||
            split.calibration_indices.size() != opts.q) {
            throw icp::InvalidSplitError("split file does not partition the dataset with q=" +
                                         std::to_string(opts.q));
        }
        split.proper_training = scaled.subset(split.proper_indices);
        split.calibration = scaled.subset(split.calibration_indices);
    } else {
        split = icp::split_icp(scaled, opts.q, icp::derive_seed(opts.seed, {0x5B117u}));
    }
    if (!save_split_path.empty()) {
        icp::write_index_lists(save_split_path,
                               {split.proper_indices, split.calibration_indices},
                               "line 1: proper training indices; line 2: calibration indices");
    }

    const icp::MeasureSpec measure = make_measure(opts);
    const icp::TrainResult trained = icp::train_mlp(split.proper_training, make_mlp_config(opts));

    std::optional<icp::ResidualModel> residual;
    Eigen::VectorXd calib_mu;
    if (measure.kind == icp::Measure::normalized) {
        residual = icp::fit_residual_model(split.proper_training, trained.model,
                                           measure.min_residual);
        calib_mu = residual->predict_mu_batch(split.calibration.attributes);
    }

    const Eigen::VectorXd calib_pred = trained.model.predict_batch(split.calibration.attributes);
    std::vector<double> scores(split.calibration.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const auto idx = static_cast<Eigen::Index>(i);
        scores[i] = measure.kind == icp::Measure::normalized
                        ? icp::score_normalized(split.calibration.labels(idx), calib_pred(idx),
                                                {calib_mu(idx), measure.beta})
                        : icp::score_absolute(split.calibration.labels(idx), calib_pred(idx));
    }

    const icp::ModelArtifact artifact(measure, scaling, trained.model, residual,
                                      icp::CalibrationScores::build(std::move(scores)));
    icp::save_artifact(out_path, artifact);

    std::cout << "trained on " << split.proper_training.size() << " examples, calibrated on "
              << split.calibration.size() << " (validation mse " << trained.validation_mse
              << ", restart " << trained.selected_restart << ")\n";
    std::cout << "artifact written to " << out_path << "\n";
    return kExitOk;
}

int cmd_predict(const std::string& model_path, const std::string& input_path, bool has_header,
                const std::string& features, double confidence, const std::string& out_path) {
    if (!(confidence > 0.0 && confidence < 1.0)) {
        throw icp::InvalidInputError("--confidence must lie strictly between 0 and 1");
    }
    const icp::ModelArtifact artifact = icp::load_artifact(model_path);
    const double significance = 1.0 - confidence;

    std::vector<Eigen::VectorXd> inputs;
    if (!features.empty()) {
        std::istringstream stream(features);
        std::vector<double> values;
        std::string token;
        while (std::getline(stream, token, ',')) {
            try {
                values.push_back(std::stod(token));
            } catch (const std::exception&) {
                throw icp::InvalidInputError("cannot parse feature '" + token + "'");
            }
        }
        inputs.emplace_back(Eigen::Map<Eigen::VectorXd>(values.data(),
                                                        static_cast<Eigen::Index>(values.size())));
    } else {
        // attribute-only CSV: reuse the loader by treating the last column as
        // a label, then stitching it back on
        icp::CsvOptions csv;
        csv.has_header = has_header;
        const icp::Dataset raw = icp::load_csv(input_path, csv);
        for (std::size_t i = 0; i < raw.size(); ++i) {
            Eigen::VectorXd row(raw.attribute_count() + 1);
            row.head(raw.attributes.cols()) = raw.attributes.row(static_cast<Eigen::Index>(i));
            row(row.size() - 1) = raw.labels(static_cast<Eigen::Index>(i));
            inputs.push_back(std::move(row));
        }
    }

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw icp::ParseError("cannot open '" + out_path + "' for writing");
        out = &file;
    }

    *out << "lower,upper\n";
    char buf[96];
    for (const auto& x : inputs) {
        const icp::PredictionInterval interval = artifact.predict_interval(x, significance);
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", interval.lower, interval.upper);
        *out << buf;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"conformal prediction intervals for regression neural networks"};
    app.require_subcommand(1);

    CommonOptions run_opts;
    int run_k = 10;
    int run_repeats = 10;
    std::vector<double> run_significances;
    std::string run_out = "icpreg";
    int run_jobs = 0;
    std::string run_indices;
    auto* run = app.add_subcommand("run", "cross-validated benchmark with report files");
    add_training_flags(run, run_opts);
    run->add_option("--k", run_k, "number of cross-validation folds");
    run->add_option("--repeats", run_repeats, "number of fold permutations");
    run->add_option("--delta", run_significances,
                    "significance levels (default 0.10 0.05 0.01)");
    run->add_option("--out", run_out, "output path prefix");
    run->add_option("--jobs", run_jobs, "max concurrent fold executions (0 = all cores)");
    run->add_option("--save-indices", run_indices, "write test-fold index lists to this file");

    CommonOptions fit_opts;
    std::string fit_out = "model.icp";
    std::string fit_save_split;
    std::string fit_load_split;
    auto* fit = app.add_subcommand("fit", "train once and store a model artifact");
    add_training_flags(fit, fit_opts);
    fit->add_option("--out", fit_out, "artifact output path");
    fit->add_option("--save-split", fit_save_split, "write the proper/calibration index lists");
    fit->add_option("--load-split", fit_load_split, "reuse a stored proper/calibration split");

    std::string predict_model;
    std::string predict_input;
    std::string predict_features;
    std::string predict_out;
    bool predict_header = false;
    double predict_confidence = 0.95;
    auto* predict = app.add_subcommand("predict", "intervals for new inputs from an artifact");
    predict->add_option("--model", predict_model, "artifact from a fit run")->required();
    predict->add_option("--input", predict_input, "CSV of attribute rows (no label column)");
    predict->add_flag("--header", predict_header, "first input line is a header");
    predict->add_option("--features", predict_features, "single comma-separated attribute vector");
    predict->add_option("--confidence", predict_confidence, "confidence level, e.g. 0.95");
    predict->add_option("--out", predict_out, "write intervals here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (run->parsed()) {
            return cmd_run(run_opts, run_k, run_repeats, run_significances, run_out, run_jobs,
                           run_indices);
        }
        if (fit->parsed()) {
            return cmd_fit(fit_opts, fit_out, fit_save_split, fit_load_split);
        }
        if (predict->parsed()) {
            if (predict_input.empty() == predict_features.empty()) {
                throw icp::InvalidInputError("predict needs exactly one of --input or --features");
            }
            return cmd_predict(predict_model, predict_input, predict_header, predict_features,
                               predict_confidence, predict_out);
        }
    } catch (const icp::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const icp::ArtifactError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const icp::TrainingDivergedError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitTraining;
    } catch (const icp::InsufficientCalibrationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const icp::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitTraining;
    }
    return kExitUsage;
}
