#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "icp/errors.hpp"

namespace icp {

/// Examples as rows of an attribute matrix plus a parallel label vector.
/// Every entry is finite; loaders and transforms enforce this.
struct Dataset {
    Eigen::MatrixXd attributes;             // n_examples x n_attributes
    Eigen::VectorXd labels;                 // n_examples
    std::vector<std::string> column_names;  // attribute names; empty when unknown

    std::size_t size() const { return static_cast<std::size_t>(attributes.rows()); }
    std::size_t attribute_count() const { return static_cast<std::size_t>(attributes.cols()); }

    Dataset subset(const std::vector<std::size_t>& indices) const;
};

struct CsvOptions {
    bool has_header = false;
    /// Column holding the label: a name (requires a header) or a 0-based
    /// index given as digits. Empty selects the last column.
    std::string label_column;
};

/// Comma-separated numeric rows, decimal point, optional header line.
/// Throws ParseError with row/column location on any malformed cell.
Dataset load_csv(const std::string& path, const CsvOptions& options = {});

/// Per-attribute extremes observed on training data, in raw units.
struct ScalingParams {
    Eigen::VectorXd min;
    Eigen::VectorXd max;

    std::size_t attribute_count() const { return static_cast<std::size_t>(min.size()); }
};

ScalingParams fit_scaling(const Dataset& train);

/// Maps each attribute so that the training minimum lands on -1 and the
/// training maximum on +1; constant columns map to 0. Values outside the
/// training range extend linearly (no clipping). Labels are untouched.
Dataset apply_scaling(const ScalingParams& params, const Dataset& ds);

/// Same map for a single raw attribute vector.
Eigen::VectorXd apply_scaling_row(const ScalingParams& params,
                                  const Eigen::Ref<const Eigen::VectorXd>& raw);

/// Cross-validation layout: k folds, repeated over several seeded
/// permutations, with q calibration examples carved out of each training
/// fold.
struct SplitPlan {
    int k = 10;
    int repeats = 10;
    std::size_t q = 99;
    std::uint64_t seed = 0;
};

/// True for q = 100n - 1, the calibration sizes that keep the usual
/// confidence levels aligned with integer score ranks.
bool is_canonical_calibration_size(std::size_t q);

struct IcpSplit {
    Dataset proper_training;
    Dataset calibration;
    std::vector<std::size_t> proper_indices;       // into the input dataset
    std::vector<std::size_t> calibration_indices;  // into the input dataset
};

/// Seeded shuffle, then the last q examples become the calibration set.
/// Warns on stderr when q is not of the 100n-1 form or when the proper
/// training remainder is very small; fails only when q >= size.
IcpSplit split_icp(const Dataset& training, std::size_t q, std::uint64_t seed);

struct FoldIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// plan.repeats independent permutations, each split into plan.k folds of
/// near-equal size (difference at most one). Element [r][f] holds the
/// train/test indices for fold f of repeat r.
std::vector<std::vector<FoldIndices>> kfold_plan(std::size_t n, const SplitPlan& plan);

/// Quadrature encoding of cyclic time attributes:
/// {sin(2*pi*hour/24), cos(2*pi*hour/24), sin(2*pi*day/365), cos(2*pi*day/365)}.
/// hour must lie in [0, 24), day in [1, 365].
std::array<double, 4> tec_features(double hour, double day);

/// Index lists as text, one whitespace-separated list per line.
/// Lines starting with '#' are comments.
void write_index_lists(const std::string& path, const std::vector<std::vector<std::size_t>>& lists,
                       const std::string& comment = "");
std::vector<std::vector<std::size_t>> read_index_lists(const std::string& path);

}  // namespace icp
