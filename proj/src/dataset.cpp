#include "icp/dataset.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "icp/rng.hpp"

namespace icp {

namespace {

bool is_blank(const std::string& line) {
    for (char c : line) {
        if (!std::isspace(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(current);
            current.clear();
        } else if (c != '\r') {
            current.push_back(c);
        }
    }
    fields.push_back(current);
    return fields;
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
    const char* begin = cell.c_str();
    char* end = nullptr;
    const double value = std::strtod(begin, &end);
    // allow trailing whitespace, nothing else
    while (end && *end != '\0' && std::isspace(static_cast<unsigned char>(*end))) ++end;
    if (end == begin || (end && *end != '\0')) {
        throw ParseError("row " + std::to_string(row) + ", column " + std::to_string(col) +
                         ": cannot parse '" + cell + "' as a number");
    }
    if (!std::isfinite(value)) {
        throw ParseError("row " + std::to_string(row) + ", column " + std::to_string(col) +
                         ": non-finite value");
    }
    return value;
}

std::size_t resolve_label_column(const CsvOptions& options,
                                 const std::vector<std::string>& header, std::size_t n_columns) {
    if (options.label_column.empty()) {
        return n_columns - 1;
    }
    const std::string& selector = options.label_column;
    const bool numeric = !selector.empty() &&
                         selector.find_first_not_of("0123456789") == std::string::npos;
    if (numeric) {
        const std::size_t idx = std::stoul(selector);
        if (idx >= n_columns) {
            throw ParseError("label column index " + selector + " out of range; file has " +
                             std::to_string(n_columns) + " columns");
        }
        return idx;
    }
    if (header.empty()) {
        throw ParseError("label column '" + selector + "' given by name but the file has no header");
    }
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == selector) return i;
    }
    throw ParseError("label column '" + selector + "' not found in header");
}

}  // namespace

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
    Dataset out;
    out.attributes.resize(static_cast<Eigen::Index>(indices.size()), attributes.cols());
    out.labels.resize(static_cast<Eigen::Index>(indices.size()));
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= size()) {
            throw InvalidInputError("subset index " + std::to_string(indices[i]) +
                                    " out of range for dataset of size " + std::to_string(size()));
        }
        out.attributes.row(static_cast<Eigen::Index>(i)) =
            attributes.row(static_cast<Eigen::Index>(indices[i]));
        out.labels(static_cast<Eigen::Index>(i)) = labels(static_cast<Eigen::Index>(indices[i]));
    }
    out.column_names = column_names;
    return out;
}

Dataset load_csv(const std::string& path, const CsvOptions& options) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open '" + path + "'");
    }

    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_number = 0;
    std::size_t n_columns = 0;

    while (std::getline(in, line)) {
        ++line_number;
        if (is_blank(line)) continue;
        const auto fields = split_fields(line);
        if (options.has_header && header.empty() && rows.empty()) {
            header.reserve(fields.size());
            for (const auto& f : fields) header.push_back(f);
            n_columns = fields.size();
            continue;
        }
        if (n_columns == 0) {
            n_columns = fields.size();
        } else if (fields.size() != n_columns) {
            throw ParseError("row " + std::to_string(line_number) + ": expected " +
                             std::to_string(n_columns) + " fields, got " +
                             std::to_string(fields.size()));
        }
        std::vector<double> row(fields.size());
        for (std::size_t c = 0; c < fields.size(); ++c) {
            row[c] = parse_cell(fields[c], line_number, c + 1);
        }
        rows.push_back(std::move(row));
    }

    if (rows.empty()) {
        throw ParseError("'" + path + "' contains no data rows");
    }
    if (n_columns < 2) {
        throw ParseError("'" + path + "' needs at least one attribute column plus the label");
    }

    const std::size_t label_idx = resolve_label_column(options, header, n_columns);

    Dataset ds;
    ds.attributes.resize(static_cast<Eigen::Index>(rows.size()),
                         static_cast<Eigen::Index>(n_columns - 1));
    ds.labels.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        Eigen::Index out_col = 0;
        for (std::size_t c = 0; c < n_columns; ++c) {
            if (c == label_idx) {
                ds.labels(static_cast<Eigen::Index>(r)) = rows[r][c];
            } else {
                ds.attributes(static_cast<Eigen::Index>(r), out_col++) = rows[r][c];
            }
        }
    }
    if (!header.empty()) {
        for (std::size_t c = 0; c < n_columns; ++c) {
            if (c != label_idx) ds.column_names.push_back(header[c]);
        }
    }
    return ds;
}

ScalingParams fit_scaling(const Dataset& train) {
    if (train.size() == 0) {
        throw InvalidInputError("cannot fit scaling on an empty dataset");
    }
    ScalingParams params;
    params.min = train.attributes.colwise().minCoeff();
    params.max = train.attributes.colwise().maxCoeff();
    return params;
}

Dataset apply_scaling(const ScalingParams& params, const Dataset& ds) {
    if (params.attribute_count() != ds.attribute_count()) {
        throw InvalidInputError("scaling fitted for " + std::to_string(params.attribute_count()) +
                                " attributes, dataset has " + std::to_string(ds.attribute_count()));
    }
    Dataset out = ds;
    for (Eigen::Index c = 0; c < out.attributes.cols(); ++c) {
        const double lo = params.min(c);
        const double hi = params.max(c);
        if (hi > lo) {
            // divide by the span itself so the endpoints land on -1 and +1
            // exactly: (hi - lo) / (hi - lo) == 1 in floating point
            out.attributes.col(c) =
                ((ds.attributes.col(c).array() - lo) / (hi - lo)) * 2.0 - 1.0;
        } else {
            out.attributes.col(c).setZero();
        }
    }
    return out;
}

Eigen::VectorXd apply_scaling_row(const ScalingParams& params,
                                  const Eigen::Ref<const Eigen::VectorXd>& raw) {
    if (raw.size() != static_cast<Eigen::Index>(params.attribute_count())) {
        throw InvalidInputError("scaling fitted for " + std::to_string(params.attribute_count()) +
                                " attributes, input has " + std::to_string(raw.size()));
    }
    Eigen::VectorXd out(raw.size());
    for (Eigen::Index c = 0; c < raw.size(); ++c) {
        const double lo = params.min(c);
        const double hi = params.max(c);
        out(c) = hi > lo ? ((raw(c) - lo) / (hi - lo)) * 2.0 - 1.0 : 0.0;
    }
    return out;
}

bool is_canonical_calibration_size(std::size_t q) {
    return q >= 99 && (q + 1) % 100 == 0;
}

IcpSplit split_icp(const Dataset& training, std::size_t q, std::uint64_t seed) {
    const std::size_t l = training.size();
    if (q == 0 || q >= l) {
        throw InvalidSplitError("calibration size q=" + std::to_string(q) +
                                " must satisfy 0 < q < " + std::to_string(l));
    }
    if (!is_canonical_calibration_size(q)) {
        // single write; split_icp may run on several threads at once
        std::cerr << ("warning: calibration size " + std::to_string(q) +
                      " is not of the form 100n-1; interval ranks may not align with the usual "
                      "confidence levels\n");
    }
    const std::size_t m = l - q;
    if (m < 10) {
        std::cerr << ("warning: proper training set has only " + std::to_string(m) +
                      " examples\n");
    }
    Rng rng(seed);
    std::vector<std::size_t> order = rng.permutation(l);

    IcpSplit split;
    split.proper_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m));
    split.calibration_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(m), order.end());
    split.proper_training = training.subset(split.proper_indices);
    split.calibration = training.subset(split.calibration_indices);
    return split;
}

std::vector<std::vector<FoldIndices>> kfold_plan(std::size_t n, const SplitPlan& plan) {
    if (plan.k < 2) {
        throw InvalidInputError("k-fold plan needs k >= 2");
    }
    if (plan.repeats < 1) {
        throw InvalidInputError("k-fold plan needs at least one repeat");
    }
    if (static_cast<std::size_t>(plan.k) > n) {
        throw InvalidInputError("k=" + std::to_string(plan.k) + " exceeds dataset size " +
                                std::to_string(n));
    }

    std::vector<std::vector<FoldIndices>> repeats;
    repeats.reserve(static_cast<std::size_t>(plan.repeats));
    for (int r = 0; r < plan.repeats; ++r) {
        Rng rng(derive_seed(plan.seed, {0xF01Du, static_cast<std::uint64_t>(r)}));
        const std::vector<std::size_t> order = rng.permutation(n);

        const std::size_t base = n / static_cast<std::size_t>(plan.k);
        const std::size_t extra = n % static_cast<std::size_t>(plan.k);

        std::vector<FoldIndices> folds(static_cast<std::size_t>(plan.k));
        std::size_t cursor = 0;
        for (std::size_t f = 0; f < static_cast<std::size_t>(plan.k); ++f) {
            const std::size_t fold_size = base + (f < extra ? 1 : 0);
            folds[f].test.assign(order.begin() + static_cast<std::ptrdiff_t>(cursor),
                                 order.begin() + static_cast<std::ptrdiff_t>(cursor + fold_size));
            cursor += fold_size;
        }
        for (std::size_t f = 0; f < folds.size(); ++f) {
            auto& train = folds[f].train;
            train.reserve(n - folds[f].test.size());
            for (std::size_t g = 0; g < folds.size(); ++g) {
                if (g == f) continue;
                train.insert(train.end(), folds[g].test.begin(), folds[g].test.end());
            }
        }
        repeats.push_back(std::move(folds));
    }
    return repeats;
}

std::array<double, 4> tec_features(double hour, double day) {
    if (!std::isfinite(hour) || hour < 0.0 || hour >= 24.0) {
        throw InvalidInputError("hour must lie in [0, 24)");
    }
    if (!std::isfinite(day) || day < 1.0 || day > 365.0) {
        throw InvalidInputError("day must lie in [1, 365]");
    }
    const double hour_angle = 2.0 * std::numbers::pi * hour / 24.0;
    const double day_angle = 2.0 * std::numbers::pi * day / 365.0;
    return {std::sin(hour_angle), std::cos(hour_angle), std::sin(day_angle), std::cos(day_angle)};
}

void write_index_lists(const std::string& path, const std::vector<std::vector<std::size_t>>& lists,
                       const std::string& comment) {
    std::ofstream out(path);
    if (!out) {
        throw ParseError("cannot open '" + path + "' for writing");
    }
    if (!comment.empty()) {
        out << "# " << comment << "\n";
    }
    for (const auto& list : lists) {
        for (std::size_t i = 0; i < list.size(); ++i) {
            if (i) out << ' ';
            out << list[i];
        }
        out << '\n';
    }
}

std::vector<std::vector<std::size_t>> read_index_lists(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open '" + path + "'");
    }
    std::vector<std::vector<std::size_t>> lists;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (is_blank(line) || line[0] == '#') continue;
        std::istringstream fields(line);
        std::vector<std::size_t> list;
        long long value = 0;
        while (fields >> value) {
            if (value < 0) {
                throw ParseError("line " + std::to_string(line_number) + ": negative index");
            }
            list.push_back(static_cast<std::size_t>(value));
        }
        if (!fields.eof()) {
            throw ParseError("line " + std::to_string(line_number) + ": malformed index");
        }
        lists.push_back(std::move(list));
    }
    return lists;
}

}  // namespace icp
