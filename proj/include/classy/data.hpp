#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "classy/random.hpp"

namespace classy {

using Labels = Eigen::VectorXi;

/// Feature matrix (one row per sample) with dense class labels in [0, n_classes).
struct Dataset {
    Eigen::MatrixXd features;
    Labels labels;
    int n_classes = 0;
    std::vector<std::string> feature_names;
    std::string source_name;

    Eigen::Index size() const noexcept { return features.rows(); }
    Eigen::Index n_features() const noexcept { return features.cols(); }

    /// Rows selected by `rows`, in that order. n_classes and names are kept.
    Dataset subset(const std::vector<Eigen::Index>& rows) const;
};

/// Checks the Dataset invariants; throws DataError on violation.
void validate(const Dataset& d);

struct Split {
    Dataset train;
    Dataset validation;
    Dataset test;
    // Row indices into the source dataset, per part.
    std::array<std::vector<Eigen::Index>, 3> rows;
};

using Fractions = std::array<double, 3>;

struct CsvOptions {
    std::string target_column = "target";
    bool has_header = true;
    // Detected from the file name (.tsv/.tab -> tab, otherwise comma) when unset.
    std::optional<char> delimiter;
};

/// Loads a delimited text file, optionally gzip-compressed (by ".gz" suffix).
/// Target values are re-indexed densely in ascending order of their numeric value.
/// Without a header, `target_column` may be a 0-based column index, or the last
/// column is used when it is "target".
Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options = {});

/// Writes features plus a trailing "target" column with a header row.
void write_csv(const Dataset& d, const std::filesystem::path& path);
void write_csv(const Dataset& d, std::ostream& out);

/// Partitions rows into train/validation/test. With `stratified`, each class is
/// divided separately using largest-remainder rounding; otherwise one shuffle of
/// all rows is divided the same way.
Split split(const Dataset& dataset, const Fractions& fractions, bool stratified, Rng& rng);

/// Largest-remainder apportionment of `n` items over `fractions`.
/// Remainder ties go to the earlier part.
std::array<Eigen::Index, 3> apportion(Eigen::Index n, const Fractions& fractions);

/// Per-feature standardizer: (x - mean) / scale with population standard deviation.
template <class Scalar>
struct BasicScaler {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> means;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> scales;

    Eigen::Index dimension() const noexcept { return means.size(); }
};

using Scaler = BasicScaler<double>;

template <class Derived>
BasicScaler<typename Derived::Scalar> fit_scaler(const Eigen::MatrixBase<Derived>& x)
{
    using Scalar = typename Derived::Scalar;
    BasicScaler<Scalar> s;
    const auto n = static_cast<Scalar>(x.rows());
    s.means = x.colwise().sum().transpose() / n;
    s.scales = ((x.rowwise() - s.means.transpose()).colwise().squaredNorm().transpose() / n).cwiseSqrt();
    for (Eigen::Index j = 0; j < s.scales.size(); ++j) {
        // Zero-variance (and numerically negligible) columns are only centered.
        if (!(s.scales[j] > Scalar(1e-12) * std::max(Scalar(1), std::abs(s.means[j]))))
            s.scales[j] = Scalar(1);
    }
    return s;
}

Scaler fit_scaler(const Dataset& train);

/// Throws DataError(dimension_mismatch) when the feature count differs.
Dataset apply_scaler(const Scaler& scaler, const Dataset& d);
Eigen::MatrixXd apply_scaler(const Scaler& scaler, const Eigen::MatrixXd& x);
Eigen::MatrixXd inverse_scaler(const Scaler& scaler, const Eigen::MatrixXd& z);

} // namespace classy
