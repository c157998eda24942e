#pragma once

#include "sdgs/matrix_core.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sdgs {

using LabelMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Training or test data: one sample per row of X, binary labels in Y.
/// omega(i) lists (ascending) the rows carrying label i.
class LabeledDataset {
public:
    LabeledDataset() = default;
    /// Validates shapes, finiteness and binarity; throws InvalidInput.
    LabeledDataset(Matrix x, LabelMatrix y, std::vector<std::string> label_names = {});

    const Matrix& x() const noexcept { return x_; }
    const LabelMatrix& y() const noexcept { return y_; }
    const std::vector<Index>& omega(Index label) const { return omega_.at(label); }
    const std::vector<std::vector<Index>>& omegas() const noexcept { return omega_; }
    const std::vector<std::string>& label_names() const noexcept { return label_names_; }

    Index samples() const noexcept { return x_.rows(); }
    Index features() const noexcept { return x_.cols(); }
    Index labels() const noexcept { return y_.cols(); }

    /// Mean number of labels per sample.
    double cardinality() const;
    /// Number of labels carried by sample `row`.
    Index label_count(Index row) const;

    /// Same labels, features replaced (row and column counts must match).
    LabeledDataset with_features(Matrix x) const;
    /// Rows reordered so that new row r is old row order[r].
    LabeledDataset permuted(const std::vector<Index>& order) const;

    /// FNV-1a over shapes, feature bits and labels.
    std::uint64_t fingerprint() const;

private:
    Matrix x_;
    LabelMatrix y_;
    std::vector<std::vector<Index>> omega_;
    std::vector<std::string> label_names_;
};

} // namespace sdgs
