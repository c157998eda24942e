#pragma once

#include "sdgs/matrix_core.hpp"
#include "sdgs/normalization.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sdgs {

/// Contiguous slice [offset, offset + width) of the stacked coefficient
/// vector belonging to one label.
struct GroupRange {
    Index offset = 0;
    Index width = 0;
    friend bool operator==(const GroupRange&, const GroupRange&) = default;
};

/// Hyperparameters the model was trained with, kept for provenance.
struct TrainingSnapshot {
    std::vector<Index> ranks;
    Index sparsity_budget = 0;
    double epsilon = 0.0;
    int max_iterations = 0;
    ApproxMode mode = ApproxMode::ExactSVD;
    std::uint64_t seed = 0;
    friend bool operator==(const TrainingSnapshot&, const TrainingSnapshot&) = default;
};

/// The learned multi-subspace C = [C^1; ...; C^k]. Each C^i has orthonormal
/// rows (possibly zero of them) in R^p.
class MultiSubspaceModel {
public:
    MultiSubspaceModel() = default;
    /// Throws InvalidInput when a basis has the wrong width or is not
    /// orthonormal within 1e-8.
    MultiSubspaceModel(std::vector<Matrix> bases, Index features, TrainingSnapshot snapshot = {},
                       std::uint64_t fingerprint = 0, Normalization normalization = {},
                       std::vector<std::string> label_names = {});

    Index features() const noexcept { return features_; }
    Index labels() const noexcept { return static_cast<Index>(bases_.size()); }
    const std::vector<Matrix>& bases() const noexcept { return bases_; }
    const Matrix& basis(Index label) const { return bases_.at(static_cast<std::size_t>(label)); }
    const std::vector<GroupRange>& group_layout() const noexcept { return layout_; }
    Index total_width() const noexcept { return stacked_.rows(); }

    /// All bases stacked row-wise, total_width() x features().
    const Matrix& stacked() const noexcept { return stacked_; }
    /// stacked() * stacked()^T.
    const Matrix& gram() const noexcept { return gram_; }

    const TrainingSnapshot& snapshot() const noexcept { return snapshot_; }
    std::uint64_t fingerprint() const noexcept { return fingerprint_; }
    const Normalization& normalization() const noexcept { return normalization_; }
    const std::vector<std::string>& label_names() const noexcept { return label_names_; }

private:
    std::vector<Matrix> bases_;
    Index features_ = 0;
    std::vector<GroupRange> layout_;
    Matrix stacked_;
    Matrix gram_;
    TrainingSnapshot snapshot_;
    std::uint64_t fingerprint_ = 0;
    Normalization normalization_;
    std::vector<std::string> label_names_;
};

} // namespace sdgs
