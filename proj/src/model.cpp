#include "sdgs/model.hpp"

#include "sdgs/error.hpp"

#include <string>

namespace sdgs {

MultiSubspaceModel::MultiSubspaceModel(std::vector<Matrix> bases, Index features,
                                       TrainingSnapshot snapshot, std::uint64_t fingerprint,
                                       Normalization normalization,
                                       std::vector<std::string> label_names)
    : bases_(std::move(bases)), features_(features), snapshot_(std::move(snapshot)),
      fingerprint_(fingerprint), normalization_(std::move(normalization)),
      label_names_(std::move(label_names)) {
    if (features_ < 1) {
        throw InvalidInput("model needs at least one feature");
    }
    if (!label_names_.empty() && label_names_.size() != bases_.size()) {
        throw InvalidInput("label name count does not match basis count");
    }
    Index offset = 0;
    for (std::size_t i = 0; i < bases_.size(); ++i) {
        const Matrix& c = bases_[i];
        if (c.cols() != features_) {
            throw InvalidInput("basis " + std::to_string(i) + " has " + std::to_string(c.cols()) +
                               " columns, expected " + std::to_string(features_));
        }
        require_finite(c, "model basis");
        if (c.rows() > 0) {
            const Matrix gram = c * c.transpose();
            const double dev = (gram - Matrix::Identity(c.rows(), c.rows())).cwiseAbs().maxCoeff();
            if (dev > 1e-8) {
                throw InvalidInput("basis " + std::to_string(i) + " is not orthonormal");
            }
        }
        layout_.push_back({offset, c.rows()});
        offset += c.rows();
    }
    stacked_.resize(offset, features_);
    for (std::size_t i = 0; i < bases_.size(); ++i) {
        if (layout_[i].width > 0) {
            stacked_.middleRows(layout_[i].offset, layout_[i].width) = bases_[i];
        }
    }
    gram_ = stacked_ * stacked_.transpose();
}

} // namespace sdgs
