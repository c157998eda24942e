#include "sdgs/dataset.hpp"

#include "sdgs/checksum.hpp"
#include "sdgs/error.hpp"

#include <bit>

namespace sdgs {

LabeledDataset::LabeledDataset(Matrix x, LabelMatrix y, std::vector<std::string> label_names)
    : x_(std::move(x)), y_(std::move(y)), label_names_(std::move(label_names)) {
    if (x_.rows() < 1 || x_.cols() < 1) {
        throw InvalidInput("dataset needs at least one sample and one feature");
    }
    if (y_.cols() < 1) {
        throw InvalidInput("dataset needs at least one label");
    }
    if (y_.rows() != x_.rows()) {
        throw InvalidInput("feature and label matrices disagree on the number of samples");
    }
    require_finite(x_, "dataset features");
    if (!label_names_.empty() && static_cast<Index>(label_names_.size()) != y_.cols()) {
        throw InvalidInput("label name count does not match label count");
    }
    omega_.assign(static_cast<std::size_t>(y_.cols()), {});
    for (Index j = 0; j < y_.cols(); ++j) {
        for (Index i = 0; i < y_.rows(); ++i) {
            const auto v = y_(i, j);
            if (v > 1) {
                throw InvalidInput("label matrix entries must be 0 or 1");
            }
            if (v == 1) {
                omega_[static_cast<std::size_t>(j)].push_back(i);
            }
        }
    }
}

double LabeledDataset::cardinality() const {
    return y_.cast<double>().sum() / static_cast<double>(y_.rows());
}

Index LabeledDataset::label_count(Index row) const {
    return y_.row(row).cast<Index>().sum();
}

LabeledDataset LabeledDataset::with_features(Matrix x) const {
    if (x.rows() != x_.rows() || x.cols() != x_.cols()) {
        throw InvalidInput("replacement features have a different shape");
    }
    return LabeledDataset(std::move(x), y_, label_names_);
}

LabeledDataset LabeledDataset::permuted(const std::vector<Index>& order) const {
    if (static_cast<Index>(order.size()) != samples()) {
        throw InvalidInput("permutation length does not match sample count");
    }
    Matrix x(x_.rows(), x_.cols());
    LabelMatrix y(y_.rows(), y_.cols());
    for (Index r = 0; r < samples(); ++r) {
        x.row(r) = x_.row(order[static_cast<std::size_t>(r)]);
        y.row(r) = y_.row(order[static_cast<std::size_t>(r)]);
    }
    return LabeledDataset(std::move(x), std::move(y), label_names_);
}

std::uint64_t LabeledDataset::fingerprint() const {
    Fnv1a h;
    h.u64(static_cast<std::uint64_t>(x_.rows()));
    h.u64(static_cast<std::uint64_t>(x_.cols()));
    h.u64(static_cast<std::uint64_t>(y_.cols()));
    for (Index i = 0; i < x_.rows(); ++i) {
        for (Index j = 0; j < x_.cols(); ++j) {
            h.u64(std::bit_cast<std::uint64_t>(x_(i, j)));
        }
        for (Index j = 0; j < y_.cols(); ++j) {
            const unsigned char v = y_(i, j);
            h.bytes(&v, 1);
        }
    }
    return h.state;
}

} // namespace sdgs
