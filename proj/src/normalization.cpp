#include "sdgs/normalization.hpp"

#include "sdgs/error.hpp"

#include <cmath>
#include <string>

namespace sdgs {

std::string_view to_string(NormalizationKind kind) {
    switch (kind) {
    case NormalizationKind::None:
        return "none";
    case NormalizationKind::UnitRowNorm:
        return "unit-row";
    case NormalizationKind::ZScorePerFeature:
        return "zscore";
    }
    return "none";
}

NormalizationKind parse_normalization(std::string_view name) {
    if (name == "none") {
        return NormalizationKind::None;
    }
    if (name == "unit-row") {
        return NormalizationKind::UnitRowNorm;
    }
    if (name == "zscore") {
        return NormalizationKind::ZScorePerFeature;
    }
    throw InvalidInput("unknown normalization '" + std::string(name) +
                       "' (expected none, unit-row or zscore)");
}

Normalization Normalization::fit(const Matrix& x, NormalizationKind kind) {
    Normalization out;
    out.kind = kind;
    if (kind != NormalizationKind::ZScorePerFeature) {
        return out;
    }
    if (x.rows() == 0) {
        throw InvalidInput("cannot fit a z-score transform on zero rows");
    }
    out.mean = x.colwise().mean().transpose();
    out.scale.resize(x.cols());
    const double n = static_cast<double>(x.rows());
    for (Index j = 0; j < x.cols(); ++j) {
        const double var = (x.col(j).array() - out.mean(j)).square().sum() / n;
        const double sd = std::sqrt(var);
        out.scale(j) = sd > 0.0 ? sd : 1.0;
    }
    return out;
}

Matrix Normalization::apply(const Matrix& x) const {
    switch (kind) {
    case NormalizationKind::None:
        return x;
    case NormalizationKind::UnitRowNorm: {
        Matrix out = x;
        for (Index i = 0; i < out.rows(); ++i) {
            const double norm = out.row(i).norm();
            if (norm > 0.0) {
                out.row(i) /= norm;
            }
        }
        return out;
    }
    case NormalizationKind::ZScorePerFeature:
        if (x.cols() != mean.size()) {
            throw InvalidInput("normalization fitted on " + std::to_string(mean.size()) +
                               " features applied to " + std::to_string(x.cols()));
        }
        return ((x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array())
            .matrix();
    }
    return x;
}

Matrix Normalization::inverse(const Matrix& x) const {
    switch (kind) {
    case NormalizationKind::None:
        return x;
    case NormalizationKind::UnitRowNorm:
        throw InvalidInput("unit-row normalization is not invertible");
    case NormalizationKind::ZScorePerFeature:
        if (x.cols() != mean.size()) {
            throw InvalidInput("normalization dimension mismatch");
        }
        return ((x.array().rowwise() * scale.transpose().array()).matrix().rowwise() +
                mean.transpose());
    }
    return x;
}

} // namespace sdgs
