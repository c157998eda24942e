#pragma once

#include "sdgs/matrix_core.hpp"

#include <string_view>

namespace sdgs {

enum class NormalizationKind { None, UnitRowNorm, ZScorePerFeature };

std::string_view to_string(NormalizationKind kind);
NormalizationKind parse_normalization(std::string_view name);

/// Feature transform fitted on training data and replayed on anything that
/// is scored against the resulting model.
///
/// ZScorePerFeature stores per-column mean and scale (constant columns get
/// scale 1). UnitRowNorm has no fitted state: every row is divided by its
/// Euclidean norm (zero rows are left alone), so it has no inverse.
struct Normalization {
    NormalizationKind kind = NormalizationKind::None;
    Vector mean;
    Vector scale;

    static Normalization fit(const Matrix& x, NormalizationKind kind);

    Matrix apply(const Matrix& x) const;
    Matrix inverse(const Matrix& x) const;

    friend bool operator==(const Normalization& a, const Normalization& b) {
        return a.kind == b.kind && a.mean == b.mean && a.scale == b.scale;
    }
};

} // namespace sdgs
