#pragma once

// Test-only helpers and independent oracles. Nothing here calls into the
// code paths it is used to check.

#include "sdgs/dataset.hpp"
#include "sdgs/matrix_core.hpp"
#include "sdgs/random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

namespace sdgs::testing {

inline Matrix random_orthonormal_rows(GaussianRng& rng, Index rows, Index cols) {
    const Matrix g = rng.gaussian_matrix(cols, rows);
    Eigen::HouseholderQR<Matrix> qr(g);
    return (qr.householderQ() * Matrix::Identity(cols, rows)).transpose();
}

/// U diag(s) V^T with random orthonormal U (rows x s.size()) and V.
inline Matrix with_singular_values(GaussianRng& rng, Index rows, Index cols, const Vector& s) {
    const Matrix u = random_orthonormal_rows(rng, s.size(), rows).transpose();
    const Matrix v = random_orthonormal_rows(rng, s.size(), cols).transpose();
    return u * s.asDiagonal() * v.transpose();
}

/// Singular values by one-sided Jacobi, a different algorithm from the
/// divide-and-conquer SVD used in the library.
inline Vector oracle_singular_values(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues();
}

inline double oracle_tail_energy(const Matrix& m, Index r) {
    const Vector s = oracle_singular_values(m);
    double sum = 0.0;
    for (Index i = r; i < s.size(); ++i) {
        sum += s(i) * s(i);
    }
    return sum;
}

inline double naive_frobenius_sq(const Matrix& m) {
    double sum = 0.0;
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            sum += m(i, j) * m(i, j);
        }
    }
    return sum;
}

/// sin of the largest principal angle between two orthonormal-row bases of
/// equal dimension: spectral norm of the part of B outside span(A).
inline double oracle_max_angle_sine(const Matrix& a, const Matrix& b) {
    const Matrix projector = a.transpose() * a;
    const Matrix outside = b - b * projector;
    if (outside.size() == 0) {
        return 0.0;
    }
    return oracle_singular_values(outside)(0);
}

/// Entries sorted by (|value| desc, row, col), zeros dropped.
inline std::vector<MatrixEntry> oracle_sorted_support(const Matrix& m, Index k) {
    std::vector<MatrixEntry> all;
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (m(i, j) != 0.0) {
                all.push_back({i, j});
            }
        }
    }
    std::stable_sort(all.begin(), all.end(), [&](const MatrixEntry& a, const MatrixEntry& b) {
        return std::abs(m(a.row, a.col)) > std::abs(m(b.row, b.col));
    });
    if (static_cast<Index>(all.size()) > k) {
        all.resize(static_cast<std::size_t>(k));
    }
    std::sort(all.begin(), all.end());
    return all;
}

/// Per-sample set arithmetic version of the example-based metrics.
struct OracleMetrics {
    double hamming = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double accuracy = 0.0;
};

inline OracleMetrics oracle_metrics(const LabelMatrix& truth, const LabelMatrix& pred) {
    OracleMetrics out;
    const Index n = truth.rows();
    const Index k = truth.cols();
    Index xor_count = 0;
    for (Index i = 0; i < n; ++i) {
        std::set<Index> t;
        std::set<Index> p;
        for (Index j = 0; j < k; ++j) {
            if (truth(i, j)) {
                t.insert(j);
            }
            if (pred(i, j)) {
                p.insert(j);
            }
            xor_count += (truth(i, j) ^ pred(i, j));
        }
        std::set<Index> inter;
        std::set<Index> uni;
        std::set_intersection(t.begin(), t.end(), p.begin(), p.end(),
                              std::inserter(inter, inter.begin()));
        std::set_union(t.begin(), t.end(), p.begin(), p.end(), std::inserter(uni, uni.begin()));
        const auto ci = static_cast<double>(inter.size());
        const bool both_empty = t.empty() && p.empty();
        const auto frac = [&](double num, std::size_t den) {
            return den == 0 ? (both_empty ? 1.0 : 0.0) : num / static_cast<double>(den);
        };
        out.precision += frac(ci, p.size());
        out.recall += frac(ci, t.size());
        out.f1 += frac(2.0 * ci, t.size() + p.size());
        out.accuracy += frac(ci, uni.size());
    }
    const double rows = static_cast<double>(n);
    out.hamming = static_cast<double>(xor_count) / (rows * static_cast<double>(k));
    out.precision /= rows;
    out.recall /= rows;
    out.f1 /= rows;
    out.accuracy /= rows;
    return out;
}

inline LabelMatrix random_labels(GaussianRng& rng, Index rows, Index cols) {
    LabelMatrix y(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) {
            y(i, j) = rng.uniform() < 0.5 ? 1 : 0;
        }
    }
    return y;
}

} // namespace sdgs::testing
