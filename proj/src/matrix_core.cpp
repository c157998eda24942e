#include "sdgs/matrix_core.hpp"

#include "sdgs/error.hpp"
#include "sdgs/random.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sdgs {

void require_finite(const Matrix& m, const char* what) {
    if (!m.allFinite()) {
        throw InvalidInput(std::string(what) + ": matrix contains NaN or infinite entries");
    }
}

Matrix truncated_svd_approx(const Matrix& m, Index r, FlopCounter* counter) {
    if (r < 1) {
        throw InvalidInput("truncated_svd_approx: rank must be at least 1");
    }
    require_finite(m, "truncated_svd_approx");
    const Index full = std::min(m.rows(), m.cols());
    if (full == 0) {
        return m;
    }
    r = std::min(r, full);

    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (counter != nullptr) {
        // Golub-Kahan style estimate for a thin SVD.
        const Index big = std::max(m.rows(), m.cols());
        counter->flops += static_cast<std::uint64_t>(4 * big * full * full + 8 * full * full * full);
        counter->add_product(m.rows(), m.cols(), r);
    }
    return svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal() *
           svd.matrixV().leftCols(r).transpose();
}

Matrix brp_low_rank_approx(const Matrix& m, const LowRankApproxConfig& cfg, std::uint64_t seed,
                           FlopCounter* counter) {
    if (cfg.target_rank < 1) {
        throw InvalidInput("brp_low_rank_approx: target rank must be at least 1");
    }
    if (cfg.brp_power_passes < 1) {
        throw InvalidInput("brp_low_rank_approx: at least one projection pass is required");
    }
    require_finite(m, "brp_low_rank_approx");
    const Index rows = m.rows();
    const Index cols = m.cols();
    const Index r = std::min(cfg.target_rank, std::min(rows, cols));
    if (r == 0 || m.isZero(0.0)) {
        return Matrix::Zero(rows, cols);
    }

    GaussianRng rng(seed);
    const Matrix a1 = rng.gaussian_matrix(cols, r);
    Matrix y1 = m * a1;
    Matrix a2;
    Matrix y2;
    for (int pass = 0; pass < cfg.brp_power_passes; ++pass) {
        a2 = y1;
        y2 = m.transpose() * a2;
        y1 = m * y2;
    }
    if (counter != nullptr) {
        counter->add_product(rows, cols, r);
        counter->flops += 2 * static_cast<std::uint64_t>(cfg.brp_power_passes) *
                          static_cast<std::uint64_t>(2 * rows * cols * r);
    }

    Matrix core = a2.transpose() * y1;
    if (!core.allFinite()) {
        throw DegenerateProjection("brp_low_rank_approx: projection overflowed");
    }
    // y1 * core^{-1} == (core^{-T} y1^T)^T, so factor core^T.
    Eigen::PartialPivLU<Matrix> lu(core.transpose());
    const double rcond = lu.rcond();
    if (!(rcond >= 1e-12)) {
        const double ridge = cfg.regularization_epsilon * core.norm();
        if (!(ridge > 0.0)) {
            throw DegenerateProjection("brp_low_rank_approx: projection core is singular");
        }
        core.diagonal().array() += ridge;
        lu.compute(core.transpose());
        if (!(lu.rcond() > 0.0)) {
            throw DegenerateProjection(
                "brp_low_rank_approx: projection core is singular after regularization");
        }
    }
    const Matrix left = lu.solve(y1.transpose()).transpose();
    Matrix result = left * y2.transpose();
    if (counter != nullptr) {
        counter->add_product(rows, r, r);
        counter->add_product(rows, cols, r);
        counter->flops += static_cast<std::uint64_t>(2 * r * r * r / 3);
    }
    if (!result.allFinite()) {
        throw DegenerateProjection("brp_low_rank_approx: non-finite approximation");
    }
    return result;
}

Matrix low_rank_approx(const Matrix& m, const LowRankApproxConfig& cfg, std::uint64_t seed,
                       FlopCounter* counter) {
    switch (cfg.mode) {
    case ApproxMode::ExactSVD:
        return truncated_svd_approx(m, cfg.target_rank, counter);
    case ApproxMode::BRP:
        return brp_low_rank_approx(m, cfg, seed, counter);
    }
    throw InvalidInput("low_rank_approx: unknown mode");
}

Matrix orthonormal_row_basis(const Matrix& m, Index max_rank) {
    if (max_rank < 0) {
        throw InvalidInput("orthonormal_row_basis: negative rank bound");
    }
    require_finite(m, "orthonormal_row_basis");
    if (m.size() == 0 || m.isZero(0.0) || max_rank == 0) {
        return Matrix(0, m.cols());
    }
    const Matrix mt = m.transpose();
    Eigen::ColPivHouseholderQR<Matrix> qr(mt);
    qr.setThreshold(1e-10);
    const Index rank = std::min(qr.rank(), max_rank);
    if (rank == 0) {
        return Matrix(0, m.cols());
    }
    const Matrix q = qr.householderQ() * Matrix::Identity(mt.rows(), rank);
    return q.transpose();
}

ThresholdResult hard_threshold_top_k(const Matrix& m, Index k) {
    if (k < 0 || k > m.size()) {
        throw InvalidInput("hard_threshold_top_k: budget outside [0, rows*cols]");
    }
    ThresholdResult out{Matrix::Zero(m.rows(), m.cols()), {}};
    if (k == 0) {
        return out;
    }
    std::vector<MatrixEntry> candidates;
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (m(i, j) != 0.0) {
                candidates.push_back({i, j});
            }
        }
    }
    if (static_cast<Index>(candidates.size()) > k) {
        const auto larger = [&m](const MatrixEntry& a, const MatrixEntry& b) {
            const double va = std::abs(m(a.row, a.col));
            const double vb = std::abs(m(b.row, b.col));
            if (va != vb) {
                return va > vb;
            }
            return a < b;
        };
        std::nth_element(candidates.begin(), candidates.begin() + (k - 1), candidates.end(),
                         larger);
        candidates.resize(static_cast<std::size_t>(k));
        std::sort(candidates.begin(), candidates.end());
    }
    for (const auto& e : candidates) {
        out.values(e.row, e.col) = m(e.row, e.col);
    }
    out.support = std::move(candidates);
    return out;
}

double frobenius_norm_sq(const Matrix& m) {
    return m.squaredNorm();
}

Index numerical_rank(const Matrix& m, double tol) {
    if (m.size() == 0) {
        return 0;
    }
    Eigen::BDCSVD<Matrix> svd(m);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) {
        return 0;
    }
    return (s.array() > tol * s(0)).count();
}

Vector principal_angles(const Matrix& basis_a, const Matrix& basis_b) {
    if (basis_a.cols() != basis_b.cols()) {
        throw InvalidInput("principal_angles: bases live in different ambient dimensions");
    }
    // Work with the smaller subspace as `b`; sines then come from its
    // residual against `a`, which stays accurate for tiny angles.
    const bool swap = basis_b.rows() > basis_a.rows();
    const Matrix& a = swap ? basis_b : basis_a;
    const Matrix& b = swap ? basis_a : basis_b;
    const Index dim = b.rows();
    if (dim == 0) {
        return Vector(0);
    }
    const Matrix cross = b * a.transpose();
    Eigen::JacobiSVD<Matrix> cos_svd(cross);
    Vector cosines = cos_svd.singularValues(); // descending
    const Matrix residual = b - cross * a;
    Eigen::JacobiSVD<Matrix> sin_svd(residual);
    Vector sines = sin_svd.singularValues(); // descending
    Vector angles(dim);
    for (Index j = 0; j < dim; ++j) {
        const double c = j < cosines.size() ? std::min(1.0, cosines(j)) : 0.0;
        const Index sj = dim - 1 - j;
        const double s = sj < sines.size() ? std::min(1.0, sines(sj)) : 0.0;
        angles(j) = std::atan2(s, c);
    }
    return angles;
}

} // namespace sdgs
