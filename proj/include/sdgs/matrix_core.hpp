#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace sdgs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

enum class ApproxMode { ExactSVD, BRP };

struct LowRankApproxConfig {
    Index target_rank = 1;
    ApproxMode mode = ApproxMode::ExactSVD;
    /// Adaptive re-projection rounds for BRP. One round is the classic
    /// Y1 = M A1, Y2 = M^T Y1, Y1 = M Y2 update.
    int brp_power_passes = 1;
    /// Relative ridge added to the r x r core when it is ill-conditioned,
    /// scaled by its Frobenius norm.
    double regularization_epsilon = 1e-10;
};

/// Optional counter of floating point operations spent in the kernels below.
/// Counts use the usual 2mnk estimate per dense product.
struct FlopCounter {
    std::uint64_t flops = 0;
    void add_product(Index m, Index n, Index k) {
        flops += 2 * static_cast<std::uint64_t>(m) * static_cast<std::uint64_t>(n) *
                 static_cast<std::uint64_t>(k);
    }
};

struct MatrixEntry {
    Index row = 0;
    Index col = 0;
    friend bool operator==(const MatrixEntry&, const MatrixEntry&) = default;
    friend auto operator<=>(const MatrixEntry&, const MatrixEntry&) = default;
};

struct ThresholdResult {
    Matrix values;
    /// Kept entries in ascending (row, col) order.
    std::vector<MatrixEntry> support;
};

/// Throws InvalidInput if any entry is NaN or infinite.
void require_finite(const Matrix& m, const char* what);

/// Best rank-<=r approximation via a full thin SVD (r is clamped to
/// min(rows, cols)).
Matrix truncated_svd_approx(const Matrix& m, Index r, FlopCounter* counter = nullptr);

/// Bilateral random projection approximation Y1 (A2^T Y1)^{-1} Y2^T.
/// A1 is drawn from GaussianRng(seed). Throws DegenerateProjection when the
/// core stays singular after regularization.
Matrix brp_low_rank_approx(const Matrix& m, const LowRankApproxConfig& cfg, std::uint64_t seed,
                           FlopCounter* counter = nullptr);

/// Dispatches on cfg.mode.
Matrix low_rank_approx(const Matrix& m, const LowRankApproxConfig& cfg, std::uint64_t seed,
                       FlopCounter* counter = nullptr);

/// Orthonormal basis (as rows) of the row space of m, computed from a
/// column-pivoted QR of m^T. At most max_rank rows; an all-zero matrix gives
/// a 0 x cols result.
Matrix orthonormal_row_basis(const Matrix& m, Index max_rank);

/// Keeps the k largest-magnitude nonzero entries. Ties in |value| keep the
/// lexicographically smaller (row, col).
ThresholdResult hard_threshold_top_k(const Matrix& m, Index k);

double frobenius_norm_sq(const Matrix& m);

/// Numerical rank: singular values above tol * largest singular value.
Index numerical_rank(const Matrix& m, double tol = 1e-8);

/// Principal angles (radians, ascending) between the row spaces spanned by
/// two orthonormal-row matrices.
Vector principal_angles(const Matrix& basis_a, const Matrix& basis_b);

} // namespace sdgs
