#pragma once

#include "sdgs/matrix_core.hpp"
#include "sdgs/model.hpp"

#include <vector>

namespace sdgs {

// Group lasso over the multi-subspace dictionary:
//
//   minimize_beta  1/2 ||x - beta C||^2 + lambda * sum_i ||beta_{G_i}||_2
//
// beta is a row vector; C stacks the label bases row-wise, so the smooth
// part has gradient (beta C - x) C^T = beta (C C^T) - x C^T.

struct SolverConfig {
    double lambda = 0.3;
    int max_iters = 1000;
    double kkt_tolerance = 1e-6;
    bool acceleration = true;

    void validate() const;
};

struct GroupSparseCoefficients {
    RowVector beta;
    std::vector<GroupRange> groups;

    auto group(std::size_t i) const { return beta.segment(groups[i].offset, groups[i].width); }
};

struct SolveResult {
    GroupSparseCoefficients coefficients;
    bool converged = false;
    /// Set when every group has width zero; beta is empty.
    bool empty_model = false;
    int iterations = 0;
    double kkt = 0.0;
    double objective = 0.0;
    double lipschitz = 0.0;
    /// Objective after each iteration (only recorded when requested).
    std::vector<double> trace;
};

/// Proximal gradient (FISTA with function-value restart when acceleration
/// is on) with step 1/L, L the top eigenvalue of C C^T. Stops once the KKT
/// residual reaches cfg.kkt_tolerance; otherwise returns the best iterate
/// seen with converged = false. `warm_start` may be null.
SolveResult solve(const RowVector& x, const MultiSubspaceModel& model, const SolverConfig& cfg,
                  const RowVector* warm_start = nullptr, bool record_trace = false);

double objective_value(const RowVector& beta, const RowVector& x, const MultiSubspaceModel& model,
                       double lambda);

/// Block soft-thresholding: each group is scaled by max(0, 1 - t/||v_g||).
RowVector prox_group_soft_threshold(const RowVector& v, const std::vector<GroupRange>& groups,
                                    double threshold);

/// Largest violation of the group-wise optimality conditions.
double kkt_residual(const RowVector& beta, const RowVector& x, const MultiSubspaceModel& model,
                    double lambda);

/// Smallest lambda for which beta = 0 is optimal: max_i ||C^i x||_2.
double zero_solution_lambda(const RowVector& x, const MultiSubspaceModel& model);

/// Power iteration for the top eigenvalue of a symmetric PSD matrix.
double largest_eigenvalue(const Matrix& psd, double relative_tolerance = 1e-6,
                          int max_iters = 10000);

} // namespace sdgs
