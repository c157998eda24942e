#pragma once

#include "sdgs/dataset.hpp"
#include "sdgs/matrix_core.hpp"
#include "sdgs/model.hpp"
#include "sdgs/normalization.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace sdgs {

/// Cardinality bound K on the sparse residual, given either as an entry
/// count or as a fraction of n*p (resolved as round(fraction * n * p)).
class SparsityBudget {
public:
    static SparsityBudget absolute(Index count);
    static SparsityBudget fraction(double fraction);

    Index resolve(Index rows, Index cols) const;
    bool is_fraction() const noexcept { return is_fraction_; }
    double value() const noexcept { return value_; }

private:
    bool is_fraction_ = false;
    double value_ = 0.0;
};

struct TrainingConfig {
    /// Per-label rank bounds r^i. Empty means `default_rank` for every label.
    std::vector<Index> ranks;
    Index default_rank = 2;
    SparsityBudget sparsity = SparsityBudget::absolute(0);
    /// Stop once the objective drops to or below this value.
    double epsilon = 1e-10;
    int max_iterations = 50;
    /// Stop when a full round lowers the objective by less than this fraction.
    double relative_tolerance = 1e-6;
    /// Mode and BRP knobs shared by all labels; target_rank is ignored.
    LowRankApproxConfig approx;
    std::uint64_t seed = 0;

    /// Throws InvalidInput on an unusable configuration for `ds`.
    void validate(const LabeledDataset& ds) const;
    /// Requested rank for each label before clamping.
    std::vector<Index> requested_ranks(Index labels) const;
};

/// Working variables of the decomposition X ~ sum_i L^i + S.
struct DecompositionState {
    /// L^1..L^k, each n x p; rows outside omega(i) are exactly zero.
    std::vector<Matrix> components;
    Matrix sparse;
    std::vector<MatrixEntry> support;
    /// Objective after initialization, then after every sub-update
    /// (k + 1 entries per round).
    std::vector<double> objective_trace;
    int rounds = 0;
    /// Number of BRP sketches drawn so far; each draw gets its own seed.
    std::uint64_t brp_draws = 0;
    int brp_retries = 0;
    int svd_fallbacks = 0;
};

enum class StopReason { ObjectiveBelowEpsilon, Stalled, MaxIterations };
std::string_view to_string(StopReason reason);

struct TrainingDiagnostics {
    int iterations = 0;
    /// Objective of the plain initialization, before rank projection.
    double unconstrained_objective = 0.0;
    /// Objective at the first feasible point; the trace starts here.
    double initial_objective = 0.0;
    std::vector<double> round_objectives;
    std::vector<double> round_seconds;
    double total_seconds = 0.0;
    StopReason stop = StopReason::MaxIterations;
    int brp_retries = 0;
    int svd_fallbacks = 0;
};

struct TrainingResult {
    MultiSubspaceModel model;
    DecompositionState state;
    TrainingDiagnostics diagnostics;
};

/// ||X - sum_i L^i - S||_F^2.
double objective(const DecompositionState& state, const LabeledDataset& ds);

/// L^i rows on omega(i) = X rows divided by the sample's label count; S = 0.
/// Unlabelled samples start with all-zero component rows.
DecompositionState initialize(const LabeledDataset& ds);

/// Truncates every L^i on omega(i) to its rank bound. The initialization
/// fits labelled rows exactly with full-rank components, so it is not a
/// feasible point; the trace restarts at the projected objective.
void project_to_constraints(DecompositionState& state, const LabeledDataset& ds,
                            const TrainingConfig& cfg);

/// Replaces L^i on omega(i) by the best rank-r^i approximation (or its BRP
/// surrogate) of the residual left by the other components. A degenerate BRP
/// sketch is retried once with a fresh seed, then the exact SVD is used.
void update_label_component(DecompositionState& state, const LabeledDataset& ds,
                            const TrainingConfig& cfg, Index label);

/// S = top-K entries of X - sum_i L^i.
void update_sparse_residual(DecompositionState& state, const LabeledDataset& ds,
                            const TrainingConfig& cfg);

/// Orthonormal row bases of each L^i restricted to omega(i).
MultiSubspaceModel extract_model(const DecompositionState& state, const LabeledDataset& ds,
                                 const TrainingConfig& cfg, const Normalization& normalization = {});

/// Alternating minimization: initialize, project to the rank bounds, then rounds of label updates in
/// ascending order followed by the sparse update. Throws NumericalDivergence
/// if the objective becomes non-finite.
TrainingResult train(const LabeledDataset& ds, const TrainingConfig& cfg,
                     const Normalization& normalization = {});

} // namespace sdgs
