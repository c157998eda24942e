#pragma once

#include "sdgs/group_lasso.hpp"
#include "sdgs/model.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace sdgs {

enum class EmptyFallback { AllowEmpty, Top1 };
/// How a group's coefficients are reduced to a score: l1 (the default) or l2.
enum class GroupScore { L1, L2 };

std::string_view to_string(EmptyFallback fallback);
EmptyFallback parse_empty_fallback(std::string_view name);
std::string_view to_string(GroupScore score);
GroupScore parse_group_score(std::string_view name);

struct PredictionConfig {
    SolverConfig solver;
    double delta = 1e-3;
    EmptyFallback empty_fallback = EmptyFallback::AllowEmpty;
    GroupScore score = GroupScore::L1;

    void validate() const;
};

struct LabelPrediction {
    std::vector<std::uint8_t> y;
    Vector group_scores;
    GroupSparseCoefficients coefficients;
    bool converged = true;
    bool empty_model = false;
    /// True when the label came from the Top1 fallback rather than delta.
    bool used_fallback = false;
};

/// Group scores for a coefficient vector (width-0 groups score 0).
Vector group_scores(const GroupSparseCoefficients& coefficients, GroupScore score);

/// Labels selected at threshold delta: score >= delta, never a width-0 group.
std::vector<std::uint8_t> threshold_scores(const Vector& scores,
                                           const std::vector<GroupRange>& groups, double delta);

struct LabelSelection {
    std::vector<std::uint8_t> y;
    bool used_fallback = false;
};

/// threshold_scores plus the empty-set fallback: under Top1 an empty
/// selection becomes the single highest-scoring non-empty group (ties go to
/// the smallest index).
LabelSelection select_labels(const Vector& scores, const std::vector<GroupRange>& groups,
                             double delta, EmptyFallback fallback);

/// Solves the group lasso for x (already in the model's feature space) and
/// thresholds the group scores.
LabelPrediction predict(const RowVector& x, const MultiSubspaceModel& model,
                        const PredictionConfig& cfg);

/// Row-wise predict. `jobs` > 1 splits rows across threads; the output is
/// identical to the sequential loop.
std::vector<LabelPrediction> predict_batch(const Matrix& samples, const MultiSubspaceModel& model,
                                           const PredictionConfig& cfg, int jobs = 1);

} // namespace sdgs
