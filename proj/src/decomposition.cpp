#include "sdgs/decomposition.hpp"

#include "sdgs/error.hpp"
#include "sdgs/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

namespace sdgs {

SparsityBudget SparsityBudget::absolute(Index count) {
    if (count < 0) {
        throw InvalidInput("sparsity budget must be nonnegative");
    }
    SparsityBudget b;
    b.value_ = static_cast<double>(count);
    return b;
}

SparsityBudget SparsityBudget::fraction(double fraction) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) {
        throw InvalidInput("sparsity fraction must lie in [0, 1]");
    }
    SparsityBudget b;
    b.is_fraction_ = true;
    b.value_ = fraction;
    return b;
}

Index SparsityBudget::resolve(Index rows, Index cols) const {
    const Index total = rows * cols;
    if (is_fraction_) {
        return std::min(total, static_cast<Index>(std::llround(value_ * static_cast<double>(total))));
    }
    const auto count = static_cast<Index>(value_);
    if (count > total) {
        throw InvalidInput("sparsity budget " + std::to_string(count) + " exceeds n*p = " +
                           std::to_string(total));
    }
    return count;
}

std::vector<Index> TrainingConfig::requested_ranks(Index labels) const {
    if (ranks.empty()) {
        return std::vector<Index>(static_cast<std::size_t>(labels), default_rank);
    }
    if (ranks.size() == 1) {
        return std::vector<Index>(static_cast<std::size_t>(labels), ranks.front());
    }
    return ranks;
}

void TrainingConfig::validate(const LabeledDataset& ds) const {
    if (!(epsilon > 0.0)) {
        throw InvalidInput("epsilon must be positive");
    }
    if (max_iterations < 1) {
        throw InvalidInput("max_iterations must be at least 1");
    }
    if (!(relative_tolerance >= 0.0)) {
        throw InvalidInput("relative tolerance must be nonnegative");
    }
    if (approx.brp_power_passes < 1) {
        throw InvalidInput("BRP needs at least one projection pass");
    }
    if (ranks.size() > 1 && static_cast<Index>(ranks.size()) != ds.labels()) {
        throw InvalidInput("got " + std::to_string(ranks.size()) + " ranks for " +
                           std::to_string(ds.labels()) + " labels");
    }
    for (Index r : requested_ranks(ds.labels())) {
        if (r < 1) {
            throw InvalidInput("ranks must be positive");
        }
    }
    (void)sparsity.resolve(ds.samples(), ds.features());
}

std::string_view to_string(StopReason reason) {
    switch (reason) {
    case StopReason::ObjectiveBelowEpsilon:
        return "objective-below-epsilon";
    case StopReason::Stalled:
        return "stalled";
    case StopReason::MaxIterations:
        return "max-iterations";
    }
    return "unknown";
}

namespace {

Index effective_rank(Index requested, const LabeledDataset& ds, Index label) {
    const auto support = static_cast<Index>(ds.omega(label).size());
    return std::min({requested, support, ds.features()});
}

Matrix residual_without_components(const DecompositionState& state, const LabeledDataset& ds) {
    Matrix r = ds.x() - state.sparse;
    for (const auto& l : state.components) {
        r -= l;
    }
    return r;
}

void record_objective(DecompositionState& state, const LabeledDataset& ds,
                      const std::string& where) {
    const double value = objective(state, ds);
    if (!std::isfinite(value)) {
        throw NumericalDivergence("objective became non-finite after " + where);
    }
    state.objective_trace.push_back(value);
}

Matrix fit_low_rank(DecompositionState& state, const TrainingConfig& cfg, const Matrix& target,
                    Index rank) {
    LowRankApproxConfig approx = cfg.approx;
    approx.target_rank = rank;
    if (approx.mode != ApproxMode::BRP) {
        return truncated_svd_approx(target, rank);
    }
    for (int attempt = 0; attempt < 2; ++attempt) {
        try {
            return brp_low_rank_approx(target, approx, mix_seed(cfg.seed, state.brp_draws++));
        } catch (const DegenerateProjection&) {
            ++state.brp_retries;
        }
    }
    ++state.svd_fallbacks;
    return truncated_svd_approx(target, rank);
}

Matrix restrict_rows(const Matrix& m, const std::vector<Index>& rows) {
    Matrix out(static_cast<Index>(rows.size()), m.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.row(static_cast<Index>(r)) = m.row(rows[r]);
    }
    return out;
}

} // namespace

double objective(const DecompositionState& state, const LabeledDataset& ds) {
    if (static_cast<Index>(state.components.size()) != ds.labels() ||
        state.sparse.rows() != ds.samples() || state.sparse.cols() != ds.features()) {
        throw InvalidInput("decomposition state does not match dataset shape");
    }
    return frobenius_norm_sq(residual_without_components(state, ds));
}

DecompositionState initialize(const LabeledDataset& ds) {
    DecompositionState state;
    const Index n = ds.samples();
    const Index p = ds.features();
    state.components.assign(static_cast<std::size_t>(ds.labels()), Matrix::Zero(n, p));
    state.sparse = Matrix::Zero(n, p);
    for (Index row = 0; row < n; ++row) {
        const Index count = ds.label_count(row);
        if (count == 0) {
            continue;
        }
        const RowVector share = ds.x().row(row) / static_cast<double>(count);
        for (Index label = 0; label < ds.labels(); ++label) {
            if (ds.y()(row, label) == 1) {
                state.components[static_cast<std::size_t>(label)].row(row) = share;
            }
        }
    }
    record_objective(state, ds, "initialization");
    return state;
}

void project_to_constraints(DecompositionState& state, const LabeledDataset& ds,
                            const TrainingConfig& cfg) {
    const auto ranks = cfg.requested_ranks(ds.labels());
    for (Index label = 0; label < ds.labels(); ++label) {
        const auto& rows = ds.omega(label);
        if (rows.empty()) {
            continue;
        }
        const auto li = static_cast<std::size_t>(label);
        const Index rank = effective_rank(ranks[li], ds, label);
        Matrix& component = state.components[li];
        const Matrix fitted = fit_low_rank(state, cfg, restrict_rows(component, rows), rank);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            component.row(rows[r]) = fitted.row(static_cast<Index>(r));
        }
    }
    state.objective_trace.clear();
    record_objective(state, ds, "rank projection");
}

void update_label_component(DecompositionState& state, const LabeledDataset& ds,
                            const TrainingConfig& cfg, Index label) {
    if (label < 0 || label >= ds.labels()) {
        throw InvalidInput("label index out of range");
    }
    const auto& rows = ds.omega(label);
    const auto li = static_cast<std::size_t>(label);
    const std::string where = "label " + std::to_string(label) + " update";
    if (rows.empty()) {
        record_objective(state, ds, where);
        return;
    }
    const auto ranks = cfg.requested_ranks(ds.labels());
    const Index rank = effective_rank(ranks[li], ds, label);
    const Index p = ds.features();

    Matrix target(static_cast<Index>(rows.size()), p);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const Index row = rows[r];
        RowVector v = ds.x().row(row) - state.sparse.row(row);
        for (std::size_t j = 0; j < state.components.size(); ++j) {
            if (j != li) {
                v -= state.components[j].row(row);
            }
        }
        target.row(static_cast<Index>(r)) = v;
    }

    const Matrix fitted = fit_low_rank(state, cfg, target, rank);

    Matrix& component = state.components[li];
    for (std::size_t r = 0; r < rows.size(); ++r) {
        component.row(rows[r]) = fitted.row(static_cast<Index>(r));
    }
    record_objective(state, ds, where);
}

void update_sparse_residual(DecompositionState& state, const LabeledDataset& ds,
                            const TrainingConfig& cfg) {
    Matrix residual = ds.x();
    for (const auto& l : state.components) {
        residual -= l;
    }
    const Index budget = cfg.sparsity.resolve(ds.samples(), ds.features());
    auto kept = hard_threshold_top_k(residual, budget);
    state.sparse = std::move(kept.values);
    state.support = std::move(kept.support);
    record_objective(state, ds, "sparse update");
}

MultiSubspaceModel extract_model(const DecompositionState& state, const LabeledDataset& ds,
                                 const TrainingConfig& cfg, const Normalization& normalization) {
    const auto ranks = cfg.requested_ranks(ds.labels());
    std::vector<Matrix> bases;
    bases.reserve(static_cast<std::size_t>(ds.labels()));
    for (Index label = 0; label < ds.labels(); ++label) {
        const auto& rows = ds.omega(label);
        const auto li = static_cast<std::size_t>(label);
        if (rows.empty()) {
            bases.emplace_back(0, ds.features());
            continue;
        }
        bases.push_back(orthonormal_row_basis(restrict_rows(state.components[li], rows),
                                              effective_rank(ranks[li], ds, label)));
    }
    TrainingSnapshot snapshot{ranks,
                              cfg.sparsity.resolve(ds.samples(), ds.features()),
                              cfg.epsilon,
                              cfg.max_iterations,
                              cfg.approx.mode,
                              cfg.seed};
    return MultiSubspaceModel(std::move(bases), ds.features(), std::move(snapshot),
                              ds.fingerprint(), normalization, ds.label_names());
}

TrainingResult train(const LabeledDataset& ds, const TrainingConfig& cfg,
                     const Normalization& normalization) {
    using Clock = std::chrono::steady_clock;
    cfg.validate(ds);
    const auto start = Clock::now();

    TrainingResult result;
    DecompositionState& state = result.state;
    TrainingDiagnostics& diag = result.diagnostics;
    state = initialize(ds);
    diag.unconstrained_objective = state.objective_trace.back();
    project_to_constraints(state, ds, cfg);
    diag.initial_objective = state.objective_trace.back();

    if (diag.initial_objective <= cfg.epsilon) {
        diag.stop = StopReason::ObjectiveBelowEpsilon;
    } else {
        diag.stop = StopReason::MaxIterations;
        for (int round = 0; round < cfg.max_iterations; ++round) {
            const auto round_start = Clock::now();
            const double before = state.objective_trace.back();
            for (Index label = 0; label < ds.labels(); ++label) {
                update_label_component(state, ds, cfg, label);
            }
            update_sparse_residual(state, ds, cfg);
            ++state.rounds;
            const double after = state.objective_trace.back();
            diag.round_objectives.push_back(after);
            diag.round_seconds.push_back(
                std::chrono::duration<double>(Clock::now() - round_start).count());
            if (after <= cfg.epsilon) {
                diag.stop = StopReason::ObjectiveBelowEpsilon;
                break;
            }
            if (before - after < cfg.relative_tolerance * before) {
                diag.stop = StopReason::Stalled;
                break;
            }
        }
    }
    diag.iterations = state.rounds;
    diag.brp_retries = state.brp_retries;
    diag.svd_fallbacks = state.svd_fallbacks;
    result.model = extract_model(state, ds, cfg, normalization);
    diag.total_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return result;
}

} // namespace sdgs
