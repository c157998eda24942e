#include "sdgs/prediction.hpp"

#include "sdgs/error.hpp"

#include <algorithm>
#include <exception>
#include <string>
#include <thread>

namespace sdgs {

std::string_view to_string(EmptyFallback fallback) {
    return fallback == EmptyFallback::Top1 ? "top1" : "allow-empty";
}

EmptyFallback parse_empty_fallback(std::string_view name) {
    if (name == "allow-empty") {
        return EmptyFallback::AllowEmpty;
    }
    if (name == "top1") {
        return EmptyFallback::Top1;
    }
    throw InvalidInput("unknown empty-prediction fallback '" + std::string(name) + "'");
}

std::string_view to_string(GroupScore score) {
    return score == GroupScore::L2 ? "l2" : "l1";
}

GroupScore parse_group_score(std::string_view name) {
    if (name == "l1") {
        return GroupScore::L1;
    }
    if (name == "l2") {
        return GroupScore::L2;
    }
    throw InvalidInput("unknown group score '" + std::string(name) + "'");
}

void PredictionConfig::validate() const {
    solver.validate();
    if (!(delta >= 0.0)) {
        throw InvalidInput("delta must be nonnegative");
    }
}

Vector group_scores(const GroupSparseCoefficients& coefficients, GroupScore score) {
    Vector out = Vector::Zero(static_cast<Index>(coefficients.groups.size()));
    for (std::size_t i = 0; i < coefficients.groups.size(); ++i) {
        const auto& g = coefficients.groups[i];
        if (g.width == 0 || coefficients.beta.size() == 0) {
            continue;
        }
        const auto seg = coefficients.beta.segment(g.offset, g.width);
        out(static_cast<Index>(i)) = score == GroupScore::L1 ? seg.lpNorm<1>() : seg.norm();
    }
    return out;
}

std::vector<std::uint8_t> threshold_scores(const Vector& scores,
                                           const std::vector<GroupRange>& groups, double delta) {
    std::vector<std::uint8_t> y(groups.size(), 0);
    for (std::size_t i = 0; i < groups.size(); ++i) {
        if (groups[i].width > 0 && scores(static_cast<Index>(i)) >= delta) {
            y[i] = 1;
        }
    }
    return y;
}

LabelSelection select_labels(const Vector& scores, const std::vector<GroupRange>& groups,
                             double delta, EmptyFallback fallback) {
    LabelSelection out{threshold_scores(scores, groups, delta), false};
    const bool none = std::none_of(out.y.begin(), out.y.end(), [](auto v) { return v != 0; });
    if (!none || fallback != EmptyFallback::Top1) {
        return out;
    }
    Index best = -1;
    for (Index i = 0; i < scores.size(); ++i) {
        if (groups[static_cast<std::size_t>(i)].width == 0) {
            continue;
        }
        if (best < 0 || scores(i) > scores(best)) {
            best = i;
        }
    }
    if (best >= 0) {
        out.y[static_cast<std::size_t>(best)] = 1;
        out.used_fallback = true;
    }
    return out;
}

LabelPrediction predict(const RowVector& x, const MultiSubspaceModel& model,
                        const PredictionConfig& cfg) {
    cfg.validate();
    auto solved = solve(x, model, cfg.solver);
    LabelPrediction out;
    out.converged = solved.converged;
    out.empty_model = solved.empty_model;
    out.coefficients = std::move(solved.coefficients);
    out.group_scores = group_scores(out.coefficients, cfg.score);
    auto selection =
        select_labels(out.group_scores, model.group_layout(), cfg.delta, cfg.empty_fallback);
    out.y = std::move(selection.y);
    out.used_fallback = selection.used_fallback;
    return out;
}

std::vector<LabelPrediction> predict_batch(const Matrix& samples, const MultiSubspaceModel& model,
                                           const PredictionConfig& cfg, int jobs) {
    cfg.validate();
    if (samples.rows() > 0 && samples.cols() != model.features()) {
        throw InvalidInput("batch has " + std::to_string(samples.cols()) +
                           " features, model expects " + std::to_string(model.features()));
    }
    std::vector<LabelPrediction> out(static_cast<std::size_t>(samples.rows()));
    const auto run = [&](Index begin, Index end) {
        for (Index i = begin; i < end; ++i) {
            out[static_cast<std::size_t>(i)] = predict(samples.row(i), model, cfg);
        }
    };
    const Index n = samples.rows();
    const Index workers = std::clamp<Index>(jobs, 1, std::max<Index>(n, 1));
    if (workers == 1) {
        run(0, n);
        return out;
    }
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    {
        std::vector<std::jthread> pool;
        const Index chunk = (n + workers - 1) / workers;
        for (Index w = 0; w < workers; ++w) {
            const Index begin = w * chunk;
            const Index end = std::min(n, begin + chunk);
            pool.emplace_back([&, w, begin, end] {
                try {
                    run(begin, end);
                } catch (...) {
                    errors[static_cast<std::size_t>(w)] = std::current_exception();
                }
            });
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return out;
}

} // namespace sdgs
