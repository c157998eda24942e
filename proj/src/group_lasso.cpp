#include "sdgs/group_lasso.hpp"

#include "sdgs/error.hpp"
#include "sdgs/random.hpp"

#include <cmath>
#include <limits>

namespace sdgs {

void SolverConfig::validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw InvalidInput("lambda must be a finite nonnegative number");
    }
    if (!(kkt_tolerance > 0.0)) {
        throw InvalidInput("kkt tolerance must be positive");
    }
    if (max_iters < 1) {
        throw InvalidInput("solver needs at least one iteration");
    }
}

namespace {

void check_sample(const RowVector& x, const MultiSubspaceModel& model) {
    if (x.size() != model.features()) {
        throw InvalidInput("sample has " + std::to_string(x.size()) + " features, model expects " +
                           std::to_string(model.features()));
    }
}

void check_beta(const RowVector& beta, const MultiSubspaceModel& model) {
    if (beta.size() != model.total_width()) {
        throw InvalidInput("coefficient vector length does not match the group layout");
    }
}

double penalty(const RowVector& beta, const std::vector<GroupRange>& groups) {
    double sum = 0.0;
    for (const auto& g : groups) {
        if (g.width > 0) {
            sum += beta.segment(g.offset, g.width).norm();
        }
    }
    return sum;
}

// Objective up to the constant 1/2 ||x||^2, evaluated through the Gram
// matrix. Only used to compare iterates.
double gram_objective(const RowVector& beta, const Matrix& gram, const RowVector& corr,
                      const std::vector<GroupRange>& groups, double lambda) {
    return 0.5 * beta.dot(beta * gram) - beta.dot(corr) + lambda * penalty(beta, groups);
}

double kkt_from_gradient(const RowVector& beta, const RowVector& grad,
                         const std::vector<GroupRange>& groups, double lambda) {
    double worst = 0.0;
    for (const auto& g : groups) {
        if (g.width == 0) {
            continue;
        }
        const auto b = beta.segment(g.offset, g.width);
        const auto d = grad.segment(g.offset, g.width);
        const double norm = b.norm();
        double violation;
        if (norm > 0.0) {
            violation = (d + (lambda / norm) * b).norm();
        } else {
            violation = std::max(0.0, d.norm() - lambda);
        }
        worst = std::max(worst, violation);
    }
    return worst;
}

} // namespace

double largest_eigenvalue(const Matrix& psd, double relative_tolerance, int max_iters) {
    const Index m = psd.rows();
    if (m == 0) {
        return 0.0;
    }
    // Fixed-seed Gaussian start: structured starts such as all-ones can be
    // exactly orthogonal to the top eigenvector (e.g. [[1, c], [c, 1]], c < 0).
    GaussianRng rng(0x5eed);
    Vector v = rng.gaussian_matrix(m, 1).col(0).normalized();
    Vector w = psd * v;
    double estimate = v.dot(w);
    for (int it = 0; it < max_iters; ++it) {
        const double norm = w.norm();
        if (norm == 0.0) {
            return 0.0;
        }
        v = w / norm;
        w = psd * v;
        const double next = v.dot(w);
        if (std::abs(next - estimate) <= relative_tolerance * std::abs(next)) {
            return next;
        }
        estimate = next;
    }
    return estimate;
}

RowVector prox_group_soft_threshold(const RowVector& v, const std::vector<GroupRange>& groups,
                                    double threshold) {
    if (!(threshold >= 0.0)) {
        throw InvalidInput("prox threshold must be nonnegative");
    }
    RowVector out = v;
    for (const auto& g : groups) {
        if (g.width == 0) {
            continue;
        }
        auto seg = out.segment(g.offset, g.width);
        const double norm = seg.norm();
        if (norm <= threshold) {
            seg.setZero();
        } else {
            seg *= 1.0 - threshold / norm;
        }
    }
    return out;
}

double objective_value(const RowVector& beta, const RowVector& x, const MultiSubspaceModel& model,
                       double lambda) {
    check_sample(x, model);
    check_beta(beta, model);
    const RowVector residual = x - beta * model.stacked();
    return 0.5 * residual.squaredNorm() + lambda * penalty(beta, model.group_layout());
}

double kkt_residual(const RowVector& beta, const RowVector& x, const MultiSubspaceModel& model,
                    double lambda) {
    check_sample(x, model);
    check_beta(beta, model);
    const RowVector grad = (beta * model.stacked() - x) * model.stacked().transpose();
    return kkt_from_gradient(beta, grad, model.group_layout(), lambda);
}

double zero_solution_lambda(const RowVector& x, const MultiSubspaceModel& model) {
    check_sample(x, model);
    double worst = 0.0;
    for (const auto& c : model.bases()) {
        if (c.rows() > 0) {
            worst = std::max(worst, (c * x.transpose()).norm());
        }
    }
    return worst;
}

SolveResult solve(const RowVector& x, const MultiSubspaceModel& model, const SolverConfig& cfg,
                  const RowVector* warm_start, bool record_trace) {
    cfg.validate();
    check_sample(x, model);
    if (!x.allFinite()) {
        throw InvalidInput("sample contains NaN or infinite entries");
    }
    const auto& groups = model.group_layout();
    const Index width = model.total_width();

    SolveResult out;
    out.coefficients.groups = groups;
    if (width == 0) {
        out.empty_model = true;
        out.converged = true;
        out.objective = 0.5 * x.squaredNorm();
        return out;
    }

    const Matrix& gram = model.gram();
    const RowVector corr = x * model.stacked().transpose();
    const double half_x = 0.5 * x.squaredNorm();
    const double lambda = cfg.lambda;
    out.lipschitz = largest_eigenvalue(gram, 1e-6);
    const double step = 1.0 / out.lipschitz;

    auto finish = [&](RowVector beta, bool converged, int iterations) {
        const RowVector grad = beta * gram - corr;
        out.kkt = kkt_from_gradient(beta, grad, groups, lambda);
        out.converged = converged || out.kkt <= cfg.kkt_tolerance;
        out.iterations = iterations;
        out.objective = objective_value(beta, x, model, lambda);
        out.coefficients.beta = std::move(beta);
        return out;
    };

    // Screening: zero is optimal exactly when no group correlation exceeds lambda.
    double corr_max = 0.0;
    for (const auto& g : groups) {
        if (g.width > 0) {
            corr_max = std::max(corr_max, corr.segment(g.offset, g.width).norm());
        }
    }
    if (corr_max <= lambda) {
        return finish(RowVector::Zero(width), true, 0);
    }

    RowVector beta = RowVector::Zero(width);
    if (warm_start != nullptr) {
        if (warm_start->size() != width) {
            throw InvalidInput("warm start has the wrong length");
        }
        beta = *warm_start;
    }
    RowVector momentum = beta;
    double theta = 1.0;
    double current = gram_objective(beta, gram, corr, groups, lambda);
    RowVector best = beta;
    double best_value = current;

    for (int it = 1; it <= cfg.max_iters; ++it) {
        const RowVector base = cfg.acceleration ? momentum : beta;
        RowVector next =
            prox_group_soft_threshold(base - step * (base * gram - corr), groups, step * lambda);
        double next_value = gram_objective(next, gram, corr, groups, lambda);
        if (cfg.acceleration && next_value > current) {
            // Restart: drop momentum and take a plain proximal step.
            theta = 1.0;
            next = prox_group_soft_threshold(beta - step * (beta * gram - corr), groups,
                                             step * lambda);
            next_value = gram_objective(next, gram, corr, groups, lambda);
            momentum = next;
        } else if (cfg.acceleration) {
            const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
            momentum = next + ((theta - 1.0) / theta_next) * (next - beta);
            theta = theta_next;
        }
        beta = std::move(next);
        current = next_value;
        if (record_trace) {
            out.trace.push_back(half_x + current);
        }
        if (current <= best_value) {
            best = beta;
            best_value = current;
        }
        const RowVector grad = beta * gram - corr;
        if (kkt_from_gradient(beta, grad, groups, lambda) <= cfg.kkt_tolerance) {
            return finish(std::move(beta), true, it);
        }
    }
    return finish(std::move(best), false, cfg.max_iters);
}

} // namespace sdgs
