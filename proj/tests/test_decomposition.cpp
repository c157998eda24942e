#include "doctest.h"
#include "support.hpp"

#include "sdgs/data_io.hpp"
#include "sdgs/decomposition.hpp"
#include "sdgs/error.hpp"

#include <numeric>

using namespace sdgs;
using sdgs::testing::naive_frobenius_sq;
using sdgs::testing::random_labels;

namespace {

LabeledDataset random_dataset(std::uint64_t seed, Index n, Index p, Index k) {
    GaussianRng rng(seed);
    Matrix x = rng.gaussian_matrix(n, p);
    LabelMatrix y = random_labels(rng, n, k);
    return LabeledDataset(std::move(x), std::move(y));
}

// Direct summation of ||X - sum L - S||^2, entry by entry.
double oracle_objective(const DecompositionState& s, const LabeledDataset& ds) {
    double sum = 0.0;
    for (Index i = 0; i < ds.samples(); ++i) {
        for (Index j = 0; j < ds.features(); ++j) {
            double v = ds.x()(i, j) - s.sparse(i, j);
            for (const auto& l : s.components) {
                v -= l(i, j);
            }
            sum += v * v;
        }
    }
    return sum;
}

void check_constraints(const DecompositionState& s, const LabeledDataset& ds, const TrainingConfig& cfg) {
    const auto ranks = cfg.requested_ranks(ds.labels());
    for (Index label = 0; label < ds.labels(); ++label) {
        const auto& l = s.components[static_cast<std::size_t>(label)];
        const auto& rows = ds.omega(label);
        Matrix restricted(static_cast<Index>(rows.size()), ds.features());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            restricted.row(static_cast<Index>(r)) = l.row(rows[r]);
        }
        if (!rows.empty()) {
            CHECK(numerical_rank(restricted) <= ranks[static_cast<std::size_t>(label)]);
        }
        for (Index i = 0; i < ds.samples(); ++i) {
            if (ds.y()(i, label) == 0) {
                CHECK(l.row(i).isZero(0.0));
            }
        }
    }
    CHECK(static_cast<Index>((s.sparse.array() != 0.0).count()) <=
          cfg.sparsity.resolve(ds.samples(), ds.features()));
}

} // namespace

TEST_CASE("initialize splits each sample evenly across its labels") {
    Matrix x(3, 2);
    x << 2, 4, 1, -1, 5, 6;
    LabelMatrix y(3, 3);
    y << 1, 0, 1, 0, 1, 0, 0, 0, 0;
    const LabeledDataset ds(x, y);
    const auto s = initialize(ds);
    CHECK(s.components[0].row(0) == RowVector(x.row(0) / 2.0));
    CHECK(s.components[2].row(0) == RowVector(x.row(0) / 2.0));
    CHECK(s.components[1].row(0).isZero(0.0));
    CHECK(s.components[1].row(1) == RowVector(x.row(1)));
    for (const auto& l : s.components) {
        CHECK(l.row(2).isZero(0.0));
    }
    CHECK(s.sparse.isZero(0.0));
    REQUIRE(s.objective_trace.size() == 1);
    // Only the unlabelled row is unexplained.
    CHECK(s.objective_trace[0] == doctest::Approx(25.0 + 36.0).epsilon(1e-15));
    CHECK(s.objective_trace[0] == doctest::Approx(oracle_objective(s, ds)).epsilon(1e-15));
}

TEST_CASE("objective examples") {
    const auto ds = random_dataset(3, 6, 4, 2);
    DecompositionState s;
    s.components.assign(2, Matrix::Zero(6, 4));
    s.sparse = Matrix::Zero(6, 4);
    CHECK(objective(s, ds) == doctest::Approx(naive_frobenius_sq(ds.x())).epsilon(1e-12));
    s.sparse = ds.x();
    CHECK(objective(s, ds) == 0.0);

    GaussianRng rng(4);
    s.components[0] = rng.gaussian_matrix(6, 4);
    s.components[1] = rng.gaussian_matrix(6, 4);
    s.sparse = rng.gaussian_matrix(6, 4);
    const double oracle = oracle_objective(s, ds);
    CHECK(std::abs(objective(s, ds) - oracle) <= 1e-12 * oracle);
}

TEST_CASE("single label with exactly low-rank data is fitted in one update") {
    GaussianRng rng(6);
    const Matrix x = rng.gaussian_matrix(15, 2) * rng.gaussian_matrix(2, 8);
    const LabeledDataset ds(x, LabelMatrix::Ones(15, 1));
    TrainingConfig cfg;
    cfg.ranks = {2};
    auto s = initialize(ds);
    update_label_component(s, ds, cfg, 0);
    CHECK(s.objective_trace.back() <= 1e-12);
}

TEST_CASE("ExactSVD label updates never increase the objective") {
    const auto ds = random_dataset(8, 20, 10, 3);
    TrainingConfig cfg;
    cfg.ranks = {2};
    cfg.sparsity = SparsityBudget::absolute(5);
    auto s = initialize(ds);
    project_to_constraints(s, ds, cfg);
    check_constraints(s, ds, cfg);
    const double scale = s.objective_trace.front();
    for (int round = 0; round < 5; ++round) {
        for (Index label = 0; label < 3; ++label) {
            const double before = s.objective_trace.back();
            update_label_component(s, ds, cfg, label);
            CHECK(s.objective_trace.back() <= before + 1e-9 * scale);
            check_constraints(s, ds, cfg);
        }
        const double before = s.objective_trace.back();
        update_sparse_residual(s, ds, cfg);
        CHECK(s.objective_trace.back() <= before + 1e-9 * scale);
        check_constraints(s, ds, cfg);
    }
    CHECK(s.objective_trace.size() == 1 + 5 * 4);
}

TEST_CASE("initialization is not feasible and projection restores the rank bounds") {
    const auto ds = random_dataset(12, 30, 10, 3);
    TrainingConfig cfg;
    cfg.ranks = {1};
    auto s = initialize(ds);
    const double raw = s.objective_trace.back();
    project_to_constraints(s, ds, cfg);
    REQUIRE(s.objective_trace.size() == 1);
    CHECK(s.objective_trace.back() > raw);
    CHECK(s.objective_trace.back() == doctest::Approx(oracle_objective(s, ds)).epsilon(1e-12));
    check_constraints(s, ds, cfg);
}

TEST_CASE("sparse update with full and empty budgets") {
    const auto ds = random_dataset(9, 5, 4, 2);
    auto s = initialize(ds);
    TrainingConfig cfg;
    cfg.sparsity = SparsityBudget::absolute(20);
    update_sparse_residual(s, ds, cfg);
    CHECK(s.objective_trace.back() <= 1e-24);
    cfg.sparsity = SparsityBudget::absolute(0);
    update_sparse_residual(s, ds, cfg);
    CHECK(s.sparse.isZero(0.0));
    CHECK(s.support.empty());
    cfg.sparsity = SparsityBudget::fraction(1.0);
    update_sparse_residual(s, ds, cfg);
    CHECK(s.objective_trace.back() <= 1e-24);
}

TEST_CASE("sparse update with K = 3 on a 3x3 residual is the best of all 84 supports") {
    GaussianRng rng(10);
    const Matrix x = rng.gaussian_matrix(3, 3);
    const LabeledDataset ds(x, LabelMatrix::Zero(3, 1));
    auto s = initialize(ds);
    TrainingConfig cfg;
    cfg.sparsity = SparsityBudget::absolute(3);
    update_sparse_residual(s, ds, cfg);
    CHECK(s.support == sdgs::testing::oracle_sorted_support(x, 3));

    // Brute force: every 3-subset of the 9 entries.
    double best = std::numeric_limits<double>::infinity();
    int subsets = 0;
    for (int mask = 0; mask < 512; ++mask) {
        if (__builtin_popcount(static_cast<unsigned>(mask)) != 3) {
            continue;
        }
        ++subsets;
        double err = 0.0;
        for (int e = 0; e < 9; ++e) {
            if (!(mask & (1 << e))) {
                err += x(e / 3, e % 3) * x(e / 3, e % 3);
            }
        }
        best = std::min(best, err);
    }
    CHECK(subsets == 84);
    CHECK(s.objective_trace.back() == doctest::Approx(best).epsilon(1e-14));
}

TEST_CASE("sparsity budget resolution") {
    CHECK(SparsityBudget::fraction(0.01).resolve(60, 30) == 18);
    CHECK(SparsityBudget::fraction(1e-6).resolve(100, 100) == 0);
    CHECK(SparsityBudget::absolute(7).resolve(3, 3) == 7);
    CHECK_THROWS_AS(SparsityBudget::absolute(10).resolve(3, 3), InvalidInput);
    CHECK_THROWS_AS(SparsityBudget::fraction(1.5), InvalidInput);
    CHECK_THROWS_AS(SparsityBudget::absolute(-1), InvalidInput);
}

TEST_CASE("training config validation") {
    const auto ds = random_dataset(1, 4, 3, 2);
    TrainingConfig cfg;
    CHECK_NOTHROW(cfg.validate(ds));
    cfg.epsilon = 0.0;
    CHECK_THROWS_AS(cfg.validate(ds), InvalidInput);
    cfg = {};
    cfg.max_iterations = 0;
    CHECK_THROWS_AS(cfg.validate(ds), InvalidInput);
    cfg = {};
    cfg.ranks = {1, 2, 3};
    CHECK_THROWS_AS(cfg.validate(ds), InvalidInput);
    cfg = {};
    cfg.ranks = {0};
    CHECK_THROWS_AS(cfg.validate(ds), InvalidInput);
}

TEST_CASE("train stops immediately when epsilon exceeds the initial objective") {
    const auto ds = random_dataset(2, 10, 5, 2);
    TrainingConfig cfg;
    cfg.epsilon = 1e12;
    const auto result = train(ds, cfg);
    CHECK(result.diagnostics.iterations == 0);
    CHECK(result.diagnostics.stop == StopReason::ObjectiveBelowEpsilon);
    CHECK(result.state.objective_trace.size() == 1);
    CHECK(result.model.labels() == 2);
}

TEST_CASE("ExactSVD training trace is non-increasing") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto ds = random_dataset(100 + seed, 30, 12, 4);
        TrainingConfig cfg;
        cfg.ranks = {2};
        cfg.sparsity = SparsityBudget::fraction(0.02);
        cfg.max_iterations = 20;
        cfg.relative_tolerance = 0.0;
        const auto result = train(ds, cfg);
        const auto& trace = result.state.objective_trace;
        CHECK(trace.size() == 1 + static_cast<std::size_t>(result.diagnostics.iterations) * 5);
        for (std::size_t t = 1; t < trace.size(); ++t) {
            CHECK(trace[t] <= trace[t - 1] + 1e-9 * trace.front());
        }
        check_constraints(result.state, ds, cfg);
    }
}

TEST_CASE("train recovers noise-free subspaces") {
    SyntheticSpec spec;
    spec.n_train = 200;
    spec.n_test = 0;
    spec.features = 50;
    spec.labels = 5;
    spec.ranks = {3};
    spec.seed = 5;
    const auto data = generate_synthetic(spec);
    TrainingConfig cfg;
    cfg.ranks = {3};
    cfg.max_iterations = 500;
    cfg.relative_tolerance = 0.0;
    cfg.epsilon = 1e-20;
    const auto result = train(data.train, cfg);
    for (Index i = 0; i < 5; ++i) {
        const Matrix& learned = result.model.basis(i);
        REQUIRE(learned.rows() == 3);
        CHECK(principal_angles(learned, data.bases[static_cast<std::size_t>(i)]).maxCoeff() <= 1e-6);
    }
}

TEST_CASE("permuting samples permutes the decomposition") {
    const auto ds = random_dataset(21, 25, 8, 3);
    std::vector<Index> order(25);
    std::iota(order.begin(), order.end(), 0);
    GaussianRng rng(22);
    for (Index i = 24; i > 0; --i) {
        std::swap(order[static_cast<std::size_t>(i)], order[rng.below(static_cast<std::uint64_t>(i + 1))]);
    }
    const auto shuffled = ds.permuted(order);
    TrainingConfig cfg;
    cfg.ranks = {2};
    cfg.sparsity = SparsityBudget::absolute(6);
    cfg.max_iterations = 10;
    const auto a = train(ds, cfg);
    const auto b = train(shuffled, cfg);
    CHECK(a.diagnostics.iterations == b.diagnostics.iterations);
    for (std::size_t l = 0; l < 3; ++l) {
        for (Index r = 0; r < 25; ++r) {
            CHECK((b.state.components[l].row(r) - a.state.components[l].row(order[static_cast<std::size_t>(r)]))
                      .cwiseAbs()
                      .maxCoeff() <= 1e-8);
        }
        CHECK(principal_angles(a.model.basis(static_cast<Index>(l)), b.model.basis(static_cast<Index>(l)))
                  .maxCoeff() <= 1e-8);
    }
    for (Index r = 0; r < 25; ++r) {
        CHECK((b.state.sparse.row(r) - a.state.sparse.row(order[static_cast<std::size_t>(r)])).cwiseAbs().maxCoeff() <=
              1e-8);
    }
}

TEST_CASE("labels without samples give width-0 groups") {
    GaussianRng rng(30);
    LabelMatrix y = LabelMatrix::Zero(10, 3);
    for (Index i = 0; i < 10; ++i) {
        y(i, i % 2) = 1;
    }
    const LabeledDataset ds(rng.gaussian_matrix(10, 6), y);
    TrainingConfig cfg;
    cfg.max_iterations = 3;
    const auto result = train(ds, cfg);
    CHECK(result.model.basis(2).rows() == 0);
    CHECK(result.model.group_layout()[2].width == 0);
    CHECK(result.state.components[2].isZero(0.0));
}

TEST_CASE("ranks are clamped to the label support and feature count") {
    GaussianRng rng(31);
    LabelMatrix y = LabelMatrix::Zero(12, 2);
    y(0, 0) = 1;
    y(1, 0) = 1;
    for (Index i = 2; i < 12; ++i) {
        y(i, 1) = 1;
    }
    const LabeledDataset ds(rng.gaussian_matrix(12, 4), y);
    TrainingConfig cfg;
    cfg.ranks = {6};
    cfg.max_iterations = 2;
    const auto result = train(ds, cfg);
    CHECK(result.model.basis(0).rows() <= 2);
    CHECK(result.model.basis(1).rows() <= 4);
}

TEST_CASE("BRP training is seeded and close to ExactSVD") {
    SyntheticSpec spec;
    spec.n_train = 120;
    spec.n_test = 0;
    spec.features = 30;
    spec.labels = 4;
    spec.ranks = {2};
    spec.noise_fraction = 0.01;
    spec.seed = 9;
    const auto data = generate_synthetic(spec);
    TrainingConfig cfg;
    cfg.ranks = {2};
    cfg.sparsity = SparsityBudget::fraction(0.01);
    cfg.max_iterations = 30;
    cfg.seed = 4;
    const auto svd = train(data.train, cfg);
    cfg.approx.mode = ApproxMode::BRP;
    const auto brp = train(data.train, cfg);
    const auto again = train(data.train, cfg);
    CHECK(brp.state.objective_trace == again.state.objective_trace);
    CHECK(svd.state.objective_trace.back() <= 1.1 * brp.state.objective_trace.back() + 1e-12);
    check_constraints(brp.state, data.train, cfg);
}

TEST_CASE("non-finite data is rejected before training") {
    Matrix x = Matrix::Ones(3, 2);
    x(1, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(LabeledDataset(x, LabelMatrix::Ones(3, 1)), InvalidInput);
}
