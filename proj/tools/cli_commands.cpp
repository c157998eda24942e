#include "cli.hpp"
#include "report.hpp"

#include "sdgs/data_io.hpp"
#include "sdgs/decomposition.hpp"
#include "sdgs/error.hpp"
#include "sdgs/metrics.hpp"
#include "sdgs/prediction.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>
#include <time.h>

namespace sdgs::cli {
namespace {

double thread_cpu_seconds() {
    timespec ts{};
    clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
    return static_cast<double>(ts.tv_sec) + 1e-9 * static_cast<double>(ts.tv_nsec);
}

// ---------------------------------------------------------------------------
// Option groups
// ---------------------------------------------------------------------------

struct SharedArgs {
    std::string format = "table";
    std::uint64_t seed = 1;
    bool verbose = false;
};

void add_shared(CLI::App* app, SharedArgs& a) {
    app->add_option("--format", a.format, "Report format")
        ->check(CLI::IsMember({"table", "csv", "jsonl"}))
        ->capture_default_str();
    app->add_option("--seed", a.seed, "Random seed")->envname("SDGS_SEED")->capture_default_str();
    app->add_flag("-v,--verbose", a.verbose, "Progress messages on stderr");
}

struct DataArgs {
    std::string train;
    std::string test;
    Index labels = 0;
    std::string input_format = "auto";
    std::string normalize = "zscore";
};

void add_data(CLI::App* app, DataArgs& a, bool with_test) {
    app->add_option("--train", a.train, "Training data (.arff or delimited)")
        ->required()
        ->check(CLI::ExistingFile);
    if (with_test) {
        app->add_option("--test", a.test, "Held-out data in the same format")
            ->check(CLI::ExistingFile);
    }
    app->add_option("--labels", a.labels, "Number of trailing label columns")
        ->required()
        ->check(CLI::PositiveNumber);
    app->add_option("--input-format", a.input_format, "auto (by extension), arff or csv")
        ->check(CLI::IsMember({"auto", "arff", "csv"}))
        ->capture_default_str();
    app->add_option("--normalize", a.normalize, "Feature transform fitted on the training split")
        ->check(CLI::IsMember({"none", "unit-row", "zscore"}))
        ->capture_default_str();
}

DatasetFormat resolve_format(const std::string& choice, const std::string& path) {
    if (choice == "arff") {
        return DatasetFormat::ArffWithLabelCount;
    }
    if (choice == "csv") {
        return DatasetFormat::DelimitedSplit;
    }
    return format_for_path(path);
}

LoadedData load(const DataArgs& a) {
    DatasetSource src;
    src.format = resolve_format(a.input_format, a.train);
    src.train_path = a.train;
    if (!a.test.empty()) {
        src.test_path = a.test;
    }
    src.label_count = a.labels;
    src.normalization = parse_normalization(a.normalize);
    return load_dataset(src);
}

struct TrainArgs {
    std::vector<Index> ranks{2};
    double sparsity_fraction = 1e-4;
    Index sparsity_count = -1;
    double epsilon = 1e-10;
    int max_iterations = 50;
    double tolerance = 1e-6;
    std::string approx = "svd";
    int power_passes = 1;
};

void add_training(CLI::App* app, TrainArgs& a, bool with_grid_knobs) {
    if (!with_grid_knobs) {
        app->add_option("--rank", a.ranks, "Rank bound: one value for all labels or one per label")
            ->delimiter(',')
            ->capture_default_str();
        auto* frac = app->add_option("--sparsity-fraction", a.sparsity_fraction,
                                     "Sparse budget K as a fraction of n*p")
                         ->check(CLI::Range(0.0, 1.0))
                         ->capture_default_str();
        app->add_option("--sparsity-count", a.sparsity_count, "Sparse budget K as an entry count")
            ->check(CLI::NonNegativeNumber)
            ->excludes(frac);
        app->add_option("--approx", a.approx, "Low-rank update: svd or brp")
            ->check(CLI::IsMember({"svd", "brp"}))
            ->capture_default_str();
    }
    app->add_option("--epsilon", a.epsilon, "Stop once the objective is at or below this")
        ->capture_default_str();
    app->add_option("--max-iterations", a.max_iterations, "Round limit")->capture_default_str();
    app->add_option("--tolerance", a.tolerance, "Stop when a round lowers the objective by less than this fraction")
        ->capture_default_str();
    app->add_option("--power-passes", a.power_passes, "BRP adaptive projection passes")
        ->capture_default_str();
}

ApproxMode parse_approx(const std::string& name) {
    if (name == "svd") {
        return ApproxMode::ExactSVD;
    }
    if (name == "brp") {
        return ApproxMode::BRP;
    }
    throw InvalidInput("unknown approximation mode '" + name + "'");
}

std::string approx_name(ApproxMode mode) {
    return mode == ApproxMode::BRP ? "brp" : "svd";
}

TrainingConfig training_config(const TrainArgs& a, std::uint64_t seed) {
    TrainingConfig cfg;
    cfg.ranks = a.ranks;
    cfg.sparsity = a.sparsity_count >= 0 ? SparsityBudget::absolute(a.sparsity_count)
                                         : SparsityBudget::fraction(a.sparsity_fraction);
    cfg.epsilon = a.epsilon;
    cfg.max_iterations = a.max_iterations;
    cfg.relative_tolerance = a.tolerance;
    cfg.approx.mode = parse_approx(a.approx);
    cfg.approx.brp_power_passes = a.power_passes;
    cfg.seed = seed;
    return cfg;
}

struct SolveArgs {
    double lambda = 0.3;
    std::vector<double> deltas{1e-3};
    std::string fallback = "allow-empty";
    std::string score = "l1";
    int max_iters = 1000;
    double kkt_tolerance = 1e-6;
    bool no_acceleration = false;
    int jobs = 1;
};

void add_solver(CLI::App* app, SolveArgs& a, bool with_grid_knobs) {
    if (!with_grid_knobs) {
        app->add_option("--lambda", a.lambda, "Group-lasso penalty")->capture_default_str();
        app->add_option("--delta", a.deltas, "Selection threshold; repeat or comma-separate to sweep")
            ->delimiter(',')
            ->capture_default_str();
    }
    app->add_option("--fallback", a.fallback, "Empty prediction handling: allow-empty or top1")
        ->check(CLI::IsMember({"allow-empty", "top1"}))
        ->capture_default_str();
    app->add_option("--score", a.score, "Group score: l1 or l2 norm of the coefficients")
        ->check(CLI::IsMember({"l1", "l2"}))
        ->capture_default_str();
    app->add_option("--max-iters", a.max_iters, "Solver iteration limit")->capture_default_str();
    app->add_option("--kkt-tolerance", a.kkt_tolerance, "Solver optimality tolerance")
        ->capture_default_str();
    app->add_flag("--no-acceleration", a.no_acceleration, "Plain proximal gradient");
    app->add_option("--jobs", a.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
}

PredictionConfig prediction_config(const SolveArgs& a, double lambda, double delta) {
    PredictionConfig cfg;
    cfg.solver.lambda = lambda;
    cfg.solver.max_iters = a.max_iters;
    cfg.solver.kkt_tolerance = a.kkt_tolerance;
    cfg.solver.acceleration = !a.no_acceleration;
    cfg.delta = delta;
    cfg.empty_fallback = parse_empty_fallback(a.fallback);
    cfg.score = parse_group_score(a.score);
    cfg.validate();
    return cfg;
}

std::string label_name(const std::vector<std::string>& names, Index i) {
    if (static_cast<std::size_t>(i) < names.size() && !names[static_cast<std::size_t>(i)].empty()) {
        return names[static_cast<std::size_t>(i)];
    }
    return "label" + std::to_string(i);
}

std::string delta_column(double delta) {
    return "labels@" + format_real(delta);
}

/// Scores for every row, then the label matrix at `delta`.
Matrix score_rows(const Matrix& x, const MultiSubspaceModel& model, const PredictionConfig& cfg,
                  int jobs, Index& unconverged) {
    const auto preds = predict_batch(x, model, cfg, jobs);
    Matrix scores(x.rows(), model.labels());
    for (Index i = 0; i < x.rows(); ++i) {
        scores.row(i) = preds[static_cast<std::size_t>(i)].group_scores.transpose();
        unconverged += preds[static_cast<std::size_t>(i)].converged ? 0 : 1;
    }
    return scores;
}

LabelMatrix label_rows(const Matrix& scores, const MultiSubspaceModel& model, double delta,
                       EmptyFallback fallback) {
    LabelMatrix y(scores.rows(), scores.cols());
    for (Index i = 0; i < scores.rows(); ++i) {
        const auto sel = select_labels(scores.row(i).transpose(), model.group_layout(), delta, fallback);
        for (Index j = 0; j < scores.cols(); ++j) {
            y(i, j) = sel.y[static_cast<std::size_t>(j)];
        }
    }
    return y;
}

std::vector<Column> metric_columns() {
    return {{"HamL", true}, {"Prec", true}, {"Rec", true}, {"F1", true}, {"Acc", true}};
}

void append_metrics(std::vector<Cell>& row, const EvaluationReport& r) {
    row.insert(row.end(), {r.hamming_loss, r.precision, r.recall, r.f1, r.accuracy});
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainCommand {
    SharedArgs shared;
    DataArgs data;
    TrainArgs training;
    std::string model_path;
    std::string encoding = "binary";
    bool no_timing = false;
};

int cmd_train(const TrainCommand& c, std::ostream& out, std::ostream& err) {
    const TrainingConfig cfg = training_config(c.training, c.shared.seed);
    const auto data = load(c.data);
    cfg.validate(data.train);
    if (c.shared.verbose) {
        err << "training on " << data.train.samples() << " x " << data.train.features() << " with "
            << data.train.labels() << " labels\n";
    }
    const double cpu_start = thread_cpu_seconds();
    const auto result = train(data.train, cfg, data.transform);
    const double cpu = thread_cpu_seconds() - cpu_start;
    const auto& d = result.diagnostics;
    if (c.shared.verbose) {
        for (std::size_t r = 0; r < d.round_objectives.size(); ++r) {
            err << "round " << r + 1 << " objective " << format_real(d.round_objectives[r]) << '\n';
        }
    }
    save_model(result.model, c.model_path, c.encoding == "hex" ? ModelEncoding::Hex : ModelEncoding::Binary);

    std::vector<Column> cols{{"samples"},
                             {"features"},
                             {"labels"},
                             {"approx"},
                             {"iterations"},
                             {"stop"},
                             {"unconstrained_objective", false, 6},
                             {"initial_objective", false, 6},
                             {"final_objective", false, 6},
                             {"basis_widths"},
                             {"brp_retries"},
                             {"svd_fallbacks"}};
    std::string widths;
    for (const auto& g : result.model.group_layout()) {
        widths += (widths.empty() ? "" : " ") + std::to_string(g.width);
    }
    std::vector<Cell> row{static_cast<std::int64_t>(data.train.samples()),
                          static_cast<std::int64_t>(data.train.features()),
                          static_cast<std::int64_t>(data.train.labels()),
                          approx_name(cfg.approx.mode),
                          static_cast<std::int64_t>(d.iterations),
                          std::string(to_string(d.stop)),
                          d.unconstrained_objective,
                          d.initial_objective,
                          result.state.objective_trace.back(),
                          widths,
                          static_cast<std::int64_t>(d.brp_retries),
                          static_cast<std::int64_t>(d.svd_fallbacks)};
    if (!c.no_timing) {
        cols.push_back({"wall_seconds", false, 3});
        cols.push_back({"cpu_seconds", false, 3});
        double mean_round = 0.0;
        for (double s : d.round_seconds) {
            mean_round += s;
        }
        if (!d.round_seconds.empty()) {
            mean_round /= static_cast<double>(d.round_seconds.size());
        }
        cols.push_back({"mean_round_seconds", false, 4});
        row.insert(row.end(), {d.total_seconds, cpu, mean_round});
    }
    Report report(cols);
    report.add_row(std::move(row));
    report.write(out, parse_report_format(c.shared.format));
    return kExitOk;
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

struct PredictCommand {
    SharedArgs shared;
    SolveArgs solve;
    std::string model_path;
    std::string data_path;
    Index labels = 0;
    std::string input_format = "auto";
    std::string out_path;
};

int cmd_predict(const PredictCommand& c, std::ostream& out, std::ostream& err) {
    const auto cfg = prediction_config(c.solve, c.solve.lambda, c.solve.deltas.front());
    for (double delta : c.solve.deltas) {
        (void)prediction_config(c.solve, c.solve.lambda, delta);
    }
    const auto model = load_model(c.model_path);
    const Index k = c.labels > 0 ? c.labels : model.labels();
    const auto ds = read_dataset_file(c.data_path, resolve_format(c.input_format, c.data_path), k);
    if (ds.features() != model.features()) {
        throw InvalidInput("data has " + std::to_string(ds.features()) + " features but the model expects " +
                           std::to_string(model.features()));
    }
    const Matrix x = model.normalization().apply(ds.x());
    Index unconverged = 0;
    const Matrix scores = score_rows(x, model, cfg, c.solve.jobs, unconverged);
    if (unconverged > 0) {
        err << "warning: solver did not reach the KKT tolerance on " << unconverged << " of "
            << x.rows() << " samples\n";
    }

    std::vector<Column> cols{{"row"}};
    for (double delta : c.solve.deltas) {
        cols.push_back({delta_column(delta)});
    }
    for (Index j = 0; j < model.labels(); ++j) {
        cols.push_back({"score:" + label_name(model.label_names(), j), false, 6});
    }
    Report report(cols);
    std::vector<LabelMatrix> by_delta;
    for (double delta : c.solve.deltas) {
        by_delta.push_back(label_rows(scores, model, delta, cfg.empty_fallback));
    }
    for (Index i = 0; i < x.rows(); ++i) {
        std::vector<Cell> row{static_cast<std::int64_t>(i)};
        for (const auto& y : by_delta) {
            std::string s;
            for (Index j = 0; j < y.cols(); ++j) {
                s += y(i, j) ? '1' : '0';
            }
            row.emplace_back(s);
        }
        for (Index j = 0; j < scores.cols(); ++j) {
            row.emplace_back(scores(i, j));
        }
        report.add_row(std::move(row));
    }
    const auto format = parse_report_format(c.shared.format);
    if (c.out_path.empty()) {
        report.write(out, format);
    } else {
        std::ofstream file(c.out_path, std::ios::binary);
        if (!file) {
            throw IoError("cannot open '" + c.out_path + "' for writing");
        }
        report.write(file, format);
        if (!file) {
            throw IoError("failed writing '" + c.out_path + "'");
        }
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct PredictionColumns {
    std::vector<std::string> names;
    std::vector<LabelMatrix> matrices;
};

LabelMatrix from_bitstrings(const std::vector<std::string>& rows, const std::string& what) {
    if (rows.empty()) {
        throw InvalidInput(what + " holds no rows");
    }
    const auto k = static_cast<Index>(rows.front().size());
    LabelMatrix y(static_cast<Index>(rows.size()), k);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (static_cast<Index>(rows[i].size()) != k) {
            throw InvalidInput(what + " row " + std::to_string(i) + " has " + std::to_string(rows[i].size()) +
                               " labels, expected " + std::to_string(k));
        }
        for (Index j = 0; j < k; ++j) {
            const char ch = rows[i][static_cast<std::size_t>(j)];
            if (ch != '0' && ch != '1') {
                throw InvalidInput(what + " row " + std::to_string(i) + " is not a 0/1 string");
            }
            y(static_cast<Index>(i), j) = static_cast<std::uint8_t>(ch - '0');
        }
    }
    return y;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

/// Predictions written by `predict` (CSV or JSON lines), or a plain 0/1
/// matrix with one comma-separated row per sample.
PredictionColumns read_predictions(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (!line.empty()) {
            lines.push_back(line);
        }
    }
    if (lines.empty()) {
        throw InvalidInput("prediction file '" + path + "' is empty");
    }
    PredictionColumns out;
    if (lines.front().front() == '{') {
        std::map<std::string, std::vector<std::string>> columns;
        std::vector<std::string> order;
        for (std::size_t i = 0; i < lines.size(); ++i) {
            nlohmann::json obj;
            try {
                obj = nlohmann::json::parse(lines[i]);
            } catch (const nlohmann::json::exception& e) {
                throw ParseError("prediction file is not valid JSON lines: " + std::string(e.what()), i + 1, 1);
            }
            for (auto it = obj.begin(); it != obj.end(); ++it) {
                if (it.key().rfind("labels@", 0) == 0) {
                    if (!it->is_string()) {
                        throw ParseError("label column '" + it.key() + "' must be a string", i + 1, 1);
                    }
                    if (i == 0) {
                        order.push_back(it.key());
                    }
                    columns[it.key()].push_back(it->get<std::string>());
                }
            }
        }
        for (const auto& name : order) {
            if (columns[name].size() != lines.size()) {
                throw InvalidInput("prediction column '" + name + "' is missing on some lines");
            }
            out.names.push_back(name);
            out.matrices.push_back(from_bitstrings(columns[name], "prediction column '" + name + "'"));
        }
    } else if (lines.front().rfind("row,", 0) == 0) {
        const auto header = split_csv_line(lines.front());
        std::vector<std::size_t> picked;
        for (std::size_t j = 0; j < header.size(); ++j) {
            if (header[j].rfind("labels@", 0) == 0) {
                picked.push_back(j);
            }
        }
        std::vector<std::vector<std::string>> columns(picked.size());
        for (std::size_t i = 1; i < lines.size(); ++i) {
            const auto fields = split_csv_line(lines[i]);
            if (fields.size() != header.size()) {
                throw ParseError("expected " + std::to_string(header.size()) + " fields", i + 1, 1);
            }
            for (std::size_t c = 0; c < picked.size(); ++c) {
                columns[c].push_back(fields[picked[c]]);
            }
        }
        for (std::size_t c = 0; c < picked.size(); ++c) {
            out.names.push_back(header[picked[c]]);
            out.matrices.push_back(from_bitstrings(columns[c], "prediction column '" + header[picked[c]] + "'"));
        }
    } else {
        std::vector<std::string> rows;
        for (std::size_t i = 0; i < lines.size(); ++i) {
            const auto fields = split_csv_line(lines[i]);
            std::string s;
            bool numeric = true;
            for (const auto& f : fields) {
                if (f == "0" || f == "1") {
                    s += f;
                } else {
                    numeric = false;
                }
            }
            if (!numeric) {
                if (i == 0) {
                    continue;  // header
                }
                throw ParseError("prediction matrix entries must be 0 or 1", i + 1, 1);
            }
            rows.push_back(s);
        }
        out.names.push_back("labels");
        out.matrices.push_back(from_bitstrings(rows, "prediction matrix"));
    }
    if (out.matrices.empty()) {
        throw InvalidInput("prediction file '" + path + "' has no label columns");
    }
    return out;
}

struct EvaluateCommand {
    SharedArgs shared;
    std::string truth_path;
    std::string pred_path;
    Index labels = 0;
    std::string input_format = "auto";
    std::string column;
};

int cmd_evaluate(const EvaluateCommand& c, std::ostream& out, std::ostream&) {
    auto preds = read_predictions(c.pred_path);
    const Index k = c.labels > 0 ? c.labels : preds.matrices.front().cols();
    const auto truth = read_dataset_file(c.truth_path, resolve_format(c.input_format, c.truth_path), k);

    std::vector<Column> cols{{"predictions"}, {"samples"}};
    auto metrics = metric_columns();
    cols.insert(cols.end(), metrics.begin(), metrics.end());
    cols.insert(cols.end(), {{"degenerate_rows"}, {"micro_F1", true}, {"macro_F1", true}});
    Report report(cols);
    bool found = c.column.empty();
    for (std::size_t i = 0; i < preds.names.size(); ++i) {
        if (!c.column.empty() && preds.names[i] != c.column) {
            continue;
        }
        found = true;
        const auto r = evaluate(truth.y(), preds.matrices[i]);
        const auto avg = micro_macro(truth.y(), preds.matrices[i]);
        std::vector<Cell> row{preds.names[i], static_cast<std::int64_t>(r.n_samples)};
        append_metrics(row, r);
        row.insert(row.end(), {static_cast<std::int64_t>(r.degenerate_rows), avg.micro_f1, avg.macro_f1});
        report.add_row(std::move(row));
    }
    if (!found) {
        throw InvalidInput("prediction file has no column '" + c.column + "'");
    }
    report.write(out, parse_report_format(c.shared.format));
    return kExitOk;
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthCommand {
    SharedArgs shared;
    SyntheticSpec spec;
    std::string out_dir;
};

int cmd_synth(SynthCommand c, std::ostream& out, std::ostream& err) {
    c.spec.seed = c.shared.seed;
    c.spec.validate();
    const auto data = generate_synthetic(c.spec);
    std::error_code ec;
    std::filesystem::create_directories(c.out_dir, ec);
    if (ec) {
        throw IoError("cannot create directory '" + c.out_dir + "': " + ec.message());
    }
    const std::filesystem::path dir(c.out_dir);
    Report report({{"split"}, {"path"}, {"samples"}, {"features"}, {"labels"}, {"cardinality", false, 4}});
    const auto emit = [&](const std::string& split, const LabeledDataset& ds) {
        const auto path = (dir / (split + ".csv")).string();
        write_delimited_file(path, ds);
        report.add_row({split, path, static_cast<std::int64_t>(ds.samples()),
                        static_cast<std::int64_t>(ds.features()), static_cast<std::int64_t>(ds.labels()),
                        ds.cardinality()});
    };
    emit("train", data.train);
    if (data.test) {
        emit("test", *data.test);
    }
    const auto bases_path = (dir / "bases.csv").string();
    write_bases_file(bases_path, data.bases);
    if (c.shared.verbose) {
        err << "wrote ground-truth bases to " << bases_path << '\n';
    }
    report.write(out, parse_report_format(c.shared.format));
    return kExitOk;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct Grid {
    std::vector<Index> ranks{1, 2, 3, 4, 5, 6};
    std::vector<double> sparsity{1e-6, 1e-5, 1e-4, 1e-3};
    std::vector<double> lambdas{0.2, 0.25, 0.3, 0.35, 0.4, 0.45};
    std::vector<double> deltas{1e-4, 1e-3, 1e-2};
    std::vector<ApproxMode> modes{ApproxMode::ExactSVD};
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& text, std::size_t line) {
    T value{};
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw InvalidInput("grid file line " + std::to_string(line) + ": '" + text + "' is not a valid number");
    }
    return value;
}

/// `key = v1, v2, ...` lines; keys rank, sparsity, lambda, delta, approx.
/// Missing keys keep the built-in values; `#` starts a comment.
Grid read_grid(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open grid file '" + path + "'");
    }
    Grid grid;
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        line = trim(line.substr(0, line.find('#')));
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw InvalidInput("grid file line " + std::to_string(line_no) + ": expected 'key = values'");
        }
        const std::string key = trim(line.substr(0, eq));
        std::vector<std::string> values;
        std::stringstream rest(line.substr(eq + 1));
        for (std::string v; std::getline(rest, v, ',');) {
            v = trim(v);
            if (v.empty()) {
                throw InvalidInput("grid file line " + std::to_string(line_no) + ": empty value");
            }
            values.push_back(v);
        }
        if (values.empty()) {
            throw InvalidInput("grid file line " + std::to_string(line_no) + ": no values for '" + key + "'");
        }
        if (key == "rank") {
            grid.ranks.clear();
            for (const auto& v : values) {
                const auto r = parse_number<Index>(v, line_no);
                if (r < 1) {
                    throw InvalidInput("grid file line " + std::to_string(line_no) + ": ranks must be positive");
                }
                grid.ranks.push_back(r);
            }
        } else if (key == "sparsity" || key == "lambda" || key == "delta") {
            std::vector<double> parsed;
            for (const auto& v : values) {
                const double d = parse_number<double>(v, line_no);
                if (!(d >= 0.0) || (key == "sparsity" && d > 1.0)) {
                    throw InvalidInput("grid file line " + std::to_string(line_no) + ": value " + v +
                                       " out of range for '" + key + "'");
                }
                parsed.push_back(d);
            }
            (key == "sparsity" ? grid.sparsity : key == "lambda" ? grid.lambdas : grid.deltas) = parsed;
        } else if (key == "approx") {
            grid.modes.clear();
            for (const auto& v : values) {
                grid.modes.push_back(parse_approx(v));
            }
        } else {
            throw InvalidInput("grid file line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
    }
    return grid;
}

struct BenchCommand {
    SharedArgs shared;
    DataArgs data;
    TrainArgs training;
    SolveArgs solve;
    std::string grid_path;
    std::string select_by = "f1";
    bool no_timing = false;
};

double selection_value(const EvaluationReport& r, const std::string& metric) {
    if (metric == "hamming") {
        return -r.hamming_loss;
    }
    if (metric == "precision") {
        return r.precision;
    }
    if (metric == "recall") {
        return r.recall;
    }
    if (metric == "accuracy") {
        return r.accuracy;
    }
    return r.f1;
}

struct UnitResult {
    double train_cpu = 0.0;
    int iterations = 0;
    // One entry per lambda.
    std::vector<Matrix> train_scores;
    std::vector<Matrix> test_scores;
    std::vector<double> predict_cpu;
    std::optional<MultiSubspaceModel> model;
    Index unconverged = 0;
};

int cmd_bench(const BenchCommand& c, std::ostream& out, std::ostream& err) {
    const Grid grid = c.grid_path.empty() ? Grid{} : read_grid(c.grid_path);
    for (double lambda : grid.lambdas) {
        for (double delta : grid.deltas) {
            (void)prediction_config(c.solve, lambda, delta);
        }
    }
    const auto data = load(c.data);
    const LabeledDataset& eval_set = data.test ? *data.test : data.train;

    struct Unit {
        Index rank;
        double sparsity;
        ApproxMode mode;
    };
    std::vector<Unit> units;
    for (auto mode : grid.modes) {
        for (Index r : grid.ranks) {
            for (double k : grid.sparsity) {
                units.push_back({r, k, mode});
            }
        }
    }
    std::vector<TrainingConfig> configs;
    for (const auto& u : units) {
        TrainArgs a = c.training;
        a.ranks = {u.rank};
        a.sparsity_fraction = u.sparsity;
        a.sparsity_count = -1;
        a.approx = approx_name(u.mode);
        configs.push_back(training_config(a, c.shared.seed));
        configs.back().validate(data.train);
    }

    std::vector<UnitResult> results(units.size());
    std::vector<std::exception_ptr> errors(units.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    const auto worker = [&] {
        for (std::size_t u = next++; u < units.size(); u = next++) {
            try {
                UnitResult& res = results[u];
                const double t0 = thread_cpu_seconds();
                auto trained = train(data.train, configs[u], data.transform);
                res.train_cpu = thread_cpu_seconds() - t0;
                res.iterations = trained.diagnostics.iterations;
                res.model = std::move(trained.model);
                for (double lambda : grid.lambdas) {
                    const auto pcfg = prediction_config(c.solve, lambda, grid.deltas.front());
                    const double p0 = thread_cpu_seconds();
                    res.train_scores.push_back(score_rows(data.train.x(), *res.model, pcfg, 1, res.unconverged));
                    res.test_scores.push_back(
                        data.test ? score_rows(data.test->x(), *res.model, pcfg, 1, res.unconverged) : Matrix());
                    res.predict_cpu.push_back(thread_cpu_seconds() - p0);
                }
                if (c.shared.verbose) {
                    std::lock_guard lock(log_mutex);
                    err << "trained rank " << units[u].rank << " sparsity " << format_real(units[u].sparsity)
                        << " in " << res.iterations << " rounds\n";
                }
            } catch (...) {
                errors[u] = std::current_exception();
            }
        }
    };
    {
        const auto workers = static_cast<std::size_t>(std::max(1, c.solve.jobs));
        std::vector<std::jthread> pool;
        for (std::size_t w = 1; w < std::min(workers, units.size()); ++w) {
            pool.emplace_back(worker);
        }
        worker();
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }

    std::vector<Column> cols{{"cell"},   {"approx"}, {"rank"}, {"sparsity"},
                             {"lambda"}, {"delta"},  {"train_" + c.select_by, true}};
    auto metrics = metric_columns();
    cols.insert(cols.end(), metrics.begin(), metrics.end());
    if (!c.no_timing) {
        cols.push_back({"train_cpu_seconds", false, 3});
        cols.push_back({"predict_cpu_seconds", false, 3});
    }
    cols.push_back({"selected"});

    const auto fallback = parse_empty_fallback(c.solve.fallback);
    std::vector<std::vector<Cell>> rows;
    std::size_t best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    Index unconverged = 0;
    for (std::size_t u = 0; u < units.size(); ++u) {
        const auto& res = results[u];
        unconverged += res.unconverged;
        for (std::size_t l = 0; l < grid.lambdas.size(); ++l) {
            for (double delta : grid.deltas) {
                const auto train_pred = label_rows(res.train_scores[l], *res.model, delta, fallback);
                const auto train_report = evaluate(data.train.y(), train_pred);
                const double value = selection_value(train_report, c.select_by);
                const auto held_pred =
                    data.test ? label_rows(res.test_scores[l], *res.model, delta, fallback) : train_pred;
                const auto held = evaluate(eval_set.y(), held_pred);
                if (value > best_value) {
                    best_value = value;
                    best = rows.size();
                }
                std::vector<Cell> row{static_cast<std::int64_t>(rows.size()),
                                      approx_name(units[u].mode),
                                      static_cast<std::int64_t>(units[u].rank),
                                      units[u].sparsity,
                                      grid.lambdas[l],
                                      delta,
                                      c.select_by == "hamming" ? -value : value};
                append_metrics(row, held);
                if (!c.no_timing) {
                    row.insert(row.end(), {res.train_cpu, res.predict_cpu[l]});
                }
                row.emplace_back(false);
                rows.push_back(std::move(row));
            }
        }
    }
    if (unconverged > 0) {
        err << "warning: solver did not reach the KKT tolerance on " << unconverged << " sample solves\n";
    }
    rows[best].back() = true;
    Report report(cols);
    for (auto& row : rows) {
        report.add_row(std::move(row));
    }
    report.write(out, parse_report_format(c.shared.format));
    return kExitOk;
}

int exit_code(const Error& e) {
    if (dynamic_cast<const NumericalDivergence*>(&e) || dynamic_cast<const DegenerateProjection*>(&e)) {
        return kExitNumerical;
    }
    if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const CorruptionError*>(&e) ||
        dynamic_cast<const UnsupportedVersion*>(&e)) {
        return kExitIo;
    }
    return kExitInvalid;
}

std::string one_line(std::string text) {
    std::replace(text.begin(), text.end(), '\n', ' ');
    return trim(text);
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multi-label learning by structured decomposition and group sparsity", "sdgs"};
    app.set_config("--config", "", "Read options from a key = value file ([train] sections per subcommand)");
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Help for every subcommand");

    TrainCommand train_cmd;
    auto* train_app = app.add_subcommand("train", "Fit the multi-subspace model and write it to a file");
    add_shared(train_app, train_cmd.shared);
    add_data(train_app, train_cmd.data, false);
    add_training(train_app, train_cmd.training, false);
    train_app->add_option("--model", train_cmd.model_path, "Output model file")->required();
    train_app->add_option("--model-encoding", train_cmd.encoding, "binary or hex")
        ->check(CLI::IsMember({"binary", "hex"}))
        ->capture_default_str();
    train_app->add_flag("--no-timing", train_cmd.no_timing, "Omit timing columns");

    PredictCommand predict_cmd;
    auto* predict_app = app.add_subcommand("predict", "Predict label sets for the rows of a data file");
    add_shared(predict_app, predict_cmd.shared);
    add_solver(predict_app, predict_cmd.solve, false);
    predict_app->add_option("--model", predict_cmd.model_path, "Model file")->required()->check(CLI::ExistingFile);
    predict_app->add_option("--data", predict_cmd.data_path, "Samples to label (features then label columns)")
        ->required()
        ->check(CLI::ExistingFile);
    predict_app->add_option("--labels", predict_cmd.labels, "Label columns in the data file (default: model labels)")
        ->check(CLI::NonNegativeNumber);
    predict_app->add_option("--input-format", predict_cmd.input_format, "auto, arff or csv")
        ->check(CLI::IsMember({"auto", "arff", "csv"}))
        ->capture_default_str();
    predict_app->add_option("--out", predict_cmd.out_path, "Write predictions here instead of stdout");

    EvaluateCommand evaluate_cmd;
    auto* evaluate_app = app.add_subcommand("evaluate", "Score predictions against true labels");
    add_shared(evaluate_app, evaluate_cmd.shared);
    evaluate_app->add_option("--truth", evaluate_cmd.truth_path, "Data file with the true labels")
        ->required()
        ->check(CLI::ExistingFile);
    evaluate_app->add_option("--pred", evaluate_cmd.pred_path, "Predictions (predict output or a 0/1 matrix)")
        ->required()
        ->check(CLI::ExistingFile);
    evaluate_app->add_option("--labels", evaluate_cmd.labels, "Label columns in the truth file (default: from predictions)")
        ->check(CLI::NonNegativeNumber);
    evaluate_app->add_option("--input-format", evaluate_cmd.input_format, "auto, arff or csv")
        ->check(CLI::IsMember({"auto", "arff", "csv"}))
        ->capture_default_str();
    evaluate_app->add_option("--column", evaluate_cmd.column, "Only score this prediction column (e.g. labels@0.001)");

    SynthCommand synth_cmd;
    auto* synth_app = app.add_subcommand("synth", "Generate data from the multi-subspace model");
    add_shared(synth_app, synth_cmd.shared);
    auto& spec = synth_cmd.spec;
    synth_app->add_option("--out-dir", synth_cmd.out_dir, "Directory for train.csv, test.csv and bases.csv")
        ->required();
    synth_app->add_option("--n-train", spec.n_train, "Training samples")->capture_default_str();
    synth_app->add_option("--n-test", spec.n_test, "Test samples")->capture_default_str();
    synth_app->add_option("--features", spec.features, "Feature dimension")->capture_default_str();
    synth_app->add_option("--labels", spec.labels, "Number of labels")->capture_default_str();
    synth_app->add_option("--rank", spec.ranks, "Subspace rank: one value or one per label")
        ->delimiter(',')
        ->capture_default_str();
    synth_app->add_option("--cardinality", spec.cardinality, "Mean labels per sample in [1, 3]")
        ->capture_default_str();
    synth_app->add_option("--scale", spec.coefficient_scale, "Coefficient standard deviation")
        ->capture_default_str();
    synth_app->add_option("--noise-fraction", spec.noise_fraction, "Probability of sparse noise per entry")
        ->capture_default_str();
    synth_app->add_option("--noise-magnitude", spec.noise_magnitude, "Sparse noise magnitude")
        ->capture_default_str();

    BenchCommand bench_cmd;
    auto* bench_app = app.add_subcommand("bench", "Grid search selected on training performance");
    add_shared(bench_app, bench_cmd.shared);
    add_data(bench_app, bench_cmd.data, true);
    add_training(bench_app, bench_cmd.training, true);
    add_solver(bench_app, bench_cmd.solve, true);
    bench_app->add_option("--grid", bench_cmd.grid_path, "Grid file (key = v1, v2 lines)")->check(CLI::ExistingFile);
    bench_app->add_option("--select-by", bench_cmd.select_by, "Training metric used to pick the best cell")
        ->check(CLI::IsMember({"f1", "accuracy", "precision", "recall", "hamming"}))
        ->capture_default_str();
    bench_app->add_flag("--no-timing", bench_cmd.no_timing, "Omit timing columns");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error[usage]: " << one_line(e.what()) << '\n';
        return kExitInvalid;
    }

    try {
        if (train_app->parsed()) {
            return cmd_train(train_cmd, out, err);
        }
        if (predict_app->parsed()) {
            return cmd_predict(predict_cmd, out, err);
        }
        if (evaluate_app->parsed()) {
            return cmd_evaluate(evaluate_cmd, out, err);
        }
        if (synth_app->parsed()) {
            return cmd_synth(synth_cmd, out, err);
        }
        if (bench_app->parsed()) {
            return cmd_bench(bench_cmd, out, err);
        }
    } catch (const Error& e) {
        err << "error[" << e.code() << "]: " << one_line(e.what()) << '\n';
        return exit_code(e);
    } catch (const std::exception& e) {
        err << "error[internal]: " << one_line(e.what()) << '\n';
        return kExitInternal;
    }
    return kExitInvalid;
}

} // namespace sdgs::cli
