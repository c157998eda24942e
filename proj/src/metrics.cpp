#include "sdgs/metrics.hpp"

#include "sdgs/error.hpp"

namespace sdgs {

namespace {

void check_pair(const LabelMatrix& truth, const LabelMatrix& pred) {
    if (truth.rows() != pred.rows() || truth.cols() != pred.cols()) {
        throw InvalidInput("label matrices have different shapes (" +
                           std::to_string(truth.rows()) + "x" + std::to_string(truth.cols()) +
                           " vs " + std::to_string(pred.rows()) + "x" +
                           std::to_string(pred.cols()) + ")");
    }
    if ((truth.array() > 1).any() || (pred.array() > 1).any()) {
        throw InvalidInput("label matrices must be binary");
    }
}

// numerator / denominator with the empty-set convention; `degenerate` is set
// when the denominator is zero.
double ratio(Index numerator, Index denominator, bool both_empty, bool& degenerate) {
    if (denominator == 0) {
        degenerate = true;
        return both_empty ? 1.0 : 0.0;
    }
    return static_cast<double>(numerator) / static_cast<double>(denominator);
}

} // namespace

EvaluationReport evaluate(const LabelMatrix& truth, const LabelMatrix& pred) {
    check_pair(truth, pred);
    EvaluationReport report;
    report.n_samples = truth.rows();
    const Index n = truth.rows();
    const Index k = truth.cols();
    if (n == 0) {
        return report;
    }
    Index mismatches = 0;
    double prec = 0.0;
    double rec = 0.0;
    double f1 = 0.0;
    double acc = 0.0;
    for (Index i = 0; i < n; ++i) {
        Index both = 0;
        Index in_truth = 0;
        Index in_pred = 0;
        for (Index j = 0; j < k; ++j) {
            const bool t = truth(i, j) != 0;
            const bool p = pred(i, j) != 0;
            mismatches += (t != p) ? 1 : 0;
            both += (t && p) ? 1 : 0;
            in_truth += t ? 1 : 0;
            in_pred += p ? 1 : 0;
        }
        const Index either = in_truth + in_pred - both;
        const bool both_empty = in_truth == 0 && in_pred == 0;
        bool degenerate = false;
        prec += ratio(both, in_pred, both_empty, degenerate);
        rec += ratio(both, in_truth, both_empty, degenerate);
        f1 += ratio(2 * both, in_truth + in_pred, both_empty, degenerate);
        acc += ratio(both, either, both_empty, degenerate);
        report.degenerate_rows += degenerate ? 1 : 0;
    }
    const double rows = static_cast<double>(n);
    report.hamming_loss =
        k == 0 ? 0.0 : static_cast<double>(mismatches) / (rows * static_cast<double>(k));
    report.precision = prec / rows;
    report.recall = rec / rows;
    report.f1 = f1 / rows;
    report.accuracy = acc / rows;
    return report;
}

AveragedScores micro_macro(const LabelMatrix& truth, const LabelMatrix& pred) {
    check_pair(truth, pred);
    AveragedScores out;
    Index tp = 0;
    Index fp = 0;
    Index fn = 0;
    double macro = 0.0;
    for (Index j = 0; j < truth.cols(); ++j) {
        Index ltp = 0;
        Index lfp = 0;
        Index lfn = 0;
        for (Index i = 0; i < truth.rows(); ++i) {
            const bool t = truth(i, j) != 0;
            const bool p = pred(i, j) != 0;
            ltp += (t && p) ? 1 : 0;
            lfp += (!t && p) ? 1 : 0;
            lfn += (t && !p) ? 1 : 0;
        }
        const Index denom = 2 * ltp + lfp + lfn;
        macro += denom == 0 ? 1.0 : 2.0 * static_cast<double>(ltp) / static_cast<double>(denom);
        tp += ltp;
        fp += lfp;
        fn += lfn;
    }
    out.micro_precision = tp + fp == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    out.micro_recall = tp + fn == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    const Index denom = 2 * tp + fp + fn;
    out.micro_f1 = denom == 0 ? 1.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
    out.macro_f1 = truth.cols() == 0 ? 0.0 : macro / static_cast<double>(truth.cols());
    return out;
}

} // namespace sdgs
