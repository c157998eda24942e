#pragma once

#include "sdgs/dataset.hpp"

namespace sdgs {

/// Example-based multi-label scores, each in [0, 1].
///
/// A per-sample precision, recall or accuracy term whose denominator is zero
/// counts 1 when truth and prediction are both empty and 0 otherwise; F1
/// follows the same rule. `degenerate_rows` counts rows where that rule was
/// used for at least one term.
struct EvaluationReport {
    double hamming_loss = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double accuracy = 0.0;
    Index n_samples = 0;
    Index degenerate_rows = 0;
};

/// Label-pooled scores, reported alongside the example-based ones.
struct AveragedScores {
    double micro_precision = 0.0;
    double micro_recall = 0.0;
    double micro_f1 = 0.0;
    double macro_f1 = 0.0;
};

/// `truth` and `pred` must have the same shape and hold only 0/1.
EvaluationReport evaluate(const LabelMatrix& truth, const LabelMatrix& pred);

/// Micro averages pool counts over all labels; macro F1 averages per-label F1
/// with the same empty-set convention as evaluate().
AveragedScores micro_macro(const LabelMatrix& truth, const LabelMatrix& pred);

} // namespace sdgs
