#pragma once

#include "sdgs/dataset.hpp"
#include "sdgs/model.hpp"
#include "sdgs/normalization.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace sdgs {

// ---------------------------------------------------------------------------
// Dataset files
//
// ARFF subset: numeric/real/integer feature attributes followed by k label
// attributes (nominal with a 0/1 style domain, or numeric holding 0/1).
// Dense rows and sparse `{index value, ...}` rows are accepted; `%` starts a
// comment. Anything else (string/date attributes, missing values, trailing
// fields) is rejected with a ParseError.
//
// Delimited: UTF-8 comma-separated, optional header line, p feature columns
// then k label columns in {0,1}.
// ---------------------------------------------------------------------------

enum class DatasetFormat { ArffWithLabelCount, DelimitedSplit };

/// ".arff" selects ARFF, anything else the delimited format.
DatasetFormat format_for_path(const std::string& path);

struct DatasetSource {
    DatasetFormat format = DatasetFormat::ArffWithLabelCount;
    std::string train_path;
    std::optional<std::string> test_path;
    /// Number of trailing label columns.
    Index label_count = 0;
    NormalizationKind normalization = NormalizationKind::ZScorePerFeature;
};

/// Training split (and optional test split) with the feature transform fitted
/// on the training split and applied to both.
struct LoadedData {
    LabeledDataset train;
    std::optional<LabeledDataset> test;
    Normalization transform;
};

LabeledDataset read_arff(std::istream& in, Index label_count);
LabeledDataset read_delimited(std::istream& in, Index label_count);
LabeledDataset read_dataset_file(const std::string& path, DatasetFormat format, Index label_count);

/// Header line `f1,...,fp,<label names>` then one row per sample. Numbers are
/// written in shortest round-trip form, so reading back is exact.
void write_delimited(std::ostream& out, const LabeledDataset& ds);
void write_delimited_file(const std::string& path, const LabeledDataset& ds);

LoadedData load_dataset(const DatasetSource& src);

/// Replays a fitted transform on another dataset.
LabeledDataset normalized(const LabeledDataset& ds, const Normalization& transform);

// ---------------------------------------------------------------------------
// Synthetic data from the generative model x = sum_{i : y_i = 1} beta_i C^i + s
// ---------------------------------------------------------------------------

struct SyntheticSpec {
    Index n_train = 200;
    Index n_test = 100;
    Index features = 50;
    Index labels = 5;
    /// One rank for all labels, or one per label.
    std::vector<Index> ranks{3};
    /// Target mean labels per sample, within [1, min(3, labels)].
    double cardinality = 2.0;
    double coefficient_scale = 1.0;
    /// Probability that an entry receives sparse noise, in [0, 1).
    double noise_fraction = 0.0;
    double noise_magnitude = 0.1;
    std::uint64_t seed = 1;

    void validate() const;
    std::vector<Index> label_ranks() const;
};

struct SyntheticData {
    LabeledDataset train;
    std::optional<LabeledDataset> test;
    /// Ground-truth orthonormal bases C*^1..C*^k.
    std::vector<Matrix> bases;
};

/// Deterministic per seed. Draw order: bases (label by label), then samples
/// (training first). Per sample: cardinality from {1,2,3} mixing the two
/// integers around the target mean, labels uniformly without replacement,
/// N(0, scale^2) coefficients for active groups, then per-entry noise of
/// +-magnitude with probability noise_fraction.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

/// Delimited file of the ground-truth bases: one row per basis vector,
/// first column is the label index.
void write_bases_file(const std::string& path, const std::vector<Matrix>& bases);
std::vector<Matrix> read_bases_file(const std::string& path);

// ---------------------------------------------------------------------------
// Model files
//
//   "SDGS" | u32 version | encoding byte ('B' binary, 'H' hex text) | payload
//   | u64 checksum (FNV-1a 64 over the raw payload bytes)
//
// Every integer is u64 little-endian, every real IEEE-754 binary64
// little-endian. Payload fields, in order:
//   features, labels, normalization kind (0 none, 1 unit-row, 2 zscore)
//   [zscore: features means, features scales],
//   sparsity budget, epsilon, max iterations, approx mode (0 svd, 1 brp),
//   seed, rank count, ranks..., dataset fingerprint,
//   label name count, (byte length, bytes)...,
//   then per label: basis rows r, r * features reals (row-major).
// In hex mode the payload is written as lowercase hex, 64 digits per line,
// followed by a line `checksum <16 hex digits>`.
// ---------------------------------------------------------------------------

enum class ModelEncoding { Binary, Hex };

inline constexpr std::uint32_t kModelFormatVersion = 1;

void write_model(std::ostream& out, const MultiSubspaceModel& model,
                 ModelEncoding encoding = ModelEncoding::Binary);
MultiSubspaceModel read_model(std::istream& in);

void save_model(const MultiSubspaceModel& model, const std::string& path,
                ModelEncoding encoding = ModelEncoding::Binary);
MultiSubspaceModel load_model(const std::string& path);

} // namespace sdgs
