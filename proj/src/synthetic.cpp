#include "sdgs/data_io.hpp"

#include "sdgs/error.hpp"
#include "sdgs/random.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>

namespace sdgs {

std::vector<Index> SyntheticSpec::label_ranks() const {
    if (ranks.size() == 1) {
        return std::vector<Index>(static_cast<std::size_t>(labels), ranks.front());
    }
    return ranks;
}

void SyntheticSpec::validate() const {
    if (n_train < 1 || n_test < 0) {
        throw InvalidInput("synthetic spec needs n_train >= 1 and n_test >= 0");
    }
    if (features < 1 || labels < 1) {
        throw InvalidInput("synthetic spec needs at least one feature and one label");
    }
    if (ranks.size() != 1 && static_cast<Index>(ranks.size()) != labels) {
        throw InvalidInput("synthetic spec needs one rank or one rank per label");
    }
    for (Index r : label_ranks()) {
        if (r < 1 || r > features) {
            throw InvalidInput("infeasible subspace rank " + std::to_string(r) + " for " +
                               std::to_string(features) + " features");
        }
    }
    const double max_card = static_cast<double>(std::min<Index>(3, labels));
    if (!(cardinality >= 1.0 && cardinality <= max_card)) {
        throw InvalidInput("target cardinality must lie in [1, " + std::to_string(max_card) + "]");
    }
    if (!(noise_fraction >= 0.0 && noise_fraction < 1.0)) {
        throw InvalidInput("noise fraction must lie in [0, 1)");
    }
    if (!(noise_magnitude >= 0.0) || !(coefficient_scale > 0.0)) {
        throw InvalidInput("noise magnitude must be nonnegative and coefficient scale positive");
    }
}

namespace {

// Probabilities of drawing 1, 2 or 3 labels with the requested mean.
std::array<double, 3> cardinality_mix(double target) {
    if (target <= 2.0) {
        return {2.0 - target, target - 1.0, 0.0};
    }
    return {0.0, 3.0 - target, target - 2.0};
}

LabeledDataset draw_samples(Index n, const SyntheticSpec& spec, const std::vector<Matrix>& bases,
                            GaussianRng& rng) {
    const Index p = spec.features;
    const Index k = spec.labels;
    const auto mix = cardinality_mix(spec.cardinality);
    Matrix x = Matrix::Zero(n, p);
    LabelMatrix y = LabelMatrix::Zero(n, k);
    std::vector<Index> pool(static_cast<std::size_t>(k));
    for (Index i = 0; i < n; ++i) {
        const double u = rng.uniform();
        Index card = u <= mix[0] ? 1 : (u <= mix[0] + mix[1] ? 2 : 3);
        card = std::min(card, k);
        std::iota(pool.begin(), pool.end(), Index{0});
        for (Index c = 0; c < card; ++c) {
            const auto pick = c + static_cast<Index>(rng.below(static_cast<std::uint64_t>(k - c)));
            std::swap(pool[static_cast<std::size_t>(c)], pool[static_cast<std::size_t>(pick)]);
            const Index label = pool[static_cast<std::size_t>(c)];
            y(i, label) = 1;
        }
        for (Index label = 0; label < k; ++label) {
            if (y(i, label) == 0) {
                continue;
            }
            const Matrix& c = bases[static_cast<std::size_t>(label)];
            RowVector beta(c.rows());
            for (Index j = 0; j < c.rows(); ++j) {
                beta(j) = spec.coefficient_scale * rng.normal();
            }
            x.row(i) += beta * c;
        }
        if (spec.noise_fraction > 0.0) {
            for (Index j = 0; j < p; ++j) {
                if (rng.uniform() < spec.noise_fraction) {
                    x(i, j) += rng.uniform() < 0.5 ? -spec.noise_magnitude : spec.noise_magnitude;
                }
            }
        }
    }
    return LabeledDataset(std::move(x), std::move(y));
}

} // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    GaussianRng rng(spec.seed);
    SyntheticData out;
    for (Index r : spec.label_ranks()) {
        const Matrix g = rng.gaussian_matrix(spec.features, r);
        Eigen::HouseholderQR<Matrix> qr(g);
        const Matrix q = qr.householderQ() * Matrix::Identity(spec.features, r);
        out.bases.push_back(q.transpose());
    }
    out.train = draw_samples(spec.n_train, spec, out.bases, rng);
    if (spec.n_test > 0) {
        out.test = draw_samples(spec.n_test, spec, out.bases, rng);
    }
    return out;
}

void write_bases_file(const std::string& path, const std::vector<Matrix>& bases) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write '" + path + "'");
    }
    std::array<char, 32> buf{};
    for (std::size_t label = 0; label < bases.size(); ++label) {
        const Matrix& c = bases[label];
        for (Index i = 0; i < c.rows(); ++i) {
            out << label;
            for (Index j = 0; j < c.cols(); ++j) {
                const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), c(i, j));
                (void)ec;
                out << ',';
                out.write(buf.data(), ptr - buf.data());
            }
            out << '\n';
        }
    }
    if (!out) {
        throw IoError("failed while writing '" + path + "'");
    }
}

std::vector<Matrix> read_bases_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    std::vector<std::vector<std::vector<double>>> rows;
    std::string line;
    std::size_t line_no = 0;
    Index width = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> values;
        std::size_t label = 0;
        bool first = true;
        while (std::getline(ss, cell, ',')) {
            if (first) {
                const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), label);
                if (ec != std::errc() || ptr != cell.data() + cell.size()) {
                    throw ParseError("bad label index", line_no, 1);
                }
                first = false;
                continue;
            }
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec != std::errc() || ptr != cell.data() + cell.size()) {
                throw ParseError("malformed numeric field '" + cell + "'", line_no, 1);
            }
            values.push_back(v);
        }
        if (width < 0) {
            width = static_cast<Index>(values.size());
        } else if (static_cast<Index>(values.size()) != width) {
            throw ParseError("inconsistent basis width", line_no, 1);
        }
        if (label >= rows.size()) {
            rows.resize(label + 1);
        }
        rows[label].push_back(std::move(values));
    }
    std::vector<Matrix> bases;
    for (const auto& block : rows) {
        Matrix c(static_cast<Index>(block.size()), std::max<Index>(width, 0));
        for (std::size_t i = 0; i < block.size(); ++i) {
            for (Index j = 0; j < width; ++j) {
                c(static_cast<Index>(i), j) = block[i][static_cast<std::size_t>(j)];
            }
        }
        bases.push_back(std::move(c));
    }
    return bases;
}

} // namespace sdgs
