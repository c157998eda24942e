#include "doctest.h"
#include "support.hpp"

#include "sdgs/data_io.hpp"
#include "sdgs/error.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace sdgs;

namespace {

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("sdgs_test_" + name);
}

std::string emotions_like_arff(Index rows, std::uint64_t seed) {
    GaussianRng rng(seed);
    std::ostringstream out;
    out << "@relation 'emotions: -C 6'\n\n";
    for (int j = 0; j < 72; ++j) {
        out << "@attribute Mean_Acc" << j << " numeric\n";
    }
    for (const char* name : {"amazed-suprised", "happy-pleased", "relaxing-calm", "quiet-still",
                             "sad-lonely", "angry-aggresive"}) {
        out << "@attribute " << name << " {0,1}\n";
    }
    out << "\n@data\n";
    for (Index i = 0; i < rows; ++i) {
        for (int j = 0; j < 72; ++j) {
            out << rng.normal() << ',';
        }
        for (int j = 0; j < 6; ++j) {
            out << (rng.uniform() < 0.3 ? 1 : 0) << (j < 5 ? "," : "\n");
        }
    }
    return out.str();
}

template <class Fn>
std::string parse_error_message(Fn&& fn) {
    try {
        fn();
    } catch (const ParseError& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST_CASE("ARFF with nominal labels, comments and sparse rows") {
    std::istringstream in(R"(% a comment
@RELATION toy
@attribute a numeric
@attribute 'b c' REAL
@attribute l1 {0,1}
@attribute l2 {0,1}

@data
1.5, -2, 1, 0
% skipped
{0 3, 3 1}
0,0,0,0
)");
    const auto ds = read_arff(in, 2);
    CHECK(ds.samples() == 3);
    CHECK(ds.features() == 2);
    CHECK(ds.labels() == 2);
    CHECK(ds.x()(0, 0) == 1.5);
    CHECK(ds.x()(0, 1) == -2.0);
    CHECK(ds.x()(1, 0) == 3.0);
    CHECK(ds.x()(1, 1) == 0.0);
    CHECK(ds.y()(0, 0) == 1);
    CHECK(ds.y()(1, 1) == 1);
    CHECK(ds.y()(1, 0) == 0);
    CHECK(ds.label_names() == std::vector<std::string>{"l1", "l2"});
    CHECK(ds.omega(0) == std::vector<Index>{0});
}

TEST_CASE("Emotions-shaped ARFF loads with the expected dimensions") {
    std::istringstream in(emotions_like_arff(391, 1));
    const auto ds = read_arff(in, 6);
    CHECK(ds.samples() == 391);
    CHECK(ds.features() == 72);
    CHECK(ds.labels() == 6);
}

TEST_CASE("ARFF errors carry positions") {
    std::istringstream bad_number("@relation r\n@attribute a numeric\n@attribute l {0,1}\n@data\n1.0,1\n2.x,0\n");
    const auto msg = parse_error_message([&] { (void)read_arff(bad_number, 1); });
    CHECK(msg.find("line 6") != std::string::npos);
    CHECK(msg.find("column 1") != std::string::npos);

    std::istringstream wrong_count("@relation r\n@attribute a numeric\n@attribute l {0,1}\n@data\n1.0,1,3\n");
    CHECK_THROWS_AS(read_arff(wrong_count, 1), ParseError);

    std::istringstream bad_label("@relation r\n@attribute a numeric\n@attribute l numeric\n@data\n1.0,2\n");
    CHECK_THROWS_AS(read_arff(bad_label, 1), InvalidInput);

    std::istringstream no_features("@relation r\n@attribute l {0,1}\n@data\n1\n");
    CHECK_THROWS_AS(read_arff(no_features, 1), InvalidInput);

    std::istringstream no_rows("@relation r\n@attribute a numeric\n@attribute l {0,1}\n@data\n");
    CHECK_THROWS_AS(read_arff(no_rows, 1), InvalidInput);
}

TEST_CASE("ARFF accepts quoted boolean label domains") {
    std::istringstream in("@relation r\n@attribute a numeric\n@attribute l {FALSE,TRUE}\n@data\n1.0,'TRUE'\n2.0,FALSE\n");
    const auto ds = read_arff(in, 1);
    CHECK(ds.y()(0, 0) == 1);
    CHECK(ds.y()(1, 0) == 0);
}

TEST_CASE("delimited files with and without header") {
    std::istringstream with_header("x1,x2,happy\n1,2,1\n3,4.5,0\n");
    const auto a = read_delimited(with_header, 1);
    CHECK(a.samples() == 2);
    CHECK(a.features() == 2);
    CHECK(a.label_names() == std::vector<std::string>{"happy"});
    CHECK(a.x()(1, 1) == 4.5);

    std::istringstream bare("\xEF\xBB\xBF" "1,2,1,0\n3,4,0,1\n");
    const auto b = read_delimited(bare, 2);
    CHECK(b.samples() == 2);
    CHECK(b.labels() == 2);

    std::istringstream bad("1,2,1\n3,zz,0\n");
    CHECK_THROWS_AS(read_delimited(bad, 1), ParseError);
    std::istringstream nonbinary("1,2,3\n");
    CHECK_THROWS_AS(read_delimited(nonbinary, 1), InvalidInput);
    std::istringstream ragged("1,2,1\n3,0\n");
    CHECK_THROWS_AS(read_delimited(ragged, 1), ParseError);
}

TEST_CASE("delimited round trip is exact") {
    GaussianRng rng(4);
    Matrix x = rng.gaussian_matrix(9, 5);
    x(0, 0) = 1e-300;
    x(1, 1) = -123456789.123456789;
    x(2, 2) = 0.1;
    const LabeledDataset ds(x, sdgs::testing::random_labels(rng, 9, 3), {"a", "b", "c"});
    std::stringstream buf;
    write_delimited(buf, ds);
    const auto back = read_delimited(buf, 3);
    CHECK(back.x() == ds.x());
    CHECK(back.y() == ds.y());
    CHECK(back.label_names() == ds.label_names());
    CHECK(back.fingerprint() == ds.fingerprint());
}

TEST_CASE("load_dataset fits normalization on train and replays it on test") {
    const auto train_path = temp_path("train.csv");
    const auto test_path = temp_path("test.csv");
    GaussianRng rng(5);
    const LabeledDataset train(3.0 + 2.0 * rng.gaussian_matrix(20, 4).array(), sdgs::testing::random_labels(rng, 20, 2));
    const LabeledDataset test(rng.gaussian_matrix(7, 4), sdgs::testing::random_labels(rng, 7, 2));
    write_delimited_file(train_path.string(), train);
    write_delimited_file(test_path.string(), test);

    DatasetSource src;
    src.format = format_for_path(train_path.string());
    CHECK(src.format == DatasetFormat::DelimitedSplit);
    src.train_path = train_path.string();
    src.test_path = test_path.string();
    src.label_count = 2;
    const auto loaded = load_dataset(src);
    const Vector mean = loaded.train.x().colwise().mean();
    CHECK(mean.cwiseAbs().maxCoeff() <= 1e-12);
    REQUIRE(loaded.test.has_value());
    CHECK((loaded.test->x() - loaded.transform.apply(test.x())).cwiseAbs().maxCoeff() == 0.0);

    src.test_path = temp_path("missing.csv").string();
    CHECK_THROWS_AS(load_dataset(src), IoError);
    std::filesystem::remove(train_path);
    std::filesystem::remove(test_path);
}

TEST_CASE("test split with a different width is rejected") {
    const auto train_path = temp_path("w_train.csv");
    const auto test_path = temp_path("w_test.csv");
    GaussianRng rng(6);
    write_delimited_file(train_path.string(), LabeledDataset(rng.gaussian_matrix(5, 4), LabelMatrix::Ones(5, 1)));
    write_delimited_file(test_path.string(), LabeledDataset(rng.gaussian_matrix(5, 3), LabelMatrix::Ones(5, 1)));
    DatasetSource src;
    src.format = DatasetFormat::DelimitedSplit;
    src.train_path = train_path.string();
    src.test_path = test_path.string();
    src.label_count = 1;
    CHECK_THROWS_AS(load_dataset(src), InvalidInput);
    std::filesystem::remove(train_path);
    std::filesystem::remove(test_path);
}

TEST_CASE("normalization kinds") {
    GaussianRng rng(7);
    const Matrix x = rng.gaussian_matrix(10, 3);
    const auto z = Normalization::fit(x, NormalizationKind::ZScorePerFeature);
    const Matrix zx = z.apply(x);
    CHECK(zx.colwise().mean().cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(((zx.array().square().colwise().sum() / 10.0) - 1.0).abs().maxCoeff() <= 1e-12);
    CHECK((z.inverse(zx) - x).cwiseAbs().maxCoeff() <= 1e-12);
    const auto u = Normalization::fit(x, NormalizationKind::UnitRowNorm);
    CHECK((u.apply(x).rowwise().norm().array() - 1.0).abs().maxCoeff() <= 1e-12);
    CHECK(parse_normalization("zscore") == NormalizationKind::ZScorePerFeature);
    CHECK(to_string(NormalizationKind::UnitRowNorm) == "unit-row");
    Matrix constant = Matrix::Ones(4, 2);
    const auto zc = Normalization::fit(constant, NormalizationKind::ZScorePerFeature);
    CHECK(zc.apply(constant).isZero(0.0));
}

TEST_CASE("synthetic data lies in the span of its active subspaces") {
    SyntheticSpec spec;
    spec.n_train = 50;
    spec.n_test = 20;
    spec.features = 15;
    spec.labels = 4;
    spec.ranks = {2, 3, 1, 2};
    spec.seed = 3;
    const auto data = generate_synthetic(spec);
    REQUIRE(data.test.has_value());
    for (const auto& c : data.bases) {
        CHECK((c * c.transpose() - Matrix::Identity(c.rows(), c.rows())).cwiseAbs().maxCoeff() <= 1e-12);
    }
    for (const auto* ds : {&data.train, &*data.test}) {
        for (Index i = 0; i < ds->samples(); ++i) {
            Matrix active(0, spec.features);
            for (Index l = 0; l < 4; ++l) {
                if (ds->y()(i, l)) {
                    const Matrix& c = data.bases[static_cast<std::size_t>(l)];
                    Matrix grown(active.rows() + c.rows(), spec.features);
                    grown << active, c;
                    active = grown;
                }
            }
            REQUIRE(active.rows() > 0);
            const RowVector x = ds->x().row(i);
            const Eigen::ColPivHouseholderQR<Matrix> qr(active.transpose());
            const Vector coef = qr.solve(x.transpose());
            CHECK((active.transpose() * coef - x.transpose()).norm() <= 1e-10);
        }
    }
}

TEST_CASE("synthetic single label with cardinality one has rank r") {
    SyntheticSpec spec;
    spec.n_train = 40;
    spec.n_test = 0;
    spec.features = 12;
    spec.labels = 1;
    spec.ranks = {3};
    spec.cardinality = 1.0;
    const auto data = generate_synthetic(spec);
    CHECK_FALSE(data.test.has_value());
    CHECK(numerical_rank(data.train.x()) == 3);
}

TEST_CASE("synthetic cardinality matches the target") {
    SyntheticSpec spec;
    spec.n_train = 1000;
    spec.n_test = 0;
    spec.features = 20;
    spec.labels = 6;
    spec.ranks = {2};
    spec.cardinality = 2.0;
    spec.seed = 11;
    const auto data = generate_synthetic(spec);
    CHECK(std::abs(data.train.cardinality() - 2.0) <= 0.1);
    spec.cardinality = 1.5;
    CHECK(std::abs(generate_synthetic(spec).train.cardinality() - 1.5) <= 0.1);
}

TEST_CASE("synthetic generation is deterministic and validated") {
    SyntheticSpec spec;
    spec.noise_fraction = 0.05;
    const auto a = generate_synthetic(spec);
    const auto b = generate_synthetic(spec);
    CHECK(a.train.x() == b.train.x());
    CHECK(a.train.y() == b.train.y());
    CHECK(a.test->x() == b.test->x());
    spec.seed = 2;
    CHECK(generate_synthetic(spec).train.x() != a.train.x());
    spec.ranks = {60};
    CHECK_THROWS_AS(generate_synthetic(spec), InvalidInput);
    spec.ranks = {3};
    spec.cardinality = 3.5;
    CHECK_THROWS_AS(generate_synthetic(spec), InvalidInput);
}

TEST_CASE("bases file round trip") {
    GaussianRng rng(12);
    const std::vector<Matrix> bases{sdgs::testing::random_orthonormal_rows(rng, 2, 6), Matrix(0, 6),
                                    sdgs::testing::random_orthonormal_rows(rng, 3, 6)};
    const auto path = temp_path("bases.csv");
    write_bases_file(path.string(), bases);
    const auto back = read_bases_file(path.string());
    REQUIRE(back.size() == 3);
    CHECK(back[0] == bases[0]);
    CHECK(back[1].rows() == 0);
    CHECK(back[2] == bases[2]);
    std::filesystem::remove(path);
}

namespace {

MultiSubspaceModel sample_model() {
    GaussianRng rng(13);
    TrainingSnapshot snap;
    snap.ranks = {2, 1, 3};
    snap.sparsity_budget = 12;
    snap.epsilon = 1e-9;
    snap.max_iterations = 40;
    snap.mode = ApproxMode::BRP;
    snap.seed = 99;
    const Matrix x = rng.gaussian_matrix(10, 6);
    return MultiSubspaceModel({sdgs::testing::random_orthonormal_rows(rng, 2, 6), Matrix(0, 6),
                               sdgs::testing::random_orthonormal_rows(rng, 3, 6)},
                              6, snap, 0xabcdef, Normalization::fit(x, NormalizationKind::ZScorePerFeature),
                              {"one", "two", "three"});
}

void check_same(const MultiSubspaceModel& a, const MultiSubspaceModel& b) {
    CHECK(a.features() == b.features());
    CHECK(a.group_layout() == b.group_layout());
    for (Index i = 0; i < a.labels(); ++i) {
        CHECK(a.basis(i) == b.basis(i));
    }
    CHECK(a.snapshot().ranks == b.snapshot().ranks);
    CHECK(a.snapshot().seed == b.snapshot().seed);
    CHECK(a.snapshot().mode == b.snapshot().mode);
    CHECK(a.fingerprint() == b.fingerprint());
    CHECK(a.normalization() == b.normalization());
    CHECK(a.label_names() == b.label_names());
}

} // namespace

TEST_CASE("model round trip in both encodings") {
    const auto model = sample_model();
    for (auto enc : {ModelEncoding::Binary, ModelEncoding::Hex}) {
        std::stringstream buf;
        write_model(buf, model, enc);
        check_same(model, read_model(buf));
    }
    const auto path = temp_path("model.sdgs");
    save_model(model, path.string());
    check_same(model, load_model(path.string()));
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_model(temp_path("absent.sdgs").string()), IoError);
}

TEST_CASE("damaged model files are detected") {
    const auto model = sample_model();
    std::stringstream buf;
    write_model(buf, model);
    const std::string bytes = buf.str();

    SUBCASE("truncated") {
        for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{9}, bytes.size() / 2, bytes.size() - 1}) {
            std::istringstream in(bytes.substr(0, cut));
            CHECK_THROWS_AS(read_model(in), CorruptionError);
        }
    }
    SUBCASE("flipped payload byte") {
        std::string copy = bytes;
        copy[bytes.size() / 2] = static_cast<char>(copy[bytes.size() / 2] ^ 0x10);
        std::istringstream in(copy);
        CHECK_THROWS_AS(read_model(in), CorruptionError);
    }
    SUBCASE("bad magic") {
        std::string copy = bytes;
        copy[0] = 'X';
        std::istringstream in(copy);
        CHECK_THROWS_AS(read_model(in), CorruptionError);
    }
    SUBCASE("future version") {
        std::string copy = bytes;
        copy[4] = 2;
        std::istringstream in(copy);
        CHECK_THROWS_AS(read_model(in), UnsupportedVersion);
    }
    SUBCASE("trailing bytes") {
        std::istringstream in(bytes + "x");
        CHECK_THROWS_AS(read_model(in), CorruptionError);
    }
    SUBCASE("hex checksum line") {
        std::stringstream hex;
        write_model(hex, model, ModelEncoding::Hex);
        std::string text = hex.str();
        const auto pos = text.rfind("checksum ") + 9;
        text[pos] = text[pos] == '0' ? '1' : '0';
        std::istringstream in(text);
        CHECK_THROWS_AS(read_model(in), CorruptionError);
    }
}
