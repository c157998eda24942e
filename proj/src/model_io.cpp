#include "sdgs/checksum.hpp"
#include "sdgs/data_io.hpp"
#include "sdgs/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string_view>

namespace sdgs {

namespace {

constexpr std::string_view kMagic = "SDGS";
// Guards against absurd allocations when reading a corrupt header.
constexpr std::uint64_t kMaxCount = std::uint64_t{1} << 32;

class PayloadWriter {
public:
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            bytes_.push_back(static_cast<char>(v >> (8 * i)));
        }
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void text(const std::string& s) {
        u64(s.size());
        bytes_.insert(bytes_.end(), s.begin(), s.end());
    }
    const std::string& bytes() const noexcept { return bytes_; }

private:
    std::string bytes_;
};

class PayloadReader {
public:
    explicit PayloadReader(std::string_view bytes) : bytes_(bytes) {}

    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        }
        pos_ += 8;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::uint64_t count() {
        const auto v = u64();
        if (v > kMaxCount) {
            throw CorruptionError("model file declares an implausible size");
        }
        return v;
    }
    std::string text() {
        const auto n = count();
        need(n);
        std::string s(bytes_.substr(pos_, n));
        pos_ += n;
        return s;
    }
    bool done() const noexcept { return pos_ == bytes_.size(); }

private:
    void need(std::uint64_t n) const {
        if (bytes_.size() - pos_ < n) {
            throw CorruptionError("model file is truncated");
        }
    }
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

std::string encode_payload(const MultiSubspaceModel& model) {
    PayloadWriter w;
    const auto p = static_cast<std::uint64_t>(model.features());
    w.u64(p);
    w.u64(static_cast<std::uint64_t>(model.labels()));
    const auto& norm = model.normalization();
    w.u64(static_cast<std::uint64_t>(norm.kind));
    if (norm.kind == NormalizationKind::ZScorePerFeature) {
        for (Index j = 0; j < model.features(); ++j) {
            w.f64(norm.mean(j));
        }
        for (Index j = 0; j < model.features(); ++j) {
            w.f64(norm.scale(j));
        }
    }
    const auto& snap = model.snapshot();
    w.u64(static_cast<std::uint64_t>(snap.sparsity_budget));
    w.f64(snap.epsilon);
    w.u64(static_cast<std::uint64_t>(snap.max_iterations));
    w.u64(snap.mode == ApproxMode::BRP ? 1 : 0);
    w.u64(snap.seed);
    w.u64(snap.ranks.size());
    for (Index r : snap.ranks) {
        w.u64(static_cast<std::uint64_t>(r));
    }
    w.u64(model.fingerprint());
    w.u64(model.label_names().size());
    for (const auto& name : model.label_names()) {
        w.text(name);
    }
    for (const auto& c : model.bases()) {
        w.u64(static_cast<std::uint64_t>(c.rows()));
        for (Index i = 0; i < c.rows(); ++i) {
            for (Index j = 0; j < c.cols(); ++j) {
                w.f64(c(i, j));
            }
        }
    }
    return w.bytes();
}

MultiSubspaceModel decode_payload(std::string_view bytes) {
    PayloadReader r(bytes);
    const auto p = static_cast<Index>(r.count());
    const auto k = static_cast<Index>(r.count());
    Normalization norm;
    const auto kind = r.u64();
    if (kind > 2) {
        throw CorruptionError("unknown normalization kind in model file");
    }
    norm.kind = static_cast<NormalizationKind>(kind);
    if (norm.kind == NormalizationKind::ZScorePerFeature) {
        norm.mean.resize(p);
        norm.scale.resize(p);
        for (Index j = 0; j < p; ++j) {
            norm.mean(j) = r.f64();
        }
        for (Index j = 0; j < p; ++j) {
            norm.scale(j) = r.f64();
        }
    }
    TrainingSnapshot snap;
    snap.sparsity_budget = static_cast<Index>(r.u64());
    snap.epsilon = r.f64();
    snap.max_iterations = static_cast<int>(r.u64());
    snap.mode = r.u64() == 1 ? ApproxMode::BRP : ApproxMode::ExactSVD;
    snap.seed = r.u64();
    const auto rank_count = r.count();
    for (std::uint64_t i = 0; i < rank_count; ++i) {
        snap.ranks.push_back(static_cast<Index>(r.u64()));
    }
    const auto fingerprint = r.u64();
    std::vector<std::string> names;
    const auto name_count = r.count();
    for (std::uint64_t i = 0; i < name_count; ++i) {
        names.push_back(r.text());
    }
    std::vector<Matrix> bases;
    for (Index label = 0; label < k; ++label) {
        const auto rows = static_cast<Index>(r.count());
        Matrix c(rows, p);
        for (Index i = 0; i < rows; ++i) {
            for (Index j = 0; j < p; ++j) {
                c(i, j) = r.f64();
            }
        }
        bases.push_back(std::move(c));
    }
    if (!r.done()) {
        throw CorruptionError("model payload has trailing bytes");
    }
    try {
        return MultiSubspaceModel(std::move(bases), p, std::move(snap), fingerprint,
                                  std::move(norm), std::move(names));
    } catch (const InvalidInput& e) {
        throw CorruptionError(std::string("model file holds an invalid model: ") + e.what());
    }
}

std::uint64_t checksum(std::string_view payload) {
    Fnv1a h;
    h.bytes(payload.data(), payload.size());
    return h.state;
}

constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c) {
    if (c >= '0' && c <= '9') {
        return c - '0';
    }
    if (c >= 'a' && c <= 'f') {
        return c - 'a' + 10;
    }
    return -1;
}

std::string hex_u64(std::uint64_t v) {
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = kHexDigits[v & 0xF];
        v >>= 4;
    }
    return s;
}

} // namespace

void write_model(std::ostream& out, const MultiSubspaceModel& model, ModelEncoding encoding) {
    const std::string payload = encode_payload(model);
    const std::uint64_t sum = checksum(payload);
    out.write(kMagic.data(), static_cast<std::streamsize>(kMagic.size()));
    for (int i = 0; i < 4; ++i) {
        out.put(static_cast<char>(kModelFormatVersion >> (8 * i)));
    }
    if (encoding == ModelEncoding::Binary) {
        out.put('B');
        out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
        for (int i = 0; i < 8; ++i) {
            out.put(static_cast<char>(sum >> (8 * i)));
        }
    } else {
        out.put('H');
        out.put('\n');
        for (std::size_t i = 0; i < payload.size(); ++i) {
            const auto byte = static_cast<unsigned char>(payload[i]);
            out.put(kHexDigits[byte >> 4]);
            out.put(kHexDigits[byte & 0xF]);
            if (i % 32 == 31 || i + 1 == payload.size()) {
                out.put('\n');
            }
        }
        out << "checksum " << hex_u64(sum) << '\n';
    }
    if (!out) {
        throw IoError("failed to write model");
    }
}

MultiSubspaceModel read_model(std::istream& in) {
    const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (data.size() < 9 || std::string_view(data).substr(0, 4) != kMagic) {
        throw CorruptionError("not an SDGS model file");
    }
    std::uint32_t version = 0;
    for (int i = 0; i < 4; ++i) {
        version |= static_cast<std::uint32_t>(static_cast<unsigned char>(data[4 + i])) << (8 * i);
    }
    if (version != kModelFormatVersion) {
        throw UnsupportedVersion("model format version " + std::to_string(version) +
                                 " is not supported (expected " +
                                 std::to_string(kModelFormatVersion) + ")");
    }
    const char encoding = data[8];
    std::string payload;
    std::uint64_t stored = 0;
    if (encoding == 'B') {
        if (data.size() < 9 + 8) {
            throw CorruptionError("model file is truncated");
        }
        payload = data.substr(9, data.size() - 9 - 8);
        for (int i = 0; i < 8; ++i) {
            stored |= static_cast<std::uint64_t>(
                          static_cast<unsigned char>(data[data.size() - 8 + static_cast<std::size_t>(i)]))
                      << (8 * i);
        }
    } else if (encoding == 'H') {
        const auto tag = data.rfind("checksum ");
        if (tag == std::string::npos || tag < 9) {
            throw CorruptionError("model file is truncated (no checksum line)");
        }
        const std::string_view tail = std::string_view(data).substr(tag + 9);
        if (tail.size() != 17 || tail.back() != '\n') {
            throw CorruptionError("malformed checksum line");
        }
        for (char c : tail.substr(0, 16)) {
            const int v = hex_value(c);
            if (v < 0) {
                throw CorruptionError("malformed checksum line");
            }
            stored = (stored << 4) | static_cast<std::uint64_t>(v);
        }
        int high = -1;
        for (std::size_t i = 9; i < tag; ++i) {
            const char c = data[i];
            if (c == '\n') {
                continue;
            }
            const int v = hex_value(c);
            if (v < 0) {
                throw CorruptionError("invalid character in hex payload");
            }
            if (high < 0) {
                high = v;
            } else {
                payload.push_back(static_cast<char>((high << 4) | v));
                high = -1;
            }
        }
        if (high >= 0) {
            throw CorruptionError("hex payload has an odd number of digits");
        }
    } else {
        throw CorruptionError("unknown model encoding");
    }
    if (checksum(payload) != stored) {
        throw CorruptionError("model checksum mismatch");
    }
    return decode_payload(payload);
}

void save_model(const MultiSubspaceModel& model, const std::string& path, ModelEncoding encoding) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write model to '" + path + "'");
    }
    write_model(out, model, encoding);
}

MultiSubspaceModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open model '" + path + "'");
    }
    return read_model(in);
}

} // namespace sdgs
