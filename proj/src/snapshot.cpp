#include "mmsechan/snapshot.hpp"

#include "mmsechan/binary_io.hpp"

namespace mmsechan {

namespace {

struct Header {
    std::uint32_t M = 0;
    std::uint32_t K = 0;
    std::uint32_t n_grid = 0;
};

void put_header(std::string& out, SnapshotType type, std::size_t M, std::size_t K, std::size_t n_grid) {
    out.append(kSnapshotMagic);
    le::put<std::uint16_t>(out, kSnapshotVersion);
    le::put<std::uint16_t>(out, static_cast<std::uint16_t>(type));
    le::put<std::uint32_t>(out, static_cast<std::uint32_t>(M));
    le::put<std::uint32_t>(out, static_cast<std::uint32_t>(K));
    le::put<std::uint32_t>(out, static_cast<std::uint32_t>(n_grid));
}

Header read_header(le::Reader& rd, std::string_view bytes, SnapshotType expected) {
    if (bytes.size() < kSnapshotMagic.size() || bytes.substr(0, kSnapshotMagic.size()) != kSnapshotMagic)
        throw DecodeError(DecodeError::Kind::BadMagic, 0, "bad snapshot magic");
    rd.take(kSnapshotMagic.size());
    const std::size_t at = rd.offset();
    const auto version = rd.get<std::uint16_t>();
    if (version != kSnapshotVersion)
        throw DecodeError(DecodeError::Kind::VersionMismatch, at, "unsupported snapshot version " + std::to_string(version));
    const std::size_t type_at = rd.offset();
    const auto type = rd.get<std::uint16_t>();
    if (type != static_cast<std::uint16_t>(expected))
        throw DecodeError(DecodeError::Kind::TypeMismatch, type_at, "snapshot type tag " + std::to_string(type) +
                                                                        " does not match the requested model");
    Header h;
    h.M = rd.get<std::uint32_t>();
    h.K = rd.get<std::uint32_t>();
    h.n_grid = rd.get<std::uint32_t>();
    return h;
}

template <class Derived>
void put_block(std::string& out, const Eigen::MatrixBase<Derived>& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) le::put_f64(out, m(r, c));
}

template <class Derived>
void get_block(le::Reader& rd, Eigen::MatrixBase<Derived>& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rd.get_f64();
}

// Rejects headers whose payload cannot fit in the buffer before anything is allocated.
void expect_payload(const le::Reader& rd, std::uint64_t values) {
    if (values > rd.remaining() / 8)
        throw DecodeError(DecodeError::Kind::Truncated, rd.offset(),
                          "snapshot payload needs " + std::to_string(values * 8) + " bytes, " +
                              std::to_string(rd.remaining()) + " available");
}

void expect_end(const le::Reader& rd) {
    if (rd.remaining() != 0) throw DecodeError(DecodeError::Kind::TrailingBytes, rd.offset(), "trailing bytes after snapshot");
}

}  // namespace

std::string encode_snapshot(const NNParams& p) {
    std::string out;
    put_header(out, SnapshotType::NNPredictor, p.M(), p.K(), p.n_grid());
    put_block(out, p.A1);
    put_block(out, p.b1);
    put_block(out, p.A2);
    put_block(out, p.b2);
    return out;
}

std::string encode_snapshot(const CNNParams& p, std::size_t M) {
    std::string out;
    put_header(out, SnapshotType::CNNEstimator, M, p.K(), p.K());
    put_block(out, p.a1);
    put_block(out, p.a2);
    put_block(out, p.b1);
    put_block(out, p.b2);
    return out;
}

NNParams decode_nn_snapshot(std::string_view bytes) {
    le::Reader rd(bytes);
    const Header h = read_header(rd, bytes, SnapshotType::NNPredictor);
    const std::uint64_t m2 = 2ull * h.M, n = h.n_grid;
    expect_payload(rd, n * h.K + n + m2 * n + m2);
    NNParams p = NNParams::zeros(h.M, h.K, h.n_grid);
    get_block(rd, p.A1);
    get_block(rd, p.b1);
    get_block(rd, p.A2);
    get_block(rd, p.b2);
    expect_end(rd);
    return p;
}

CNNParams decode_cnn_snapshot(std::string_view bytes, std::size_t* M_out) {
    le::Reader rd(bytes);
    const Header h = read_header(rd, bytes, SnapshotType::CNNEstimator);
    if (h.n_grid != h.K)
        throw DecodeError(DecodeError::Kind::TypeMismatch, 16, "CNN snapshot must store N_grid = K");
    expect_payload(rd, 4ull * h.K);
    const auto K = static_cast<Eigen::Index>(h.K);
    CNNParams p{RVector(K), RVector(K), RVector(K), RVector(K)};
    get_block(rd, p.a1);
    get_block(rd, p.a2);
    get_block(rd, p.b1);
    get_block(rd, p.b2);
    expect_end(rd);
    if (M_out) *M_out = h.M;
    return p;
}

void save_snapshot(const std::string& path, const NNParams& p) { write_file_bytes(path, encode_snapshot(p)); }

void save_snapshot(const std::string& path, const CNNParams& p, std::size_t M) {
    write_file_bytes(path, encode_snapshot(p, M));
}

NNParams load_nn_snapshot(const std::string& path) { return decode_nn_snapshot(read_file_bytes(path)); }

CNNParams load_cnn_snapshot(const std::string& path, std::size_t* M_out) {
    return decode_cnn_snapshot(read_file_bytes(path), M_out);
}

}  // namespace mmsechan
