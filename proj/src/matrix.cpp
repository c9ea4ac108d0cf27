#include "bgap/matrix.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

#include "bgap/error.hpp"
#include "json.hpp"

namespace bgap {

namespace {

constexpr char kMagic[4] = {'B', 'G', 'M', '1'};

void put_u32_le(std::ostream& out, uint32_t v) {
    char b[4] = {char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff),
                 char((v >> 24) & 0xff)};
    out.write(b, 4);
}

uint32_t get_u32_le(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return uint32_t(b[0]) | (uint32_t(b[1]) << 8) | (uint32_t(b[2]) << 16) |
           (uint32_t(b[3]) << 24);
}

std::string ids_path(const std::string& path) { return path + ".ids.json"; }

}  // namespace

void write_matrix(const std::string& path, const MatF& data,
                  const std::vector<std::string>& ids) {
    if (data.rows() < 1 || data.cols() < 1)
        throw ValidationError("write_matrix: matrix must be at least 1x1");
    if (!ids.empty() && ids.size() != size_t(data.rows()))
        throw ValidationError("write_matrix: ids length " + std::to_string(ids.size()) +
                              " != row count " + std::to_string(data.rows()));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("write_matrix: cannot open " + path);
    out.write(kMagic, 4);
    put_u32_le(out, uint32_t(data.rows()));
    put_u32_le(out, uint32_t(data.cols()));
    static_assert(sizeof(float) == 4);
    // Row-major storage means the buffer is already in file order. Floats are
    // written as-is; this assumes a little-endian host (checked at read time
    // only through the round-trip tests, all supported targets qualify).
    out.write(reinterpret_cast<const char*>(data.data()),
              std::streamsize(sizeof(float)) * data.size());
    if (!out) throw ValidationError("write_matrix: short write to " + path);
    out.close();

    if (!ids.empty()) {
        nlohmann::json j = ids;
        std::ofstream ids_out(ids_path(path), std::ios::trunc);
        if (!ids_out) throw ValidationError("write_matrix: cannot open " + ids_path(path));
        ids_out << j.dump() << "\n";
    }
}

MatrixFile read_matrix(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("read_matrix: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw ValidationError("read_matrix: bad magic in " + path);
    uint32_t n = get_u32_le(in);
    uint32_t d = get_u32_le(in);
    if (!in || n < 1 || d < 1)
        throw ValidationError("read_matrix: bad header in " + path);

    auto expected = uintmax_t(12) + uintmax_t(4) * n * d;
    auto actual = std::filesystem::file_size(path);
    if (actual != expected)
        throw ValidationError("read_matrix: " + path + " is " + std::to_string(actual) +
                              " bytes, expected " + std::to_string(expected));

    MatrixFile mf;
    mf.data.resize(n, d);
    in.read(reinterpret_cast<char*>(mf.data.data()),
            std::streamsize(sizeof(float)) * mf.data.size());
    if (!in) throw ValidationError("read_matrix: short read from " + path);

    std::ifstream ids_in(ids_path(path));
    if (ids_in) {
        nlohmann::json j = nlohmann::json::parse(ids_in);
        mf.row_ids = j.get<std::vector<std::string>>();
        if (mf.row_ids.size() != n)
            throw ValidationError("read_matrix: sidecar id count " +
                                  std::to_string(mf.row_ids.size()) + " != rows " +
                                  std::to_string(n));
    }
    return mf;
}

}  // namespace bgap
