#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace bgap {

// Row-major matrices: rows are observations (one conversation each).
using MatF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatD = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using VecD = Eigen::VectorXd;

// On-disk embedding matrix: magic "BGM1", two little-endian uint32 counts
// (rows, cols), then row-major float32 payload. File length is exactly
// 12 + 4*n*d bytes. Row ids live in a JSON-array sidecar at <path>.ids.json.
struct MatrixFile {
    MatF data;
    std::vector<std::string> row_ids;  // empty if no sidecar present
};

// Writes matrix + sidecar. ids may be empty (no sidecar written) or have
// exactly data.rows() entries. Rejects empty matrices.
void write_matrix(const std::string& path, const MatF& data,
                  const std::vector<std::string>& ids = {});

// Reads matrix + sidecar (if present). Verifies magic and payload length.
MatrixFile read_matrix(const std::string& path);

inline MatD to_double(const MatF& m) { return m.cast<double>(); }
inline MatF to_float(const MatD& m) { return m.cast<float>(); }

}  // namespace bgap
