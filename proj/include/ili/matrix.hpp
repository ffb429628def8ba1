#ifndef ILI_MATRIX_HPP_
#define ILI_MATRIX_HPP_

#include <cstddef>
#include <string>
#include <vector>

namespace ili {

// Row-major dense matrix of doubles; the carrier for features, logits and
// adjacencies throughout the library.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // rows * cols entries, row-major

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  double* row_ptr(std::size_t r) { return data.data() + r * cols; }
  const double* row_ptr(std::size_t r) const { return data.data() + r * cols; }

  std::vector<double> col(std::size_t c) const;
  void fill(double v) { data.assign(rows * cols, v); }

  bool all_finite() const;
  bool same_shape(const DenseMatrix& o) const {
    return rows == o.rows && cols == o.cols;
  }
};

// C = A * B
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
// C = A^T * B
DenseMatrix matmul_ta(const DenseMatrix& a, const DenseMatrix& b);
// C = A * B^T
DenseMatrix matmul_tb(const DenseMatrix& a, const DenseMatrix& b);

// CSV serialization: one data row per matrix row, values printed with
// enough digits to round-trip doubles exactly.  Header row optional.
void write_csv(const DenseMatrix& m, const std::string& path,
               const std::vector<std::string>* header = nullptr);
DenseMatrix read_csv(const std::string& path,
                     std::vector<std::string>* header = nullptr);

std::string format_double(double v);

}  // namespace ili

#endif  // ILI_MATRIX_HPP_
