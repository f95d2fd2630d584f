#include <cmath>

#include "vdr/kernels.hpp"

// Reference implementations. The OpenMP variants must match these bitwise;
// kernel tests compare the two on random inputs.

namespace vdr::kernels::detail {

void matvec_serial(const double* m, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = m + r * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

void matvec_t_serial(const double* m, std::size_t rows, std::size_t cols, const double* x, double* y) {
  // Per output element j, the sum runs over r in ascending order; the
  // OpenMP variant keeps the identical order.
  for (std::size_t c = 0; c < cols; ++c) {
    double acc = 0.0;
    for (std::size_t r = 0; r < rows; ++r) acc += m[r * cols + c] * x[r];
    y[c] = acc;
  }
}

void outer_acc_serial(double* m, std::size_t rows, std::size_t cols, const double* u, const double* v) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = m + r * cols;
    const double ur = u[r];
    for (std::size_t c = 0; c < cols; ++c) row[c] += ur * v[c];
  }
}

void axpy_serial(std::size_t n, double a, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void hadamard_serial(std::size_t n, const double* a, const double* b, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void tanh_map_serial(std::size_t n, const double* x, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::tanh(x[i]);
}

void sigmoid_map_serial(std::size_t n, const double* x, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = 1.0 / (1.0 + std::exp(-x[i]));
}

}  // namespace vdr::kernels::detail
