#include <cmath>
#include <cstdint>

#include "vdr/kernels.hpp"

// OpenMP variants. Work is split across output elements with a static
// schedule; each element's summation order equals the serial reference, so
// results are bitwise identical for any thread count. Loops below a work
// threshold stay serial to avoid fork overhead on small model shapes.

namespace vdr::kernels::detail {

namespace {
constexpr std::size_t kMinWork = 1u << 15;
}

void matvec_openmp(const double* m, std::size_t rows, std::size_t cols, const double* x, double* y) {
  const std::int64_t n = static_cast<std::int64_t>(rows);
#pragma omp parallel for schedule(static) if (rows * cols >= kMinWork)
  for (std::int64_t r = 0; r < n; ++r) {
    const double* row = m + static_cast<std::size_t>(r) * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

void matvec_t_openmp(const double* m, std::size_t rows, std::size_t cols, const double* x, double* y) {
  const std::int64_t n = static_cast<std::int64_t>(cols);
#pragma omp parallel for schedule(static) if (rows * cols >= kMinWork)
  for (std::int64_t c = 0; c < n; ++c) {
    double acc = 0.0;
    for (std::size_t r = 0; r < rows; ++r) acc += m[r * cols + static_cast<std::size_t>(c)] * x[r];
    y[c] = acc;
  }
}

void outer_acc_openmp(double* m, std::size_t rows, std::size_t cols, const double* u, const double* v) {
  const std::int64_t n = static_cast<std::int64_t>(rows);
#pragma omp parallel for schedule(static) if (rows * cols >= kMinWork)
  for (std::int64_t r = 0; r < n; ++r) {
    double* row = m + static_cast<std::size_t>(r) * cols;
    const double ur = u[r];
    for (std::size_t c = 0; c < cols; ++c) row[c] += ur * v[c];
  }
}

void axpy_openmp(std::size_t n, double a, const double* x, double* y) {
  const std::int64_t sn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) if (n >= kMinWork)
  for (std::int64_t i = 0; i < sn; ++i) y[i] += a * x[i];
}

void hadamard_openmp(std::size_t n, const double* a, const double* b, double* out) {
  const std::int64_t sn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) if (n >= kMinWork)
  for (std::int64_t i = 0; i < sn; ++i) out[i] = a[i] * b[i];
}

void tanh_map_openmp(std::size_t n, const double* x, double* out) {
  const std::int64_t sn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) if (n >= kMinWork)
  for (std::int64_t i = 0; i < sn; ++i) out[i] = std::tanh(x[i]);
}

void sigmoid_map_openmp(std::size_t n, const double* x, double* out) {
  const std::int64_t sn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) if (n >= kMinWork)
  for (std::int64_t i = 0; i < sn; ++i) out[i] = 1.0 / (1.0 + std::exp(-x[i]));
}

}  // namespace vdr::kernels::detail
