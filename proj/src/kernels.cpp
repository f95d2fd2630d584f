#include <atomic>

#include "vdr/kernels.hpp"

namespace vdr::kernels {

namespace {

std::atomic<Backend> g_backend{
#ifdef _OPENMP
    Backend::openmp
#else
    Backend::serial
#endif
};

inline bool use_openmp() {
#ifdef _OPENMP
  return g_backend.load(std::memory_order_relaxed) == Backend::openmp;
#else
  return false;
#endif
}

}  // namespace

void set_backend(Backend b) { g_backend.store(b, std::memory_order_relaxed); }
Backend backend() { return g_backend.load(std::memory_order_relaxed); }

bool openmp_compiled() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

void matvec(const double* m, std::size_t rows, std::size_t cols, const double* x, double* y) {
  if (use_openmp())
    detail::matvec_openmp(m, rows, cols, x, y);
  else
    detail::matvec_serial(m, rows, cols, x, y);
}

void matvec_t(const double* m, std::size_t rows, std::size_t cols, const double* x, double* y) {
  if (use_openmp())
    detail::matvec_t_openmp(m, rows, cols, x, y);
  else
    detail::matvec_t_serial(m, rows, cols, x, y);
}

void outer_acc(double* m, std::size_t rows, std::size_t cols, const double* u, const double* v) {
  if (use_openmp())
    detail::outer_acc_openmp(m, rows, cols, u, v);
  else
    detail::outer_acc_serial(m, rows, cols, u, v);
}

void axpy(std::size_t n, double a, const double* x, double* y) {
  if (use_openmp())
    detail::axpy_openmp(n, a, x, y);
  else
    detail::axpy_serial(n, a, x, y);
}

void hadamard(std::size_t n, const double* a, const double* b, double* out) {
  if (use_openmp())
    detail::hadamard_openmp(n, a, b, out);
  else
    detail::hadamard_serial(n, a, b, out);
}

void tanh_map(std::size_t n, const double* x, double* out) {
  if (use_openmp())
    detail::tanh_map_openmp(n, x, out);
  else
    detail::tanh_map_serial(n, x, out);
}

void sigmoid_map(std::size_t n, const double* x, double* out) {
  if (use_openmp())
    detail::sigmoid_map_openmp(n, x, out);
  else
    detail::sigmoid_map_serial(n, x, out);
}

}  // namespace vdr::kernels
