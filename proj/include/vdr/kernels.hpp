#pragma once

#include <cstddef>

namespace vdr::kernels {

// Dense kernels behind the autodiff ops. Two implementations share one
// contract: the OpenMP path splits work only across independent output
// elements, never inside a summation, so serial and parallel results are
// bitwise identical and bit-reproducibility survives any thread count.
enum class Backend { serial, openmp };

void set_backend(Backend b);
Backend backend();
bool openmp_compiled();

// y = M x                      (M is rows x cols, row-major)
void matvec(const double* m, std::size_t rows, std::size_t cols, const double* x, double* y);
// y = M^T x                    (x has rows entries, y has cols)
void matvec_t(const double* m, std::size_t rows, std::size_t cols, const double* x, double* y);
// M += u v^T                   (u has rows entries, v has cols)
void outer_acc(double* m, std::size_t rows, std::size_t cols, const double* u, const double* v);
// y += a * x
void axpy(std::size_t n, double a, const double* x, double* y);
// out = a .* b
void hadamard(std::size_t n, const double* a, const double* b, double* out);
// out = tanh(x) / sigmoid(x) elementwise
void tanh_map(std::size_t n, const double* x, double* out);
void sigmoid_map(std::size_t n, const double* x, double* out);

namespace detail {
void matvec_serial(const double* m, std::size_t rows, std::size_t cols, const double* x, double* y);
void matvec_t_serial(const double* m, std::size_t rows, std::size_t cols, const double* x, double* y);
void outer_acc_serial(double* m, std::size_t rows, std::size_t cols, const double* u, const double* v);
void axpy_serial(std::size_t n, double a, const double* x, double* y);
void hadamard_serial(std::size_t n, const double* a, const double* b, double* out);
void tanh_map_serial(std::size_t n, const double* x, double* out);
void sigmoid_map_serial(std::size_t n, const double* x, double* out);

void matvec_openmp(const double* m, std::size_t rows, std::size_t cols, const double* x, double* y);
void matvec_t_openmp(const double* m, std::size_t rows, std::size_t cols, const double* x, double* y);
void outer_acc_openmp(double* m, std::size_t rows, std::size_t cols, const double* u, const double* v);
void axpy_openmp(std::size_t n, double a, const double* x, double* y);
void hadamard_openmp(std::size_t n, const double* a, const double* b, double* out);
void tanh_map_openmp(std::size_t n, const double* x, double* out);
void sigmoid_map_openmp(std::size_t n, const double* x, double* out);
}  // namespace detail

}  // namespace vdr::kernels
