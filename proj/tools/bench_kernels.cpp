// Times the serial and OpenMP kernel backends on the shapes the models
// actually use and verifies the two produce bitwise-identical output. The
// OpenMP path only splits independent output elements, so any difference is
// a bug, not a rounding artifact.
#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "vdr/kernels.hpp"
#include "vdr/rng.hpp"

namespace {

using vdr::kernels::Backend;

std::vector<double> rand_buf(std::size_t n, vdr::Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

double seconds_per_call(const std::function<void()>& fn, int reps) {
  fn();  // warm up
  auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count() / reps;
}

bool bits_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

struct Case {
  std::string name;
  std::size_t rows, cols;
};

int run() {
  using namespace vdr::kernels;
  if (!openmp_compiled()) {
    std::printf("built without OpenMP; only the serial backend is available\n");
  }

  vdr::Rng rng = vdr::named_rng(1, "bench");
  const std::vector<Case> cases = {
      {"toy 16x16", 16, 16},
      {"hidden 512x512", 512, 512},
      {"embed 2048x300", 2048, 300},
  };
  const int reps = 20;
  bool all_match = true;

  std::printf("%-20s %-10s %12s %12s %9s  %s\n", "shape", "kernel", "serial(us)", "openmp(us)",
              "speedup", "bits");
  for (const Case& c : cases) {
    std::vector<double> m = rand_buf(c.rows * c.cols, rng);
    std::vector<double> x = rand_buf(c.cols, rng);
    std::vector<double> xr = rand_buf(c.rows, rng);
    std::vector<double> out_s(c.rows), out_p(c.rows);
    std::vector<double> outc_s(c.cols), outc_p(c.cols);

    struct Kernel {
      const char* name;
      std::function<void(std::vector<double>&)> call;
      std::vector<double>* serial_out;
      std::vector<double>* openmp_out;
    };
    std::vector<Kernel> kernels = {
        {"matvec",
         [&](std::vector<double>& out) {
           matvec(m.data(), c.rows, c.cols, x.data(), out.data());
         },
         &out_s, &out_p},
        {"matvec_t",
         [&](std::vector<double>& out) {
           matvec_t(m.data(), c.rows, c.cols, xr.data(), out.data());
         },
         &outc_s, &outc_p},
    };

    for (Kernel& k : kernels) {
      set_backend(Backend::serial);
      double ts = seconds_per_call([&] { k.call(*k.serial_out); }, reps);
      double tp = ts;
      bool match = true;
      if (openmp_compiled()) {
        set_backend(Backend::openmp);
        tp = seconds_per_call([&] { k.call(*k.openmp_out); }, reps);
        match = bits_equal(*k.serial_out, *k.openmp_out);
      }
      all_match = all_match && match;
      std::printf("%-20s %-10s %12.1f %12.1f %8.2fx  %s\n", c.name.c_str(), k.name, ts * 1e6,
                  tp * 1e6, ts / tp, match ? "identical" : "DIFFER");
    }

    // outer_acc accumulates into the matrix, so compare fresh copies.
    std::vector<double> acc_s = m, acc_p = m;
    set_backend(Backend::serial);
    double ts = seconds_per_call(
        [&] { outer_acc(acc_s.data(), c.rows, c.cols, xr.data(), x.data()); }, reps);
    double tp = ts;
    bool match = true;
    if (openmp_compiled()) {
      set_backend(Backend::openmp);
      tp = seconds_per_call(
          [&] { outer_acc(acc_p.data(), c.rows, c.cols, xr.data(), x.data()); }, reps);
      match = bits_equal(acc_s, acc_p);
    }
    all_match = all_match && match;
    std::printf("%-20s %-10s %12.1f %12.1f %8.2fx  %s\n", c.name.c_str(), "outer_acc", ts * 1e6,
                tp * 1e6, ts / tp, match ? "identical" : "DIFFER");
  }

  set_backend(Backend::serial);
  std::printf("%s\n", all_match ? "all backends bitwise identical"
                                : "BACKEND MISMATCH: serial and openmp outputs differ");
  return all_match ? 0 : 2;
}

}  // namespace

int main() { return run(); }
