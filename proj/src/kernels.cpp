#include "slotfill/kernels.hpp"

#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace slotfill::kernels {

namespace {
std::atomic<bool> g_parallel{true};

// Below this many multiply-adds the fork/join overhead dominates.
constexpr std::size_t kParallelFlopThreshold = 64 * 1024;
}  // namespace

void set_parallel(bool enabled) { g_parallel.store(enabled); }
bool parallel_enabled() { return g_parallel.load(); }

void matvec_serial(const double* W, const double* x, double* y, std::size_t m, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    const double* row = W + i * n;
    for (std::size_t j = 0; j < n; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
}

void matvec_omp(const double* W, const double* x, double* y, std::size_t m, std::size_t n) {
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < (long long)m; ++i) {
    double acc = 0.0;
    const double* row = W + (std::size_t)i * n;
    for (std::size_t j = 0; j < n; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
}

void vecmat_serial(const double* x, const double* W, const double* b, double* y, std::size_t d,
                   std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double acc = b ? b[j] : 0.0;
    for (std::size_t i = 0; i < d; ++i) acc += x[i] * W[i * n + j];
    y[j] = acc;
  }
}

void vecmat_omp(const double* x, const double* W, const double* b, double* y, std::size_t d,
                std::size_t n) {
#pragma omp parallel for schedule(static)
  for (long long j = 0; j < (long long)n; ++j) {
    double acc = b ? b[j] : 0.0;
    for (std::size_t i = 0; i < d; ++i) acc += x[i] * W[i * n + (std::size_t)j];
    y[j] = acc;
  }
}

void outer_acc_serial(const double* g, const double* x, double* dW, std::size_t m, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double gi = g[i];
    double* row = dW + i * n;
    for (std::size_t j = 0; j < n; ++j) row[j] += gi * x[j];
  }
}

void outer_acc_omp(const double* g, const double* x, double* dW, std::size_t m, std::size_t n) {
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < (long long)m; ++i) {
    double gi = g[i];
    double* row = dW + (std::size_t)i * n;
    for (std::size_t j = 0; j < n; ++j) row[j] += gi * x[j];
  }
}

void matvec_t_acc_serial(const double* W, const double* g, double* dx, std::size_t m,
                         std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += W[i * n + j] * g[i];
    dx[j] += acc;
  }
}

void matvec_t_acc_omp(const double* W, const double* g, double* dx, std::size_t m, std::size_t n) {
#pragma omp parallel for schedule(static)
  for (long long j = 0; j < (long long)n; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += W[i * n + (std::size_t)j] * g[i];
    dx[j] += acc;
  }
}

namespace {
bool use_parallel(std::size_t flops) {
#ifdef _OPENMP
  // Nested inside an active parallel region (e.g. the batch loop) the serial
  // kernel is always the right choice.
  if (omp_in_parallel()) return false;
  return g_parallel.load() && flops >= kParallelFlopThreshold;
#else
  (void)flops;
  return false;
#endif
}
}  // namespace

void matvec(const double* W, const double* x, double* y, std::size_t m, std::size_t n) {
  if (use_parallel(m * n))
    matvec_omp(W, x, y, m, n);
  else
    matvec_serial(W, x, y, m, n);
}

void vecmat(const double* x, const double* W, const double* b, double* y, std::size_t d,
            std::size_t n) {
  if (use_parallel(d * n))
    vecmat_omp(x, W, b, y, d, n);
  else
    vecmat_serial(x, W, b, y, d, n);
}

void outer_acc(const double* g, const double* x, double* dW, std::size_t m, std::size_t n) {
  if (use_parallel(m * n))
    outer_acc_omp(g, x, dW, m, n);
  else
    outer_acc_serial(g, x, dW, m, n);
}

void matvec_t_acc(const double* W, const double* g, double* dx, std::size_t m, std::size_t n) {
  if (use_parallel(m * n))
    matvec_t_acc_omp(W, g, dx, m, n);
  else
    matvec_t_acc_serial(W, g, dx, m, n);
}

}  // namespace slotfill::kernels
