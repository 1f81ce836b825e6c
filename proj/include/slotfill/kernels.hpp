#pragma once

#include <cstddef>

namespace slotfill::kernels {

// Dense kernels used by the tape ops. Each has a plain serial reference
// version and an OpenMP version parallelized over output rows. The row
// parallelization keeps every dot product sequential, so serial and parallel
// results are bitwise identical.

// y[m] = W[m x n] * x[n]
void matvec_serial(const double* W, const double* x, double* y, std::size_t m, std::size_t n);
void matvec_omp(const double* W, const double* x, double* y, std::size_t m, std::size_t n);

// y[n] = x[d] * W[d x n] + b[n]
void vecmat_serial(const double* x, const double* W, const double* b, double* y, std::size_t d,
                   std::size_t n);
void vecmat_omp(const double* x, const double* W, const double* b, double* y, std::size_t d,
                std::size_t n);

// dW[m x n] += g[m] outer x[n]
void outer_acc_serial(const double* g, const double* x, double* dW, std::size_t m, std::size_t n);
void outer_acc_omp(const double* g, const double* x, double* dW, std::size_t m, std::size_t n);

// dx[n] += W[m x n]^T * g[m]
void matvec_t_acc_serial(const double* W, const double* g, double* dx, std::size_t m,
                         std::size_t n);
void matvec_t_acc_omp(const double* W, const double* g, double* dx, std::size_t m, std::size_t n);

// Runtime switch; default dispatches to OpenMP when the op is large enough
// to amortize the fork. set_parallel(false) forces the serial path everywhere.
void set_parallel(bool enabled);
bool parallel_enabled();

void matvec(const double* W, const double* x, double* y, std::size_t m, std::size_t n);
void vecmat(const double* x, const double* W, const double* b, double* y, std::size_t d,
            std::size_t n);
void outer_acc(const double* g, const double* x, double* dW, std::size_t m, std::size_t n);
void matvec_t_acc(const double* W, const double* g, double* dx, std::size_t m, std::size_t n);

}  // namespace slotfill::kernels
