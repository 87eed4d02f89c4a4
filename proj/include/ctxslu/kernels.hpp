#pragma once

// Dense double-precision inner loops used by the differentiable core.
//
// Each kernel has a scalar reference implementation and, on x86-64, an
// AVX2+FMA variant. The variant is chosen once at startup from CPUID and can
// be pinned (tests compare the two paths against each other). All matrices
// are row-major and contiguous.

#include <cstddef>
#include <string_view>

namespace ctxslu::kernels {

enum class Isa { kScalar, kAvx2 };

/// Sum of a[i]*b[i].
double dot(const double* a, const double* b, std::size_t n);
/// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);
/// y = W x, W is rows x cols.
void gemv(const double* w, std::size_t rows, std::size_t cols, const double* x, double* y);
/// x_grad += W^T g, W is rows x cols, g has rows entries.
void gemv_t_acc(const double* w, std::size_t rows, std::size_t cols, const double* g,
                double* x_grad);
/// W_grad += g x^T (rank-one update).
void ger_acc(double* w_grad, std::size_t rows, std::size_t cols, const double* g,
             const double* x);

Isa active_isa();
bool isa_supported(Isa isa);
/// Pins the dispatch table. Throws DomainError if the CPU lacks the ISA.
void set_isa(Isa isa);
std::string_view isa_name(Isa isa);

/// Direct access to one implementation regardless of dispatch state.
struct KernelTable {
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*gemv)(const double*, std::size_t, std::size_t, const double*, double*);
  void (*gemv_t_acc)(const double*, std::size_t, std::size_t, const double*, double*);
  void (*ger_acc)(double*, std::size_t, std::size_t, const double*, const double*);
};

const KernelTable& table_for(Isa isa);

}  // namespace ctxslu::kernels
