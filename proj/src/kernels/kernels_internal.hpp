#pragma once

#include "ctxslu/kernels.hpp"

namespace ctxslu::kernels::detail {

extern const KernelTable kScalarTable;
#if defined(__x86_64__) || defined(_M_X64)
#define CTXSLU_HAVE_AVX2_KERNELS 1
extern const KernelTable kAvx2Table;
#endif

}  // namespace ctxslu::kernels::detail
