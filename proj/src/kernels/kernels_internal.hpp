#pragma once

#include "shelab/kernels.hpp"

namespace shelab::kernels::detail {

extern const KernelTable kScalarTable;
#if defined(SHELAB_BUILD_AVX2)
extern const KernelTable kAvx2Table;
#endif

}  // namespace shelab::kernels::detail
