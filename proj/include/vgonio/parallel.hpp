#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace vgonio {

inline int max_threads() noexcept
{
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

inline void set_threads(int n) noexcept
{
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

} // namespace vgonio
