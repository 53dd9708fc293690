#pragma once

// Process-level tuning for the command-line tools.

#if defined(__GLIBC__) || defined(__linux__)
#include <malloc.h>
#endif

namespace fecg {

/// Raises glibc's mmap and trim thresholds to 1 GiB. No effect elsewhere.
inline void configure_allocator() {
#if defined(M_MMAP_THRESHOLD) && defined(M_TRIM_THRESHOLD)
  static const bool done = [] {
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
    return true;
  }();
  (void)done;
#endif
}

}  // namespace fecg
