// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>

namespace odf {

/// Worker count from ODF_THREADS, else hardware concurrency (at least 1).
std::size_t default_thread_count();

/// Runs body(i) for i in [0, n) over up to `threads` workers (0 selects
/// default_thread_count()). Returns after every index completed; the first
/// exception thrown by any body is rethrown.
void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace odf
