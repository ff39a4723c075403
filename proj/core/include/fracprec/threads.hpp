// Copyright (c) 2026 The fracprec authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef FRACPREC_THREADS_HPP
#define FRACPREC_THREADS_HPP

#include <functional>

namespace fracprec {

/// Worker-thread cap: min(hardware threads, FRACPREC_THREADS) when the env
/// var is set, hardware threads otherwise. Always >= 1.
int max_worker_threads();

/// Static chunking of [0, n) across at most max_worker_threads() threads.
/// Iterations must write disjoint state so the result is independent of the
/// thread count.
void parallel_for(int n, const std::function<void(int)>& body);

}  // namespace fracprec

#endif
