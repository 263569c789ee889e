#pragma once

#include <functional>

namespace arq {

/// Process-wide worker count for parallel_for (1 = run inline).
void set_worker_threads(int n);
int worker_threads();

/// Static fork-join split of [0, n) into at most worker_threads() contiguous
/// chunks; fn(begin, end) runs once per chunk.  Chunk boundaries depend only
/// on n and the thread count, and callers only combine results in fixed index
/// order, so every computation in this codebase yields bit-identical results
/// for any thread count.
void parallel_for(int n, const std::function<void(int, int)>& fn);

}  // namespace arq
