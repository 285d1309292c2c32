#pragma once

#include <cstddef>
#include <functional>

namespace tiltperm {

/// Work is split into a fixed number of chunks, each with its own random
/// stream; the thread count only decides which worker runs which chunk, so
/// results never depend on it.
constexpr std::size_t kChunkSize = 2048;

/// Number of fixed-size chunks covering n items.
constexpr std::size_t chunk_count(std::size_t n, std::size_t chunk = kChunkSize) {
  return (n + chunk - 1) / chunk;
}

/// Thread count from TILTPERM_THREADS, else hardware concurrency (min 1).
unsigned default_thread_count();

/// Runs task(c) for every c in [0, n_chunks) on up to `threads` workers.
/// If any task throws, the exception of the lowest-numbered failing chunk is
/// rethrown after all workers stop.
void for_each_chunk(std::size_t n_chunks, unsigned threads,
                    const std::function<void(std::size_t)>& task);

}  // namespace tiltperm
