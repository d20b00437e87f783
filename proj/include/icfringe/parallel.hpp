#pragma once

#include <cstddef>
#include <functional>
#include <optional>

namespace icfringe {

/// Worker count: explicit request if given and positive, else ICFRINGE_THREADS, else 1.
int resolve_threads(std::optional<int> requested = std::nullopt);

/// Splits [0, count) into contiguous chunks, one per worker. Each index is
/// visited exactly once, so per-index writes stay independent of the worker count.
void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t begin, std::size_t end)>& body);

}  // namespace icfringe
