#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace ergoline {

struct BlockRange {
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Contiguous partition of [0, n) into at most `threads` blocks.
std::vector<BlockRange> make_blocks(std::size_t n, unsigned threads);

/// Runs fn(block_index, range) for each block on its own thread and
/// rethrows the first exception. Callers write results into
/// index-addressed slots, so the output never depends on the schedule.
void run_blocks(const std::vector<BlockRange>& blocks,
                const std::function<void(std::size_t, BlockRange)>& fn);

}  // namespace ergoline
