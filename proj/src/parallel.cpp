#include "ergoline/parallel.hpp"

#include <exception>
#include <mutex>
#include <thread>

namespace ergoline {

std::vector<BlockRange> make_blocks(std::size_t n, unsigned threads) {
  if (threads == 0) threads = 1;
  const std::size_t workers =
      std::min<std::size_t>(threads, n == 0 ? 1 : n);
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<BlockRange> blocks;
  for (std::size_t lo = 0; lo < n; lo += chunk) {
    blocks.push_back({lo, std::min(n, lo + chunk)});
  }
  if (blocks.empty()) blocks.push_back({0, 0});
  return blocks;
}

void run_blocks(const std::vector<BlockRange>& blocks,
                const std::function<void(std::size_t, BlockRange)>& fn) {
  if (blocks.size() == 1) {
    fn(0, blocks[0]);
    return;
  }
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    pool.emplace_back([&, b] {
      try {
        fn(b, blocks[b]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace ergoline
