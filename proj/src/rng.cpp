#include "ergoline/rng.hpp"

#include <cmath>
#include <numbers>

namespace ergoline {
namespace {

constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi,
                    std::uint64_t& lo) noexcept {
  unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

}  // namespace

std::array<std::uint64_t, 4> Philox4x64::block(
    const std::array<std::uint64_t, 4>& counter,
    const std::array<std::uint64_t, 2>& key) noexcept {
  std::array<std::uint64_t, 4> s = counter;
  std::uint64_t k0 = key[0];
  std::uint64_t k1 = key[1];
  for (int round = 0; round < 10; ++round) {
    std::uint64_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, s[0], hi0, lo0);
    mulhilo(kMul1, s[2], hi1, lo1);
    s = {hi1 ^ s[1] ^ k0, lo1, hi0 ^ s[3] ^ k1, lo0};
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  return s;
}

std::uint64_t PathRng::next_u64() noexcept {
  if (buffer_pos_ >= 4) {
    buffer_ = Philox4x64::block(counter_, key_);
    buffer_pos_ = 0;
    for (int i = 0; i < 4; ++i) {
      if (++counter_[i] != 0) break;
    }
  }
  return buffer_[buffer_pos_++];
}

double PathRng::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double PathRng::gauss() noexcept {
  if (have_spare_) {
    have_spare_ = false;
    return spare_gauss_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log1p(-u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_gauss_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

double PathRng::exponential(double rate) noexcept {
  return -std::log1p(-uniform()) / rate;
}

std::uint64_t PathRng::poisson(double mean) noexcept {
  if (!(mean > 0.0)) return 0;
  std::uint64_t count = 0;
  double t = -std::log1p(-uniform());
  while (t <= mean) {
    ++count;
    t += -std::log1p(-uniform());
  }
  return count;
}

}  // namespace ergoline
