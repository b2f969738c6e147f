#include "fflsim/rng.hpp"

#include <cmath>
#include <numbers>

namespace fflsim {

namespace {

constexpr std::uint64_t kM0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kM1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kW0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kW1 = 0xBB67AE8584CAA73BULL;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
  unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

// splitmix64 finalizer; spreads label-hash structure across all bits.
std::uint64_t mix(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

PhiloxKey derive_key(const PhiloxKey& parent, const void* label, std::size_t n) {
  std::uint64_t h0 = fnv1a(0xCBF29CE484222325ULL, &parent[0], sizeof(parent[0]));
  h0 = fnv1a(h0, &parent[1], sizeof(parent[1]));
  h0 = fnv1a(h0, label, n);
  std::uint64_t h1 = fnv1a(h0, "\x01", 1);
  return {mix(h0), mix(h1)};
}

}  // namespace

PhiloxCounter philox4x64_10(const PhiloxCounter& ctr, const PhiloxKey& key) {
  std::uint64_t c0 = ctr[0], c1 = ctr[1], c2 = ctr[2], c3 = ctr[3];
  std::uint64_t k0 = key[0], k1 = key[1];
  for (int round = 0; round < 10; ++round) {
    std::uint64_t hi0, lo0, hi1, lo1;
    mulhilo(kM0, c0, hi0, lo0);
    mulhilo(kM1, c2, hi1, lo1);
    c0 = hi1 ^ c1 ^ k0;
    c1 = lo1;
    c2 = hi0 ^ c3 ^ k1;
    c3 = lo0;
    k0 += kW0;
    k1 += kW1;
  }
  return {c0, c1, c2, c3};
}

RngStream::RngStream(std::uint64_t seed) {
  PhiloxKey root{0, 0};
  key_ = derive_key(root, &seed, sizeof(seed));
}

RngStream RngStream::derive(std::string_view label) const {
  return RngStream(derive_key(key_, label.data(), label.size()));
}

RngStream RngStream::derive(std::uint64_t index) const {
  return RngStream(derive_key(key_, &index, sizeof(index)));
}

std::uint64_t RngStream::next_u64() {
  if (buf_pos_ == 4) {
    buf_ = philox4x64_10({block_++, 0, 0, 0}, key_);
    buf_pos_ = 0;
  }
  return buf_[buf_pos_++];
}

double RngStream::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double RngStream::uniform_open() {
  return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double RngStream::gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = uniform_open();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

double RngStream::gaussian(double mean, double sd) { return mean + sd * gaussian(); }

void RngStream::fill_gaussian(std::vector<double>& out, double sd) {
  for (double& v : out) v = sd * gaussian();
}

}  // namespace fflsim
