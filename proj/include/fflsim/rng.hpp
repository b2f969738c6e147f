#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

// Counter-based randomness (Philox4x64-10).  Every consumer owns a named
// stream derived from (master seed, label path); draws depend only on the
// stream identity and the draw index, never on scheduling or call order
// elsewhere.  The raw block function is exposed for known-answer tests.

namespace fflsim {

using PhiloxCounter = std::array<std::uint64_t, 4>;
using PhiloxKey = std::array<std::uint64_t, 2>;

PhiloxCounter philox4x64_10(const PhiloxCounter& ctr, const PhiloxKey& key);

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  // Child stream; the label becomes part of the key, so siblings are
  // statistically independent and insensitive to each other's consumption.
  RngStream derive(std::string_view label) const;
  RngStream derive(std::uint64_t index) const;

  std::uint64_t next_u64();
  double uniform();       // [0, 1)
  double uniform_open();  // (0, 1]
  double gaussian();      // N(0, 1)
  double gaussian(double mean, double sd);
  void fill_gaussian(std::vector<double>& out, double sd);

  PhiloxKey key() const { return key_; }

 private:
  RngStream(PhiloxKey key) : key_(key) {}

  PhiloxKey key_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 4> buf_{};
  int buf_pos_ = 4;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace fflsim
