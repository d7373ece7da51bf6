#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace spineless {

/// Fixed-size object pool addressed by small integer handles instead of raw
/// pointers. Released slots go on a free list and are handed out again
/// before the backing vector grows. The largest value of `P` is reserved as
/// the nil handle, so a pool holds at most `max()-1` live objects.
template <typename T, typename P = std::uint32_t>
class Pool {
 public:
  static constexpr P kNil = std::numeric_limits<P>::max();

  explicit Pool(std::size_t limit = kNil) : limit_(limit < kNil ? limit : kNil) {}

  P allocate() {
    if (!freed_.empty()) {
      P p = freed_.back();
      freed_.pop_back();
      cells_[p] = T{};
      return p;
    }
    if (cells_.size() >= limit_) {
      throw std::length_error("pool exhausted");
    }
    cells_.emplace_back();
    return static_cast<P>(cells_.size() - 1);
  }

  void release(P p) { freed_.push_back(p); }

  T& operator[](P p) { return cells_[p]; }
  const T& operator[](P p) const { return cells_[p]; }

  void reserve(std::size_t n) { cells_.reserve(n); }

  std::size_t slots() const { return cells_.size(); }
  std::size_t live() const { return cells_.size() - freed_.size(); }

 private:
  std::vector<T> cells_;
  std::vector<P> freed_;
  std::size_t limit_;
};

}  // namespace spineless
