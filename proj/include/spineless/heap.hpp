#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace spineless {

/// Binary min-heap over a dense 0-based array. `Less` is a stateful
/// comparator so elements can be ordered by data stored elsewhere
/// (timestamps in an order-maintenance arena).
template <typename T, typename Less>
class MinHeap {
 public:
  explicit MinHeap(Less less = Less{}) : less_(std::move(less)) {}

  bool empty() const { return items_.empty(); }
  std::size_t size() const { return items_.size(); }
  const T& top() const { return items_.front(); }

  void push(T item) {
    std::size_t i = items_.size();
    items_.push_back(item);
    while (i > 0) {
      std::size_t parent = (i - 1) / 2;
      if (!less_(item, items_[parent])) break;
      items_[i] = items_[parent];
      i = parent;
    }
    items_[i] = item;
  }

  T pop() {
    T out = items_.front();
    T last = items_.back();
    items_.pop_back();
    std::size_t n = items_.size();
    if (n == 0) return out;
    std::size_t i = 0;
    for (;;) {
      std::size_t child = 2 * i + 1;
      if (child >= n) break;
      if (child + 1 < n && less_(items_[child + 1], items_[child])) ++child;
      if (!less_(items_[child], last)) break;
      items_[i] = items_[child];
      i = child;
    }
    items_[i] = last;
    return out;
  }

  void clear() { items_.clear(); }
  void reserve(std::size_t n) { items_.reserve(n); }

  const std::vector<T>& items() const { return items_; }
  Less& comparator() { return less_; }

 private:
  std::vector<T> items_;
  Less less_;
};

}  // namespace spineless
