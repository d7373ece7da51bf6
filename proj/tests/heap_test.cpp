#include <algorithm>
#include <random>
#include <set>
#include <vector>

#include "doctest.h"
#include "spineless/heap.hpp"
#include "spineless/om.hpp"

using spineless::MinHeap;
using spineless::OMHandle;
using spineless::OrderMaintenance;

namespace {

struct IntLess {
  bool operator()(int a, int b) const { return a < b; }
};

struct StampLess {
  const OrderMaintenance* om;
  bool operator()(OMHandle a, OMHandle b) const { return om->less_branchless(a, b); }
};

}  // namespace

TEST_CASE("heap pops in ascending order") {
  std::mt19937 rng(1);
  MinHeap<int, IntLess> heap;
  std::vector<int> values;
  for (int i = 0; i < 1000; ++i) {
    int v = static_cast<int>(rng() % 500);
    values.push_back(v);
    heap.push(v);
  }
  std::sort(values.begin(), values.end());
  std::vector<int> popped;
  while (!heap.empty()) popped.push_back(heap.pop());
  CHECK(popped == values);
}

TEST_CASE("interleaved pushes and pops always return the current minimum") {
  std::mt19937 rng(2);
  MinHeap<int, IntLess> heap;
  std::multiset<int> shadow;
  for (int i = 0; i < 5000; ++i) {
    if (!shadow.empty() && rng() % 3 == 0) {
      int got = heap.pop();
      CHECK(got == *shadow.begin());
      shadow.erase(shadow.begin());
    } else {
      int v = static_cast<int>(rng() % 1000);
      heap.push(v);
      shadow.insert(v);
    }
    CHECK(heap.size() == shadow.size());
  }
}

TEST_CASE("heap ordered by order-maintenance timestamps matches a re-sort") {
  std::mt19937 rng(5);
  OrderMaintenance om;
  std::vector<OMHandle> stamps{om.head()};
  for (int i = 0; i < 3000; ++i) stamps.push_back(om.create_after(stamps[rng() % stamps.size()]));

  MinHeap<OMHandle, StampLess> heap(StampLess{&om});
  std::vector<OMHandle> chosen;
  for (int i = 0; i < 800; ++i) {
    OMHandle h = stamps[rng() % stamps.size()];
    if (std::find(chosen.begin(), chosen.end(), h) != chosen.end()) continue;
    chosen.push_back(h);
    heap.push(h);
  }
  std::vector<OMHandle> popped;
  while (!heap.empty()) popped.push_back(heap.pop());
  std::sort(chosen.begin(), chosen.end(),
            [&](OMHandle a, OMHandle b) { return om.compare(a, b) < 0; });
  CHECK(popped == chosen);
}
