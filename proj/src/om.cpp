#include "spineless/om.hpp"

#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace spineless {

namespace {

constexpr std::uint64_t kLabelSpace = std::uint64_t{1} << 32;
constexpr std::uint64_t kMaxLabel = kLabelSpace - 1;

}  // namespace

OrderMaintenance::OrderMaintenance(OMOptions options)
    : options_(options), low_(options.max_cells), high_() {
  if (options_.list_cap < 2) {
    throw std::invalid_argument("order maintenance list cap must be at least 2");
  }
  first_high_ = high_.allocate();
  std::uint32_t h = low_.allocate();
  alive_.push_back(1);
#ifdef SPINELESS_OM_GENERATIONS
  generation_.push_back(0);
#endif
  low_[h].parent = first_high_;
  high_[first_high_].first = h;
  high_[first_high_].size = 1;
  head_ = make_handle(h);
}

OMHandle OrderMaintenance::make_handle(std::uint32_t index) const {
  OMHandle handle;
  handle.index = index;
#ifdef SPINELESS_OM_GENERATIONS
  handle.generation = generation_[index];
#endif
  return handle;
}

bool OrderMaintenance::is_live(OMHandle p) const {
  if (p.index >= alive_.size() || !alive_[p.index]) return false;
#ifdef SPINELESS_OM_GENERATIONS
  if (generation_[p.index] != p.generation) return false;
#endif
  return true;
}

void OrderMaintenance::require_live(OMHandle p, const char* what) const {
  if (!is_live(p)) {
    throw std::invalid_argument(std::string(what) + ": dead or stale order-maintenance handle " +
                                std::to_string(p.index));
  }
}

OMHandle OrderMaintenance::create_after(OMHandle p) {
#ifdef SPINELESS_OM_GENERATIONS
  require_live(p, "create_after");
#endif
  if (high_[low_[p.index].parent].size >= options_.list_cap) {
    split(low_[p.index].parent);
  }
  std::uint32_t list = low_[p.index].parent;
  std::uint32_t next = low_[p.index].next;
  std::uint64_t lo = low_[p.index].label;
  std::uint64_t hi = next == kOMNil ? kMaxLabel : low_[next].label;
  if (hi - lo <= 1) {
    relabel_low(list);
    ++counters_.rebalances;
    lo = low_[p.index].label;
    hi = next == kOMNil ? kMaxLabel : low_[next].label;
  }

  std::uint32_t q = low_.allocate();
  if (q >= alive_.size()) {
    alive_.resize(q + 1, 0);
#ifdef SPINELESS_OM_GENERATIONS
    generation_.resize(q + 1, 0);
#endif
  }
  alive_[q] = 1;
  OMLowCell& cell = low_[q];
  cell.label = static_cast<std::uint32_t>((lo + hi) / 2);
  cell.parent = list;
  cell.prev = p.index;
  cell.next = next;
  low_[p.index].next = q;
  if (next != kOMNil) low_[next].prev = q;
  ++high_[list].size;
  ++counters_.creates;
  return make_handle(q);
}

void OrderMaintenance::relabel_low(std::uint32_t list) {
  const OMHighCell& h = high_[list];
  std::uint64_t step = kLabelSpace / h.size;
  std::uint64_t label = 0;
  for (std::uint32_t c = h.first; c != kOMNil; c = low_[c].next) {
    low_[c].label = static_cast<std::uint32_t>(label);
    label += step;
  }
}

void OrderMaintenance::split(std::uint32_t list) {
  std::uint32_t fresh = insert_high_after(list);
  std::uint32_t keep = high_[list].size / 2;
  std::uint32_t c = high_[list].first;
  for (std::uint32_t i = 1; i < keep; ++i) c = low_[c].next;
  std::uint32_t moved = low_[c].next;
  low_[c].next = kOMNil;
  low_[moved].prev = kOMNil;

  std::uint32_t count = 0;
  for (std::uint32_t m = moved; m != kOMNil; m = low_[m].next) {
    low_[m].parent = fresh;
    ++count;
  }
  high_[fresh].first = moved;
  high_[fresh].size = count;
  high_[list].size -= count;
  relabel_low(list);
  relabel_low(fresh);
  ++counters_.splits;
  ++counters_.rebalances;
}

std::uint32_t OrderMaintenance::insert_high_after(std::uint32_t h) {
  std::uint32_t next = high_[h].next;
  std::uint64_t lo = high_[h].label;
  std::uint64_t hi = next == kOMNil ? kMaxLabel : high_[next].label;
  if (hi - lo <= 1) {
    relabel_high();
    lo = high_[h].label;
    hi = next == kOMNil ? kMaxLabel : high_[next].label;
  }
  std::uint32_t fresh = high_.allocate();
  OMHighCell& cell = high_[fresh];
  cell.label = static_cast<std::uint32_t>((lo + hi) / 2);
  cell.prev = h;
  cell.next = next;
  high_[h].next = fresh;
  if (next != kOMNil) high_[next].prev = fresh;
  return fresh;
}

void OrderMaintenance::relabel_high() {
  // One extra slot leaves room for the cell about to be inserted.
  std::uint64_t step = kLabelSpace / (high_.live() + 1);
  std::uint64_t label = 0;
  for (std::uint32_t h = first_high_; h != kOMNil; h = high_[h].next) {
    high_[h].label = static_cast<std::uint32_t>(label);
    label += step;
  }
  ++counters_.high_relabels;
}

void OrderMaintenance::erase(OMHandle p) {
  if (!options_.deletion_enabled) {
    ++counters_.skipped_deletes;
    return;
  }
  require_live(p, "erase");
  if (p.index == head_.index) {
    throw std::invalid_argument("erase: the head of the order cannot be deleted");
  }
  OMLowCell cell = low_[p.index];
  OMHighCell& list = high_[cell.parent];
  if (cell.prev != kOMNil) low_[cell.prev].next = cell.next;
  if (cell.next != kOMNil) low_[cell.next].prev = cell.prev;
  if (list.first == p.index) list.first = cell.next;
  if (--list.size == 0) {
    if (list.prev != kOMNil) high_[list.prev].next = list.next;
    if (list.next != kOMNil) high_[list.next].prev = list.prev;
    high_.release(cell.parent);
  }
  alive_[p.index] = 0;
#ifdef SPINELESS_OM_GENERATIONS
  ++generation_[p.index];
#endif
  low_.release(p.index);
  ++counters_.deletes;
}

std::strong_ordering OrderMaintenance::compare(OMHandle p, OMHandle q) const {
  const OMLowCell& a = low_[p.index];
  const OMLowCell& b = low_[q.index];
  if (a.parent == b.parent) return a.label <=> b.label;
  return high_[a.parent].label <=> high_[b.parent].label;
}

std::strong_ordering OrderMaintenance::compare_branchless(OMHandle p, OMHandle q) const {
  std::uint64_t a = key(p);
  std::uint64_t b = key(q);
  int sign = static_cast<int>(a > b) - static_cast<int>(a < b);
  return sign <=> 0;
}

std::vector<OMHandle> OrderMaintenance::in_order() const {
  std::vector<OMHandle> out;
  out.reserve(size());
  for (std::uint32_t h = first_high_; h != kOMNil; h = high_[h].next) {
    for (std::uint32_t c = high_[h].first; c != kOMNil; c = low_[c].next) {
      out.push_back(make_handle(c));
    }
  }
  return out;
}

void OrderMaintenance::check_invariants() const {
  auto fail = [](const std::string& msg) { throw std::logic_error("order maintenance: " + msg); };
  std::size_t seen_low = 0;
  std::size_t seen_high = 0;
  std::uint32_t prev_high = kOMNil;
  for (std::uint32_t h = first_high_; h != kOMNil; h = high_[h].next) {
    const OMHighCell& hc = high_[h];
    ++seen_high;
    if (hc.prev != prev_high) fail("high list back link broken at " + std::to_string(h));
    if (prev_high != kOMNil && high_[prev_high].label >= hc.label) {
      fail("high labels not strictly increasing at " + std::to_string(h));
    }
    if (hc.size == 0 || hc.first == kOMNil) fail("empty low list " + std::to_string(h));
    if (hc.size > options_.list_cap) fail("low list over cap " + std::to_string(h));
    std::uint32_t prev_low = kOMNil;
    std::uint32_t count = 0;
    for (std::uint32_t c = hc.first; c != kOMNil; c = low_[c].next) {
      const OMLowCell& lc = low_[c];
      if (!alive_[c]) fail("dead cell linked " + std::to_string(c));
      if (lc.parent != h) fail("parent mismatch at " + std::to_string(c));
      if (lc.prev != prev_low) fail("low list back link broken at " + std::to_string(c));
      if (prev_low != kOMNil && low_[prev_low].label >= lc.label) {
        fail("low labels not strictly increasing at " + std::to_string(c));
      }
      prev_low = c;
      ++count;
    }
    if (count != hc.size) fail("size mismatch in list " + std::to_string(h));
    seen_low += count;
    prev_high = h;
  }
  if (seen_low != low_.live()) fail("unreachable live low cells");
  if (seen_high != high_.live()) fail("unreachable live high cells");
  if (high_[first_high_].first != head_.index) fail("head is not first");
}

void OrderMaintenance::dump(std::ostream& os) const {
  for (std::uint32_t h = first_high_; h != kOMNil; h = high_[h].next) {
    os << "high " << h << " label=" << high_[h].label << " size=" << high_[h].size << '\n';
    for (std::uint32_t c = high_[h].first; c != kOMNil; c = low_[c].next) {
      os << "  low " << c << " label=" << low_[c].label << '\n';
    }
  }
}

}  // namespace spineless
