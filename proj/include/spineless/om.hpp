#pragma once

// Order maintenance: a totally ordered set supporting O(1) insert-after,
// delete and compare, built from a two-level list of labeled cells.

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <vector>

#include "spineless/pool.hpp"

#if !defined(NDEBUG) && !defined(SPINELESS_OM_GENERATIONS)
#define SPINELESS_OM_GENERATIONS 1
#endif

namespace spineless {

inline constexpr std::uint32_t kOMNil = std::numeric_limits<std::uint32_t>::max();

/// Handle to a low-level cell. Release builds carry only the 32-bit index;
/// debug builds add a generation tag so stale handles are caught.
struct OMHandle {
  std::uint32_t index = kOMNil;
#ifdef SPINELESS_OM_GENERATIONS
  std::uint32_t generation = 0;
#endif

  bool is_nil() const { return index == kOMNil; }
  friend bool operator==(const OMHandle&, const OMHandle&) = default;
};

struct OMLowCell {
  std::uint32_t label = 0;
  std::uint32_t parent = kOMNil;
  std::uint32_t prev = kOMNil;
  std::uint32_t next = kOMNil;
};
static_assert(sizeof(OMLowCell) == 16, "low cells must stay within 16 bytes");

struct OMHighCell {
  std::uint32_t label = 0;
  std::uint32_t prev = kOMNil;
  std::uint32_t next = kOMNil;
  std::uint32_t first = kOMNil;  // first low cell of this list
  std::uint32_t size = 0;        // number of low cells in this list
};

struct OMOptions {
  bool deletion_enabled = false;
  std::uint32_t list_cap = 64;
  // Upper bound on simultaneously allocated low cells; used to exercise the
  // exhaustion path in tests.
  std::size_t max_cells = kOMNil;
};

struct OMCounters {
  std::uint64_t creates = 0;
  std::uint64_t rebalances = 0;  // low-list relabels and splits
  std::uint64_t splits = 0;
  std::uint64_t high_relabels = 0;
  std::uint64_t deletes = 0;
  std::uint64_t skipped_deletes = 0;
};

class OrderMaintenance {
 public:
  explicit OrderMaintenance(OMOptions options = {});

  OMHandle head() const { return head_; }

  /// Inserts a fresh handle immediately after `p`. Throws std::length_error
  /// when the handle space is exhausted.
  OMHandle create_after(OMHandle p);

  /// Removes `p` from the order. A no-op (counted) unless deletion is
  /// enabled. Throws std::invalid_argument for the head or a dead handle.
  void erase(OMHandle p);

  /// Two-case comparison: low labels within one list, high labels across.
  std::strong_ordering compare(OMHandle p, OMHandle q) const;

  /// Same result as compare(), computed without data-dependent branches by
  /// comparing packed (high label, low label) keys.
  std::strong_ordering compare_branchless(OMHandle p, OMHandle q) const;

  bool less(OMHandle p, OMHandle q) const {
    const OMLowCell& a = low_[p.index];
    const OMLowCell& b = low_[q.index];
    if (a.parent == b.parent) return a.label < b.label;
    return high_[a.parent].label < high_[b.parent].label;
  }

  bool less_branchless(OMHandle p, OMHandle q) const { return key(p) < key(q); }

  bool is_live(OMHandle p) const;

  std::uint32_t label(OMHandle p) const { return low_[p.index].label; }
  std::uint32_t high_label(OMHandle p) const { return high_[low_[p.index].parent].label; }
  /// Index of the high-level list holding `p`; equal values mean same list.
  std::uint32_t list_of(OMHandle p) const { return low_[p.index].parent; }

  std::size_t size() const { return low_.live(); }
  std::size_t list_count() const { return high_.live(); }

  void set_deletion_enabled(bool on) { options_.deletion_enabled = on; }
  bool deletion_enabled() const { return options_.deletion_enabled; }

  const OMCounters& counters() const { return counters_; }

  /// All live handles front to back.
  std::vector<OMHandle> in_order() const;

  /// Full scan of list links and label monotonicity; throws std::logic_error
  /// describing the first violation.
  void check_invariants() const;

  /// One line per cell: each high cell followed by its low cells.
  void dump(std::ostream& os) const;

 private:
  std::uint64_t key(OMHandle p) const {
    const OMLowCell& c = low_[p.index];
    return (static_cast<std::uint64_t>(high_[c.parent].label) << 32) | c.label;
  }

  OMHandle make_handle(std::uint32_t index) const;
  void require_live(OMHandle p, const char* what) const;
  void relabel_low(std::uint32_t list);
  void split(std::uint32_t list);
  std::uint32_t insert_high_after(std::uint32_t h);
  void relabel_high();

  OMOptions options_;
  Pool<OMLowCell> low_;
  Pool<OMHighCell> high_;
  std::vector<std::uint8_t> alive_;
#ifdef SPINELESS_OM_GENERATIONS
  std::vector<std::uint32_t> generation_;
#endif
  std::uint32_t first_high_ = kOMNil;
  OMHandle head_;
  OMCounters counters_;
};

}  // namespace spineless
