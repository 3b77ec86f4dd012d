#pragma once

#include "hairgs/strand.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace hairgs::detail {

using Cell = Eigen::Matrix<std::int64_t, 3, 1>;

// Sparse uniform grid. Points are sorted so each occupied cell owns one
// contiguous run; an open-addressing table maps a cell key to its run.
// Keys pack the cell offset from the grid's lower corner into 21 bits per
// axis, so the cell size grows if the points span more than ~2 million
// cells along an axis.
class CellGrid {
 public:
  CellGrid(std::span<const Vec3> points, double cell_size) : cell_size_(cell_size) {
    if (!points.empty()) {
      Vec3 lo = points.front(), hi = points.front();
      for (const Vec3& p : points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
      }
      const double span = (hi - lo).maxCoeff();
      cell_size_ = std::max(cell_size_, span / static_cast<double>(kAxisCells - 4));
      lo_ = cell_of(lo);
      hi_ = cell_of(hi);
    }
    entries_.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) entries_.push_back({key_of(cell_of(points[i])), i});
    sort_entries();

    std::size_t runs = 0;
    for (std::size_t i = 0; i < entries_.size(); ++i) runs += i == 0 || entries_[i].key != entries_[i - 1].key;
    std::size_t capacity = 16;
    while (capacity < 2 * runs) capacity *= 2;
    mask_ = capacity - 1;
    slots_.assign(capacity, Slot{kEmpty, 0, 0});
    for (std::size_t b = 0; b < entries_.size();) {
      std::size_t e = b + 1;
      while (e < entries_.size() && entries_[e].key == entries_[b].key) ++e;
      std::size_t h = hash(entries_[b].key) & mask_;
      while (slots_[h].key != kEmpty) h = (h + 1) & mask_;
      slots_[h] = {entries_[b].key, static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(e)};
      b = e;
    }
  }

  /// At least the requested size; neighbors within this distance are always
  /// in the same or an adjacent cell.
  double cell_size() const { return cell_size_; }
  const Cell& lower() const { return lo_; }
  const Cell& upper() const { return hi_; }

  Cell cell_of(const Vec3& p) const {
    return Cell(static_cast<std::int64_t>(std::floor(p.x() / cell_size_)),
                static_cast<std::int64_t>(std::floor(p.y() / cell_size_)),
                static_cast<std::int64_t>(std::floor(p.z() / cell_size_)));
  }

  // Calls f(index) for every point in cell c, ascending index.
  template <class F>
  void for_each_in_cell(const Cell& c, F&& f) const {
    if (entries_.empty() || (c.array() < lo_.array()).any() || (c.array() > hi_.array()).any()) return;
    if (const Slot* slot = find(key_of(c)))
      for (std::uint32_t i = slot->begin; i < slot->end; ++i) f(entries_[i].index);
  }

  // Calls f(i, j) once for every unordered pair of points in the same or
  // adjacent cells.
  template <class F>
  void for_each_near_pair(F&& f) const {
    static const std::array<std::int64_t, 13> forward = [] {
      std::array<std::int64_t, 13> d{};
      int n = 0;
      for (std::int64_t dx = -1; dx <= 1; ++dx)
        for (std::int64_t dy = -1; dy <= 1; ++dy)
          for (std::int64_t dz = -1; dz <= 1; ++dz) {
            const std::int64_t delta = (dx << (2 * kAxisBits)) + (dy << kAxisBits) + dz;
            if (delta > 0) d[n++] = delta;
          }
      return d;
    }();
    for (std::size_t b = 0; b < entries_.size();) {
      const std::uint64_t key = entries_[b].key;
      std::size_t e = b + 1;
      while (e < entries_.size() && entries_[e].key == key) ++e;
      for (std::size_t p = b; p < e; ++p)
        for (std::size_t q = p + 1; q < e; ++q) f(entries_[p].index, entries_[q].index);
      for (const std::int64_t delta : forward) {
        const Slot* other = find(key + static_cast<std::uint64_t>(delta));
        if (other == nullptr) continue;
        for (std::size_t p = b; p < e; ++p)
          for (std::uint32_t q = other->begin; q < other->end; ++q) f(entries_[p].index, entries_[q].index);
      }
      b = e;
    }
  }

 private:
  static constexpr int kAxisBits = 21;
  static constexpr std::int64_t kAxisCells = std::int64_t{1} << kAxisBits;
  static constexpr std::uint64_t kEmpty = ~std::uint64_t{0};

  struct Entry {
    std::uint64_t key;
    std::size_t index;
  };
  struct Slot {
    std::uint64_t key;
    std::uint32_t begin;
    std::uint32_t end;
  };

  // Stable order by key; entries arrive in index order, so ties stay
  // ascending by index. Counting sort per axis field when the occupied
  // ranges are small, comparison sort otherwise.
  void sort_entries() {
    const auto by_key = [](const Entry& a, const Entry& b) { return a.key < b.key; };
    const std::int64_t limit = static_cast<std::int64_t>(4 * entries_.size() + 1024);
    const Cell extent = hi_ - lo_ + Cell::Constant(3);
    if ((extent.array() <= 0).any() || (extent.array() > limit).any()) {
      std::stable_sort(entries_.begin(), entries_.end(), by_key);
      return;
    }
    std::vector<Entry> scratch(entries_.size());
    std::vector<std::uint32_t> count;
    for (int axis = 2; axis >= 0; --axis) {
      const int shift = (2 - axis) * kAxisBits;
      const auto bound = static_cast<std::uint64_t>(extent[axis]);
      const auto field = [shift](const Entry& e) { return (e.key >> shift) & (kAxisCells - 1); };
      count.assign(bound + 1, 0);
      for (const Entry& e : entries_) {
        const std::uint64_t f = field(e);
        if (f >= bound) {
          std::stable_sort(entries_.begin(), entries_.end(), by_key);
          return;
        }
        ++count[f + 1];
      }
      for (std::size_t i = 1; i < count.size(); ++i) count[i] += count[i - 1];
      for (const Entry& e : entries_) scratch[count[field(e)]++] = e;
      entries_.swap(scratch);
    }
  }

  // Offsets by one cell of margin so every neighbor of an occupied cell also
  // has a valid key, and key(c + d) == key(c) + packed(d).
  std::uint64_t key_of(const Cell& c) const {
    const Cell r = c - lo_ + Cell::Ones();
    return (static_cast<std::uint64_t>(r.x()) << (2 * kAxisBits)) |
           (static_cast<std::uint64_t>(r.y()) << kAxisBits) | static_cast<std::uint64_t>(r.z());
  }

  static std::uint64_t hash(std::uint64_t k) {
    k *= 0x9E3779B97F4A7C15ULL;
    return k ^ (k >> 31);
  }

  const Slot* find(std::uint64_t key) const {
    for (std::size_t h = hash(key) & mask_; slots_[h].key != kEmpty; h = (h + 1) & mask_)
      if (slots_[h].key == key) return &slots_[h];
    return nullptr;
  }

  double cell_size_;
  std::vector<Entry> entries_;
  std::vector<Slot> slots_;
  std::size_t mask_ = 0;
  Cell lo_ = Cell::Zero();
  Cell hi_ = Cell::Zero();
};

}  // namespace hairgs::detail
