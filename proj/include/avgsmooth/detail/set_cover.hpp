#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace avgsmooth::detail {

// Exact minimum set cover for universes of at most 64 elements, by iterative
// deepening over the uncovered element with the fewest candidate sets.
class ExactSetCover {
 public:
  ExactSetCover(std::span<const std::uint64_t> sets, std::uint64_t universe)
      : sets_(sets.begin(), sets.end()), universe_(universe) {}

  // Returns the indices of a minimum cover, or nullopt if the sets cannot
  // cover the universe.
  std::optional<std::vector<std::size_t>> solve() {
    std::uint64_t reachable = 0;
    for (auto s : sets_) reachable |= s;
    if ((reachable & universe_) != universe_) return std::nullopt;
    if (universe_ == 0) return std::vector<std::size_t>{};
    for (std::size_t depth = 1;; ++depth) {
      chosen_.clear();
      if (search(0, depth)) return chosen_;
    }
  }

 private:
  bool search(std::uint64_t covered, std::size_t budget) {
    const std::uint64_t open = universe_ & ~covered;
    if (open == 0) return true;
    if (budget == 0) return false;

    // Lower bound: every set covers at most `widest` open elements.
    int widest = 0;
    for (auto s : sets_) widest = std::max(widest, std::popcount(s & open));
    if (widest == 0) return false;
    const int remaining = std::popcount(open);
    if (static_cast<std::size_t>((remaining + widest - 1) / widest) > budget) return false;

    int pick = -1;
    int fewest = 65;
    for (std::uint64_t m = open; m != 0; m &= m - 1) {
      const int e = std::countr_zero(m);
      int count = 0;
      for (auto s : sets_) count += static_cast<int>((s >> e) & 1U);
      if (count < fewest) {
        fewest = count;
        pick = e;
      }
    }
    for (std::size_t k = 0; k < sets_.size(); ++k) {
      if (((sets_[k] >> pick) & 1U) == 0) continue;
      chosen_.push_back(k);
      if (search(covered | sets_[k], budget - 1)) return true;
      chosen_.pop_back();
    }
    return false;
  }

  std::vector<std::uint64_t> sets_;
  std::uint64_t universe_;
  std::vector<std::size_t> chosen_;
};

}  // namespace avgsmooth::detail
