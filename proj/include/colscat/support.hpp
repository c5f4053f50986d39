// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace colscat {

/// Closed interval [lo, hi] of directional cosines.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double length() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
  bool operator==(const Interval&) const = default;
};

/// Union of disjoint closed intervals inside [-1, 1], sorted by left
/// endpoint. A default-constructed support is empty; consumers that need a
/// positive measure reject it.
class AngularSupport {
 public:
  AngularSupport() = default;
  explicit AngularSupport(std::vector<Interval> intervals);

  /// Parses "a:b,c:d,...". Throws Error on malformed text, reversed or
  /// overlapping intervals, or endpoints outside [-1, 1].
  static AngularSupport parse(std::string_view text);

  const std::vector<Interval>& intervals() const { return intervals_; }
  bool empty() const { return intervals_.empty(); }
  std::size_t cluster_count() const { return intervals_.size(); }
  double measure() const;

  /// Single-cluster support holding interval `i`.
  AngularSupport cluster(std::size_t i) const;

  /// Grid indices k in [-K, K] with k/K inside some interval (boundaries
  /// included), ascending.
  std::vector<int> grid_nodes(int grid_k) const;

  /// Grid indices of the nodes of cluster `i` only.
  std::vector<int> cluster_grid_nodes(std::size_t i, int grid_k) const;

  std::string to_string() const;

  bool operator==(const AngularSupport&) const = default;

 private:
  std::vector<Interval> intervals_;
};

}  // namespace colscat
