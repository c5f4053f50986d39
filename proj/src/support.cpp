// SPDX-License-Identifier: Apache-2.0
#include "colscat/support.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "colscat/error.hpp"

namespace colscat {
namespace {

double parse_double(std::string_view token, std::string_view context) {
  std::string s(token);
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) {
    throw Error("invalid number '" + s + "' in omega '" + std::string(context) + "'");
  }
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Node tolerance absorbs representation error of endpoints like 0.7*K.
constexpr double kNodeSlack = 1e-9;

std::vector<int> nodes_in(const Interval& iv, int grid_k) {
  const int first = std::max(-grid_k, static_cast<int>(std::ceil(iv.lo * grid_k - kNodeSlack)));
  const int last = std::min(grid_k, static_cast<int>(std::floor(iv.hi * grid_k + kNodeSlack)));
  std::vector<int> out;
  for (int k = first; k <= last; ++k) out.push_back(k);
  return out;
}

}  // namespace

AngularSupport::AngularSupport(std::vector<Interval> intervals) : intervals_(std::move(intervals)) {
  for (std::size_t i = 0; i < intervals_.size(); ++i) {
    const auto& iv = intervals_[i];
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi)) throw Error("non-finite interval endpoint");
    if (iv.lo < -1.0 || iv.hi > 1.0) {
      throw Error("interval " + std::to_string(iv.lo) + ":" + std::to_string(iv.hi) +
                  " lies outside [-1, 1]");
    }
    if (!(iv.hi > iv.lo)) {
      throw Error("interval " + std::to_string(iv.lo) + ":" + std::to_string(iv.hi) +
                  " has non-positive length");
    }
    if (i > 0) {
      const auto& prev = intervals_[i - 1];
      if (iv.lo < prev.lo) throw Error("intervals must be sorted by left endpoint");
      if (iv.lo <= prev.hi) {
        throw Error("intervals overlap: " + std::to_string(prev.lo) + ":" + std::to_string(prev.hi) +
                    " and " + std::to_string(iv.lo) + ":" + std::to_string(iv.hi));
      }
    }
  }
}

AngularSupport AngularSupport::parse(std::string_view text) {
  std::vector<Interval> out;
  std::string_view rest = trim(text);
  if (rest.empty()) throw Error("empty omega specification");
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    std::string_view item = trim(rest.substr(0, comma));
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    // The separator is the first ':' after a leading sign or digit, so
    // "-1:-0.7" splits at index 2.
    const auto colon = item.find(':', 1);
    if (item.empty() || colon == std::string_view::npos) {
      throw Error("malformed interval '" + std::string(item) + "', expected a:b");
    }
    out.push_back({parse_double(trim(item.substr(0, colon)), text),
                   parse_double(trim(item.substr(colon + 1)), text)});
  }
  return AngularSupport(std::move(out));
}

double AngularSupport::measure() const {
  return std::accumulate(intervals_.begin(), intervals_.end(), 0.0,
                         [](double acc, const Interval& iv) { return acc + iv.length(); });
}

AngularSupport AngularSupport::cluster(std::size_t i) const {
  if (i >= intervals_.size()) throw Error("cluster index out of range");
  return AngularSupport({intervals_[i]});
}

std::vector<int> AngularSupport::grid_nodes(int grid_k) const {
  std::vector<int> out;
  for (const auto& iv : intervals_) {
    const auto part = nodes_in(iv, grid_k);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

std::vector<int> AngularSupport::cluster_grid_nodes(std::size_t i, int grid_k) const {
  if (i >= intervals_.size()) throw Error("cluster index out of range");
  return nodes_in(intervals_[i], grid_k);
}

std::string AngularSupport::to_string() const {
  std::string out;
  char buf[64];
  for (std::size_t i = 0; i < intervals_.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%s%.15g:%.15g", i ? "," : "", intervals_[i].lo, intervals_[i].hi);
    out += buf;
  }
  return out;
}

}  // namespace colscat
