#pragma once

#include <algorithm>

#include "dpstat/errors.hpp"

namespace dpstat {

// Closed interval [lo, hi].
struct Interval {
  double lo;
  double hi;

  Interval(double lo_, double hi_) : lo(lo_), hi(hi_) {
    if (!(lo <= hi)) throw ValidationError("interval", "requires lo <= hi");
  }

  double length() const { return hi - lo; }

  bool contains(double x) const { return lo <= x && x <= hi; }

  double clamp(double x) const { return std::min(hi, std::max(lo, x)); }

  Interval hull(double x) const {
    return Interval(std::min(lo, x), std::max(hi, x));
  }

  Interval hull(const Interval& o) const {
    return Interval(std::min(lo, o.lo), std::max(hi, o.hi));
  }

  friend bool operator==(const Interval& a, const Interval& b) {
    return a.lo == b.lo && a.hi == b.hi;
  }
};

}  // namespace dpstat
