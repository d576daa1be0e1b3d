#pragma once

#include <cstdint>

#include "cheese/common.hpp"

namespace cheese {

/// Index into the dictionary-ordered set {(0,0)} u {(m,n) : 1 <= n <= m}.
struct ScheduleIndex {
  long long r = 0;
  long long s = 0;
  bool operator==(const ScheduleIndex&) const = default;
};

/// sigma: position of (r,s) in dictionary order; (0,0) -> 0, (1,1) -> 1, (2,1) -> 2, ...
long long sigma(ScheduleIndex idx);

/// sigma^{-1}(N-1): the pair consumed by tower stage N (N >= 1).
ScheduleIndex schedule(long long N);

}  // namespace cheese
