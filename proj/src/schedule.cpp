#include "cheese/schedule.hpp"

namespace cheese {

long long sigma(ScheduleIndex idx) {
  if (idx.r == 0 && idx.s == 0) return 0;
  if (idx.s < 1 || idx.s > idx.r)
    throw Error("invalid-schedule", "pair outside {(0,0)} u {(m,n): 1<=n<=m}");
  // pairs with first coordinate < r occupy 1 + r(r-1)/2 slots before (r,1)
  return 1 + idx.r * (idx.r - 1) / 2 + (idx.s - 1);
}

ScheduleIndex schedule(long long N) {
  if (N < 1) throw Error("invalid-schedule", "stage must be >= 1");
  long long i = N - 1;
  if (i == 0) return ScheduleIndex{0, 0};
  // largest r with 1 + r(r-1)/2 <= i
  long long r = static_cast<long long>((1.0 + std::sqrt(1.0 + 8.0 * static_cast<double>(i - 1))) / 2.0);
  while (1 + r * (r - 1) / 2 > i) --r;
  while (1 + (r + 1) * r / 2 <= i) ++r;
  long long s = i - (1 + r * (r - 1) / 2) + 1;
  return ScheduleIndex{r, s};
}

}  // namespace cheese
