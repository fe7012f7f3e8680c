#pragma once

// Moving window of samples Q(t) = (x, xdot, u) kept by the adaptive loop.

#include "adrom/types.hpp"

#include <deque>
#include <vector>

namespace adrom {

struct WindowSample {
  double t = 0.0;
  Vec x;    ///< state
  Vec xdot; ///< time derivative estimate
  Vec u;    ///< input
};

/// FIFO buffer of at most `capacity` samples with strictly increasing times.
class MovingWindow {
public:
  explicit MovingWindow(int capacity = 1);

  /// Appends a sample, evicting the oldest when full. Throws
  /// PreconditionError if t does not exceed the newest stored time or if the
  /// sample shape differs from the stored ones.
  void push(WindowSample s);
  void clear() { samples_.clear(); }

  int capacity() const { return capacity_; }
  int size() const { return static_cast<int>(samples_.size()); }
  bool empty() const { return samples_.empty(); }
  bool full() const { return size() == capacity_; }

  /// Oldest first.
  const WindowSample &operator[](int i) const { return samples_[static_cast<std::size_t>(i)]; }
  const WindowSample &oldest() const { return samples_.front(); }
  const WindowSample &newest() const { return samples_.back(); }

  Mat states() const;      ///< n x size
  Mat derivatives() const; ///< n x size
  Mat inputs() const;      ///< m x size
  std::vector<double> times() const;

  /// Common sample spacing; throws PreconditionError when spacings differ by
  /// more than `rel_tol` relative or fewer than two samples are stored.
  double spacing(double rel_tol = 1e-9) const;

private:
  int capacity_;
  std::deque<WindowSample> samples_;
};

} // namespace adrom
