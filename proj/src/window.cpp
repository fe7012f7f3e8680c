#include "adrom/window.hpp"

#include <cmath>

namespace adrom {

MovingWindow::MovingWindow(int capacity) : capacity_(capacity) {
  require(capacity >= 1, "MovingWindow: capacity must be at least 1");
}

void MovingWindow::push(WindowSample s) {
  require(s.x.allFinite() && s.xdot.allFinite() && s.u.allFinite(),
          "MovingWindow: non-finite sample");
  require(s.x.size() == s.xdot.size(), "MovingWindow: x and xdot lengths differ");
  if (!samples_.empty()) {
    const auto &last = samples_.back();
    require(s.t > last.t, "MovingWindow: sample time " + std::to_string(s.t) +
                              " does not exceed newest " + std::to_string(last.t));
    require(s.x.size() == last.x.size() && s.u.size() == last.u.size(),
            "MovingWindow: sample shape differs from stored samples");
  }
  samples_.push_back(std::move(s));
  if (size() > capacity_)
    samples_.pop_front();
}

Mat MovingWindow::states() const {
  require(!empty(), "MovingWindow: empty");
  Mat m(samples_.front().x.size(), size());
  for (int j = 0; j < size(); ++j)
    m.col(j) = (*this)[j].x;
  return m;
}

Mat MovingWindow::derivatives() const {
  require(!empty(), "MovingWindow: empty");
  Mat m(samples_.front().xdot.size(), size());
  for (int j = 0; j < size(); ++j)
    m.col(j) = (*this)[j].xdot;
  return m;
}

Mat MovingWindow::inputs() const {
  require(!empty(), "MovingWindow: empty");
  Mat m(samples_.front().u.size(), size());
  for (int j = 0; j < size(); ++j)
    m.col(j) = (*this)[j].u;
  return m;
}

std::vector<double> MovingWindow::times() const {
  std::vector<double> t;
  t.reserve(samples_.size());
  for (const auto &s : samples_)
    t.push_back(s.t);
  return t;
}

double MovingWindow::spacing(double rel_tol) const {
  require(size() >= 2, "MovingWindow: spacing needs two samples");
  const double h = (*this)[1].t - (*this)[0].t;
  for (int j = 2; j < size(); ++j) {
    const double hj = (*this)[j].t - (*this)[j - 1].t;
    require(std::abs(hj - h) <= rel_tol * h, "MovingWindow: non-uniform spacing");
  }
  return h;
}

} // namespace adrom
