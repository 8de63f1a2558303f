// Copyright 2026 The evsched Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <iterator>
#include <stdexcept>
#include <vector>

namespace evsched {

/// Continuous piecewise-linear function of one variable.
///
/// Stored as values at sorted breakpoints x_0 < ... < x_m plus the slopes of
/// the two unbounded end segments. There is always at least one breakpoint,
/// so an affine function is a single point with equal end slopes. Continuity
/// holds by construction; `stitch` reports the jump it had to absorb.
template <typename Scalar = double>
class PiecewiseLinear {
 public:
  /// Breakpoints closer than this are merged.
  static constexpr Scalar kMergeTol = Scalar(1e-12);

  PiecewiseLinear() : x_{Scalar(0)}, y_{Scalar(0)} {}

  PiecewiseLinear(std::vector<Scalar> x, std::vector<Scalar> y, Scalar left_slope,
                  Scalar right_slope)
      : x_(std::move(x)), y_(std::move(y)), left_slope_(left_slope), right_slope_(right_slope) {
    if (x_.empty() || x_.size() != y_.size()) {
      throw std::invalid_argument("piecewise linear: need matching, non-empty breakpoints");
    }
    for (std::size_t i = 1; i < x_.size(); ++i) {
      if (!(x_[i] > x_[i - 1])) {
        throw std::invalid_argument("piecewise linear: breakpoints must increase strictly");
      }
    }
  }

  static PiecewiseLinear constant(Scalar c) { return affine(c, Scalar(0)); }

  /// intercept + slope * v
  static PiecewiseLinear affine(Scalar intercept, Scalar slope) {
    return PiecewiseLinear({Scalar(0)}, {intercept}, slope, slope);
  }

  /// max(v - at, 0)
  static PiecewiseLinear hinge(Scalar at) {
    return PiecewiseLinear({at}, {Scalar(0)}, Scalar(0), Scalar(1));
  }

  Scalar operator()(Scalar v) const {
    if (v <= x_.front()) return y_.front() + left_slope_ * (v - x_.front());
    if (v >= x_.back()) return y_.back() + right_slope_ * (v - x_.back());
    const auto it = std::upper_bound(x_.begin(), x_.end(), v);
    const std::size_t i = static_cast<std::size_t>(it - x_.begin());
    const Scalar t = (v - x_[i - 1]) / (x_[i] - x_[i - 1]);
    return y_[i - 1] + t * (y_[i] - y_[i - 1]);
  }

  const std::vector<Scalar>& breakpoints() const { return x_; }
  const std::vector<Scalar>& values() const { return y_; }
  Scalar left_slope() const { return left_slope_; }
  Scalar right_slope() const { return right_slope_; }

  /// Slopes of all segments, left tail first, right tail last.
  std::vector<Scalar> segment_slopes() const {
    std::vector<Scalar> s;
    s.reserve(x_.size() + 1);
    s.push_back(left_slope_);
    for (std::size_t i = 1; i < x_.size(); ++i) {
      s.push_back((y_[i] - y_[i - 1]) / (x_[i] - x_[i - 1]));
    }
    s.push_back(right_slope_);
    return s;
  }

  Scalar min_slope() const {
    const auto s = segment_slopes();
    return *std::min_element(s.begin(), s.end());
  }
  Scalar max_slope() const {
    const auto s = segment_slopes();
    return *std::max_element(s.begin(), s.end());
  }

  PiecewiseLinear& operator*=(Scalar a) {
    for (auto& v : y_) v *= a;
    left_slope_ *= a;
    right_slope_ *= a;
    return *this;
  }

  PiecewiseLinear& operator+=(const PiecewiseLinear& o) { return *this = *this + o; }
  PiecewiseLinear& operator-=(const PiecewiseLinear& o) { return *this = *this - o; }

  friend PiecewiseLinear operator*(Scalar a, PiecewiseLinear f) { return f *= a; }
  friend PiecewiseLinear operator-(PiecewiseLinear f) { return f *= Scalar(-1); }

  friend PiecewiseLinear operator+(const PiecewiseLinear& f, const PiecewiseLinear& g) {
    return combine(f, g, Scalar(1));
  }
  friend PiecewiseLinear operator-(const PiecewiseLinear& f, const PiecewiseLinear& g) {
    return combine(f, g, Scalar(-1));
  }

  /// `left` for v < at, `right` for v >= at. The two pieces should agree at
  /// `at`; the value of `left` is kept there and |left(at) - right(at)| is
  /// written to `gap` when given.
  static PiecewiseLinear stitch(Scalar at, const PiecewiseLinear& left,
                                const PiecewiseLinear& right, Scalar* gap = nullptr) {
    if (gap) *gap = std::abs(left(at) - right(at));
    std::vector<Scalar> x;
    std::vector<Scalar> y;
    x.reserve(left.x_.size() + right.x_.size() + 1);
    y.reserve(x.capacity());
    for (std::size_t i = 0; i < left.x_.size() && left.x_[i] < at - kMergeTol; ++i) {
      x.push_back(left.x_[i]);
      y.push_back(left.y_[i]);
    }
    x.push_back(at);
    y.push_back(left(at));
    for (std::size_t i = 0; i < right.x_.size(); ++i) {
      if (right.x_[i] > at + kMergeTol) {
        x.push_back(right.x_[i]);
        y.push_back(right.y_[i]);
      }
    }
    return PiecewiseLinear(std::move(x), std::move(y), left.left_slope_, right.right_slope_);
  }

  /// Least v with f(v) = 0 for a nondecreasing f; throws if f never
  /// reaches zero.
  Scalar least_root() const {
    if (y_.front() >= Scalar(0)) {
      if (y_.front() == Scalar(0)) {
        if (left_slope_ == Scalar(0)) {
          throw std::domain_error("least_root: zero on an unbounded left segment");
        }
        return x_.front();
      }
      if (left_slope_ <= Scalar(0)) throw std::domain_error("least_root: no root on the left");
      return x_.front() - y_.front() / left_slope_;
    }
    for (std::size_t i = 1; i < x_.size(); ++i) {
      if (y_[i] >= Scalar(0)) {
        const Scalar t = -y_[i - 1] / (y_[i] - y_[i - 1]);
        return x_[i - 1] + t * (x_[i] - x_[i - 1]);
      }
    }
    if (right_slope_ <= Scalar(0)) throw std::domain_error("least_root: no root on the right");
    return x_.back() - y_.back() / right_slope_;
  }

  /// Drops breakpoints whose neighbouring slopes differ by at most `tol`.
  PiecewiseLinear& simplify(Scalar tol = Scalar(1e-13)) {
    if (x_.size() < 2) return *this;
    const auto s = segment_slopes();
    std::vector<Scalar> x;
    std::vector<Scalar> y;
    for (std::size_t i = 0; i < x_.size(); ++i) {
      // Slope entering breakpoint i from the last kept point.
      const Scalar in = x.empty() ? left_slope_ : (y_[i] - y.back()) / (x_[i] - x.back());
      const Scalar out = s[i + 1];
      if (std::abs(in - out) > tol) {
        x.push_back(x_[i]);
        y.push_back(y_[i]);
      }
    }
    if (x.empty()) {
      x.push_back(x_.front());
      y.push_back(y_.front());
    }
    x_ = std::move(x);
    y_ = std::move(y);
    return *this;
  }

 private:
  static PiecewiseLinear combine(const PiecewiseLinear& f, const PiecewiseLinear& g, Scalar sign) {
    std::vector<Scalar> x;
    x.reserve(f.x_.size() + g.x_.size());
    std::merge(f.x_.begin(), f.x_.end(), g.x_.begin(), g.x_.end(), std::back_inserter(x));
    std::vector<Scalar> merged;
    merged.reserve(x.size());
    for (Scalar v : x) {
      if (merged.empty() || v - merged.back() > kMergeTol) merged.push_back(v);
    }
    std::vector<Scalar> y(merged.size());
    for (std::size_t i = 0; i < merged.size(); ++i) y[i] = f(merged[i]) + sign * g(merged[i]);
    return PiecewiseLinear(std::move(merged), std::move(y), f.left_slope_ + sign * g.left_slope_,
                           f.right_slope_ + sign * g.right_slope_);
  }

  std::vector<Scalar> x_;
  std::vector<Scalar> y_;
  Scalar left_slope_ = Scalar(0);
  Scalar right_slope_ = Scalar(0);
};

}  // namespace evsched
