#pragma once

// Reverse-mode automatic differentiation on a Wengert tape.
//
// Var is a value plus an optional node id on the thread's active Tape.
// Every primitive records at most one node (two parent slots with
// precomputed local partials), so the backward pass is a single reverse
// sweep over a flat array. The tape is rebuilt every optimization step;
// clear() keeps capacity so steady-state runs allocation-free.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace graspd::diff {

struct Var;

class Tape {
 public:
  static constexpr std::int32_t kNone = -1;

  Tape() {
    prev_ = active_;
    active_ = this;
  }
  ~Tape() { active_ = prev_; }

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active() { return active_; }

  // Drops all nodes but keeps capacity; previously created Vars become invalid.
  void clear() {
    p0_.clear();
    p1_.clear();
    w0_.clear();
    w1_.clear();
  }

  std::size_t size() const { return p0_.size(); }

  std::int32_t record_leaf() {
    return push(kNone, 0.0, kNone, 0.0);
  }
  std::int32_t record(std::int32_t p0, double w0) {
    return push(p0, w0, kNone, 0.0);
  }
  std::int32_t record(std::int32_t p0, double w0, std::int32_t p1, double w1) {
    return push(p0, w0, p1, w1);
  }

  Var input(double value);

  // Reverse sweep seeding d(output)/d(output) = 1. adjoints[i] ends up as
  // d(output)/d(node i) for every node recorded no later than output.
  void backward(std::int32_t output, std::vector<double>& adjoints) const {
    if (output < 0 || static_cast<std::size_t>(output) >= size())
      throw std::invalid_argument("Tape::backward: output is not recorded on this tape");
    adjoints.assign(size(), 0.0);
    adjoints[output] = 1.0;
    for (std::int32_t i = output; i >= 0; --i) {
      const double a = adjoints[i];
      if (a == 0.0) continue;
      if (p0_[i] >= 0) adjoints[p0_[i]] += a * w0_[i];
      if (p1_[i] >= 0) adjoints[p1_[i]] += a * w1_[i];
    }
  }

  std::vector<double> backward(std::int32_t output) const {
    std::vector<double> adjoints;
    backward(output, adjoints);
    return adjoints;
  }

 private:
  std::int32_t push(std::int32_t p0, double w0, std::int32_t p1, double w1) {
    const auto id = static_cast<std::int32_t>(p0_.size());
    p0_.push_back(p0);
    p1_.push_back(p1);
    w0_.push_back(w0);
    w1_.push_back(w1);
    return id;
  }

  // Structure-of-arrays keeps the backward sweep cache-friendly.
  std::vector<std::int32_t> p0_, p1_;
  std::vector<double> w0_, w1_;

  Tape* prev_;
  static thread_local Tape* active_;
};

inline thread_local Tape* Tape::active_ = nullptr;

// Scalar with an optional tape node. Plain doubles convert implicitly to
// constants (idx < 0), so mixed arithmetic records only real dependencies.
struct Var {
  double v = 0.0;
  std::int32_t idx = Tape::kNone;

  Var() = default;
  Var(double value) : v(value) {}  // NOLINT: implicit constant
  Var(double value, std::int32_t id) : v(value), idx(id) {}

  double value() const { return v; }
  bool on_tape() const { return idx >= 0; }
};

inline Var Tape::input(double value) { return Var(value, record_leaf()); }

namespace detail {

inline std::int32_t record1(std::int32_t p, double w) {
  return Tape::active()->record(p, w);
}

// Records a node for whichever operands are live; constant-only folds away.
inline Var make(double value, const Var& a, double da, const Var& b, double db) {
  if (a.on_tape() && b.on_tape())
    return Var(value, Tape::active()->record(a.idx, da, b.idx, db));
  if (a.on_tape()) return Var(value, record1(a.idx, da));
  if (b.on_tape()) return Var(value, record1(b.idx, db));
  return Var(value);
}

inline Var make(double value, const Var& a, double da) {
  if (a.on_tape()) return Var(value, record1(a.idx, da));
  return Var(value);
}

}  // namespace detail

inline Var operator+(const Var& a, const Var& b) {
  return detail::make(a.v + b.v, a, 1.0, b, 1.0);
}
inline Var operator-(const Var& a, const Var& b) {
  return detail::make(a.v - b.v, a, 1.0, b, -1.0);
}
inline Var operator*(const Var& a, const Var& b) {
  return detail::make(a.v * b.v, a, b.v, b, a.v);
}
inline Var operator/(const Var& a, const Var& b) {
  const double inv = 1.0 / b.v;
  return detail::make(a.v * inv, a, inv, b, -a.v * inv * inv);
}
inline Var operator-(const Var& a) { return detail::make(-a.v, a, -1.0); }

inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator-=(Var& a, const Var& b) { return a = a - b; }
inline Var& operator*=(Var& a, const Var& b) { return a = a * b; }
inline Var& operator/=(Var& a, const Var& b) { return a = a / b; }

inline bool operator<(const Var& a, const Var& b) { return a.v < b.v; }
inline bool operator>(const Var& a, const Var& b) { return a.v > b.v; }
inline bool operator<=(const Var& a, const Var& b) { return a.v <= b.v; }
inline bool operator>=(const Var& a, const Var& b) { return a.v >= b.v; }

inline Var sin(const Var& x) { return detail::make(std::sin(x.v), x, std::cos(x.v)); }
inline Var cos(const Var& x) { return detail::make(std::cos(x.v), x, -std::sin(x.v)); }
inline Var exp(const Var& x) {
  const double e = std::exp(x.v);
  return detail::make(e, x, e);
}
inline Var log(const Var& x) { return detail::make(std::log(x.v), x, 1.0 / x.v); }

// Derivative at 0 is defined as 0: ‖v_t‖ shows up with v_t = 0 routinely and
// the true derivative would be NaN.
inline Var sqrt(const Var& x) {
  const double s = std::sqrt(x.v);
  return detail::make(s, x, s > 0.0 ? 0.5 / s : 0.0);
}

inline Var abs(const Var& x) {
  return detail::make(std::abs(x.v), x, x.v > 0.0 ? 1.0 : (x.v < 0.0 ? -1.0 : 0.0));
}

// min/max differentiate through the chosen branch only (ties go to `a`).
// When the winner is a constant but the loser is on the tape, a zero-weight
// node keeps the result differentiable (with derivative 0) instead of
// silently degrading to a constant.
namespace detail {
inline Var pick(double value, const Var& chosen, const Var& other) {
  if (chosen.on_tape()) return make(value, chosen, 1.0);
  if (other.on_tape()) return make(value, other, 0.0);
  return Var(value);
}
}  // namespace detail

inline Var min(const Var& a, const Var& b) {
  return a.v <= b.v ? detail::pick(a.v, a, b) : detail::pick(b.v, b, a);
}
inline Var max(const Var& a, const Var& b) {
  return a.v >= b.v ? detail::pick(a.v, a, b) : detail::pick(b.v, b, a);
}

inline Var clamp(const Var& x, double lo, double hi) {
  if (x.v < lo) return detail::make(lo, x, 0.0);
  if (x.v > hi) return detail::make(hi, x, 0.0);
  return x;
}

// min(x, 0) whose recorded derivative is alpha (instead of 0) on the x >= 0
// branch, so gradient keeps flowing through inactive contacts.
inline Var leaky_min_zero(const Var& x, double alpha) {
  if (alpha < 0.0 || alpha > 1.0)
    throw std::invalid_argument("leaky_min_zero: alpha must lie in [0,1]");
  if (x.v < 0.0) return detail::make(x.v, x, 1.0);
  return detail::make(0.0, x, alpha);
}

// --- double overloads so numeric kernels can be written once and ---
// --- instantiated with T = double for derivative-free evaluation. ---

inline double value_of(double x) { return x; }
inline double value_of(const Var& x) { return x.v; }

inline double clamp(double x, double lo, double hi) {
  return x < lo ? lo : (x > hi ? hi : x);
}
inline double leaky_min_zero(double x, double alpha) {
  if (alpha < 0.0 || alpha > 1.0)
    throw std::invalid_argument("leaky_min_zero: alpha must lie in [0,1]");
  return x < 0.0 ? x : 0.0;
}

}  // namespace graspd::diff

// Generic numeric code throughout the library is written against an unqualified
// scalar vocabulary; pulling both the double and Var overloads into graspd::
// lets the same kernel instantiate either way.
namespace graspd {
using diff::Tape;
using diff::Var;

using std::abs;
using std::cos;
using std::exp;
using std::max;
using std::min;
using std::sin;
using std::sqrt;

using diff::abs;
using diff::clamp;
using diff::cos;
using diff::exp;
using diff::leaky_min_zero;
using diff::max;
using diff::min;
using diff::sin;
using diff::sqrt;
using diff::value_of;
}  // namespace graspd
