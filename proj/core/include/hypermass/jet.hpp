#pragma once

#include <array>
#include <cmath>

namespace hypermass {

// Second-order forward-mode jet in N independent variables: value, gradient
// and the upper triangle of the Hessian.
template <int N>
struct Jet {
  static constexpr int kHess = N * (N + 1) / 2;

  double v = 0.0;
  std::array<double, N> g{};
  std::array<double, kHess> h{};

  Jet() = default;
  Jet(double value) : v(value) {}  // NOLINT(google-explicit-constructor)

  static Jet variable(double value, int index) {
    Jet j(value);
    j.g[index] = 1.0;
    return j;
  }

  static constexpr int idx(int i, int j) {
    if (i > j) {
      const int t = i;
      i = j;
      j = t;
    }
    return i * N - i * (i - 1) / 2 + (j - i);
  }

  double d(int i) const { return g[i]; }
  double dd(int i, int j) const { return h[idx(i, j)]; }

  Jet& operator+=(const Jet& o) {
    v += o.v;
    for (int i = 0; i < N; ++i) g[i] += o.g[i];
    for (int k = 0; k < kHess; ++k) h[k] += o.h[k];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    v -= o.v;
    for (int i = 0; i < N; ++i) g[i] -= o.g[i];
    for (int k = 0; k < kHess; ++k) h[k] -= o.h[k];
    return *this;
  }
  Jet& operator*=(double s) {
    v *= s;
    for (auto& x : g) x *= s;
    for (auto& x : h) x *= s;
    return *this;
  }
  Jet& operator*=(const Jet& o) { return *this = *this * o; }
  Jet& operator/=(const Jet& o) { return *this = *this / o; }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator-(Jet a) { return a *= -1.0; }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator+(Jet a, double s) {
    a.v += s;
    return a;
  }
  friend Jet operator+(double s, Jet a) { return a + s; }
  friend Jet operator-(Jet a, double s) {
    a.v -= s;
    return a;
  }
  friend Jet operator-(double s, const Jet& a) { return -a + s; }
  friend Jet operator/(Jet a, double s) { return a *= 1.0 / s; }

  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r(a.v * b.v);
    for (int i = 0; i < N; ++i) r.g[i] = a.g[i] * b.v + a.v * b.g[i];
    for (int i = 0; i < N; ++i) {
      for (int j = i; j < N; ++j) {
        const int k = idx(i, j);
        r.h[k] = a.h[k] * b.v + a.v * b.h[k] + a.g[i] * b.g[j] + a.g[j] * b.g[i];
      }
    }
    return r;
  }

  friend Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }
  friend Jet operator/(double s, const Jet& b) { return reciprocal(b) * s; }

  // Chain rule for a scalar function with derivatives f0, f1, f2 at x.v.
  static Jet compose(const Jet& x, double f0, double f1, double f2) {
    Jet r(f0);
    for (int i = 0; i < N; ++i) r.g[i] = f1 * x.g[i];
    for (int i = 0; i < N; ++i) {
      for (int j = i; j < N; ++j) {
        const int k = idx(i, j);
        r.h[k] = f1 * x.h[k] + f2 * x.g[i] * x.g[j];
      }
    }
    return r;
  }

  friend Jet reciprocal(const Jet& x) {
    const double inv = 1.0 / x.v;
    return compose(x, inv, -inv * inv, 2.0 * inv * inv * inv);
  }
  friend Jet sin(const Jet& x) {
    const double s = std::sin(x.v), c = std::cos(x.v);
    return compose(x, s, c, -s);
  }
  friend Jet cos(const Jet& x) {
    const double s = std::sin(x.v), c = std::cos(x.v);
    return compose(x, c, -s, -c);
  }
  friend Jet exp(const Jet& x) {
    const double e = std::exp(x.v);
    return compose(x, e, e, e);
  }
  friend Jet log(const Jet& x) {
    return compose(x, std::log(x.v), 1.0 / x.v, -1.0 / (x.v * x.v));
  }
  friend Jet sqrt(const Jet& x) {
    const double s = std::sqrt(x.v);
    return compose(x, s, 0.5 / s, -0.25 / (s * x.v));
  }
  friend Jet tanh(const Jet& x) {
    const double t = std::tanh(x.v);
    const double s = 1.0 - t * t;
    return compose(x, t, s, -2.0 * t * s);
  }
  friend Jet sinh(const Jet& x) {
    const double s = std::sinh(x.v), c = std::cosh(x.v);
    return compose(x, s, c, s);
  }
  friend Jet cosh(const Jet& x) {
    const double s = std::sinh(x.v), c = std::cosh(x.v);
    return compose(x, c, s, c);
  }
  friend Jet pow(const Jet& x, double p) {
    const double a = std::pow(x.v, p - 2.0);
    return compose(x, a * x.v * x.v, p * a * x.v, p * (p - 1.0) * a);
  }
};

using Jet3 = Jet<3>;

}  // namespace hypermass
