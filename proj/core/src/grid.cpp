#include "hypermass/grid.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "hypermass/errors.hpp"

namespace hypermass {

namespace {
constexpr int kMinStencilNodes = 5;
}

Grid::Grid(std::vector<double> r, int ntheta, int nphi)
    : r_(std::move(r)), ntheta_(ntheta), nphi_(nphi) {
  if (r_.size() < static_cast<std::size_t>(kMinStencilNodes)) {
    fail(ErrorKind::range, "grid needs at least 5 radial nodes");
  }
  for (std::size_t i = 1; i < r_.size(); ++i) {
    if (!(r_[i] > r_[i - 1])) {
      fail(ErrorKind::range, "radial nodes must be strictly increasing (index " +
                                 std::to_string(i) + ")");
    }
  }
  if (r_.front() <= 0.0) fail(ErrorKind::range, "radial nodes must be positive");
  if (ntheta_ == 0) {
    sphere_.push_back(SpherePoint{});
    return;
  }
  if (ntheta_ < kMinStencilNodes || nphi_ < kMinStencilNodes) {
    fail(ErrorKind::range, "sphere grid needs at least 5 nodes per direction");
  }
  sphere_.reserve(static_cast<std::size_t>(ntheta_) * nphi_);
  for (int j = 0; j < ntheta_; ++j) {
    for (int k = 0; k < nphi_; ++k) {
      sphere_.push_back({(j + 0.5) * std::numbers::pi / ntheta_,
                         2.0 * std::numbers::pi * k / nphi_});
    }
  }
}

Grid Grid::product(std::vector<double> r_nodes, int ntheta, int nphi) {
  if (ntheta <= 0 || nphi <= 0) fail(ErrorKind::range, "sphere grid sizes must be positive");
  return Grid(std::move(r_nodes), ntheta, nphi);
}

Grid Grid::radial(std::vector<double> r_nodes) { return Grid(std::move(r_nodes), 0, 0); }

Grid Grid::uniform(double r_min, double r_max, int nr, int ntheta, int nphi) {
  if (!(r_max > r_min)) fail(ErrorKind::range, "r_max must exceed r_min");
  auto r = linspace(r_min, r_max, nr);
  return ntheta == 0 ? radial(std::move(r)) : product(std::move(r), ntheta, nphi);
}

double Grid::dtheta() const { return ntheta_ ? std::numbers::pi / ntheta_ : 0.0; }
double Grid::dphi() const { return nphi_ ? 2.0 * std::numbers::pi / nphi_ : 0.0; }

bool Grid::contains(double r) const {
  const double slack = 1e-12 * std::abs(r_.back());
  return r >= r_.front() - slack && r <= r_.back() + slack;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[i] = a + (b - a) * i / (n - 1);
  if (n > 0) out.back() = b;
  return out;
}

std::vector<double> geomspace(double a, double b, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  const double la = std::log(a), lb = std::log(b);
  for (int i = 0; i < n; ++i) out[i] = std::exp(la + (lb - la) * i / (n - 1));
  if (n > 0) {
    out.front() = a;
    out.back() = b;
  }
  return out;
}

}  // namespace hypermass
