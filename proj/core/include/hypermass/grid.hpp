#pragma once

#include <span>
#include <vector>

namespace hypermass {

// Chart point on the sphere factor. For n = 2 this is (theta, phi); for
// rotationally symmetric data only the representative node is used.
struct SpherePoint {
  double theta = 0.5 * 3.141592653589793;
  double phi = 0.0;
};

class Grid {
 public:
  // Full latitude-longitude product: theta_j = (j + 1/2) pi / ntheta,
  // phi_k = 2 pi k / nphi.
  static Grid product(std::vector<double> r_nodes, int ntheta, int nphi);
  // Single sphere node, for x-independent data.
  static Grid radial(std::vector<double> r_nodes);
  static Grid uniform(double r_min, double r_max, int nr, int ntheta, int nphi);

  std::span<const double> r() const { return r_; }
  std::span<const SpherePoint> sphere() const { return sphere_; }
  int ntheta() const { return ntheta_; }
  int nphi() const { return nphi_; }
  double dtheta() const;
  double dphi() const;
  bool single_sphere_node() const { return ntheta_ == 0; }
  std::size_t size() const { return r_.size() * sphere_.size(); }
  double r_min() const { return r_.front(); }
  double r_max() const { return r_.back(); }
  bool contains(double r) const;

 private:
  Grid(std::vector<double> r, int ntheta, int nphi);

  std::vector<double> r_;
  std::vector<SpherePoint> sphere_;
  int ntheta_ = 0;
  int nphi_ = 0;
};

std::vector<double> linspace(double a, double b, int n);
std::vector<double> geomspace(double a, double b, int n);

}  // namespace hypermass
