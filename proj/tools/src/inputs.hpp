#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "hypermass/brane_action.hpp"
#include "hypermass/conformal_yamabe.hpp"
#include "hypermass/metric.hpp"
#include "json.hpp"

namespace hypermass::cli {

// Warped metric file plus its sampling grid.
struct WarpedInput {
  RadialMetricSpec metric;
  double r_max = 0.0;
  int nr = 16;
  int ntheta = 8;
  int nphi = 8;
  bool geometric = false;

  Grid grid() const;
  // Sphere nodes for the deformation checks.
  Grid sphere() const;
};

// grid overrides nr, ntheta, nphi; seed drives the "random" field kinds.
WarpedInput warped_input(const nlohmann::json& j, std::span<const int> grid, std::uint64_t seed);

// n = 2 metric with smooth random f, cutoff psi and alpha.
RadialMetricSpec random_warped_metric(std::mt19937_64& rng, double R, double amplitude);

struct SurplusBump {
  double amplitude = 0.0;
  double center = 1.0;
  double width = 0.5;
  double tilt = 0.0;
};

// sum of amplitude tanh(t)^(d+2) exp(-((t - center) / width)^2) (1 + tilt cos^2 theta)
std::function<double(double, double)> surplus_field(int d, std::vector<SurplusBump> bumps);

// Compactified metric file.
struct CompactInput {
  int d = 3;
  CompactMetricPtr metric;
  int quadrature_nodes = 16;
  YamabeGridSpec grid;
  BoundaryOptions boundary;
  YamabeOptions yamabe;
  double shift_tol = 1e-3;
  std::vector<SurplusBump> surplus;

  SphereQuadrature sphere() const;
};

// grid overrides ns, ntheta (Yamabe grid and quadrature).
CompactInput compact_input(const nlohmann::json& j, std::span<const int> grid);

struct CuspInput {
  CuspModel model;
  TorusGrid grid;
  double t0 = 0.0;
  std::vector<double> taus;
};

// grid overrides the torus counts axis by axis.
CuspInput cusp_input(const nlohmann::json& j, std::span<const int> grid);

// Last column of a CSV with header, one row per torus node in grid order.
std::vector<double> read_surface(const std::filesystem::path& path, std::size_t size);

RicciProbeOptions ricci_input(const nlohmann::json& j, std::span<const int> grid);

}  // namespace hypermass::cli
