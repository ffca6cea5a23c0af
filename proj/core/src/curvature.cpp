#include "hypermass/curvature.hpp"

#include <Eigen/Dense>

#include "hypermass/errors.hpp"

namespace hypermass {

template <int D>
Curvature<D> curvature_from_jets(const MetricJets<D>& m) {
  Eigen::Matrix<double, D, D> g;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) g(i, j) = m.g[i][j];
  Eigen::FullPivLU<Eigen::Matrix<double, D, D>> lu(g);
  if (!lu.isInvertible()) fail(ErrorKind::degenerate_metric, "singular metric in curvature evaluation");
  const Eigen::Matrix<double, D, D> gi = lu.inverse();

  Curvature<D> out;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) out.inverse[i][j] = gi(i, j);

  // first kind: gamma1[k][i][j] = Gamma_{k ij}
  std::array<std::array<std::array<double, D>, D>, D> gamma1{};
  for (int k = 0; k < D; ++k)
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j)
        gamma1[k][i][j] = 0.5 * (m.dg[i][k][j] + m.dg[j][k][i] - m.dg[k][i][j]);

  auto& gamma2 = out.christoffel;
  for (int k = 0; k < D; ++k)
    for (int i = 0; i < D; ++i)
      for (int j = i; j < D; ++j) {
        double s = 0.0;
        for (int l = 0; l < D; ++l) s += gi(k, l) * gamma1[l][i][j];
        gamma2[k][i][j] = gamma2[k][j][i] = s;
      }

  // dgamma2[a][k][i][j] = d_a Gamma^k_ij
  //   = g^{kl} (d_a Gamma_{l ij} - d_a g_{lb} Gamma^b_ij)
  std::array<std::array<std::array<std::array<double, D>, D>, D>, D> dgamma2;
  for (int a = 0; a < D; ++a)
    for (int i = 0; i < D; ++i)
      for (int j = i; j < D; ++j) {
        std::array<double, D> t{};
        for (int l = 0; l < D; ++l) {
          double v = 0.5 * (m.ddg[a][i][l][j] + m.ddg[a][j][l][i] - m.ddg[a][l][i][j]);
          for (int b = 0; b < D; ++b) v -= m.dg[a][l][b] * gamma2[b][i][j];
          t[l] = v;
        }
        for (int k = 0; k < D; ++k) {
          double s = 0.0;
          for (int l = 0; l < D; ++l) s += gi(k, l) * t[l];
          dgamma2[a][k][i][j] = dgamma2[a][k][j][i] = s;
        }
      }

  double scalar = 0.0;
  for (int i = 0; i < D; ++i)
    for (int j = i; j < D; ++j) {
      double r = 0.0;
      for (int k = 0; k < D; ++k) {
        r += dgamma2[k][k][i][j] - dgamma2[j][k][i][k];
        for (int l = 0; l < D; ++l) {
          r += gamma2[k][k][l] * gamma2[l][i][j] - gamma2[k][j][l] * gamma2[l][i][k];
        }
      }
      out.ricci[i][j] = out.ricci[j][i] = r;
      scalar += (i == j ? 1.0 : 2.0) * gi(i, j) * r;
    }
  out.scalar = scalar;
  return out;
}

template Curvature<2> curvature_from_jets<2>(const MetricJets<2>&);
template Curvature<3> curvature_from_jets<3>(const MetricJets<3>&);
template Curvature<4> curvature_from_jets<4>(const MetricJets<4>&);
template Curvature<5> curvature_from_jets<5>(const MetricJets<5>&);
template Curvature<6> curvature_from_jets<6>(const MetricJets<6>&);
template Curvature<7> curvature_from_jets<7>(const MetricJets<7>&);

}  // namespace hypermass
