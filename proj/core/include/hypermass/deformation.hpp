#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hypermass/fields.hpp"
#include "hypermass/grid.hpp"
#include "hypermass/jet.hpp"
#include "hypermass/metric.hpp"

namespace hypermass {

// Constants of the corner-rounding deformation. Masses are absolute values of
// the (negative) mass aspect.
struct DeformationPlan {
  int n = 2;
  double R = 1.0;
  double R1 = 2.0;
  double lambda = 1.0;
  double a = 1.0;
  double excess = 0.0;       // 1/a - 1, kept separately for precision
  double inv_a_lower = 0.0;  // admissible open interval for 1/a - 1
  double inv_a_upper = 0.0;
  double alpha_bound = 0.0;     // Lambda
  double alpha_observed = 0.0;  // measured bound on the sampled alpha jets
  double mu_max = 0.0;
  double mu_min = 0.0;
  double cutoff_b = 0.0;
  double cutoff_c = 0.0;
  double safety = 2.0;
  double envelope = 0.0;  // constant level of the error envelope A below 8 lambda R1

  double scaled(double k) const { return k * lambda * R1; }
};

// (mu_max / mu_min)^(1/(n+1)) for absolute mass aspect bounds.
double deformation_scale(int n, double mu_max, double mu_min);

// Derives lambda, a and the cutoff constants for a given R1. mass_aspect holds
// signed samples of tr k; they must be strictly negative.
DeformationPlan plan_deformation(int n, double R, std::span<const double> mass_aspect,
                                 double alpha_bound, double R1);

// All radial functions of the construction at one value of |mu|.
template <class T>
struct RadialState {
  T inner = 0.0;         // r^(n+1) + P - A1 / r, P the |mu| psi terms
  T inner_r = 0.0;
  T outer = 0.0;         // r^(n+1) / a
  T outer_r = 0.0;
  T gap = 0.0;           // inner - outer
  T gap_r = 0.0;
  T blend_rate = 0.0;    // bump / (inner - outer)
  T blend = 0.0;         // 1 at R1, 0 beyond 6 lambda R1
  T potential = 0.0;     // blended potential
  T potential_r = 0.0;
  T warp = 0.0;          // f
  T warp_r = 0.0;
};

class Deformation {
 public:
  explicit Deformation(DeformationPlan plan);

  const DeformationPlan& plan() const { return plan_; }

  RadialJet cutoff(double r) const;
  double bump_pair(double r) const;
  // Integral of bump_pair from R1 to r.
  double bump_pair_integral(double r) const;
  RadialJet envelope(double r) const;            // A, A'
  RadialJet envelope_primitive(double r) const;  // A1, A1'

  RadialState<double> state(double mu_abs, double r) const;
  // f with sphere derivatives through the chain rule in |mu|.
  FieldJet warp_jet(const FieldJet& mu_abs, double r) const;

 private:
  template <class T>
  RadialState<T> evaluate(const T& mu, double r) const;
  template <class T>
  T rate_integral(const T& mu, double lo, double hi) const;

  DeformationPlan plan_;
  double taper_integral_ = 0.0;
};

using DeformationPtr = std::shared_ptr<const Deformation>;

// The deformed metric g_{f, psi}: same alpha, constructed f and cutoff psi.
RadialMetricSpec deformed_metric(DeformationPtr d, const RadialMetricSpec& original);

struct DeformationOptions {
  double r1_hint = 0.0;  // 0 selects 2 R
  double safety = 2.0;
  double max_safety = 8.0;
  double max_r1_factor = 1024.0;
  double alpha_bound = 0.0;  // 0 selects the observed bound
  double tol_rel = 1e-6;
  int radial_nodes = 320;
  int envelope_radii = 96;
};

struct NodeRef {
  double r = 0.0;
  double theta = 0.0;
  double phi = 0.0;
};

struct CheckRecord {
  std::string name;
  bool pass = true;
  double margin = 0.0;  // min over nodes of (allowed - observed)
  double tolerance = 0.0;
  NodeRef worst;
};

struct VerificationReport {
  DeformationPlan plan;
  std::vector<CheckRecord> checks;
  double glue_radius_observed = 0.0;  // first node beyond which f = 1/a to 1e-12
  struct Row {
    NodeRef node;
    double scalar = 0.0;
    double chain = 0.0;  // S + (n / r^n) eta'
    double bound_margin = 0.0;
  };
  std::vector<Row> margins;

  bool pass() const;
  const CheckRecord* find(const std::string& name) const;
};

struct EscalationStep {
  double R1 = 0.0;
  double safety = 0.0;
  std::string failed;  // empty when accepted
};

struct DeformationResult {
  DeformationPtr deformation;
  RadialMetricSpec metric;
  VerificationReport report;
  std::vector<EscalationStep> history;
};

// Radii used for verification: log-spaced from R to 10 lambda R1 plus the band edges.
std::vector<double> verification_radii(const DeformationPlan& plan, int count);

// Full construction with R1 and safety escalation, ending with verify_deformation.
DeformationResult build_deformation(const RadialMetricSpec& original, const Grid& sphere,
                                    DeformationOptions opts = {});

VerificationReport verify_deformation(const DeformationPtr& d, const RadialMetricSpec& original,
                                      const Grid& sphere, DeformationOptions opts = {});

struct FunctionSample {
  double r, psi, bump, blend, inner, outer, potential, f, envelope_primitive;
};
// Radial function dump at one value of |mu|.
std::vector<FunctionSample> sample_functions(const Deformation& d, double mu_abs,
                                             std::span<const double> radii);

}  // namespace hypermass
