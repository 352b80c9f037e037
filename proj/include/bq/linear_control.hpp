#pragma once

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "bq/flows.hpp"
#include "bq/spectral.hpp"

namespace bq {

// Midpoint cells of width 1/samples on [0, 1].
struct ControlClock {
  int samples = 512;
  double node(int i) const { return (i + 0.5) / samples; }
  double weight() const { return 1.0 / samples; }
};

// Backward flow maps of the generating field, y -> U(y, 1, s), stored on the
// grid at every clock node and every cell edge.
class TransportedModes {
 public:
  TransportedModes(int n, const GeneratingField& field, const ControlClock& clock, int substeps = 2);

  int n() const { return n_; }
  const ControlClock& clock() const { return clock_; }
  const GeneratingField& field() const { return field_; }

  // Foot at half-node k, time k / (2 S): odd k are nodes, even k are edges.
  TorusPoint foot(int half_node, std::size_t point) const;
  TorusPoint node_foot(int sample, std::size_t point) const { return foot(2 * sample + 1, point); }
  // e_j at the feet of a half-node.
  std::vector<double> base_grid(int half_node, int j) const;

  // The twelve mode families in the moving frame, in enumeration order:
  // 0..3 transported modes at the node, 4..7 their x1-antiderivatives averaged
  // over the cell edges, 8..11 the edge difference of those antiderivatives
  // divided by the cell width.
  std::array<SpectralField, 12> family(int sample) const;

 private:
  int n_;
  GeneratingField field_;
  ControlClock clock_;
  std::vector<double> feet_;  // [half node][point][2]
};

// Integral over [0, 1] of source(x + (D(s) - D(1)) e2, s).
SpectralField transport_vertical(const ConvectionStrategy& c, const std::function<SpectralField(double)>& source,
                                 const ControlClock& clock);
// Integral over [0, 1] of source(U(x, 1, s), s), source given pointwise.
SpectralField transport_generating(const TransportedModes& modes,
                                   const std::function<double(TorusPoint, double)>& source);

enum class TimeBasis { PiecewiseConstant, Hat };

struct SynthesisOptions {
  int bins = 64;
  double ridge = 1e-8;
  int k_cut = 21;
  TimeBasis basis = TimeBasis::PiecewiseConstant;
  int fit_norm = 0;              // Sobolev index used as row weight
  bool ignore_line_means = false;  // drop k1 = 0 rows
};

struct H0Control {
  TimeBasis basis = TimeBasis::PiecewiseConstant;
  int bins = 0;
  Eigen::MatrixXd alpha;  // basis functions x 4

  std::array<double, 4> value(double s) const;
  std::array<double, 4> derivative(double s) const;  // hat basis only
  int basis_count() const { return static_cast<int>(alpha.rows()); }
};

struct SynthesisReport {
  H0Control control;
  SpectralField endpoint;  // z(., 1) produced by the control
  double residual_l2 = 0.0;
  double residual_hm = 0.0;
  double target_l2 = 0.0;
  double target_hm = 0.0;
  double condition = 0.0;
};

// Least-squares fit of bin-localized H0 controls steering z_t + u.grad z = g
// from 0 to a target. Columns and their SVD are built once.
class TransportSynthesizer {
 public:
  TransportSynthesizer(const TransportedModes& modes, const SynthesisOptions& opt);

  SynthesisReport fit(const SpectralField& target, int report_norm = 2) const;
  SpectralField endpoint(const H0Control& c) const;
  const SynthesisOptions& options() const { return opt_; }
  double condition() const;

 private:
  Eigen::VectorXd rows_of(const SpectralField& f) const;

  const TransportedModes& modes_;
  SynthesisOptions opt_;
  std::vector<SpectralField> columns_;
  std::vector<std::array<int, 2>> row_modes_;
  std::vector<double> row_weights_;
  Eigen::BDCSVD<Eigen::MatrixXd> svd_;
};

// Temporal window equal to 1 on [width, 1 - width] and 0 at both ends.
struct Taper {
  double width = 0.02;
  double value(double s) const;
  double derivative(double s) const;
};

struct AssemblyOptions {
  SynthesisOptions temperature{64, 1e-8, 21, TimeBasis::PiecewiseConstant, 0, false};
  SynthesisOptions vorticity{64, 1e-8, 21, TimeBasis::Hat, 0, true};
  double taper_width = 0.02;
};

// Coupled control g = sum_l alpha_l(s) M_l(x - D(s) e2, s) for the linear
// inviscid problem driven along the convection strategy.
struct NonlocalControl {
  ControlClock clock;
  std::vector<std::array<double, 12>> alpha;  // per clock node
  std::vector<SpectralField> combined;        // moving-frame field per node

  SpectralField theta_end;  // achieved theta(., 1)
  SpectralField v_end;      // achieved v(., 1)
  SpectralField theta_hat_end, v_hat_end;
  SpectralField theta_tilde_end, v_tilde_end;
  double theta_residual = 0.0;  // relative, H^m
  double v_residual = 0.0;      // relative, H^(m-1)
  double taper_perturbation = 0.0;
  double tilde_profile_norm = 0.0;

  // g(., s) on the fixed frame.
  SpectralField field(const ConvectionStrategy& c, int sample) const;
};

class CoupledAssembler {
 public:
  CoupledAssembler(const TransportedModes& modes, const AssemblyOptions& opt);

  NonlocalControl assemble(const SpectralField& v1, const SpectralField& theta1, int m = 2) const;
  const TransportedModes& modes() const { return modes_; }

 private:
  const TransportedModes& modes_;
  AssemblyOptions opt_;
  TransportSynthesizer temperature_;
  TransportSynthesizer vorticity_;
};

// theta(1) and v(1) in the moving frame for profiles g_u(s):
// theta = int g_u, v = int (1 - s) d1 g_u.
std::array<SpectralField, 2> moving_frame_endpoint(const std::vector<SpectralField>& combined,
                                                   const ControlClock& clock);

void write_synthesis_report(const std::string& path, const std::vector<std::pair<std::string, SynthesisReport>>& rows,
                            const SynthesisOptions& opt);
void write_coefficients_csv(const std::string& path, const NonlocalControl& g);

}  // namespace bq
