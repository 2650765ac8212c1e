#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace stochphase {

/// Axis-aligned box in R^n.
struct Box {
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t dim() const { return lower.size(); }
  double width(std::size_t axis) const { return upper[axis] - lower[axis]; }
  bool contains(std::span<const double> x) const;
  /// Box grown by `fraction` of its width on each side of every axis.
  Box padded(double fraction) const;
  double volume() const;
};

using ParamTable = std::map<std::string, double>;

/// Ito SDE dX = f(X) dt + g(X) dW with X in R^n and W in R^k.
///
/// Immutable after construction; drift and diffusion evaluation are pure and
/// may be called concurrently.
class SdeModel {
 public:
  /// Writes n values (drift) or n*k row-major values (diffusion) into `out`.
  using Field = std::function<void(std::span<const double> x, std::span<double> out)>;
  /// Returns true where the model is not defined (e.g. a 1/R singularity).
  using SingularSet = std::function<bool(std::span<const double> x)>;

  SdeModel(std::string name, std::size_t dim, std::size_t noise_dim, Field drift,
           Field diffusion, Box domain_hint, ParamTable params = {},
           bool additive_noise = false, SingularSet singular = {});

  const std::string& name() const { return name_; }
  std::size_t dim() const { return dim_; }
  std::size_t noise_dim() const { return noise_dim_; }
  const Box& domain_hint() const { return domain_; }
  const ParamTable& params() const { return params_; }
  /// True when g does not depend on x; integrators may cache it.
  bool additive_noise() const { return additive_; }

  bool is_singular(std::span<const double> x) const { return singular_ && singular_(x); }

  void drift(std::span<const double> x, std::span<double> out) const { drift_(x, out); }
  void diffusion(std::span<const double> x, std::span<double> out) const { diffusion_(x, out); }

  Eigen::VectorXd drift_at(std::span<const double> x) const;
  /// n x k noise matrix g(x).
  Eigen::MatrixXd diffusion_at(std::span<const double> x) const;

  /// Copy of this model with a different domain hint.
  SdeModel with_domain(Box domain) const;

 private:
  std::string name_;
  std::size_t dim_;
  std::size_t noise_dim_;
  Field drift_;
  Field diffusion_;
  Box domain_;
  ParamTable params_;
  bool additive_;
  SingularSet singular_;
};

/// Diffusion tensor G = g g^T / 2 at x.
Eigen::MatrixXd diffusion_tensor(const SdeModel& model, std::span<const double> x);

// ---------------------------------------------------------------------------
// Registered models

struct HopfParams {
  double delta = 1.0;
  double beta = 0.5;
  double gamma = 4.0;
  double kappa = 1.0;
  double D = 0.01;

  void validate() const;
  /// Limit-cycle radius sqrt(delta/kappa); requires delta > 0.
  double cycle_radius() const;
};

struct SnicParams {
  double m = 1.03;
  double n = 1.0;
  double D = 0.01;

  void validate() const;
};

/// Radius of the excluded ball around the SNIC model's singular origin.
inline constexpr double kSnicOriginEpsilon = 1e-6;

struct MorrisLecarParams {
  double beta_m = -1.2;   // mV
  double gamma_m = 18.0;  // mV
  double beta_Y = -10.0;  // mV
  double gamma_Y = 10.0;  // mV
  double phi_Y = 0.15;
  double beta_Z = -21.0;  // mV
  double gamma_Z = 15.0;  // mV
  double phi_Z = 0.5;
  double E_Na = 50.0;     // mV
  double E_K = -100.0;    // mV
  double E_L = -70.0;     // mV
  double E_sub = 50.0;    // mV
  double g_fast = 20.0;   // mS/cm^2
  double g_Kdr = 20.0;    // mS/cm^2
  double g_sub = 2.0;     // mS/cm^2
  double g_L = 2.0;       // mS/cm^2
  double C = 1.0;         // uF/cm^2
  double I_ext = 29.0;    // uA/cm^2
  double D = 20.0;

  void validate() const;

  double m_inf(double V) const;
  double Y_inf(double V) const;
  double Z_inf(double V) const;
  double tau_Y(double V) const;
  double tau_Z(double V) const;
};

SdeModel hopf_model(const HopfParams& p, std::optional<Box> domain = std::nullopt);
SdeModel snic_model(const SnicParams& p, std::optional<Box> domain = std::nullopt);

/// 3D Morris-Lecar model with white current noise in the V equation. Without an
/// explicit domain the hint is fitted from a burn-in trajectory (see
/// fit_domain_from_burn_in in simulate.hpp).
SdeModel morris_lecar_model(const MorrisLecarParams& p, std::optional<Box> domain = std::nullopt);

/// Deterministic Hopf phase atan2(y,x) - (beta/kappa) log(r/R*), wrapped to [0, 2pi).
double deterministic_hopf_phase(std::span<const double> x, const HopfParams& p);

/// Builds a registered model from its key ("hopf", "snic", "ml3d") and a flat
/// parameter table. Unknown parameter names are a config error; missing ones
/// take the defaults above.
SdeModel make_model(const std::string& key, const ParamTable& params);

/// Parameter names accepted by make_model for `key`.
std::vector<std::string> model_parameter_names(const std::string& key);

}  // namespace stochphase
