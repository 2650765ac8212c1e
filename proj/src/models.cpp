#include "stochphase/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "stochphase/errors.hpp"
#include "stochphase/simulate.hpp"

namespace stochphase {

bool Box::contains(std::span<const double> x) const {
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (x[i] < lower[i] || x[i] > upper[i]) return false;
  }
  return true;
}

Box Box::padded(double fraction) const {
  Box b = *this;
  for (std::size_t i = 0; i < lower.size(); ++i) {
    const double w = width(i) * fraction;
    b.lower[i] -= w;
    b.upper[i] += w;
  }
  return b;
}

double Box::volume() const {
  double v = 1.0;
  for (std::size_t i = 0; i < lower.size(); ++i) v *= width(i);
  return v;
}

SdeModel::SdeModel(std::string name, std::size_t dim, std::size_t noise_dim, Field drift,
                   Field diffusion, Box domain_hint, ParamTable params, bool additive_noise,
                   SingularSet singular)
    : name_(std::move(name)),
      dim_(dim),
      noise_dim_(noise_dim),
      drift_(std::move(drift)),
      diffusion_(std::move(diffusion)),
      domain_(std::move(domain_hint)),
      params_(std::move(params)),
      additive_(additive_noise),
      singular_(std::move(singular)) {
  if (dim_ == 0) throw config_error("model", "model dimension must be positive");
  if (noise_dim_ < 1) throw config_error("model", "noise dimension must be at least 1");
  if (domain_.dim() != dim_ || domain_.upper.size() != dim_) {
    throw config_error("model", "domain hint dimension does not match the model");
  }
  for (std::size_t i = 0; i < dim_; ++i) {
    if (!(domain_.width(i) > 0.0)) throw config_error("model", "degenerate domain hint");
  }
}

Eigen::VectorXd SdeModel::drift_at(std::span<const double> x) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(dim_));
  drift_(x, std::span<double>(out.data(), dim_));
  return out;
}

Eigen::MatrixXd SdeModel::diffusion_at(std::span<const double> x) const {
  std::vector<double> buf(dim_ * noise_dim_);
  diffusion_(x, buf);
  Eigen::MatrixXd g(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(noise_dim_));
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = 0; j < noise_dim_; ++j) g(i, j) = buf[i * noise_dim_ + j];
  return g;
}

SdeModel SdeModel::with_domain(Box domain) const {
  SdeModel copy = *this;
  if (domain.dim() != dim_) throw config_error("model", "domain dimension mismatch");
  copy.domain_ = std::move(domain);
  return copy;
}

Eigen::MatrixXd diffusion_tensor(const SdeModel& model, std::span<const double> x) {
  const Eigen::MatrixXd g = model.diffusion_at(x);
  Eigen::MatrixXd G = 0.5 * g * g.transpose();
  return 0.5 * (G + G.transpose());
}

// ---------------------------------------------------------------------------

void HopfParams::validate() const {
  if (!(kappa > 0.0)) throw config_error("params", "hopf: kappa must be positive");
  if (!(D >= 0.0)) throw config_error("params", "hopf: D must be nonnegative");
}

double HopfParams::cycle_radius() const {
  if (!(delta > 0.0)) throw config_error("params", "hopf: no limit cycle for delta <= 0");
  return std::sqrt(delta / kappa);
}

void SnicParams::validate() const {
  if (!(n > 0.0)) throw config_error("params", "snic: n must be positive");
  if (!(D >= 0.0)) throw config_error("params", "snic: D must be nonnegative");
}

void MorrisLecarParams::validate() const {
  if (!(C > 0.0)) throw config_error("params", "ml3d: C must be positive");
  if (g_fast < 0 || g_Kdr < 0 || g_sub < 0 || g_L < 0)
    throw config_error("params", "ml3d: conductances must be nonnegative");
  if (!(D >= 0.0)) throw config_error("params", "ml3d: D must be nonnegative");
  if (gamma_m == 0 || gamma_Y == 0 || gamma_Z == 0)
    throw config_error("params", "ml3d: gating slopes must be nonzero");
}

double MorrisLecarParams::m_inf(double V) const { return 0.5 * (1.0 + std::tanh((V - beta_m) / gamma_m)); }
double MorrisLecarParams::Y_inf(double V) const { return 0.5 * (1.0 + std::tanh((V - beta_Y) / gamma_Y)); }
double MorrisLecarParams::Z_inf(double V) const { return 0.5 * (1.0 + std::tanh((V - beta_Z) / gamma_Z)); }
double MorrisLecarParams::tau_Y(double V) const { return 1.0 / std::cosh((V - beta_Y) / (2.0 * gamma_Y)); }
double MorrisLecarParams::tau_Z(double V) const { return 1.0 / std::cosh((V - beta_Z) / (2.0 * gamma_Z)); }

namespace {

Box planar_default_box() { return Box{{-2.5, -2.5}, {2.5, 2.5}}; }

SdeModel::Field isotropic_planar_noise(double D) {
  const double s = std::sqrt(2.0 * D);
  return [s](std::span<const double>, std::span<double> out) {
    out[0] = s;
    out[1] = 0.0;
    out[2] = 0.0;
    out[3] = s;
  };
}

}  // namespace

SdeModel hopf_model(const HopfParams& p, std::optional<Box> domain) {
  p.validate();
  auto drift = [p](std::span<const double> x, std::span<double> out) {
    const double r2 = x[0] * x[0] + x[1] * x[1];
    const double a = p.delta - p.kappa * r2;
    const double w = p.gamma - p.beta * r2;
    out[0] = a * x[0] - w * x[1];
    out[1] = w * x[0] + a * x[1];
  };
  ParamTable params{{"delta", p.delta}, {"beta", p.beta}, {"gamma", p.gamma},
                    {"kappa", p.kappa}, {"D", p.D}};
  return SdeModel("hopf", 2, 2, drift, isotropic_planar_noise(p.D),
                  domain.value_or(planar_default_box()), params, true);
}

SdeModel snic_model(const SnicParams& p, std::optional<Box> domain) {
  p.validate();
  auto drift = [p](std::span<const double> x, std::span<double> out) {
    const double r2 = x[0] * x[0] + x[1] * x[1];
    const double r = std::sqrt(r2);
    if (r < kSnicOriginEpsilon) {
      throw numerical_error("singular_point", "snic drift evaluated inside the excluded origin ball");
    }
    out[0] = p.n * x[0] - p.m * x[1] - x[0] * r2 + x[1] * x[1] / r;
    out[1] = p.m * x[0] + p.n * x[1] - x[1] * r2 - x[0] * x[1] / r;
  };
  auto singular = [](std::span<const double> x) {
    return std::hypot(x[0], x[1]) < kSnicOriginEpsilon;
  };
  ParamTable params{{"m", p.m}, {"n", p.n}, {"D", p.D}};
  return SdeModel("snic", 2, 2, drift, isotropic_planar_noise(p.D),
                  domain.value_or(planar_default_box()), params, true, singular);
}

SdeModel morris_lecar_model(const MorrisLecarParams& p, std::optional<Box> domain) {
  p.validate();
  auto drift = [p](std::span<const double> x, std::span<double> out) {
    const double V = x[0], Y = x[1], Z = x[2];
    const double I_ion = p.g_fast * p.m_inf(V) * (V - p.E_Na) + p.g_Kdr * Y * (V - p.E_K) +
                         p.g_sub * Z * (V - p.E_sub) + p.g_L * (V - p.E_L);
    out[0] = (p.I_ext - I_ion) / p.C;
    out[1] = p.phi_Y * (p.Y_inf(V) - Y) / p.tau_Y(V);
    out[2] = p.phi_Z * (p.Z_inf(V) - Z) / p.tau_Z(V);
  };
  const double s = std::sqrt(2.0 * p.D / p.C);
  auto diffusion = [s](std::span<const double>, std::span<double> out) {
    out[0] = s;
    out[1] = 0.0;
    out[2] = 0.0;
  };
  ParamTable params{{"beta_m", p.beta_m}, {"gamma_m", p.gamma_m}, {"beta_Y", p.beta_Y},
                    {"gamma_Y", p.gamma_Y}, {"phi_Y", p.phi_Y}, {"beta_Z", p.beta_Z},
                    {"gamma_Z", p.gamma_Z}, {"phi_Z", p.phi_Z}, {"E_Na", p.E_Na},
                    {"E_K", p.E_K}, {"E_L", p.E_L}, {"E_sub", p.E_sub},
                    {"g_fast", p.g_fast}, {"g_Kdr", p.g_Kdr}, {"g_sub", p.g_sub},
                    {"g_L", p.g_L}, {"C", p.C}, {"I_ext", p.I_ext}, {"D", p.D}};
  Box provisional{{-100.0, 0.0, 0.0}, {60.0, 1.0, 1.0}};
  SdeModel model("ml3d", 3, 1, drift, diffusion, domain.value_or(provisional), params, true);
  if (domain) return model;

  // Burn-in fit: 10^6 steps of 0.01 ms from the resting-ish state.
  const std::vector<double> x0{-60.0, p.Y_inf(-60.0), p.Z_inf(-60.0)};
  return model.with_domain(fit_domain_from_burn_in(model, x0, 1e-2, 1'000'000, 0x4d4c33ULL, 0.15));
}

double deterministic_hopf_phase(std::span<const double> x, const HopfParams& p) {
  const double r = std::hypot(x[0], x[1]);
  if (r == 0.0) throw numerical_error("undefined_phase", "deterministic Hopf phase undefined at the origin");
  const double theta = std::atan2(x[1], x[0]) - (p.beta / p.kappa) * std::log(r / p.cycle_radius());
  return wrap_phase(theta);
}

// ---------------------------------------------------------------------------

namespace {

template <class P>
using Binding = std::pair<const char*, double P::*>;

const std::vector<Binding<HopfParams>>& hopf_bindings() {
  static const std::vector<Binding<HopfParams>> b{{"delta", &HopfParams::delta},
                                                  {"beta", &HopfParams::beta},
                                                  {"gamma", &HopfParams::gamma},
                                                  {"kappa", &HopfParams::kappa},
                                                  {"D", &HopfParams::D}};
  return b;
}

const std::vector<Binding<SnicParams>>& snic_bindings() {
  static const std::vector<Binding<SnicParams>> b{
      {"m", &SnicParams::m}, {"n", &SnicParams::n}, {"D", &SnicParams::D}};
  return b;
}

const std::vector<Binding<MorrisLecarParams>>& ml_bindings() {
  using P = MorrisLecarParams;
  static const std::vector<Binding<P>> b{
      {"beta_m", &P::beta_m}, {"gamma_m", &P::gamma_m}, {"beta_Y", &P::beta_Y},
      {"gamma_Y", &P::gamma_Y}, {"phi_Y", &P::phi_Y},   {"beta_Z", &P::beta_Z},
      {"gamma_Z", &P::gamma_Z}, {"phi_Z", &P::phi_Z},   {"E_Na", &P::E_Na},
      {"E_K", &P::E_K},         {"E_L", &P::E_L},       {"E_sub", &P::E_sub},
      {"g_fast", &P::g_fast},   {"g_Kdr", &P::g_Kdr},   {"g_sub", &P::g_sub},
      {"g_L", &P::g_L},         {"C", &P::C},           {"I_ext", &P::I_ext},
      {"D", &P::D}};
  return b;
}

template <class P>
P bind_params(const std::string& key, const std::vector<Binding<P>>& bindings,
              const ParamTable& table) {
  P p;
  for (const auto& [name, value] : table) {
    auto it = std::find_if(bindings.begin(), bindings.end(),
                           [&](const auto& b) { return name == b.first; });
    if (it == bindings.end()) {
      throw config_error("unknown_parameter", "model '" + key + "' has no parameter '" + name + "'");
    }
    p.*(it->second) = value;
  }
  return p;
}

template <class P>
std::vector<std::string> names_of(const std::vector<Binding<P>>& bindings) {
  std::vector<std::string> out;
  for (const auto& b : bindings) out.emplace_back(b.first);
  return out;
}

}  // namespace

SdeModel make_model(const std::string& key, const ParamTable& params) {
  if (key == "hopf") return hopf_model(bind_params(key, hopf_bindings(), params));
  if (key == "snic") return snic_model(bind_params(key, snic_bindings(), params));
  if (key == "ml3d") return morris_lecar_model(bind_params(key, ml_bindings(), params));
  throw config_error("unknown_model", "unknown model key '" + key + "'");
}

std::vector<std::string> model_parameter_names(const std::string& key) {
  if (key == "hopf") return names_of(hopf_bindings());
  if (key == "snic") return names_of(snic_bindings());
  if (key == "ml3d") return names_of(ml_bindings());
  throw config_error("unknown_model", "unknown model key '" + key + "'");
}

}  // namespace stochphase
