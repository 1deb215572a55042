#include "qld/example_models.hpp"

#include <cmath>
#include <set>

namespace qld {

namespace {

class Overrides {
 public:
  Overrides(const std::map<std::string, double>& values,
            std::set<std::string> allowed)
      : values_(values), allowed_(std::move(allowed)) {
    for (const auto& [key, _] : values_)
      if (!allowed_.count(key))
        throw ConfigError("make_example: unknown override key '" + key + "'");
  }

  double get(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

 private:
  const std::map<std::string, double>& values_;
  std::set<std::string> allowed_;
};

MatrixXd rotation2(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  MatrixXd r(2, 2);
  r << c, s, -s, c;
  return r;
}

// x_{k+1} = th1 x_k + th2 u_k + g w_k,  y_k = x_k + sigma_v v_k
BuiltinExample make_example1(const Overrides& ov) {
  const double sigma_v = ov.get("sigma_v", 0.1);
  const double g = ov.get("g", 0.01);
  const double s0 = ov.get("s0", 0.01);
  const double m1 = ov.get("m_theta1", 0.8);
  const double m2 = ov.get("m_theta2", 0.2);
  const double s_theta = ov.get("s_theta", 1e-3);

  BuiltinExample ex;
  ex.name = "example1";
  ex.dt = 1.0;
  QuasiLinearModel& m = ex.model;
  m.state_dim = 1;
  m.noise_dim = 1;
  m.output_dim = 1;
  m.input_dim = 1;
  m.A = [](const VectorXd& th, const VectorXd&) {
    return MatrixXd::Constant(1, 1, th[0]);
  };
  m.B = [](const VectorXd& th, const VectorXd& u) {
    return VectorXd::Constant(1, th[1] * u[0]);
  };
  m.G = [g](const VectorXd&, const VectorXd&) { return MatrixXd::Constant(1, 1, g); };
  m.C = MatrixXd::Identity(1, 1);
  m.S_v = MatrixXd::Constant(1, 1, sigma_v * sigma_v);
  m.m0 = [](const VectorXd&) { return VectorXd::Zero(1); };
  m.S0 = [s0](const VectorXd&) { return MatrixXd::Constant(1, 1, s0); };

  VectorXd mean(2);
  mean << m1, m2;
  ex.prior = ParameterPrior::gaussian(mean, s_theta * MatrixXd::Identity(2, 2));
  return ex;
}

// Integrator with damping rate theta, driven through the damped state.
// The printed discrete forms cancel catastrophically for small theta*dt, so the
// exponentials are carried through expm1.
struct DcMatrices {
  MatrixXd A;
  VectorXd Bv;
  MatrixXd G;
};

DcMatrices dc_motor_matrices(double theta, double dt, double d_c) {
  const double x = theta * dt;
  const double u = std::expm1(-x);  // e^{-x} - 1
  const double e = 1.0 + u;

  DcMatrices out;
  out.A = MatrixXd(2, 2);
  out.A << 1.0, -u / theta, 0.0, e;

  out.Bv = VectorXd(2);
  out.Bv << dt + u / theta, -u;

  const double u2 = std::expm1(-2.0 * x);
  const double d11 = (2.0 * (x + u) - u * u) / (2.0 * theta * theta * theta);
  const double d12 = u * u / (2.0 * theta * theta);
  const double d22 = -u2 / (2.0 * theta);

  out.G = MatrixXd::Zero(2, 2);
  if (d11 > 0) {
    out.G(0, 0) = std::sqrt(d11);
    out.G(1, 0) = d12 / out.G(0, 0);
    const double rem = (d11 * d22 - d12 * d12) / d11;
    out.G(1, 1) = rem > 0 ? std::sqrt(rem) : 0.0;
  }
  out.G *= std::sqrt(d_c * theta);
  return out;
}

BuiltinExample make_dc_motor(const Overrides& ov) {
  const double dt = ov.get("dt", 0.05e-3);
  const double d_c = ov.get("d_c", 0.01);
  const double s_v = ov.get("s_v", 0.1);
  const double a = ov.get("a", 0.05);
  const double b = ov.get("b", 2.0);
  const double s0_1 = ov.get("s0_1", 0.001);
  const double s0_2 = ov.get("s0_2", 0.005);

  BuiltinExample ex;
  ex.name = "dc_motor";
  ex.dt = dt;
  QuasiLinearModel& m = ex.model;
  m.state_dim = 2;
  m.noise_dim = 2;
  m.output_dim = 1;
  m.input_dim = 1;
  m.A = [dt, d_c](const VectorXd& th, const VectorXd&) {
    return dc_motor_matrices(th[0], dt, d_c).A;
  };
  m.B = [dt, d_c](const VectorXd& th, const VectorXd& u) {
    return VectorXd(dc_motor_matrices(th[0], dt, d_c).Bv * u[0]);
  };
  m.G = [dt, d_c](const VectorXd& th, const VectorXd&) {
    return dc_motor_matrices(th[0], dt, d_c).G;
  };
  m.C = MatrixXd(1, 2);
  m.C << 1.0, 0.0;
  m.S_v = MatrixXd::Constant(1, 1, s_v * s_v);
  m.m0 = [](const VectorXd&) { return VectorXd::Zero(2); };
  MatrixXd s0 = MatrixXd::Zero(2, 2);
  s0(0, 0) = s0_1;
  s0(1, 1) = s0_2;
  m.S0 = [s0](const VectorXd&) { return s0; };

  ex.prior = ParameterPrior::uniform_box(VectorXd::Constant(1, a), VectorXd::Constant(1, b));
  return ex;
}

// Damped rotation with natural frequency theta; drift enters through the input
// channel only.
VectorXd oscillator_drift(double theta, double dt, double b_c) {
  const double e = std::exp(-dt);
  const double c = std::cos(theta * dt), s = std::sin(theta * dt);
  VectorXd bv(2);
  bv << theta - e * (theta * c + s), 1.0 - e * (c - theta * s);
  return bv * (b_c / (1.0 + theta * theta));
}

BuiltinExample make_atomic_oscillator(const Overrides& ov) {
  const double dt = ov.get("dt", 5.7471e-3);
  const double s_v = ov.get("s_v", 11.85);
  const double b_c = ov.get("b_c", 1e5);
  const double m_theta = ov.get("m_theta", 54.6637);
  const double s_theta = ov.get("s_theta", 10.76);

  BuiltinExample ex;
  ex.name = "atomic_oscillator";
  ex.dt = dt;
  ex.carrier_freq = m_theta;
  QuasiLinearModel& m = ex.model;
  m.state_dim = 2;
  m.noise_dim = 2;
  m.output_dim = 1;
  m.input_dim = 1;
  m.A = [dt](const VectorXd& th, const VectorXd&) {
    return MatrixXd(std::exp(-dt) * rotation2(th[0] * dt));
  };
  m.B = [dt, b_c](const VectorXd& th, const VectorXd& u) {
    return VectorXd(oscillator_drift(th[0], dt, b_c) * u[0]);
  };
  const double g = std::sqrt(-std::expm1(-2.0 * dt));
  m.G = [g](const VectorXd&, const VectorXd&) {
    return MatrixXd(g * MatrixXd::Identity(2, 2));
  };
  m.C = MatrixXd(1, 2);
  m.C << 0.0, 1.0;
  m.S_v = MatrixXd::Constant(1, 1, s_v * s_v);
  m.m0 = [](const VectorXd&) { return VectorXd::Zero(2); };
  m.S0 = [](const VectorXd&) { return MatrixXd(MatrixXd::Identity(2, 2)); };

  ex.prior = ParameterPrior::gaussian_scalar(m_theta, s_theta);
  return ex;
}

// Reduced optically-pumped magnetometer: pumping rate u damps the spin, feeds
// the polarization drift, and raises the process noise floor.
BuiltinExample make_opm_reduced(const Overrides& ov) {
  const double dt = ov.get("dt", 5.7471e-3);
  const double sigma_v = ov.get("sigma_v", 11.85);
  const double b_c = ov.get("b_c", 1.22e6);
  const double m_theta = ov.get("m_theta", 54.6637);
  const double s_theta = ov.get("s_theta", 3e-3);

  BuiltinExample ex;
  ex.name = "opm_reduced";
  ex.dt = dt;
  ex.carrier_freq = m_theta;
  QuasiLinearModel& m = ex.model;
  m.state_dim = 2;
  m.noise_dim = 2;
  m.output_dim = 1;
  m.input_dim = 1;
  m.A = [dt](const VectorXd& th, const VectorXd& u) {
    return MatrixXd(std::exp(-(1.0 + u[0]) * dt) * rotation2(th[0] * dt));
  };
  m.B = [dt, b_c](const VectorXd& th, const VectorXd& u) {
    const double th0 = th[0], uk = u[0];
    const double p = 1.0 + uk;
    const double e = std::exp(-p * dt);
    const double c = std::cos(th0 * dt), s = std::sin(th0 * dt);
    VectorXd bv(2);
    bv << th0 - e * (th0 * c + p * s), e * (th0 * s - p * c) + p;
    return VectorXd(bv * (b_c * uk / (p * p + th0 * th0)));
  };
  m.G = [dt](const VectorXd&, const VectorXd& u) {
    const double g = std::sqrt(-std::expm1(-2.0 * (1.0 + u[0]) * dt));
    return MatrixXd(g * MatrixXd::Identity(2, 2));
  };
  m.C = MatrixXd(1, 2);
  m.C << 0.0, 1.0;
  m.S_v = MatrixXd::Constant(1, 1, sigma_v * sigma_v);
  m.m0 = [](const VectorXd&) { return VectorXd::Zero(2); };
  m.S0 = [](const VectorXd&) { return MatrixXd(MatrixXd::Identity(2, 2)); };

  ex.prior = ParameterPrior::gaussian_scalar(m_theta, s_theta);
  return ex;
}

}  // namespace

BuiltinExample make_example(const std::string& name,
                            const std::map<std::string, double>& overrides) {
  if (name == "example1") {
    Overrides ov(overrides, {"sigma_v", "g", "s0", "m_theta1", "m_theta2", "s_theta"});
    return make_example1(ov);
  }
  if (name == "dc_motor") {
    Overrides ov(overrides, {"dt", "d_c", "s_v", "a", "b", "s0_1", "s0_2"});
    return make_dc_motor(ov);
  }
  if (name == "atomic_oscillator") {
    Overrides ov(overrides, {"dt", "s_v", "b_c", "m_theta", "s_theta"});
    return make_atomic_oscillator(ov);
  }
  if (name == "opm_reduced") {
    Overrides ov(overrides, {"dt", "sigma_v", "b_c", "m_theta", "s_theta"});
    return make_opm_reduced(ov);
  }
  throw ConfigError("make_example: unknown model '" + name + "'");
}

std::vector<std::string> example_names() {
  return {"example1", "dc_motor", "atomic_oscillator", "opm_reduced"};
}

}  // namespace qld
