#include "qld/classical.hpp"

#include "qld/example_models.hpp"

#include <cmath>
#include <mutex>
#include <sstream>

namespace qld {

namespace {

std::string theta_str(const VectorXd& theta) {
  std::ostringstream ss;
  ss << "[" << theta.transpose() << "]";
  return ss.str();
}

// Leverrier-Faddeev: characteristic polynomial a (a[0] = 1) and the adjugate
// stack M_k with adj(zI - A) = sum_k z^{n-1-k} M_k.
struct CharPoly {
  VectorXd a;
  std::vector<MatrixXd> M;
};

CharPoly faddeev(const MatrixXd& A) {
  const int n = static_cast<int>(A.rows());
  CharPoly cp;
  cp.a = VectorXd::Zero(n + 1);
  cp.a[0] = 1.0;
  cp.M.resize(n);
  cp.M[0] = MatrixXd::Identity(n, n);
  for (int k = 1; k <= n; ++k) {
    const MatrixXd am = A * cp.M[k - 1];
    cp.a[k] = -am.trace() / k;
    if (k < n) cp.M[k] = am + cp.a[k] * MatrixXd::Identity(n, n);
  }
  return cp;
}

struct CharPolyDerivative {
  VectorXd da;
  std::vector<MatrixXd> dM;
};

CharPolyDerivative faddeev_derivative(const MatrixXd& A, const MatrixXd& dA,
                                      const CharPoly& cp) {
  const int n = static_cast<int>(A.rows());
  CharPolyDerivative d;
  d.da = VectorXd::Zero(n + 1);
  d.dM.resize(n);
  d.dM[0] = MatrixXd::Zero(n, n);
  for (int k = 1; k <= n; ++k) {
    const MatrixXd dam = dA * cp.M[k - 1] + A * d.dM[k - 1];
    d.da[k] = -dam.trace() / k;
    if (k < n) d.dM[k] = dam + d.da[k] * MatrixXd::Identity(n, n);
  }
  return d;
}

// Polynomial product over z^{-1}; x starts at lag x0, y at lag y0.
VectorXd conv(const VectorXd& x, const VectorXd& y) {
  VectorXd out = VectorXd::Zero(x.size() + y.size() - 1);
  for (Eigen::Index i = 0; i < x.size(); ++i)
    for (Eigen::Index j = 0; j < y.size(); ++j) out[i + j] += x[i] * y[j];
  return out;
}

}  // namespace

StationaryGain stationary_kalman_gain(const MatrixXd& A, const MatrixXd& G,
                                      const MatrixXd& C_row, double sigma_v2) {
  const int n = static_cast<int>(A.rows());
  if (C_row.rows() != 1 || C_row.cols() != n)
    throw ConfigError("stationary_kalman_gain: C must be 1 x n");
  if (sigma_v2 <= 0) throw ConfigError("stationary_kalman_gain: sigma_v2 must be > 0");

  const MatrixXd Q = G * G.transpose();
  MatrixXd S = Q;
  StationaryGain out;
  const int cap = 100000;
  for (int it = 1; it <= cap; ++it) {
    const VectorXd sc = S * C_row.transpose();
    const double denom = (C_row * sc).value() + sigma_v2;
    const VectorXd asc = A * sc;
    MatrixXd S_next = A * S * A.transpose() + Q - asc * asc.transpose() / denom;
    S_next = 0.5 * (S_next + S_next.transpose());
    const double diff = (S_next - S).cwiseAbs().maxCoeff();
    S = S_next;
    if (diff < 1e-12) {
      out.S = S;
      const VectorXd sc2 = S * C_row.transpose();
      const double d2 = (C_row * sc2).value() + sigma_v2;
      out.K = A * sc2 / d2;
      out.sigma_e2 = d2;
      out.iterations = it;
      return out;
    }
  }
  throw NumericalError("stationary_kalman_gain: no convergence in 1e5 iterations");
}

// Filter data for one theta: shared denominator conv(a, c) and per-component
// numerators conv(db, a) - conv(b, da); everything is U-independent.
struct PerThetaFilters {
  std::vector<VectorXd> denom;  // per component, lags 0..2n, [0] = 1
  std::vector<VectorXd> num;    // per component, lags 0..2n
  double sigma_e2 = 0.0;
};

struct LtiSisoAdapter::Cache {
  std::mutex mutex;
  std::map<std::vector<double>, std::shared_ptr<const PerThetaFilters>> by_theta;
};

namespace {

std::shared_ptr<const PerThetaFilters> analytic_filters(const LtiSisoAdapter& adapter,
                                                        const VectorXd& theta) {
  const auto& model = adapter.model;
  const int n = model.state_dim;
  const VectorXd u0 = VectorXd::Zero(1);
  const VectorXd u1 = VectorXd::Ones(1);

  const MatrixXd A = model.A(theta, u0);
  const VectorXd Bvec = model.B(theta, u1) - model.B(theta, u0);
  const MatrixXd G = model.G(theta, u0);
  const double sigma_v2 = model.S_v(0, 0);

  const StationaryGain gain = stationary_kalman_gain(A, G, model.C, sigma_v2);

  const CharPoly cp = faddeev(A);

  // b_j = C M_{j-1} Bvec at lag j; c_j = a_j + C M_{j-1} K (c_0 = 1).
  VectorXd b = VectorXd::Zero(n + 1);
  VectorXd c = cp.a;
  for (int j = 1; j <= n; ++j) {
    b[j] = (model.C * cp.M[j - 1] * Bvec).value();
    c[j] += (model.C * cp.M[j - 1] * gain.K).value();
  }

  auto filters = std::make_shared<PerThetaFilters>();
  filters->sigma_e2 = gain.sigma_e2;
  const VectorXd denom = conv(cp.a, c);
  for (std::size_t i = 0; i < adapter.theta_g.size(); ++i) {
    const MatrixXd dAi = adapter.dA(theta, static_cast<int>(i));
    const VectorXd dBi = adapter.dB(theta, static_cast<int>(i));
    const CharPolyDerivative dcp = faddeev_derivative(A, dAi, cp);
    VectorXd db = VectorXd::Zero(n + 1);
    for (int j = 1; j <= n; ++j)
      db[j] = (model.C * (dcp.dM[j - 1] * Bvec + cp.M[j - 1] * dBi)).value();
    filters->denom.push_back(denom);
    filters->num.push_back(conv(db, cp.a) - conv(b, dcp.da));
  }
  return filters;
}

std::shared_ptr<const PerThetaFilters> filters_for(const LtiSisoAdapter& adapter,
                                                   const VectorXd& theta) {
  std::vector<double> key(theta.data(), theta.data() + theta.size());
  {
    std::lock_guard lock(adapter.cache->mutex);
    auto it = adapter.cache->by_theta.find(key);
    if (it != adapter.cache->by_theta.end()) return it->second;
  }
  auto filters = analytic_filters(adapter, theta);
  std::lock_guard lock(adapter.cache->mutex);
  return adapter.cache->by_theta.emplace(std::move(key), std::move(filters))
      .first->second;
}

MatrixXd run_rational_filters(const PerThetaFilters& filters, const InputSignal& u,
                              const VectorXd& theta) {
  const int N = u.horizon;
  const int d = static_cast<int>(filters.num.size());
  MatrixXd psi = MatrixXd::Zero(N + 1, d);  // row k = psi_k, k = 0..N; row 0 stays 0
  for (int i = 0; i < d; ++i) {
    const VectorXd& den = filters.denom[i];
    const VectorXd& num = filters.num[i];
    for (int k = 1; k <= N; ++k) {
      double v = 0.0;
      for (Eigen::Index l = 1; l < den.size(); ++l)
        if (k - l >= 0) v -= den[l] * psi(k - l, i);
      for (Eigen::Index l = 1; l < num.size(); ++l)
        if (k - l >= 0 && k - l < N) v += num[l] * u.values[k - l];
      if (std::abs(v) > 1e12)
        throw NumericalError("sensitivity_sweep: unstable filter at theta=" +
                             theta_str(theta));
      psi(k, i) = v;
    }
  }
  return psi.bottomRows(N);
}

// Innovation sequence of the stationary predictor against a fixed record y.
VectorXd innovations(const QuasiLinearModel& model, const VectorXd& theta,
                     const VectorXd& K, const InputSignal& u, const VectorXd& y) {
  const int n = model.state_dim;
  const int N = u.horizon;
  const VectorXd u_zero = VectorXd::Zero(1);
  VectorXd xhat = VectorXd::Zero(n);
  VectorXd eps(N + 1);
  for (int k = 0; k <= N; ++k) {
    eps[k] = y[k] - (model.C * xhat).value();
    if (k < N) {
      const VectorXd uk = u.step(k);
      xhat = model.A(theta, u_zero) * xhat +
             (model.B(theta, uk) - model.B(theta, u_zero)) + K * eps[k];
    }
  }
  return eps;
}

MatrixXd fd_sensitivities(const LtiSisoAdapter& adapter, const VectorXd& theta,
                          const InputSignal& u) {
  const auto& model = adapter.model;
  const int n = model.state_dim;
  const int N = u.horizon;
  const VectorXd u_zero = VectorXd::Zero(1);

  // Noise-free response at the base theta.
  VectorXd y(N + 1);
  VectorXd x = VectorXd::Zero(n);
  for (int k = 0; k <= N; ++k) {
    y[k] = (model.C * x).value();
    if (k < N)
      x = model.A(theta, u_zero) * x +
          (model.B(theta, u.step(k)) - model.B(theta, u_zero));
  }

  MatrixXd psi(N, adapter.theta_g.size());
  for (std::size_t i = 0; i < adapter.theta_g.size(); ++i) {
    const int idx = adapter.theta_g[i];
    const double delta = 1e-5 * (1.0 + std::abs(theta[idx]));
    VectorXd tp = theta, tm = theta;
    tp[idx] += delta;
    tm[idx] -= delta;
    const double sv2 = model.S_v(0, 0);
    const VectorXd Kp =
        stationary_kalman_gain(model.A(tp, u_zero), model.G(tp, u_zero), model.C, sv2).K;
    const VectorXd Km =
        stationary_kalman_gain(model.A(tm, u_zero), model.G(tm, u_zero), model.C, sv2).K;
    const VectorXd ep = innovations(model, tp, Kp, u, y);
    const VectorXd em = innovations(model, tm, Km, u, y);
    // psi is the model-output sensitivity, the negative of the innovation one.
    psi.col(i) = -(ep.tail(N) - em.tail(N)) / (2.0 * delta);
    for (int k = 0; k < N; ++k)
      if (std::abs(psi(k, i)) > 1e12)
        throw NumericalError("sensitivity_sweep: unstable filter at theta=" +
                             theta_str(theta));
  }
  return psi;
}

}  // namespace

SensitivitySweep sensitivity_sweep(const LtiSisoAdapter& adapter, const VectorXd& theta,
                                   const InputSignal& u) {
  if (adapter.model.input_dim != 1 || adapter.model.output_dim != 1)
    throw ConfigError("sensitivity_sweep: adapter must be SISO");
  SensitivitySweep sweep;
  sweep.theta = theta;
  if (adapter.provider == SensitivityProvider::FiniteDifference) {
    sweep.psi = fd_sensitivities(adapter, theta, u);
  } else {
    sweep.psi = run_rational_filters(*filters_for(adapter, theta), u, theta);
  }
  return sweep;
}

double avg_d_optimal_criterion(const LtiSisoAdapter& adapter, const DiscretePrior& dprior,
                               const InputSignal& u) {
  const int N = u.horizon;
  double q = 0.0;
  for (int j = 0; j < dprior.size(); ++j) {
    const VectorXd& theta = dprior.nodes[j];
    double sigma_e2;
    if (adapter.provider == SensitivityProvider::FiniteDifference) {
      const VectorXd u_zero = VectorXd::Zero(1);
      sigma_e2 = stationary_kalman_gain(adapter.model.A(theta, u_zero),
                                        adapter.model.G(theta, u_zero), adapter.model.C,
                                        adapter.model.S_v(0, 0))
                     .sigma_e2;
    } else {
      sigma_e2 = filters_for(adapter, theta)->sigma_e2;
    }
    const MatrixXd psi = sensitivity_sweep(adapter, theta, u).psi;
    const MatrixXd info = psi.transpose() * psi / (N * sigma_e2);
    q += dprior.weights[j] * info.determinant();
  }
  return q;
}

LtiSisoAdapter make_lti_adapter(const std::string& example_name,
                                const std::map<std::string, double>& overrides,
                                SensitivityProvider provider) {
  const BuiltinExample ex = make_example(example_name, overrides);
  if (ex.model.input_dim != 1 || ex.model.output_dim != 1)
    throw ConfigError("make_lti_adapter: example is not SISO");

  LtiSisoAdapter adapter;
  adapter.model = ex.model;
  adapter.provider = provider;
  adapter.cache = std::make_shared<LtiSisoAdapter::Cache>();
  const double dt = ex.dt;

  if (example_name == "example1") {
    if (provider != SensitivityProvider::AnalyticExample1 &&
        provider != SensitivityProvider::FiniteDifference)
      throw ConfigError("make_lti_adapter: provider does not match example1");
    adapter.theta_g = {0, 1};
    adapter.dA = [](const VectorXd&, int i) {
      return MatrixXd::Constant(1, 1, i == 0 ? 1.0 : 0.0);
    };
    adapter.dB = [](const VectorXd&, int i) {
      return VectorXd::Constant(1, i == 0 ? 0.0 : 1.0);
    };
    return adapter;
  }
  if (example_name == "dc_motor") {
    if (provider != SensitivityProvider::AnalyticExample2 &&
        provider != SensitivityProvider::FiniteDifference)
      throw ConfigError("make_lti_adapter: provider does not match dc_motor");
    adapter.theta_g = {0};
    adapter.dA = [dt](const VectorXd& th, int) {
      const double theta = th[0];
      const double e = std::exp(-theta * dt);
      const double u = e - 1.0;
      MatrixXd d(2, 2);
      d << 0.0, (dt * e * theta + u) / (theta * theta), 0.0, -dt * e;
      return d;
    };
    adapter.dB = [dt](const VectorXd& th, int) {
      const double theta = th[0];
      const double e = std::exp(-theta * dt);
      const double u = e - 1.0;
      VectorXd d(2);
      d << -(dt * e * theta + u) / (theta * theta), dt * e;
      return d;
    };
    return adapter;
  }
  if (example_name == "atomic_oscillator") {
    if (provider != SensitivityProvider::AnalyticExample3 &&
        provider != SensitivityProvider::FiniteDifference)
      throw ConfigError("make_lti_adapter: provider does not match atomic_oscillator");
    adapter.theta_g = {0};
    const double b_c = overrides.count("b_c") ? overrides.at("b_c") : 1e5;
    adapter.dA = [dt](const VectorXd& th, int) {
      const double e = std::exp(-dt);
      const double c = std::cos(th[0] * dt), s = std::sin(th[0] * dt);
      MatrixXd d(2, 2);
      d << -s, c, -c, -s;
      return MatrixXd(e * dt * d);
    };
    adapter.dB = [dt, b_c](const VectorXd& th, int) {
      const double theta = th[0];
      const double e = std::exp(-dt);
      const double c = std::cos(theta * dt), s = std::sin(theta * dt);
      const double denom = 1.0 + theta * theta;
      const double f1 = theta - e * (theta * c + s);
      const double f2 = 1.0 - e * (c - theta * s);
      const double df1 = 1.0 - e * (c - theta * dt * s + dt * c);
      const double df2 = e * (dt * s + s + theta * dt * c);
      VectorXd d(2);
      d << (df1 * denom - 2.0 * theta * f1), (df2 * denom - 2.0 * theta * f2);
      return VectorXd(d * (b_c / (denom * denom)));
    };
    return adapter;
  }
  throw ConfigError("make_lti_adapter: no LTI-SISO adapter for '" + example_name + "'");
}

}  // namespace qld
