#include "abpinn/spectral/solver.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include <fftw3.h>

#include "abpinn/error.hpp"

namespace abpinn::spectral {

namespace {

using cplx = std::complex<double>;
using CArray = Eigen::ArrayXcd;
constexpr double kPi = std::numbers::pi;

// Real-to-complex transform pair of fixed size. Plans are built with
// FFTW_ESTIMATE so results do not depend on timing measurements.
class Fft {
 public:
  explicit Fft(int n) : n_(n), real_(n), spec_(n / 2 + 1) {
    fwd_ = fftw_plan_dft_r2c_1d(n, real_.data(), reinterpret_cast<fftw_complex*>(spec_.data()), FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_c2r_1d(n, reinterpret_cast<fftw_complex*>(spec_.data()), real_.data(), FFTW_ESTIMATE);
  }
  ~Fft() {
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
  }
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  CArray forward(const Eigen::ArrayXd& u) {
    real_ = u;
    fftw_execute(fwd_);
    return spec_;
  }
  Eigen::ArrayXd inverse(const CArray& v) {
    spec_ = v;
    fftw_execute(inv_);  // c2r overwrites its input
    return real_ / static_cast<double>(n_);
  }

 private:
  int n_;
  Eigen::ArrayXd real_;
  CArray spec_;
  fftw_plan fwd_ = nullptr;
  fftw_plan inv_ = nullptr;
};

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

double default_initial(SpectralProblem p, double x) {
  return p == SpectralProblem::AllenCahn ? x * x * std::cos(kPi * x) : std::cos(kPi * x);
}

}  // namespace

SpectralProblem parse_spectral_problem(std::string_view name) {
  if (name == "allen_cahn") return SpectralProblem::AllenCahn;
  if (name == "kdv") return SpectralProblem::Kdv;
  throw ConfigError("no spectral solver for problem '" + std::string(name) + "'");
}

std::string_view spectral_problem_name(SpectralProblem p) {
  return p == SpectralProblem::AllenCahn ? "allen_cahn" : "kdv";
}

SpectralConfig SpectralConfig::defaults(SpectralProblem p) {
  SpectralConfig c;
  c.problem = p;
  c.dt = p == SpectralProblem::AllenCahn ? 1e-4 : 1e-5;
  return c;
}

long SpectralConfig::steps_per_save() const {
  const double total = t_final / dt;
  const long steps = std::lround(total);
  return steps / (save_times - 1);
}

void SpectralConfig::validate() const {
  if (n_modes < 128 || !is_power_of_two(n_modes)) {
    throw ConfigError("n_modes must be a power of two >= 128, got " + std::to_string(n_modes));
  }
  if (!(dt > 0.0) || !(t_final > 0.0)) throw ConfigError("dt and t_final must be positive");
  if (save_times < 2) throw ConfigError("save_times must be at least 2");
  if (contour_points < 8) throw ConfigError("contour_points must be at least 8");
  const double total = t_final / dt;
  const long steps = std::lround(total);
  if (std::abs(total - static_cast<double>(steps)) > 1e-6 * total || steps % (save_times - 1) != 0) {
    throw ConfigError("t_final/dt must be an integer multiple of save_times-1");
  }
  if (problem == SpectralProblem::AllenCahn && !(diffusion >= 0.0)) throw ConfigError("diffusion must be >= 0");
}

ReferenceGrid solve(const SpectralConfig& config) {
  config.validate();
  const int n = config.n_modes;
  const int m = n / 2 + 1;
  const double h = config.dt;
  const bool kdv = config.problem == SpectralProblem::Kdv;

  ReferenceGrid grid;
  grid.xs = Eigen::VectorXd::LinSpaced(n, -1.0, 1.0 - 2.0 / n);
  grid.times = Eigen::VectorXd::LinSpaced(config.save_times, 0.0, config.t_final);
  grid.values.resize(config.save_times, n);

  // Period 2 on [-1, 1): wavenumber of mode j is pi j.
  Eigen::ArrayXd k(m);
  for (int j = 0; j < m; ++j) k[j] = kPi * j;
  // First-derivative symbol with the Nyquist mode removed.
  CArray ik = cplx(0.0, 1.0) * k.cast<cplx>();
  ik[m - 1] = 0.0;

  CArray L(m);
  if (kdv) {
    const double mu2 = config.mu_disp * config.mu_disp;
    L = cplx(0.0, mu2) * (k * k * k).cast<cplx>();
    L[m - 1] = 0.0;
  } else {
    L = (-config.diffusion * k * k).cast<cplx>();
  }

  // ETDRK4 coefficients via contour integrals around each h L.
  const CArray E = (h * L).exp();
  const CArray E2 = (h * L / 2.0).exp();
  const int M = config.contour_points;
  CArray Q = CArray::Zero(m), f1 = CArray::Zero(m), f2 = CArray::Zero(m), f3 = CArray::Zero(m);
  for (int j = 0; j < M; ++j) {
    const cplx r = std::exp(cplx(0.0, 2.0 * kPi * (j + 0.5) / M));
    const CArray LR = h * L + r;
    const CArray eLR = LR.exp();
    const CArray LR2 = LR * LR, LR3 = LR2 * LR;
    Q += ((LR / 2.0).exp() - 1.0) / LR;
    f1 += (-4.0 - LR + eLR * (4.0 - 3.0 * LR + LR2)) / LR3;
    f2 += (2.0 + LR + eLR * (-2.0 + LR)) / LR3;
    f3 += (-4.0 - 3.0 * LR - LR2 + eLR * (4.0 - LR)) / LR3;
  }
  Q *= h / M;
  f1 *= h / M;
  f2 *= h / M;
  f3 *= h / M;
  if (!kdv) {
    Q = Q.real().cast<cplx>();
    f1 = f1.real().cast<cplx>();
    f2 = f2.real().cast<cplx>();
    f3 = f3.real().cast<cplx>();
  }

  Fft fft(n);
  auto nonlinear = [&](const CArray& v) -> CArray {
    const Eigen::ArrayXd u = fft.inverse(v);
    if (kdv) return (-0.5 * config.eta) * ik * fft.forward(u * u);
    return fft.forward(config.reaction * (u - u * u * u));
  };

  Eigen::ArrayXd u0(n);
  for (int i = 0; i < n; ++i) {
    u0[i] = config.initial ? config.initial(grid.xs[i]) : default_initial(config.problem, grid.xs[i]);
  }
  grid.values.row(0) = u0.transpose();
  CArray v = fft.forward(u0);

  const long per_save = config.steps_per_save();
  long step = 0;
  for (int s = 1; s < config.save_times; ++s) {
    for (long q = 0; q < per_save; ++q) {
      ++step;
      const CArray Nv = nonlinear(v);
      const CArray a = E2 * v + Q * Nv;
      const CArray Na = nonlinear(a);
      const CArray b = E2 * v + Q * Na;
      const CArray Nb = nonlinear(b);
      const CArray c = E2 * a + Q * (2.0 * Nb - Nv);
      const CArray Nc = nonlinear(c);
      v = E * v + Nv * f1 + 2.0 * (Na + Nb) * f2 + Nc * f3;
      if (!v.isFinite().all()) {
        throw DiagnosticError(std::string(spectral_problem_name(config.problem)) +
                              " solve became non-finite at step " + std::to_string(step) + " (t = " +
                              std::to_string(static_cast<double>(step) * h) + ", dt = " + std::to_string(h) +
                              ", n_modes = " + std::to_string(n) + ")");
      }
    }
    grid.values.row(s) = fft.inverse(v).transpose();
  }
  return grid;
}

double kdv_mass(const ReferenceGrid& grid, Eigen::Index time_index) {
  if (time_index < 0 || time_index >= grid.values.rows()) throw ContractError("time index out of range");
  return grid.values.row(time_index).mean();
}

double trig_interpolate(const Eigen::VectorXd& samples, double x) {
  const Eigen::Index n = samples.size();
  if (n == 0) throw ContractError("no samples");
  Fft fft(static_cast<int>(n));
  const CArray c = fft.forward(samples.array()) / static_cast<double>(n);
  // Sample i sits at -1 + 2i/n; mode j contributes c_j exp(i pi j (x + 1)).
  const double s = x + 1.0;
  double value = c[0].real();
  const Eigen::Index m = n / 2;
  for (Eigen::Index j = 1; j <= m; ++j) {
    const double weight = (n % 2 == 0 && j == m) ? 1.0 : 2.0;
    value += weight * (c[j] * std::exp(cplx(0.0, kPi * static_cast<double>(j) * s))).real();
  }
  return value;
}

}  // namespace abpinn::spectral
