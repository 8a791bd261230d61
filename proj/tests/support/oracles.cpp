#include "oracles.hpp"

#include <boost/math/distributions/non_central_chi_squared.hpp>

#include <cmath>

namespace ciradar::oracle {

Vector finite_difference_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector up = x;
    Vector down = x;
    up(i) += h;
    down(i) -= h;
    g(i) = (f(up) - f(down)) / (2.0 * h);
  }
  return g;
}

CMatrix finite_difference_steering(double theta, std::span<const Position> positions, double h) {
  return (steering_outer(theta + h, positions) - steering_outer(theta - h, positions)) / (2.0 * h);
}

double single_user_grid_power(const CVector& h, double gamma_tilde, double psi, int radial, int angular) {
  // w = a h* / ||h|| gives the receive point a ||h||; the CI region in the
  // receive plane is (Re - sqrt(Gamma)) tan(psi) >= |Im|.
  const double hn = h.norm();
  const double root = std::sqrt(gamma_tilde);
  const double rmax = 4.0 * root / hn;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= radial; ++i) {
    const double r = rmax * i / radial;
    for (int j = 0; j < angular; ++j) {
      const double phase = -kPi / 2 + kPi * j / (angular - 1);
      const Complex rx = std::polar(r, phase) * hn;
      if ((rx.real() - root) * std::tan(psi) >= std::abs(rx.imag()) - 1e-12) best = std::min(best, r * r);
    }
  }
  return best;
}

double marcum_q1_reference(double a, double b) {
  if (a == 0.0) return std::exp(-0.5 * b * b);
  boost::math::non_central_chi_squared_distribution<double> dist(2.0, a * a);
  return boost::math::cdf(boost::math::complement(dist, b * b));
}

namespace {

// x = [Re t_1; Im t_1; ...; Re t_K; Im t_K]. Rows giving Re and Im of c^T t_j.
std::pair<Vector, Vector> linear_rows(const CVector& c, int n, int k, int j) {
  Vector re = Vector::Zero(2 * n * k);
  Vector im = Vector::Zero(2 * n * k);
  const int base = 2 * n * j;
  re.segment(base, n) = c.real();
  re.segment(base + n, n) = -c.imag();
  im.segment(base, n) = c.imag();
  im.segment(base + n, n) = c.real();
  return {re, im};
}

CMatrix unpack(const Vector& x, int n, int k) {
  CMatrix t(n, k);
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < n; ++i) t(i, j) = Complex(x(2 * n * j + i), x(2 * n * j + n + i));
  return t;
}

Matrix interference_form(const ChannelSet& cs) {
  const int n = cs.bs_antennas();
  const int k = cs.users();
  Matrix q = Matrix::Zero(2 * n * k, 2 * n * k);
  for (int m = 0; m < cs.radar_antennas(); ++m)
    for (int j = 0; j < k; ++j) {
      const auto [re, im] = linear_rows(cs.G.col(m), n, k, j);
      q += re * re.transpose() + im * im.transpose();
    }
  return q;
}

QcqpSpec sinr_spec(const ChannelSet& cs, const LinkBudget& budget) {
  const int n = cs.bs_antennas();
  const int k = cs.users();
  const Vector targets = budget.sinr_linear(k);
  QcqpSpec spec;
  spec.n = 2 * n * k;
  spec.q0 = Vector::Zero(spec.n);
  for (int i = 0; i < k; ++i) {
    const double noise = budget.sigma_c2 + budget.radar_power * cs.F.col(i).squaredNorm();
    ConeConstraint cone;
    cone.B = Matrix::Zero(2 * k - 1, spec.n);
    cone.e = Vector::Zero(2 * k - 1);
    int row = 0;
    for (int j = 0; j < k; ++j) {
      const auto [re, im] = linear_rows(cs.H.col(i), n, k, j);
      if (j == i) {
        cone.c = re / std::sqrt(targets(i));
        continue;
      }
      cone.B.row(row++) = re.transpose();
      cone.B.row(row++) = im.transpose();
    }
    cone.e(row) = std::sqrt(noise);
    cone.d = 0.0;
    spec.cones.push_back(std::move(cone));
  }
  return spec;
}

ConventionalResult finish(const ChannelSet& cs, const QcqpResult& r) {
  ConventionalResult out;
  out.ok = r.status == QcqpStatus::optimal;
  out.precoders = unpack(r.x, cs.bs_antennas(), cs.users());
  out.power = out.precoders.squaredNorm();
  out.interference = (cs.G.transpose() * out.precoders).squaredNorm();
  return out;
}

}  // namespace

ConventionalResult conventional_power_min(const ChannelSet& cs, const LinkBudget& budget) {
  QcqpSpec spec = sinr_spec(cs, budget);
  spec.Q0 = Matrix::Identity(spec.n, spec.n);
  const Vector caps = budget.inr_linear(cs.radar_antennas());
  for (int m = 0; m < cs.radar_antennas(); ++m) {
    Matrix q = Matrix::Zero(spec.n, spec.n);
    for (int j = 0; j < cs.users(); ++j) {
      const auto [re, im] = linear_rows(cs.G.col(m), cs.bs_antennas(), cs.users(), j);
      q += re * re.transpose() + im * im.transpose();
    }
    spec.quadratic.push_back({q, Vector::Zero(spec.n), caps(m) * budget.sigma_r2});
  }
  return finish(cs, solve_qcqp(spec));
}

ConventionalResult conventional_interf_min(const ChannelSet& cs, const LinkBudget& budget, double power_budget_mw) {
  QcqpSpec spec = sinr_spec(cs, budget);
  spec.Q0 = interference_form(cs);
  spec.quadratic.push_back({Matrix::Identity(spec.n, spec.n), Vector::Zero(spec.n), power_budget_mw});
  return finish(cs, solve_qcqp(spec));
}

Vector conventional_sinr(const ChannelSet& cs, const LinkBudget& budget, const CMatrix& precoders) {
  const CMatrix gains = cs.H.transpose() * precoders;
  Vector sinr(cs.users());
  for (int i = 0; i < cs.users(); ++i) {
    double leak = budget.sigma_c2 + budget.radar_power * cs.F.col(i).squaredNorm();
    for (int j = 0; j < cs.users(); ++j)
      if (j != i) leak += std::norm(gains(i, j));
    sinr(i) = std::norm(gains(i, i)) / leak;
  }
  return sinr;
}

}  // namespace ciradar::oracle
