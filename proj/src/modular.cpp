#include "k3lab/modular.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <numbers>
#include <vector>

#include "k3lab/error.hpp"

namespace k3lab::modular {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr Complex kI{0.0, 1.0};
constexpr int kMaxTerms = 600;
constexpr double kZeta5 = 1.0369277551433699;

struct DivisorSums {
  std::array<double, kMaxTerms + 1> s3{}, s5{};
  DivisorSums() {
    for (int d = 1; d <= kMaxTerms; ++d) {
      const double d3 = 1.0 * d * d * d, d5 = d3 * d * d;
      for (int n = d; n <= kMaxTerms; n += d) {
        s3[n] += d3;
        s5[n] += d5;
      }
    }
  }
};

const DivisorSums& divisor_sums() {
  static const DivisorSums table;
  return table;
}

struct NormalizedE {
  Complex e4, e6;
  Complex d;  // (E4^3 - E6^2), from the product formula to avoid cancellation
};

NormalizedE normalized_eisenstein(Complex tau, int terms) {
  const auto& t = divisor_sums();
  const Complex q = std::exp(2.0 * kPi * kI * tau);
  Complex s3 = 0, s5 = 0, qn = 1;
  for (int n = 1; n <= terms; ++n) {
    qn *= q;
    s3 += t.s3[n] * qn;
    s5 += t.s5[n] * qn;
  }
  // E4^3 - E6^2 = 1728 q prod (1 - q^n)^24.
  Complex prod = 1;
  qn = 1;
  for (int n = 1; n <= terms; ++n) {
    qn *= q;
    prod *= 1.0 - qn;
  }
  const Complex p2 = prod * prod, p4 = p2 * p2, p8 = p4 * p4;
  return {1.0 + 240.0 * s3, 1.0 - 504.0 * s5, 1728.0 * q * p8 * p8 * p8};
}

int auto_terms(Complex tau) {
  return terms_for_tail(tau.imag(), default_tolerances().series_tail);
}

// Ties on the boundary of the fundamental domain are snapped within this.
constexpr double kBoundarySlack = 1e-13;

}  // namespace

const Tolerances& default_tolerances() {
  static const Tolerances tol;
  return tol;
}

Reduction reduce_fundamental(Complex tau) {
  if (!(tau.imag() > 0.0)) throw PreconditionError("reduce_fundamental: Im(tau) must be positive");
  Reduction r{tau, {}};
  auto translate = [&r]() {
    const double n = std::floor(r.tau.real() + 0.5);
    if (n == 0.0) return;
    r.tau -= n;
    r.word.append(static_cast<std::size_t>(std::abs(n)), n > 0 ? 't' : 'T');
  };
  for (int guard = 0; guard < 10000; ++guard) {
    translate();
    if (std::norm(r.tau) >= 1.0 - kBoundarySlack) break;
    r.tau = -1.0 / r.tau;
    r.word.push_back('S');
  }
  if (std::abs(r.tau.real() + 0.5) <= kBoundarySlack) {
    r.tau += 1.0;
    r.word.push_back('T');
  }
  if (std::abs(std::norm(r.tau) - 1.0) <= kBoundarySlack && r.tau.real() < 0.0) {
    r.tau = -1.0 / r.tau;
    r.word.push_back('S');
  }
  return r;
}

int terms_for_tail(double im_tau, double tail) {
  // sigma_5(n) <= zeta(5) n^5; once consecutive ratios drop below one the
  // tail is dominated by a geometric series.
  const double r = std::exp(-2.0 * kPi * im_tau);
  for (int n = 1; n < kMaxTerms; ++n) {
    const double m = n + 1.0;
    const double first = 504.0 * kZeta5 * std::pow(m, 5) * std::pow(r, m);
    const double ratio = std::pow((m + 1.0) / m, 5) * r;
    if (ratio < 1.0 && first / (1.0 - ratio) <= tail) return n;
  }
  return kMaxTerms;
}

Invariants eisenstein(Complex tau, int terms) {
  if (terms < 1) throw PreconditionError("eisenstein: terms must be at least 1");
  if (tau.imag() < default_tolerances().min_im_tau)
    throw PreconditionError("eisenstein: Im(tau) too small, reduce tau first");
  const NormalizedE e = normalized_eisenstein(tau, std::min(terms, kMaxTerms));
  const double pi2 = kPi * kPi, pi4 = pi2 * pi2;
  return {4.0 * pi4 / 3.0 * e.e4, 8.0 * pi4 * pi2 / 27.0 * e.e6};
}

Invariants eisenstein(Complex tau) { return eisenstein(tau, auto_terms(tau)); }

LatticeSums eisenstein_bruteforce(Complex w1, Complex w2, int cutoff) {
  if (cutoff < 10) throw PreconditionError("eisenstein_bruteforce: cutoff must be at least 10");
  if ((std::conj(w1) * w2).imag() == 0.0)
    throw PreconditionError("eisenstein_bruteforce: periods are linearly dependent");
  // Sums over concentric square shells, so both cutoffs come from one pass.
  const int half = cutoff / 2;
  Complex s4 = 0, s6 = 0, s4_half = 0, s6_half = 0;
  for (int k = 1; k <= cutoff; ++k) {
    Complex shell4 = 0, shell6 = 0;
    auto add = [&](int m, int n) {
      const Complex g = static_cast<double>(m) * w1 + static_cast<double>(n) * w2;
      const Complex inv2 = 1.0 / (g * g);
      const Complex inv4 = inv2 * inv2;
      shell4 += inv4;
      shell6 += inv4 * inv2;
    };
    for (int m = -k; m <= k; ++m) {
      add(m, k);
      add(m, -k);
    }
    for (int n = -k + 1; n <= k - 1; ++n) {
      add(k, n);
      add(-k, n);
    }
    s4 += shell4;
    s6 += shell6;
    if (k == half) {
      s4_half = s4;
      s6_half = s6;
    }
  }
  const double r2 = static_cast<double>(cutoff) / half;
  const double f2 = r2 * r2, f4 = f2 * f2;
  LatticeSums out;
  out.a_raw = 60.0 * s4;
  out.b_raw = 140.0 * s6;
  out.a = 60.0 * (f2 * s4 - s4_half) / (f2 - 1.0);
  out.b = 140.0 * (f4 * s6 - s6_half) / (f4 - 1.0);
  out.a_tail_estimate = std::abs(out.a - out.a_raw);
  out.b_tail_estimate = std::abs(out.b - out.b_raw);
  return out;
}

JValue j_from_ab(Complex a, Complex b, Complex discriminant) {
  if (a == 0.0 && b == 0.0) throw PreconditionError("j_from_ab: (a, b) = (0, 0)");
  if (discriminant == 0.0) return {Complex{std::numeric_limits<double>::infinity(), 0.0}, true};
  return {1728.0 * a * a * a / discriminant, false};
}

JValue j_from_ab(Complex a, Complex b) { return j_from_ab(a, b, a * a * a - 27.0 * b * b); }

Complex j_from_tau(Complex tau) {
  const Complex t = reduce_fundamental(tau).tau;
  const NormalizedE e = normalized_eisenstein(t, auto_terms(t));
  return 1728.0 * e.e4 * e.e4 * e.e4 / e.d;
}

namespace {

// Newton is run on a local uniformizer of j so that the critical points
// tau = rho (j ~ (tau-rho)^3) and tau = i (j - 1728 ~ (tau-i)^2) are simple zeros.
enum class Chart { Cube, Sqrt, Log, Plain };

struct ChartValue {
  Complex f, df;
};

class Inverter {
 public:
  explicit Inverter(Complex j) : j_(j) {
    if (std::abs(j) < 300.0) {
      chart_ = Chart::Cube;
      target_ = std::pow(j, 1.0 / 3.0);
    } else if (std::abs(j - 1728.0) < 300.0) {
      chart_ = Chart::Sqrt;
      target_ = std::sqrt(j - 1728.0);
    } else if (std::abs(j) > 3000.0) {
      chart_ = Chart::Log;
      target_ = std::log(j);
    } else {
      chart_ = Chart::Plain;
      target_ = j;
    }
  }

  Chart chart() const { return chart_; }

  // Value of the chart function at tau, on the branch closest to the target.
  ChartValue eval(Complex tau) const {
    const NormalizedE e = normalized_eisenstein(tau, auto_terms(tau));
    const Complex d = e.d;
    const Complex two_pi_i = 2.0 * kPi * kI;
    switch (chart_) {
      case Chart::Cube: {
        const Complex c = std::pow(1728.0 / d, 1.0 / 3.0);
        ChartValue best{e.e4 * c, -two_pi_i * e.e6 * c / 3.0};
        const Complex omega = std::polar(1.0, 2.0 * kPi / 3.0);
        ChartValue v = best;
        for (int k = 1; k < 3; ++k) {
          v.f *= omega;
          v.df *= omega;
          if (std::abs(v.f - target_) < std::abs(best.f - target_)) best = v;
        }
        return best;
      }
      case Chart::Sqrt: {
        const Complex s = std::sqrt(1728.0 / d);
        ChartValue v{e.e6 * s, -kPi * kI * e.e4 * e.e4 * s};
        if (std::abs(-v.f - target_) < std::abs(v.f - target_)) v = {-v.f, -v.df};
        return v;
      }
      case Chart::Log: {
        const Complex e4c = e.e4 * e.e4 * e.e4;
        Complex f = std::log(1728.0 * e4c / d);
        const double k = std::round((target_ - f).imag() / (2.0 * kPi));
        f += Complex{0.0, 2.0 * kPi * k};
        return {f, -two_pi_i * e.e6 / e.e4};
      }
      case Chart::Plain:
        break;
    }
    const Complex e4c = e.e4 * e.e4 * e.e4;
    return {1728.0 * e4c / d, -two_pi_i * 1728.0 * e.e4 * e.e4 * e.e6 / d};
  }

  double residual(Complex tau) const { return std::abs(eval(tau).f - target_); }

  // Damped Newton from `tau`; returns the final iterate.
  Complex newton(Complex tau, int max_iterations) const {
    const double min_im = default_tolerances().min_im_tau;
    double res = residual(tau);
    for (int it = 0; it < max_iterations; ++it) {
      const ChartValue v = eval(tau);
      if (v.df == 0.0) break;
      const Complex step = (v.f - target_) / v.df;
      double damping = 1.0;
      Complex next = tau - step;
      double next_res = next.imag() > min_im ? residual(next) : std::numeric_limits<double>::infinity();
      for (int h = 0; h < 40 && !(next_res < res); ++h) {
        damping *= 0.5;
        next = tau - damping * step;
        next_res = next.imag() > min_im ? residual(next) : std::numeric_limits<double>::infinity();
      }
      if (!(next_res < res)) break;
      // Past this size a full step leaves an error far below roundoff.
      const bool tiny = std::abs(damping * step) <= (damping == 1.0 ? 1e-10 : 1e-15) * std::abs(tau);
      tau = reduce_fundamental(next).tau;
      res = next_res;
      if (tiny || res == 0.0) break;
    }
    return tau;
  }

  double j_error(Complex tau) const {
    return std::abs(j_from_tau(tau) - j_) / std::max(1.0, std::abs(j_));
  }

 private:
  Complex j_;
  Chart chart_;
  Complex target_;
};

struct GridPoint {
  Complex tau, j;
};

const std::vector<GridPoint>& seed_grid() {
  static const std::vector<GridPoint> grid = [] {
    std::vector<GridPoint> g;
    for (int ix = 0; ix <= 20; ++ix) {
      const double x = -0.5 + ix / 20.0;
      const double y0 = std::sqrt(1.0 - x * x);
      for (int iy = 0; iy <= 24; ++iy) {
        const Complex tau{x, y0 + (1.8 - y0) * iy / 24.0};
        g.push_back({tau, j_from_tau(tau)});
      }
    }
    return g;
  }();
  return grid;
}

}  // namespace

Complex invert_j(Complex j) {
  if (!std::isfinite(j.real()) || !std::isfinite(j.imag()))
    throw PreconditionError("invert_j: j must be finite");
  const Tolerances& tol = default_tolerances();
  const Inverter inv(j);

  double best_err = std::numeric_limits<double>::infinity();
  auto attempt = [&](Complex seed) {
    const Complex tau = inv.newton(seed, tol.invert_max_iterations);
    const double err = inv.j_error(tau);
    best_err = std::min(best_err, err);
    return err <= tol.invert_residual ? std::optional<Complex>(tau) : std::nullopt;
  };
  if (inv.chart() == Chart::Log) {
    const Complex q0 = 1.0 / (j - 744.0);
    if (auto tau = attempt(reduce_fundamental(std::log(q0) / (2.0 * kPi * kI)).tau)) return *tau;
  }
  const std::vector<GridPoint>& grid = seed_grid();
  std::vector<std::size_t> order(grid.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  const auto restarts = static_cast<std::ptrdiff_t>(tol.invert_restarts);
  std::partial_sort(order.begin(), order.begin() + restarts, order.end(), [&](std::size_t p, std::size_t q) {
    return std::norm(grid[p].j - j) < std::norm(grid[q].j - j);
  });
  for (std::ptrdiff_t k = 0; k < restarts; ++k)
    if (auto tau = attempt(grid[order[k]].tau)) return *tau;
  throw ConvergenceError("invert_j: Newton iteration did not converge", best_err);
}

AreaResult torus_area(Complex a, Complex b, Complex discriminant) {
  const JValue j = j_from_ab(a, b, discriminant);
  AreaResult out;
  if (j.infinite) {
    out.singular = true;
    out.area = std::numeric_limits<double>::infinity();
    return out;
  }
  out.tau_used = invert_j(j.value);
  const Invariants g = eisenstein(out.tau_used);
  const double from_a = std::abs(a) > 0 ? std::sqrt(std::abs(g.g2 / a)) : 0.0;
  const double from_b = std::abs(b) > 0 ? std::cbrt(std::abs(g.g3 / b)) : 0.0;
  out.used_g2_route = std::abs(a) >= std::pow(std::abs(b), 2.0 / 3.0);
  out.omega_abs_sq = out.used_g2_route ? from_a : from_b;
  const double other = out.used_g2_route ? from_b : from_a;
  // The unused route is only meaningful away from its own zero (j = 1728 or 0).
  const double weight = out.used_g2_route ? std::pow(std::abs(b), 2.0 / 3.0) / std::abs(a)
                                          : std::abs(a) / std::pow(std::abs(b), 2.0 / 3.0);
  out.cross_check = weight > 1e-3 ? std::abs(other - out.omega_abs_sq) / out.omega_abs_sq : 0.0;
  out.area = out.omega_abs_sq * out.tau_used.imag();
  return out;
}

AreaResult torus_area(Complex a, Complex b) { return torus_area(a, b, a * a * a - 27.0 * b * b); }

double log_plus(double x) {
  if (x <= 0.0) return 1.0;
  return std::max(1.0, std::log(x));
}

double lambda_of_ab(Complex a, Complex b) {
  const AreaResult r = torus_area(a, b);
  if (r.singular) throw PreconditionError("lambda_of_ab: singular cubic");
  const double j_abs = std::abs(j_from_ab(a, b).value);
  return r.area * (std::sqrt(std::abs(3.0 * a)) + std::cbrt(std::abs(b))) / log_plus(j_abs);
}

double lambda_of_j(Complex j) {
  // For the representative (g2(tau), g3(tau)) the lattice is <1, tau> itself,
  // so the area is Im(tau); this avoids recomputing j from nearly cancelling
  // invariants when |j| is huge.
  const Complex tau = invert_j(j);
  const Invariants g = eisenstein(tau);
  return tau.imag() * (std::sqrt(std::abs(3.0 * g.g2)) + std::cbrt(std::abs(g.g3))) / log_plus(std::abs(j));
}

}  // namespace k3lab::modular
