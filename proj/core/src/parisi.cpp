#include "randopt/parisi.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <string>

#include "randopt/error.hpp"
#include "randopt/parallel.hpp"
#include "randopt/rng.hpp"

namespace randopt {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;
constexpr double kInvSqrtPi = 0.56418958354775628695;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;
constexpr double kTinyM = 1e-8;
constexpr double kMinPiece = 1e-4;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }
double normal_pdf(double z) { return std::exp(-0.5 * z * z - kLogSqrt2Pi); }

double log_normal_cdf(double z) {
  if (z > -20.0) return std::log(normal_cdf(z));
  const double z2 = z * z;
  return -0.5 * z2 - std::log(-z) - kLogSqrt2Pi + std::log1p(-1.0 / z2 + 3.0 / (z2 * z2));
}

// E[(1/m) log E exp(m |x + sZ|)] for a single x, closed form.
double terminal_value(double x, double s, double m) {
  const double a = x / s;
  if (m < kTinyM) return x * (2.0 * normal_cdf(a) - 1.0) + 2.0 * s * normal_pdf(a);
  const double u = m * x + log_normal_cdf(a + m * s);
  const double v = -m * x + log_normal_cdf(-a + m * s);
  const double hi = std::max(u, v);
  return 0.5 * m * s * s + (hi + std::log(std::exp(u - hi) + std::exp(v - hi))) / m;
}

// Natural cubic spline on a uniform grid with linear extrapolation.
class UniformSpline {
 public:
  UniformSpline(double x0, double h, const std::vector<double>& y) : x0_(x0), h_(h), y_(y), m2_(y.size(), 0.0) {
    const std::size_t n = y.size();
    if (n < 3) return;
    // Thomas algorithm on the interior system M[i-1] + 4M[i] + M[i+1] = rhs.
    std::vector<double> c(n, 0.0), d(n, 0.0);
    const double scale = 6.0 / (h * h);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double rhs = scale * (y[i - 1] - 2.0 * y[i] + y[i + 1]);
      const double denom = 4.0 - c[i - 1];
      c[i] = 1.0 / denom;
      d[i] = (rhs - d[i - 1]) / denom;
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
      m2_[i] = d[i] - c[i] * m2_[i + 1];
      if (i == 1) break;
    }
    left_slope_ = (y[1] - y[0]) / h - h * m2_[1] / 6.0;
    right_slope_ = (y[n - 1] - y[n - 2]) / h + h * m2_[n - 2] / 6.0;
  }

  double operator()(double x) const {
    const std::size_t n = y_.size();
    const double u = (x - x0_) / h_;
    if (u <= 0.0) return y_[0] + left_slope_ * (x - x0_);
    if (u >= static_cast<double>(n - 1)) return y_[n - 1] + right_slope_ * (u - static_cast<double>(n - 1)) * h_;
    auto i = static_cast<std::size_t>(u);
    if (i >= n - 1) i = n - 2;
    const double t = u - static_cast<double>(i);
    const double s = 1.0 - t;
    return s * y_[i] + t * y_[i + 1] + h_ * h_ / 6.0 * ((s * s * s - s) * m2_[i] + (t * t * t - t) * m2_[i + 1]);
  }

 private:
  double x0_, h_;
  std::vector<double> y_, m2_;
  double left_slope_ = -1.0, right_slope_ = 1.0;
};

struct Hermite {
  std::vector<double> nodes;
  std::vector<double> weights;  // normalized to E over a standard normal
};

const Hermite& hermite_rule(std::size_t q) {
  static std::mutex mutex;
  static std::map<std::size_t, Hermite> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(q);
  if (it != cache.end()) return it->second;
  gsl_integration_fixed_workspace* w = gsl_integration_fixed_alloc(gsl_integration_fixed_hermite, q, 0.0, 1.0, 0.0, 0.0);
  if (w == nullptr) throw GridError("cannot build Gauss-Hermite rule with " + std::to_string(q) + " nodes");
  Hermite rule;
  const double* x = gsl_integration_fixed_nodes(w);
  const double* wt = gsl_integration_fixed_weights(w);
  for (std::size_t i = 0; i < q; ++i) {
    rule.nodes.push_back(kSqrt2 * x[i]);
    rule.weights.push_back(kInvSqrtPi * wt[i]);
  }
  gsl_integration_fixed_free(w);
  return cache.emplace(q, std::move(rule)).first->second;
}

// (1/m) log E exp(m f(Z)) given f at the quadrature nodes.
double tilted_mean(const std::vector<double>& f, const Hermite& rule, double m) {
  double mean = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) mean += rule.weights[i] * f[i];
  if (m < kTinyM) return mean;
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : f) hi = std::max(hi, m * (v - mean));
  double s = 0.0;
  if (hi < 1.0) {
    for (std::size_t i = 0; i < f.size(); ++i) s += rule.weights[i] * std::expm1(m * (f[i] - mean));
    return mean + std::log1p(s) / m;
  }
  for (std::size_t i = 0; i < f.size(); ++i) s += rule.weights[i] * std::exp(m * (f[i] - mean) - hi);
  return mean + (hi + std::log(s)) / m;
}

void check_grid(const PdeGrid& grid, const MixtureSpec& spec) {
  if (!(grid.spacing > 0.0) || !(grid.half_width > 0.0)) throw GridError("grid spacing and half-width must be positive");
  if (grid.quadrature_nodes < 2) throw GridError("at least two quadrature nodes are required");
  const double variance = spec.xi_prime(1.0) - spec.xi_prime(0.0);
  if (grid.half_width < 6.0 * std::sqrt(variance))
    throw GridError("grid half-width " + std::to_string(grid.half_width) + " is below 6 sqrt(variance) = " +
                    std::to_string(6.0 * std::sqrt(variance)));
  if (grid.points() > 2000000) throw GridError("grid has too many points");
}

std::vector<double> grid_nodes(const PdeGrid& grid) {
  const std::size_t n = grid.points();
  const auto half = static_cast<double>((n - 1) / 2);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = (static_cast<double>(i) - half) * grid.spacing;
  return x;
}

// Backward recursion; when profile is null only Psi(0, 0) is needed.
double solve(const OrderParam& raw, const MixtureSpec& spec, const PdeGrid& grid, PdeProfile* profile) {
  raw.validate();
  spec.validate();
  check_grid(grid, spec);
  const OrderParam mu = raw.canonical();
  const std::vector<double> x = grid_nodes(grid);
  const Hermite& rule = hermite_rule(grid.quadrature_nodes);
  const std::size_t k = mu.pieces();

  std::vector<double> current(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) current[i] = std::abs(x[i]);
  if (profile != nullptr) {
    profile->x = x;
    profile->times.assign(1, 1.0);
    profile->values.assign(1, current);
  }

  std::vector<double> f(rule.nodes.size());
  double psi00 = 0.0;
  for (std::size_t jj = k; jj-- > 0;) {
    const double m = mu.values[jj];
    const double dv = spec.xi_prime(mu.breakpoints[jj + 1]) - spec.xi_prime(mu.breakpoints[jj]);
    const double s = std::sqrt(std::max(dv, 0.0));
    const bool terminal = jj + 1 == k && grid.closed_form_terminal;
    const bool only_origin = jj == 0 && profile == nullptr;
    auto value_at = [&](double xi, const UniformSpline* spline) {
      if (s == 0.0) return spline != nullptr ? (*spline)(xi) : std::abs(xi);
      if (terminal) return terminal_value(xi, s, m);
      for (std::size_t q = 0; q < f.size(); ++q) f[q] = (*spline)(xi + s * rule.nodes[q]);
      return tilted_mean(f, rule, m);
    };
    const UniformSpline spline(x.front(), grid.spacing, current);
    if (only_origin) {
      psi00 = value_at(0.0, &spline);
      break;
    }
    std::vector<double> next(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) next[i] = value_at(x[i], &spline);
    current = std::move(next);
    if (profile != nullptr) {
      profile->times.push_back(mu.breakpoints[jj]);
      profile->values.push_back(current);
    }
    if (jj == 0) psi00 = current[(x.size() - 1) / 2];
  }
  if (!std::isfinite(psi00)) throw GridError("PDE solve produced a non-finite value");
  if (profile != nullptr) profile->psi00 = psi00;
  return psi00;
}

}  // namespace

MixtureSpec MixtureSpec::pure(std::uint32_t p, XiNormalization norm) {
  if (p < 1) throw ParameterError("interaction order must be at least 1");
  MixtureSpec spec;
  spec.coefficients.assign(p + 1, 0.0);
  double c = 1.0;
  if (norm == XiNormalization::kFactorial)
    for (std::uint32_t i = 2; i <= p; ++i) c /= static_cast<double>(i);
  spec.coefficients[p] = c;
  return spec;
}

double MixtureSpec::xi(double s) const {
  double v = 0.0;
  for (std::size_t p = coefficients.size(); p-- > 0;) v = v * s + coefficients[p];
  return v;
}

double MixtureSpec::xi_prime(double s) const {
  double v = 0.0;
  for (std::size_t p = coefficients.size(); p-- > 1;) v = v * s + static_cast<double>(p) * coefficients[p];
  return v;
}

double MixtureSpec::xi_second(double s) const {
  double v = 0.0;
  for (std::size_t p = coefficients.size(); p-- > 2;) v = v * s + static_cast<double>(p * (p - 1)) * coefficients[p];
  return v;
}

std::uint32_t MixtureSpec::degree() const {
  for (std::size_t p = coefficients.size(); p-- > 0;)
    if (coefficients[p] != 0.0) return static_cast<std::uint32_t>(p);
  return 0;
}

void MixtureSpec::validate() const {
  if (!coefficients.empty() && coefficients[0] != 0.0) throw ParameterError("xi(0) must be 0");
  bool any = false;
  for (double c : coefficients) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw ParameterError("xi coefficients must be finite and nonnegative");
    any = any || c > 0.0;
  }
  if (!any) throw ParameterError("xi must not vanish identically");
}

const char* class_name(OrderClass c) noexcept { return c == OrderClass::kU ? "U" : "L"; }

OrderParam OrderParam::constant(double m, OrderClass tag) {
  OrderParam mu;
  mu.values = {m};
  mu.tag = tag;
  return mu;
}

double OrderParam::at(double t) const {
  for (std::size_t j = 0; j < values.size(); ++j)
    if (t <= breakpoints[j + 1]) return values[j];
  return values.back();
}

double OrderParam::total_variation() const {
  double tv = 0.0;
  for (std::size_t j = 1; j < values.size(); ++j) tv += std::abs(values[j] - values[j - 1]);
  return tv;
}

OrderParam OrderParam::canonical() const {
  OrderParam out;
  out.tag = tag;
  out.breakpoints = {breakpoints.front()};
  out.values.clear();
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (!out.values.empty() && out.values.back() == values[j]) {
      out.breakpoints.back() = breakpoints[j + 1];
    } else {
      out.values.push_back(values[j]);
      out.breakpoints.push_back(breakpoints[j + 1]);
    }
  }
  return out;
}

void OrderParam::validate(double tv_budget) const {
  if (values.empty() || breakpoints.size() != values.size() + 1)
    throw ParameterError("order parameter needs k + 1 breakpoints for k values");
  if (breakpoints.front() != 0.0 || breakpoints.back() != 1.0)
    throw ParameterError("order parameter breakpoints must start at 0 and end at 1");
  for (std::size_t j = 1; j < breakpoints.size(); ++j)
    if (!(breakpoints[j] > breakpoints[j - 1])) throw ParameterError("breakpoints must be strictly increasing");
  for (double v : values)
    if (!(v >= 0.0) || !std::isfinite(v)) throw ParameterError("order parameter values must be finite and nonnegative");
  if (tag == OrderClass::kU) {
    for (std::size_t j = 1; j < values.size(); ++j)
      if (values[j] < values[j - 1]) throw ParameterError("class U order parameter must be nondecreasing");
  } else if (total_variation() > tv_budget * (1.0 + 1e-12)) {
    throw ParameterError("class L order parameter exceeds its total-variation budget");
  }
}

PdeGrid PdeGrid::for_spec(const MixtureSpec& spec, double m_max) {
  const double sd = std::sqrt(spec.xi_prime(1.0) - spec.xi_prime(0.0));
  PdeGrid grid;
  grid.half_width = sd * (6.0 + std::log1p(std::max(m_max, 0.0)));
  grid.spacing = sd / 80.0;
  grid.quadrature_nodes = 64;
  return grid;
}

std::size_t PdeGrid::points() const {
  const auto half = static_cast<std::size_t>(std::ceil(half_width / spacing - 1e-9));
  return 2 * half + 1;
}

PdeProfile solve_parisi_pde_profile(const OrderParam& mu, const MixtureSpec& spec, const PdeGrid& grid) {
  PdeProfile profile;
  solve(mu, spec, grid, &profile);
  return profile;
}

double solve_parisi_pde(const OrderParam& mu, const MixtureSpec& spec, const PdeGrid& grid) {
  return solve(mu, spec, grid, nullptr);
}

double solve_parisi_pde_fd(const OrderParam& raw, const MixtureSpec& spec, double half_width, double spacing) {
  raw.validate();
  spec.validate();
  check_grid(PdeGrid{half_width, spacing, 2, false}, spec);
  const OrderParam mu = raw.canonical();
  const std::size_t n = PdeGrid{half_width, spacing, 2, false}.points();
  const double h = spacing;
  const auto half = static_cast<double>((n - 1) / 2);
  std::vector<double> psi(n), next(n);
  for (std::size_t i = 0; i < n; ++i) psi[i] = std::abs((static_cast<double>(i) - half) * h);

  const double a_max = std::max(spec.xi_second(1.0), spec.xi_second(0.0));
  double m_top = 0.0;
  for (double v : mu.values) m_top = std::max(m_top, v);
  // Diffusion and advection (|Psi_x| <= 1) stability limits.
  double dt_max = 0.4 * h * h / std::max(a_max, 1e-12);
  if (m_top > 0.0) dt_max = std::min(dt_max, 0.4 * h / (a_max * m_top));

  for (std::size_t jj = mu.pieces(); jj-- > 0;) {
    const double t0 = mu.breakpoints[jj];
    const double t1 = mu.breakpoints[jj + 1];
    const double m = mu.values[jj];
    const auto steps = static_cast<std::size_t>(std::ceil((t1 - t0) / dt_max));
    const double dt = (t1 - t0) / static_cast<double>(steps);
    for (std::size_t s = 0; s < steps; ++s) {
      const double t = t1 - (static_cast<double>(s) + 0.5) * dt;
      const double c = 0.5 * spec.xi_second(t) * dt;
      for (std::size_t i = 1; i + 1 < n; ++i) {
        const double dxx = (psi[i - 1] - 2.0 * psi[i] + psi[i + 1]) / (h * h);
        const double dx = (psi[i + 1] - psi[i - 1]) / (2.0 * h);
        next[i] = psi[i] + c * (dxx + m * dx * dx);
      }
      next[0] = 2.0 * next[1] - next[2];
      next[n - 1] = 2.0 * next[n - 2] - next[n - 3];
      psi.swap(next);
    }
  }
  return psi[(n - 1) / 2];
}

double parisi_penalty(const OrderParam& mu, const MixtureSpec& spec, PenaltyForm form) {
  auto antiderivative = [&](double t) {
    return form == PenaltyForm::kStandard ? t * spec.xi_prime(t) - spec.xi(t) : spec.xi_prime(t);
  };
  double total = 0.0;
  for (std::size_t j = 0; j < mu.pieces(); ++j)
    total += mu.values[j] * (antiderivative(mu.breakpoints[j + 1]) - antiderivative(mu.breakpoints[j]));
  return 0.5 * total;
}

FunctionalValue parisi_functional(const OrderParam& mu, const MixtureSpec& spec, const PdeGrid& grid,
                                  const FunctionalOptions& options) {
  FunctionalValue out;
  out.grid = grid;
  out.psi00 = solve_parisi_pde(mu, spec, grid);
  out.penalty = parisi_penalty(mu, spec, options.penalty);
  out.value = out.psi00 - out.penalty;
  out.discretization_error = std::numeric_limits<double>::quiet_NaN();
  if (options.diagnostics) {
    // The coarse grid may fail the width rule only if the fine one does too.
    out.discretization_error = std::abs(out.psi00 - solve_parisi_pde(mu, spec, grid.coarsened()));
  }
  return out;
}

namespace {

void isotonic(std::vector<double>& v) {
  // Pool adjacent violators with unit weights.
  std::vector<double> sums;
  std::vector<std::size_t> counts;
  for (double x : v) {
    sums.push_back(x);
    counts.push_back(1);
    while (sums.size() > 1 && sums[sums.size() - 2] / static_cast<double>(counts[counts.size() - 2]) >
                                  sums.back() / static_cast<double>(counts.back())) {
      sums[sums.size() - 2] += sums.back();
      counts[counts.size() - 2] += counts.back();
      sums.pop_back();
      counts.pop_back();
    }
  }
  std::size_t i = 0;
  for (std::size_t b = 0; b < sums.size(); ++b)
    for (std::size_t c = 0; c < counts[b]; ++c) v[i++] = sums[b] / static_cast<double>(counts[b]);
}

struct Problem {
  MixtureSpec spec;
  OrderClass cls;
  std::size_t k;
  double m_max;
  double tv_budget;
  PdeGrid grid;
  PenaltyForm penalty;

  // theta = (t_1..t_k, m_1..m_k); mu is 0 on (0, t_1] and m_j on (t_j, t_{j+1}].
  std::size_t dim() const { return 2 * k; }

  OrderParam project(const double* theta) const {
    OrderParam mu;
    mu.tag = cls;
    std::vector<double> b(theta, theta + k);
    for (double& t : b) t = std::clamp(std::isfinite(t) ? t : 0.5, kMinPiece, 1.0 - kMinPiece);
    std::sort(b.begin(), b.end());
    for (std::size_t i = 0; i < k; ++i) b[i] = std::max(b[i], (i == 0 ? 0.0 : b[i - 1]) + kMinPiece);
    for (std::size_t i = k; i-- > 0;) b[i] = std::min(b[i], (i + 1 == k ? 1.0 : b[i + 1]) - kMinPiece);
    mu.breakpoints.assign(1, 0.0);
    mu.breakpoints.insert(mu.breakpoints.end(), b.begin(), b.end());
    mu.breakpoints.push_back(1.0);
    std::vector<double> v(theta + k, theta + 2 * k);
    for (double& x : v) x = std::clamp(std::isfinite(x) ? x : 0.0, 0.0, m_max);
    if (cls == OrderClass::kU) isotonic(v);
    mu.values.assign(1, 0.0);
    mu.values.insert(mu.values.end(), v.begin(), v.end());
    if (cls == OrderClass::kL) {
      const double tv = mu.total_variation();
      if (tv > tv_budget) {
        const double lambda = tv_budget / tv;
        for (double& x : mu.values) x *= lambda;
      }
    }
    return mu;
  }

  std::vector<double> encode(const OrderParam& mu) const {
    std::vector<double> theta(mu.breakpoints.begin() + 1, mu.breakpoints.end() - 1);
    theta.insert(theta.end(), mu.values.begin() + 1, mu.values.end());
    return theta;
  }

  double value(const OrderParam& mu) const {
    return solve_parisi_pde(mu, spec, grid) - parisi_penalty(mu, spec, penalty);
  }
};

// Rewrites mu with exactly k + 1 pieces, the first at 0: splits the longest
// pieces, or merges across the smallest jumps.
OrderParam embed(const OrderParam& warm, std::size_t k, OrderClass cls) {
  OrderParam mu = warm.canonical();
  mu.tag = cls;
  if (mu.values.front() != 0.0) {
    const double cut = std::min(kMinPiece, 0.5 * mu.breakpoints[1]);
    mu.breakpoints.insert(mu.breakpoints.begin() + 1, cut);
    mu.values.insert(mu.values.begin(), 0.0);
  }
  while (mu.pieces() > k + 1) {
    // Drop the smallest value change.
    std::size_t best = 1;
    for (std::size_t j = 1; j < mu.pieces(); ++j)
      if (std::abs(mu.values[j] - mu.values[j - 1]) < std::abs(mu.values[best] - mu.values[best - 1])) best = j;
    mu.values.erase(mu.values.begin() + static_cast<std::ptrdiff_t>(best));
    mu.breakpoints.erase(mu.breakpoints.begin() + static_cast<std::ptrdiff_t>(best));
  }
  while (mu.pieces() < k + 1) {
    std::size_t longest = 0;
    for (std::size_t j = 1; j < mu.pieces(); ++j)
      if (mu.breakpoints[j + 1] - mu.breakpoints[j] > mu.breakpoints[longest + 1] - mu.breakpoints[longest])
        longest = j;
    const double mid = 0.5 * (mu.breakpoints[longest] + mu.breakpoints[longest + 1]);
    mu.breakpoints.insert(mu.breakpoints.begin() + static_cast<std::ptrdiff_t>(longest) + 1, mid);
    mu.values.insert(mu.values.begin() + static_cast<std::ptrdiff_t>(longest), mu.values[longest]);
  }
  return mu;
}

struct NmState {
  const Problem* problem;
  RestartTrace* trace;
  double* min_evaluated;
};

double nm_objective(const gsl_vector* v, void* params) {
  auto* st = static_cast<NmState*>(params);
  const Problem& pr = *st->problem;
  const OrderParam mu = pr.project(v->data);
  const double value = pr.value(mu);
  RestartTrace& tr = *st->trace;
  ++tr.evaluations;
  *st->min_evaluated = std::min(*st->min_evaluated, value);
  if (tr.best_by_evaluation.empty() || value < tr.best_value) {
    tr.best_value = value;
    tr.best = mu;
  }
  tr.best_by_evaluation.push_back(tr.best_value);
  // Pull the simplex back toward the feasible set.
  const std::vector<double> back = pr.encode(mu);
  double dist = 0.0;
  for (std::size_t i = 0; i < back.size(); ++i) {
    const double d = std::isfinite(v->data[i]) ? v->data[i] - back[i] : 1e6;
    dist += d * d;
  }
  return value + 1e-3 * dist;
}

RestartTrace run_restart(const Problem& pr, const std::vector<double>& start, std::size_t index,
                         const MinimizeOptions& options, double& min_evaluated) {
  RestartTrace tr;
  tr.start_index = index;
  const OrderParam mu0 = pr.project(start.data());
  tr.start_value = pr.value(mu0);
  tr.best_value = tr.start_value;
  tr.best = mu0;
  tr.evaluations = 1;
  tr.best_by_evaluation.push_back(tr.start_value);
  min_evaluated = std::min(min_evaluated, tr.start_value);

  const std::size_t dim = pr.dim();
  if (dim == 0) {
    tr.converged = true;
    return tr;
  }
  NmState st{&pr, &tr, &min_evaluated};
  gsl_multimin_function fn{&nm_objective, dim, &st};
  gsl_vector* x = gsl_vector_alloc(dim);
  gsl_vector* step = gsl_vector_alloc(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    gsl_vector_set(x, i, start[i]);
    gsl_vector_set(step, i, i < pr.k ? 0.1 : 0.5 + 0.3 * std::abs(start[i]));
  }
  gsl_multimin_fminimizer* nm = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, dim);
  gsl_multimin_fminimizer_set(nm, &fn, x, step);
  while (tr.evaluations < options.max_evaluations) {
    if (gsl_multimin_fminimizer_iterate(nm) != GSL_SUCCESS) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(nm), options.simplex_tolerance) == GSL_SUCCESS) {
      tr.converged = true;
      break;
    }
  }
  gsl_multimin_fminimizer_free(nm);
  gsl_vector_free(step);
  gsl_vector_free(x);
  tr.best = tr.best.canonical();
  return tr;
}

}  // namespace

MinimizeResult minimize_functional(const MixtureSpec& spec, OrderClass cls, std::size_t k,
                                   const MinimizeOptions& options) {
  spec.validate();
  if (!(options.m_max > 0.0)) throw ParameterError("m_max must be positive");
  if (cls == OrderClass::kL && !(options.tv_budget >= 0.0)) throw ParameterError("TV budget must be nonnegative");
  if (k > 32) throw ParameterError("atom budget above 32 is not supported");
  gsl_set_error_handler_off();

  const Problem pr{spec, cls, k, options.m_max, options.tv_budget, options.grid.value_or(PdeGrid::for_spec(spec, options.m_max)),
                   options.penalty};
  check_grid(pr.grid, spec);

  std::vector<std::vector<double>> starts;
  if (options.warm_start) starts.push_back(pr.encode(embed(*options.warm_start, k, cls)));
  {
    OrderParam zero = embed(OrderParam::constant(0.0, cls), k, cls);
    starts.push_back(pr.encode(zero));
  }
  const RngStream root(options.seed, "parisi-starts");
  for (std::size_t r = starts.size(); r < std::max<std::size_t>(options.restarts, starts.size()); ++r) {
    RngStream rng = root.child(r);
    std::vector<double> theta(2 * k);
    for (std::size_t i = 0; i < k; ++i) theta[i] = rng.uniform();
    std::sort(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(k));
    for (std::size_t i = 0; i < k; ++i) theta[k + i] = 0.1 * std::pow(100.0, rng.uniform());
    if (cls == OrderClass::kU) std::sort(theta.begin() + static_cast<std::ptrdiff_t>(k), theta.end());
    starts.push_back(pr.encode(pr.project(theta.data())));
  }

  std::vector<RestartTrace> traces(starts.size());
  std::vector<double> mins(starts.size(), std::numeric_limits<double>::infinity());
  parallel_for(starts.size(), options.jobs,
               [&](std::size_t i) { traces[i] = run_restart(pr, starts[i], i, options, mins[i]); });

  std::size_t best = 0;
  for (std::size_t i = 1; i < traces.size(); ++i) {
    const RestartTrace& a = traces[i];
    const RestartTrace& b = traces[best];
    if (a.best_value < b.best_value - 1e-6 ||
        (std::abs(a.best_value - b.best_value) <= 1e-6 && a.best.pieces() < b.best.pieces()))
      best = i;
  }
  MinimizeResult out;
  out.mu = traces[best].best;
  out.converged = traces[best].converged;
  for (const auto& t : traces) out.evaluations += t.evaluations;
  for (double m : mins) out.min_evaluated = std::min(out.min_evaluated, m);
  out.value = parisi_functional(out.mu, spec, pr.grid, {options.penalty, true});
  out.restarts = std::move(traces);
  return out;
}

std::vector<MinimizeResult> minimize_nested(const MixtureSpec& spec, OrderClass cls, std::size_t k,
                                            const MinimizeOptions& options) {
  std::vector<MinimizeResult> out;
  MinimizeOptions opts = options;
  for (std::size_t kk = 0; kk <= k; ++kk) {
    out.push_back(minimize_functional(spec, cls, kk, opts));
    opts.warm_start = out.back().mu;
  }
  return out;
}

SupportReport support_report(const OrderParam& raw, double tolerance) {
  const OrderParam mu = raw.canonical();
  SupportReport rep;
  double prev = 0.0;
  for (std::size_t j = 0; j < mu.pieces(); ++j) {
    const double jump = mu.values[j] - prev;
    if (std::abs(jump) > tolerance) {
      rep.atoms.push_back(mu.breakpoints[j]);
      rep.jumps.push_back(jump);
    }
    prev = mu.values[j];
  }
  rep.strictly_increasing = !rep.jumps.empty();
  for (double j : rep.jumps) rep.strictly_increasing = rep.strictly_increasing && j > 0.0;
  for (std::size_t i = 1; i < rep.atoms.size(); ++i) {
    if (rep.atoms[i] - rep.atoms[i - 1] > rep.widest_gap) {
      rep.widest_gap = rep.atoms[i] - rep.atoms[i - 1];
      rep.gap_start = rep.atoms[i - 1];
      rep.gap_end = rep.atoms[i];
    }
  }
  return rep;
}

nlohmann::json to_json(const OrderParam& mu) {
  return {{"class", class_name(mu.tag)}, {"breakpoints", mu.breakpoints}, {"values", mu.values}};
}

OrderParam order_param_from_json(const nlohmann::json& j) {
  OrderParam mu;
  try {
    const std::string cls = j.at("class").get<std::string>();
    if (cls != "U" && cls != "L") throw ParameterError("unknown order parameter class " + cls);
    mu.tag = cls == "U" ? OrderClass::kU : OrderClass::kL;
    mu.breakpoints = j.at("breakpoints").get<std::vector<double>>();
    mu.values = j.at("values").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("malformed order parameter: ") + e.what());
  }
  mu.validate();
  return mu;
}

nlohmann::json to_json(const FunctionalValue& v) {
  nlohmann::json err = nullptr;
  if (std::isfinite(v.discretization_error)) err = v.discretization_error;
  return {{"psi00", v.psi00},
          {"penalty", v.penalty},
          {"value", v.value},
          {"discretization_error", err},
          {"grid",
           {{"half_width", v.grid.half_width},
            {"spacing", v.grid.spacing},
            {"quadrature_nodes", v.grid.quadrature_nodes}}}};
}

nlohmann::json to_json(const MinimizeResult& r) {
  nlohmann::json restarts = nlohmann::json::array();
  for (const auto& t : r.restarts) {
    restarts.push_back({{"start", t.start_index},
                        {"start_value", t.start_value},
                        {"best_value", t.best_value},
                        {"evaluations", t.evaluations},
                        {"converged", t.converged},
                        {"best", to_json(t.best)},
                        {"trace", t.best_by_evaluation}});
  }
  const SupportReport sup = support_report(r.mu);
  return {{"mu", to_json(r.mu)},
          {"functional", to_json(r.value)},
          {"converged", r.converged},
          {"evaluations", r.evaluations},
          {"min_evaluated", r.min_evaluated},
          {"support",
           {{"atoms", sup.atoms},
            {"jumps", sup.jumps},
            {"strictly_increasing", sup.strictly_increasing},
            {"widest_gap", sup.widest_gap},
            {"gap", {sup.gap_start, sup.gap_end}}}},
          {"restarts", restarts}};
}

std::vector<ConvergenceRow> grid_convergence(const OrderParam& mu, const MixtureSpec& spec, const PdeGrid& start,
                                             std::size_t levels) {
  std::vector<ConvergenceRow> rows;
  PdeGrid g = start;
  for (std::size_t i = 0; i < levels; ++i) {
    rows.push_back({g.spacing, g.quadrature_nodes, solve_parisi_pde(mu, spec, g)});
    g = g.refined();
  }
  return rows;
}

void write_convergence_csv(std::ostream& out, const std::vector<ConvergenceRow>& rows) {
  out << "h,q,psi00\r\n";
  char buf[96];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%zu,%.17g\r\n", r.spacing, r.nodes, r.psi00);
    out << buf;
  }
}

}  // namespace randopt
