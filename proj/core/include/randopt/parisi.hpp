#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

namespace randopt {

/// Normalization of the pure p-spin covariance xi(s) = c s^p.
enum class XiNormalization {
  kFactorial,  // c = 1/p!, matching the increasing-tuple Hamiltonian
  kUnit,       // c = 1
};

/// Covariance function xi(s) = sum_p c_p s^p of the Gaussian Hamiltonian.
struct MixtureSpec {
  std::vector<double> coefficients;  // coefficients[p] = c_p

  static MixtureSpec pure(std::uint32_t p, XiNormalization norm = XiNormalization::kFactorial);

  double xi(double s) const;
  double xi_prime(double s) const;
  double xi_second(double s) const;
  /// Largest power with a nonzero coefficient.
  std::uint32_t degree() const;
  /// Throws ParameterError unless xi(0) = 0 and all coefficients are >= 0.
  void validate() const;
};

enum class OrderClass {
  kU,  // nonnegative, nondecreasing
  kL,  // nonnegative, total variation within a budget
};

const char* class_name(OrderClass c) noexcept;

/// Piecewise-constant mu on [0, 1]: values[j] holds on (breakpoints[j], breakpoints[j + 1]].
struct OrderParam {
  std::vector<double> breakpoints{0.0, 1.0};
  std::vector<double> values{0.0};
  OrderClass tag = OrderClass::kU;

  static OrderParam constant(double m, OrderClass tag = OrderClass::kU);

  std::size_t pieces() const noexcept { return values.size(); }
  double at(double t) const;
  /// sum_j |values[j] - values[j - 1]|.
  double total_variation() const;
  /// Adjacent pieces with equal values merged.
  OrderParam canonical() const;
  /// Throws ParameterError on any broken invariant for the tag.
  void validate(double tv_budget = INFINITY) const;
};

struct PdeGrid {
  double half_width = 10.0;
  double spacing = 0.0125;
  std::size_t quadrature_nodes = 64;
  /// Integrate the last piece against |x| in closed form rather than by quadrature.
  bool closed_form_terminal = true;

  /// Default grid sized for the accumulated variance xi'(1) and the mu cap.
  static PdeGrid for_spec(const MixtureSpec& spec, double m_max = 100.0);
  PdeGrid refined() const { return {half_width, spacing / 2, quadrature_nodes * 2, closed_form_terminal}; }
  PdeGrid coarsened() const {
    return {half_width, spacing * 2, std::max<std::size_t>(quadrature_nodes / 2, 8), closed_form_terminal};
  }
  std::size_t points() const;
};

/// Psi_mu on the x-grid at every breakpoint, t_k = 1 first is |x|.
struct PdeProfile {
  std::vector<double> x;
  std::vector<double> times;                // descending: 1 = t_k, ..., t_1
  std::vector<std::vector<double>> values;  // values[i] = Psi(times[i], x)
  double psi00 = 0.0;
};

/// Backward solve of the zero-temperature Parisi PDE with Psi(1, x) = |x|.
/// On each piece with mu = m the Cole-Hopf substitution turns the PDE into a
/// heat equation with variance xi'(t_j) - xi'(t_{j-1}); expectations use
/// Gauss-Hermite quadrature against a cubic spline of the later profile. The
/// last piece is integrated in closed form against |x| directly.
PdeProfile solve_parisi_pde_profile(const OrderParam& mu, const MixtureSpec& spec, const PdeGrid& grid);
double solve_parisi_pde(const OrderParam& mu, const MixtureSpec& spec, const PdeGrid& grid);

/// Explicit finite-difference solver of the same PDE; cross-check at coarse tolerance.
double solve_parisi_pde_fd(const OrderParam& mu, const MixtureSpec& spec, double half_width, double spacing);

enum class PenaltyForm {
  kStandard,       // (1/2) int t xi''(t) mu(t) dt
  kUnweighted,  // (1/2) int xi''(t) mu(t) dt
};

double parisi_penalty(const OrderParam& mu, const MixtureSpec& spec, PenaltyForm form = PenaltyForm::kStandard);

struct FunctionalValue {
  double psi00 = 0.0;
  double penalty = 0.0;
  double value = 0.0;
  /// |psi00(grid) - psi00(coarsened grid)|; NaN when diagnostics are off.
  double discretization_error = 0.0;
  PdeGrid grid;
};

struct FunctionalOptions {
  PenaltyForm penalty = PenaltyForm::kStandard;
  bool diagnostics = true;
};

FunctionalValue parisi_functional(const OrderParam& mu, const MixtureSpec& spec, const PdeGrid& grid,
                                  const FunctionalOptions& options = {});

struct MinimizeOptions {
  std::size_t restarts = 8;
  std::size_t max_evaluations = 1500;  // per restart
  double simplex_tolerance = 1e-7;
  double m_max = 100.0;
  double tv_budget = 100.0;  // class L only
  std::uint64_t seed = 0;
  std::optional<PdeGrid> grid;
  PenaltyForm penalty = PenaltyForm::kStandard;
  std::optional<OrderParam> warm_start;  // used as restart 0
  unsigned jobs = 1;
};

struct RestartTrace {
  std::size_t start_index = 0;
  double start_value = 0.0;
  double best_value = 0.0;
  std::size_t evaluations = 0;
  bool converged = false;
  std::vector<double> best_by_evaluation;
  OrderParam best;
};

struct MinimizeResult {
  OrderParam mu;
  FunctionalValue value;
  bool converged = false;  // false => best-so-far after the evaluation budget
  std::size_t evaluations = 0;
  double min_evaluated = INFINITY;
  std::vector<RestartTrace> restarts;
};

/// Local minimization of P over order parameters with k atoms (mu = 0 up to
/// the first atom, then k jumps; k = 0 is mu = 0) in the given class by
/// projected Nelder-Mead from seeded starts.
MinimizeResult minimize_functional(const MixtureSpec& spec, OrderClass cls, std::size_t k,
                                   const MinimizeOptions& options = {});

/// Minimizes for 0..k atoms in turn, warm-starting each budget from
/// the previous optimum so the best values are nonincreasing in k.
std::vector<MinimizeResult> minimize_nested(const MixtureSpec& spec, OrderClass cls, std::size_t k,
                                            const MinimizeOptions& options = {});

/// Support structure of an optimized mu (read as the distribution function
/// of the overlap measure).
struct SupportReport {
  std::vector<double> atoms;         // breakpoints where mu jumps up or down
  std::vector<double> jumps;         // signed jump sizes
  bool strictly_increasing = false;  // every jump positive
  double widest_gap = 0.0;           // widest atom-free stretch between the first and last atom
  double gap_start = 0.0;
  double gap_end = 0.0;
};
SupportReport support_report(const OrderParam& mu, double tolerance = 1e-6);

nlohmann::json to_json(const OrderParam& mu);
OrderParam order_param_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FunctionalValue& v);
nlohmann::json to_json(const MinimizeResult& r);

struct ConvergenceRow {
  double spacing;
  std::size_t nodes;
  double psi00;
};
/// psi00 for successive halvings of h with doubled q.
std::vector<ConvergenceRow> grid_convergence(const OrderParam& mu, const MixtureSpec& spec, const PdeGrid& start,
                                             std::size_t levels);
/// CSV with columns h,q,psi00.
void write_convergence_csv(std::ostream& out, const std::vector<ConvergenceRow>& rows);

}  // namespace randopt
