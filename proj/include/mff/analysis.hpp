#pragma once
//! \file
//! Central-charge fits and BKT finite-size-scaling collapses.

#include "mff/core.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_fit.h>
#include <gsl/gsl_interp.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mff::analysis {

// ------------------------------------------------------------ CFT fits ---

struct CftFit {
  double c = 0.0;
  double s0 = 0.0;
  double stderr_c = 0.0;
  double stderr_s0 = 0.0;
  //! System sizes (half-chain fit) or cut lengths (profile fit) used.
  std::vector<int> window;
  double chi2 = 0.0;
};

//! Half-chain entropy at one system size.
struct SizePoint {
  int L = 0;
  double S = 0.0;
  double err = 0.0;
};

//! Entropy of a cut of length l.
struct CutPoint {
  int l = 0;
  double S = 0.0;
  double err = 0.0;
};

namespace detail {

inline bool usable_errors(std::span<const double> err) {
  return std::all_of(err.begin(), err.end(), [](double e) { return std::isfinite(e) && e > 0.0; });
}

//! S = slope * x + s0 with inverse-variance weights; unweighted (residual
//! scaled covariance) when any error is missing or zero.
inline CftFit linear_fit(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& err) {
  const auto n = x.size();
  double c0 = 0, c1 = 0, cov00 = 0, cov01 = 0, cov11 = 0, chi2 = 0;
  int rc = 0;
  if (usable_errors(err)) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = 1.0 / (err[i] * err[i]);
    rc = gsl_fit_wlinear(x.data(), 1, w.data(), 1, y.data(), 1, n, &c0, &c1, &cov00, &cov01, &cov11, &chi2);
  } else {
    rc = gsl_fit_linear(x.data(), 1, y.data(), 1, n, &c0, &c1, &cov00, &cov01, &cov11, &chi2);
  }
  require(rc == GSL_SUCCESS && std::isfinite(c1), "linear regression failed");
  CftFit f;
  f.c = 3.0 * c1;
  f.s0 = c0;
  f.stderr_c = 3.0 * std::sqrt(std::max(cov11, 0.0));
  f.stderr_s0 = std::sqrt(std::max(cov00, 0.0));
  f.chi2 = chi2;
  return f;
}

inline void require_spread(const std::vector<double>& x) {
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  require(*hi - *lo > 1e-12 * std::max(1.0, std::abs(*hi)), "fit abscissas are degenerate");
}

}  // namespace detail

//! Fits S(L/2) = (c/3) ln(L/pi) + s0 across system sizes.
inline CftFit fit_half_chain_charge(std::span<const SizePoint> points) {
  std::vector<int> sizes;
  for (const auto& p : points) {
    require(p.L >= 2, "system sizes must be at least 2");
    sizes.push_back(p.L);
  }
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  require(sizes.size() >= 3, "half-chain fit needs at least three distinct system sizes");
  std::vector<double> x, y, e;
  for (const auto& p : points) {
    x.push_back(std::log(p.L / std::numbers::pi));
    y.push_back(p.S);
    e.push_back(p.err);
  }
  auto fit = detail::linear_fit(x, y, e);
  fit.window = std::move(sizes);
  return fit;
}

//! Fraction-of-L bounds for the cuts entering a profile fit.
struct FitWindow {
  double lo = 0.25;
  double hi = 0.75;
};

inline double chord_log(int l, int L) {
  return std::log(L / std::numbers::pi * std::sin(std::numbers::pi * l / L));
}

//! Fits S(l) = (c/3) ln((L/pi) sin(pi l / L)) + s0 over cuts in the window.
inline CftFit fit_profile_charge(std::span<const CutPoint> profile, int L, FitWindow window = {}) {
  require(L >= 2, "L must be at least 2");
  require(window.lo <= window.hi, "fit window bounds are inverted");
  std::vector<double> x, y, e;
  std::vector<int> used;
  for (const auto& p : profile) {
    require(p.l >= 1 && p.l < L, "cut length must satisfy 1 <= l < L");
    if (p.l < window.lo * L - 1e-9 || p.l > window.hi * L + 1e-9) continue;
    x.push_back(chord_log(p.l, L));
    y.push_back(p.S);
    e.push_back(p.err);
    used.push_back(p.l);
  }
  require(x.size() >= 3, "profile fit needs at least three cuts inside the window");
  detail::require_spread(x);
  auto fit = detail::linear_fit(x, y, e);
  fit.window = std::move(used);
  return fit;
}

// ------------------------------------------------------- collapse cost ---

struct Triple {
  double x = 0.0;
  double y = 0.0;
  double d = 0.0;
};

//! Sorts by x, then y, then d, so the result is independent of input order.
inline std::vector<Triple> sort_for_cost(std::vector<Triple> t) {
  std::sort(t.begin(), t.end(), [](const Triple& a, const Triple& b) {
    if (a.x != b.x) return a.x < b.x;
    if (a.y != b.y) return a.y < b.y;
    return a.d < b.d;
  });
  return t;
}

//! Mean over interior points of (y_i - ybar)^2 / Delta^2, where ybar is the
//! linear interpolant through the two x-neighbours and Delta^2 carries the
//! propagated errors of all three points. Written with the interpolation
//! weight t = (x - x_-)/(x_+ - x_-), which stays bounded when neighbours
//! (nearly) coincide; exact ties use t = 1/2.
inline double collapse_cost(std::vector<Triple> input) {
  require(input.size() >= 3, "collapse cost needs at least three points");
  for (const auto& t : input)
    require(std::isfinite(t.x) && std::isfinite(t.y) && std::isfinite(t.d) && t.d > 0.0,
            "collapse triples need finite values and positive errors");
  const auto pts = sort_for_cost(std::move(input));
  const std::size_t n = pts.size();
  double total = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const auto& a = pts[i - 1];
    const auto& b = pts[i];
    const auto& c = pts[i + 1];
    const double span = c.x - a.x;
    const double t = span > 0.0 ? std::clamp((b.x - a.x) / span, 0.0, 1.0) : 0.5;
    const double ybar = (1.0 - t) * a.y + t * c.y;
    const double delta2 = b.d * b.d + (1.0 - t) * (1.0 - t) * a.d * a.d + t * t * c.d * c.d;
    total += (b.y - ybar) * (b.y - ybar) / delta2;
  }
  return total / static_cast<double>(n - 2);
}

// ------------------------------------------------------------ collapses ---

//! Observable at system size L and driving parameter p (gamma or W).
struct ScalingPoint {
  int L = 0;
  double p = 0.0;
  double value = 0.0;
  double err = 0.0;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return v >= lo && v <= hi; }
};

struct SearchRange {
  double lo = 0.0;
  double hi = 0.0;
  int grid = 101;

  void validate(const char* name) const {
    require(std::isfinite(lo) && std::isfinite(hi) && lo < hi, std::string("empty search range for ") + name);
    require(grid >= 3, std::string("search grid for ") + name + " needs at least three points");
  }
  double at(int k) const { return lo + (hi - lo) * k / (grid - 1); }
};

struct CollapseResult {
  double critical = 0.0;
  Interval critical_interval;
  std::optional<double> alpha;
  std::optional<Interval> alpha_interval;
  std::optional<double> beta;
  std::optional<Interval> beta_interval;
  double eps_min = 0.0;
  //! Grid minimum touched the edge of the search box.
  bool at_boundary = false;
  std::string status() const { return at_boundary ? "boundary" : "ok"; }
};

namespace detail {

inline std::map<int, std::vector<ScalingPoint>> by_size(std::span<const ScalingPoint> data) {
  std::map<int, std::vector<ScalingPoint>> out;
  for (const auto& p : data) {
    require(p.L >= 2, "system sizes must be at least 2");
    require(std::isfinite(p.p) && std::isfinite(p.value), "scaling data must be finite");
    out[p.L].push_back(p);
  }
  for (auto& [L, pts] : out) {
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.p < b.p; });
    for (std::size_t i = 1; i < pts.size(); ++i)
      require(pts[i].p > pts[i - 1].p, "duplicate driving-parameter values at one system size");
  }
  return out;
}

//! Monotone cubic (Steffen) interpolation in p; linear with two knots.
class MonotoneCurve {
 public:
  explicit MonotoneCurve(const std::vector<ScalingPoint>& pts) {
    static const bool handler_off = (gsl_set_error_handler_off(), true);
    (void)handler_off;
    for (const auto& q : pts) {
      x_.push_back(q.p);
      y_.push_back(q.value);
    }
    require(x_.size() >= 2, "interpolation needs at least two driving-parameter values per size");
    const gsl_interp_type* type = x_.size() >= 3 ? gsl_interp_steffen : gsl_interp_linear;
    interp_.reset(gsl_interp_alloc(type, x_.size()));
    gsl_interp_init(interp_.get(), x_.data(), y_.data(), x_.size());
    accel_.reset(gsl_interp_accel_alloc());
  }

  double lo() const { return x_.front(); }
  double hi() const { return x_.back(); }

  double operator()(double p) const {
    for (std::size_t i = 0; i < x_.size(); ++i)
      if (x_[i] == p) return y_[i];
    return gsl_interp_eval(interp_.get(), x_.data(), y_.data(), p, accel_.get());
  }

 private:
  struct InterpFree {
    void operator()(gsl_interp* p) const { gsl_interp_free(p); }
  };
  struct AccelFree {
    void operator()(gsl_interp_accel* p) const { gsl_interp_accel_free(p); }
  };
  std::vector<double> x_, y_;
  std::unique_ptr<gsl_interp, InterpFree> interp_;
  std::unique_ptr<gsl_interp_accel, AccelFree> accel_;
};

//! Nelder-Mead (GSL nmsimplex2) from `start`; returns (argmin, min).
inline std::pair<std::vector<double>, double> nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                                           std::vector<double> start, const std::vector<double>& step,
                                                           int max_iter = 2000, double size_tol = 1e-10) {
  const std::size_t n = start.size();
  struct Ctx {
    const std::function<double(const std::vector<double>&)>* f;
    std::size_t n;
  } ctx{&f, n};
  gsl_multimin_function fn;
  fn.n = n;
  fn.params = &ctx;
  fn.f = [](const gsl_vector* v, void* params) -> double {
    const auto* c = static_cast<Ctx*>(params);
    std::vector<double> x(c->n);
    for (std::size_t i = 0; i < c->n; ++i) x[i] = gsl_vector_get(v, i);
    return (*c->f)(x);
  };
  gsl_vector* x0 = gsl_vector_alloc(n);
  gsl_vector* ss = gsl_vector_alloc(n);
  for (std::size_t i = 0; i < n; ++i) {
    gsl_vector_set(x0, i, start[i]);
    gsl_vector_set(ss, i, step[i]);
  }
  gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
  gsl_multimin_fminimizer_set(s, &fn, x0, ss);
  for (int it = 0; it < max_iter; ++it) {
    if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), size_tol) == GSL_SUCCESS) break;
  }
  std::vector<double> best(n);
  for (std::size_t i = 0; i < n; ++i) best[i] = gsl_vector_get(s->x, i);
  const double fmin = s->fval;
  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(ss);
  gsl_vector_free(x0);
  return {best, fmin};
}

//! Finite penalty for leaving the search box (nmsimplex2 rejects inf).
inline double box_penalty(const std::vector<double>& x, const std::vector<const SearchRange*>& box) {
  double excess = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    excess += std::max(0.0, box[i]->lo - x[i]) + std::max(0.0, x[i] - box[i]->hi);
  }
  return excess > 0.0 ? 1e30 * (1.0 + excess) : 0.0;
}

inline constexpr double kInfeasible = 1e300;

//! Grid scan over the box followed by Nelder-Mead refinement. Grid ties go
//! to the lexicographically smallest parameter vector.
inline CollapseResult scan_and_refine(const std::function<double(const std::vector<double>&)>& cost,
                                      const std::vector<const SearchRange*>& box) {
  const std::size_t dim = box.size();
  std::size_t total = 1;
  for (const auto* r : box) total *= static_cast<std::size_t>(r->grid);
  std::vector<int> best_idx(dim, 0);
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::pair<std::vector<int>, double>> evaluated;
  evaluated.reserve(total);
  // Flat order has the first parameter varying slowest, so the first strict
  // improvement seen is the lexicographically smallest argmin.
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::vector<int> idx(dim);
    std::vector<double> x(dim);
    std::size_t rem = flat;
    for (std::size_t i = dim; i-- > 0;) {
      idx[i] = static_cast<int>(rem % static_cast<std::size_t>(box[i]->grid));
      rem /= static_cast<std::size_t>(box[i]->grid);
      x[i] = box[i]->at(idx[i]);
    }
    const double e = cost(x);
    if (e < best) {
      best = e;
      best_idx = idx;
    }
    evaluated.emplace_back(std::move(idx), e);
  }
  require(best < kInfeasible, "no admissible collapse: fewer than three rescaled points for every candidate");

  std::vector<double> start(dim), step(dim);
  bool edge = false;
  for (std::size_t i = 0; i < dim; ++i) {
    start[i] = box[i]->at(best_idx[i]);
    step[i] = (box[i]->hi - box[i]->lo) / (box[i]->grid - 1);
    edge = edge || best_idx[i] == 0 || best_idx[i] == box[i]->grid - 1;
  }
  auto penalised = [&](const std::vector<double>& x) {
    const double pen = box_penalty(x, box);
    if (pen > 0.0) return pen;
    return std::min(cost(x), 1e29);
  };
  auto [xr, er] = nelder_mead(penalised, start, step);
  if (!(er < best) || box_penalty(xr, box) > 0.0) {
    xr = start;
    er = best;
  }

  CollapseResult res;
  res.eps_min = er;
  res.at_boundary = edge;
  std::vector<Interval> ivals(dim);
  for (std::size_t i = 0; i < dim; ++i) ivals[i] = {xr[i], xr[i]};
  for (const auto& [g, e] : evaluated) {
    if (e > 2.0 * er) continue;
    for (std::size_t i = 0; i < dim; ++i) {
      const double v = box[i]->at(g[i]);
      ivals[i].lo = std::min(ivals[i].lo, v);
      ivals[i].hi = std::max(ivals[i].hi, v);
    }
  }
  res.critical = xr[0];
  res.critical_interval = ivals[0];
  if (dim == 3) {
    res.alpha = xr[1];
    res.alpha_interval = ivals[1];
    res.beta = xr[2];
    res.beta_interval = ivals[2];
  }
  return res;
}

}  // namespace detail

//! A rescaled point that remembers where it came from.
struct LabelledTriple {
  int L = 0;
  double p = 0.0;
  Triple t;
};

inline std::vector<Triple> strip_labels(const std::vector<LabelledTriple>& pts) {
  std::vector<Triple> out;
  out.reserve(pts.size());
  for (const auto& q : pts) out.push_back(q.t);
  return out;
}

//! x = (p - pc)(ln L)^2, y = S(p) - S(pc) with S(pc) interpolated per size.
inline std::vector<LabelledTriple> entropy_collapse_points(std::span<const ScalingPoint> data, double pc) {
  std::vector<LabelledTriple> out;
  for (const auto& [L, pts] : detail::by_size(data)) {
    const detail::MonotoneCurve curve(pts);
    require(pc >= curve.lo() && pc <= curve.hi(), "critical candidate outside the data range for L=" + std::to_string(L));
    const double ref = curve(pc);
    const double lnL2 = std::log(L) * std::log(L);
    for (const auto& q : pts) out.push_back({L, q.p, {(q.p - pc) * lnL2, q.value - ref, q.err}});
  }
  return out;
}

inline std::vector<Triple> entropy_collapse_triples(std::span<const ScalingPoint> data, double pc) {
  return strip_labels(entropy_collapse_points(data, pc));
}

inline CollapseResult collapse_entropy(std::span<const ScalingPoint> data, SearchRange range) {
  range.validate("the critical point");
  const auto groups = detail::by_size(data);
  require(groups.size() >= 3, "entropy collapse needs at least three system sizes");
  for (const auto& [L, pts] : groups) {
    require(pts.size() >= 2, "each system size needs at least two driving-parameter values");
    require(range.lo >= pts.front().p && range.hi <= pts.back().p,
            "search range is not bracketed by the data for L=" + std::to_string(L));
  }
  for (const auto& q : data) require(q.err > 0.0, "entropy errors must be positive");
  auto cost = [&](const std::vector<double>& x) { return collapse_cost(entropy_collapse_triples(data, x[0])); };
  return detail::scan_and_refine(cost, {&range});
}

//! g(L) = [1 + 1/(2 ln L - beta)]^{-1}
inline double bkt_g(double L, double beta) { return 1.0 / (1.0 + 1.0 / (2.0 * std::log(L) - beta)); }

//! x = ln L - alpha / sqrt(p - pc), y = c p g(L); points with p <= pc drop out.
inline std::vector<LabelledTriple> charge_collapse_points(std::span<const ScalingPoint> data, double pc, double alpha,
                                                          double beta) {
  std::vector<LabelledTriple> out;
  for (const auto& q : data) {
    if (!(q.p > pc)) continue;
    const double g = bkt_g(q.L, beta);
    const Triple t{std::log(q.L) - alpha / std::sqrt(q.p - pc), q.value * q.p * g, q.err * std::abs(q.p * g)};
    if (!std::isfinite(t.x) || !std::isfinite(t.y) || !std::isfinite(t.d) || !(t.d > 0.0)) continue;
    out.push_back({q.L, q.p, t});
  }
  require(out.size() >= 3, "fewer than three points above the critical candidate");
  return out;
}

inline std::vector<Triple> charge_collapse_triples(std::span<const ScalingPoint> data, double pc, double alpha,
                                                   double beta) {
  return strip_labels(charge_collapse_points(data, pc, alpha, beta));
}

struct ChargeSearch {
  SearchRange critical;
  SearchRange alpha;
  SearchRange beta;
};

inline CollapseResult collapse_charge(std::span<const ScalingPoint> data, ChargeSearch search) {
  search.critical.validate("the critical point");
  search.alpha.validate("alpha");
  search.beta.validate("beta");
  const auto groups = detail::by_size(data);
  require(groups.size() >= 3, "central-charge collapse needs at least three system sizes");
  for (const auto& q : data) require(q.err > 0.0, "central-charge errors must be positive");
  auto cost = [&](const std::vector<double>& x) {
    try {
      return collapse_cost(charge_collapse_triples(data, x[0], x[1], x[2]));
    } catch (const ParameterError&) {
      return detail::kInfeasible;
    }
  };
  return detail::scan_and_refine(cost, {&search.critical, &search.alpha, &search.beta});
}

// ------------------------------------------------------- phase boundary ---

enum class Driving { gamma, W };

//! A collapse at fixed W (driving gamma) or fixed gamma (driving W).
struct BoundaryInput {
  Driving driving = Driving::gamma;
  double fixed = 0.0;
  double critical = 0.0;
  std::optional<double> error;
};

struct BoundaryPoint {
  double W = 0.0;
  double gamma = 0.0;
  std::optional<double> W_err;
  std::optional<double> gamma_err;
  //! Position along the boundary in [0, 1]: 0 on the gamma axis, 1 on the W axis.
  double s = 0.0;
  Driving source = Driving::gamma;
};

//! Merges W-rows and gamma-columns into one table ordered by the polar angle
//! about the origin, which is monotone along a boundary enclosing it.
inline std::vector<BoundaryPoint> phase_boundary(std::span<const BoundaryInput> inputs) {
  require(!inputs.empty(), "phase boundary needs at least one collapse result");
  std::vector<BoundaryPoint> out;
  for (const auto& in : inputs) {
    BoundaryPoint b;
    b.source = in.driving;
    if (in.driving == Driving::gamma) {
      b.W = in.fixed;
      b.gamma = in.critical;
      b.gamma_err = in.error;
    } else {
      b.gamma = in.fixed;
      b.W = in.critical;
      b.W_err = in.error;
    }
    require(b.W >= 0.0 && b.gamma >= 0.0, "boundary points must lie in the W, gamma >= 0 quadrant");
    b.s = (b.W == 0.0 && b.gamma == 0.0) ? 0.0 : 1.0 - std::atan2(b.gamma, b.W) / (std::numbers::pi / 2);
    out.push_back(b);
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.s < b.s; });
  return out;
}

}  // namespace mff::analysis
