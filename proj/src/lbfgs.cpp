#include "parity_gate/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace parity_gate {

namespace {

// Minimiser of the cubic through (a, fa, da), (b, fb, db), safeguarded to
// the interior of [lo, hi].
double cubic_minimizer(double a, double fa, double da, double b, double fb, double db) {
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  const double lo = std::min(a, b), hi = std::max(a, b);
  double x;
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    x = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
  } else {
    x = 0.5 * (a + b);
  }
  if (!std::isfinite(x)) x = 0.5 * (a + b);
  const double margin = 0.1 * (hi - lo);
  return std::clamp(x, lo + margin, hi - margin);
}

struct Point {
  double alpha = 0.0;
  double f = 0.0;
  double d = 0.0;  // directional derivative
  Eigen::VectorXd x, g;
};

class LineSearch {
 public:
  LineSearch(const Objective& obj, const LbfgsOptions& opt, int& evals)
      : obj_(obj), opt_(opt), evals_(evals) {}

  // Returns true and fills `out` on a strong-Wolfe point; on failure `out`
  // holds the best sufficient-decrease point seen (if any) and false.
  bool search(const Eigen::VectorXd& x0, double f0, const Eigen::VectorXd& g0,
              const Eigen::VectorXd& dir, double alpha_init, Point& out, bool& decreased) {
    const double d0 = g0.dot(dir);
    decreased = false;
    Point prev{0.0, f0, d0, x0, g0};
    Point best = prev;
    double alpha = alpha_init;
    for (int i = 0; i < opt_.max_linesearch; ++i) {
      Point cur = eval(x0, dir, alpha);
      if (!std::isfinite(cur.f)) {
        alpha = 0.5 * (prev.alpha + alpha);
        continue;
      }
      if (cur.f <= f0 + opt_.c1 * alpha * d0 && cur.f < best.f) {
        best = cur;
        decreased = true;
      }
      if (cur.f > f0 + opt_.c1 * alpha * d0 || (i > 0 && cur.f >= prev.f))
        return zoom(x0, f0, d0, dir, prev, cur, out, best, decreased);
      if (std::abs(cur.d) <= -opt_.c2 * d0) {
        out = cur;
        return true;
      }
      if (cur.d >= 0.0) return zoom(x0, f0, d0, dir, cur, prev, out, best, decreased);
      prev = cur;
      alpha *= 2.0;
    }
    out = best;
    return false;
  }

 private:
  Point eval(const Eigen::VectorXd& x0, const Eigen::VectorXd& dir, double alpha) {
    Point p;
    p.alpha = alpha;
    p.x = x0 + alpha * dir;
    p.g.resize(x0.size());
    p.f = obj_(p.x, p.g);
    ++evals_;
    p.d = p.g.dot(dir);
    return p;
  }

  bool zoom(const Eigen::VectorXd& x0, double f0, double d0, const Eigen::VectorXd& dir, Point lo,
            Point hi, Point& out, Point& best, bool& decreased) {
    for (int i = 0; i < opt_.max_linesearch; ++i) {
      if (std::abs(hi.alpha - lo.alpha) < 1e-16 * std::max(1.0, std::abs(lo.alpha))) break;
      const double alpha = cubic_minimizer(lo.alpha, lo.f, lo.d, hi.alpha, hi.f, hi.d);
      Point cur = eval(x0, dir, alpha);
      if (std::isfinite(cur.f) && cur.f <= f0 + opt_.c1 * alpha * d0 && cur.f < best.f) {
        best = cur;
        decreased = true;
      }
      if (!std::isfinite(cur.f) || cur.f > f0 + opt_.c1 * alpha * d0 || cur.f >= lo.f) {
        hi = cur;
      } else {
        if (std::abs(cur.d) <= -opt_.c2 * d0) {
          out = cur;
          return true;
        }
        if (cur.d * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
        lo = cur;
      }
    }
    out = best;
    return false;
  }

  const Objective& obj_;
  const LbfgsOptions& opt_;
  int& evals_;
};

}  // namespace

LbfgsResult minimize_lbfgs(const Objective& objective, Eigen::VectorXd x0, const LbfgsOptions& options) {
  LbfgsResult res;
  const long n = x0.size();
  Eigen::VectorXd g(n);
  double f = objective(x0, g);
  res.evaluations = 1;
  res.x = x0;
  res.f = f;
  if (n == 0) {
    res.converged = true;
    res.reason = "no free parameters";
    return res;
  }

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  LineSearch ls(objective, options, res.evaluations);
  Eigen::VectorXd x = x0;

  for (int iter = 0; iter < options.max_iters; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() < options.grad_tolerance) {
      res.converged = true;
      res.reason = "gradient tolerance";
      break;
    }
    // two-loop recursion
    Eigen::VectorXd q = g;
    const int m = static_cast<int>(s_hist.size());
    std::vector<double> alpha(m);
    for (int i = m - 1; i >= 0; --i) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    double gamma = 1.0;
    if (m > 0) gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    Eigen::VectorXd dir = gamma * q;
    for (int i = 0; i < m; ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(dir);
      dir += s_hist[i] * (alpha[i] - beta);
    }
    dir = -dir;
    if (g.dot(dir) >= 0.0) {
      dir = -g;
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }
    const double alpha0 = m == 0 ? std::min(1.0, 1.0 / g.lpNorm<Eigen::Infinity>()) : 1.0;

    Point next;
    bool decreased = false;
    bool ok = ls.search(x, f, g, dir, alpha0, next, decreased);
    if (!ok && !decreased) {
      if (m > 0) {
        // retry along steepest descent with fresh memory
        s_hist.clear();
        y_hist.clear();
        rho_hist.clear();
        dir = -g;
        ok = ls.search(x, f, g, dir, std::min(1.0, 1.0 / g.lpNorm<Eigen::Infinity>()), next, decreased);
      }
      if (!ok && !decreased) {
        res.reason = "line search failed";
        break;
      }
    }

    const Eigen::VectorXd s = next.x - x;
    const Eigen::VectorXd y = next.g - g;
    const double sy = s.dot(y);
    const double f_prev = f;
    x = next.x;
    f = next.f;
    g = next.g;
    res.iterations = iter + 1;
    res.f_history.push_back(f);
    if (sy > 1e-16 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > options.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    if (std::abs(f_prev - f) <= options.rel_cost_tolerance * std::max(std::abs(f_prev), 1e-300)) {
      res.converged = true;
      res.reason = "relative cost change";
      break;
    }
  }
  if (res.reason.empty()) {
    res.converged = g.lpNorm<Eigen::Infinity>() < options.grad_tolerance;
    res.reason = res.converged ? "gradient tolerance" : "iteration limit";
  }
  res.x = x;
  res.f = f;
  return res;
}

}  // namespace parity_gate
