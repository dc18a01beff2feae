#include "expertsurv/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace expertsurv::optim {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double eval(const Objective& f, std::span<const double> x) {
  const double v = f(x);
  return std::isnan(v) ? kInf : v;
}

double norm(std::span<const double> v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

// One Nelder-Mead run from an axis-aligned simplex around x0.
Result nelder_mead_once(const Objective& f, const std::vector<double>& x0, const NelderMeadOptions& opt,
                        int budget) {
  const std::size_t n = x0.size();
  std::vector<std::vector<double>> simplex(n + 1, x0);
  std::vector<double> fv(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double step = opt.initial_step * std::max(1.0, std::fabs(x0[i]));
    simplex[i + 1][i] += step;
  }
  for (std::size_t i = 0; i <= n; ++i) fv[i] = eval(f, simplex[i]);

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), trial(n), trial2(n);
  int iter = 0;
  bool converged = false;
  for (; iter < budget; ++iter) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];

    double diameter = 0.0;
    for (std::size_t i = 0; i <= n; ++i)
      for (std::size_t k = 0; k < n; ++k)
        diameter = std::max(diameter, std::fabs(simplex[i][k] - simplex[best][k]));
    const double scale = 1.0 + norm(simplex[best]);
    const bool flat = std::isfinite(fv[worst]) && fv[worst] - fv[best] <= opt.f_abs_tol + opt.f_rel_tol * std::fabs(fv[best]);
    if ((flat && diameter <= opt.x_tol * scale) || diameter <= 1e-14 * scale) {
      converged = true;
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= n; ++i)
      if (i != worst)
        for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[i][k] / n;

    auto along = [&](double coef, std::vector<double>& out) {
      for (std::size_t k = 0; k < n; ++k) out[k] = centroid[k] + coef * (simplex[worst][k] - centroid[k]);
      return eval(f, out);
    };
    const double fr = along(-1.0, trial);
    if (fr < fv[best]) {
      const double fe = along(-2.0, trial2);
      if (fe < fr) {
        simplex[worst] = trial2;
        fv[worst] = fe;
      } else {
        simplex[worst] = trial;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      simplex[worst] = trial;
      fv[worst] = fr;
      continue;
    }
    const bool outside = fr < fv[worst];
    const double fc = along(outside ? -0.5 : 0.5, trial2);
    if (fc < std::min(fr, fv[worst])) {
      simplex[worst] = trial2;
      fv[worst] = fc;
      continue;
    }
    // shrink toward the best vertex
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == best) continue;
      for (std::size_t k = 0; k < n; ++k) simplex[i][k] = simplex[best][k] + 0.5 * (simplex[i][k] - simplex[best][k]);
      fv[i] = eval(f, simplex[i]);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
  Result r;
  r.x = simplex[best];
  r.value = fv[best];
  r.converged = converged;
  r.iterations = iter;
  return r;
}

}  // namespace

Result nelder_mead(const Objective& f, std::vector<double> x0, const NelderMeadOptions& options) {
  Result best = nelder_mead_once(f, x0, options, options.max_iterations);
  int used = best.iterations;
  // Restart from the incumbent; a collapsed simplex can stall away from the minimum.
  for (int r = 0; r < options.restarts && used < options.max_iterations; ++r) {
    Result next = nelder_mead_once(f, best.x, options, options.max_iterations - used);
    used += next.iterations;
    const bool improved = next.value < best.value;
    if (improved || next.value == best.value) {
      next.converged = next.converged && best.converged ? true : next.converged;
      best = std::move(next);
    }
    if (!improved && best.converged) break;
  }
  best.iterations = used;
  best.message = best.converged ? "converged" : "iteration limit reached";
  return best;
}

std::vector<double> gradient(const Objective& f, std::span<const double> x) {
  constexpr int kTable = 20;
  constexpr double kCon = 1.4, kCon2 = kCon * kCon, kSafe = 2.0;
  const std::size_t n = x.size();
  std::vector<double> g(n), xp(x.begin(), x.end());
  double a[kTable][kTable];
  for (std::size_t i = 0; i < n; ++i) {
    double h = 1e-2 * std::max(1.0, std::fabs(x[i]));
    auto central = [&](double step) {
      xp[i] = x[i] + step;
      const double fp = f(xp);
      xp[i] = x[i] - step;
      const double fm = f(xp);
      xp[i] = x[i];
      return (fp - fm) / (2.0 * step);
    };
    a[0][0] = central(h);
    double err = kInf;
    double ans = a[0][0];
    for (int k = 1; k < kTable; ++k) {
      h /= kCon;
      a[0][k] = central(h);
      double fac = kCon2;
      for (int j = 1; j <= k; ++j) {
        a[j][k] = (a[j - 1][k] * fac - a[j - 1][k - 1]) / (fac - 1.0);
        fac *= kCon2;
        const double errt = std::max(std::fabs(a[j][k] - a[j - 1][k]), std::fabs(a[j][k] - a[j - 1][k - 1]));
        if (errt <= err) {
          err = errt;
          ans = a[j][k];
        }
      }
      if (std::fabs(a[k][k] - a[k - 1][k - 1]) >= kSafe * err) break;
    }
    g[i] = ans;
  }
  return g;
}

Eigen::MatrixXd hessian(const Objective& f, std::span<const double> x) {
  const std::size_t n = x.size();
  Eigen::MatrixXd h(n, n);
  std::vector<double> xp(x.begin(), x.end());
  for (std::size_t j = 0; j < n; ++j) {
    const double step = 1e-4 * std::max(1.0, std::fabs(x[j]));
    xp[j] = x[j] + step;
    const auto gp = gradient(f, xp);
    xp[j] = x[j] - step;
    const auto gm = gradient(f, xp);
    xp[j] = x[j];
    for (std::size_t i = 0; i < n; ++i) h(static_cast<long>(i), static_cast<long>(j)) = (gp[i] - gm[i]) / (2.0 * step);
  }
  return 0.5 * (h + h.transpose());
}

Result bfgs(const Objective& f, std::vector<double> x0, const BfgsOptions& options) {
  const long n = static_cast<long>(x0.size());
  Result r;
  Eigen::VectorXd x = Eigen::Map<Eigen::VectorXd>(x0.data(), n);
  auto fx_at = [&](const Eigen::VectorXd& v) { return eval(f, std::span<const double>(v.data(), static_cast<std::size_t>(n))); };
  auto grad_at = [&](const Eigen::VectorXd& v) {
    auto g = gradient(f, std::span<const double>(v.data(), static_cast<std::size_t>(n)));
    return Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(g.data(), n));
  };
  double fx = fx_at(x);
  if (!std::isfinite(fx)) {
    r.x = x0;
    r.value = fx;
    r.message = "objective is not finite at the starting point";
    return r;
  }
  Eigen::VectorXd g = grad_at(x);
  Eigen::MatrixXd inv_h = Eigen::MatrixXd::Identity(n, n);
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    if (g.norm() < options.gradient_tol * 1e-2) break;
    Eigen::VectorXd dir = -inv_h * g;
    if (dir.dot(g) >= 0.0) {
      inv_h.setIdentity();
      dir = -g;
    }
    // Cap the step so a single move cannot leave the sensible range.
    const double max_step = 5.0;
    if (dir.norm() > max_step) dir *= max_step / dir.norm();
    double step = 1.0, f_new = kInf;
    Eigen::VectorXd x_new;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + step * dir;
      f_new = fx_at(x_new);
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * step * g.dot(dir)) break;
      step *= 0.5;
    }
    if (!(std::isfinite(f_new) && f_new <= fx)) break;
    const Eigen::VectorXd g_new = grad_at(x_new);
    const Eigen::VectorXd s = x_new - x, y = g_new - g;
    const double sy = s.dot(y);
    const double improvement = fx - f_new;
    x = x_new;
    fx = f_new;
    g = g_new;
    if (sy > 1e-14 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
      inv_h = (id - rho * s * y.transpose()) * inv_h * (id - rho * y * s.transpose()) + rho * s * s.transpose();
    }
    if (improvement <= 1e-15 * (1.0 + std::fabs(fx)) && s.norm() < 1e-12 * (1.0 + x.norm())) break;
  }

  // Newton polishing on the finite-difference Hessian.
  for (int k = 0; k < options.polish_steps && g.norm() >= options.gradient_tol * 1e-2; ++k) {
    const Eigen::MatrixXd h = hessian(f, std::span<const double>(x.data(), static_cast<std::size_t>(n)));
    Eigen::LLT<Eigen::MatrixXd> llt(h);
    if (llt.info() != Eigen::Success) break;
    const Eigen::VectorXd dx = -llt.solve(g);
    double step = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 30; ++ls) {
      const Eigen::VectorXd x_new = x + step * dx;
      const double f_new = fx_at(x_new);
      if (std::isfinite(f_new) && f_new <= fx + 1e-12 * (1.0 + std::fabs(fx))) {
        const Eigen::VectorXd g_new = grad_at(x_new);
        if (g_new.norm() < g.norm() || f_new < fx) {
          x = x_new;
          fx = f_new;
          g = g_new;
          moved = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!moved) break;
  }

  r.x.assign(x.data(), x.data() + n);
  r.value = fx;
  r.iterations = iter;
  r.gradient_norm = g.norm();
  r.converged = r.gradient_norm < options.gradient_tol;
  r.message = r.converged ? "converged" : "gradient norm above tolerance";
  return r;
}

}  // namespace expertsurv::optim
