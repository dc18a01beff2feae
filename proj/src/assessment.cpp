#include "expertsurv/assessment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "expertsurv/errors.hpp"

namespace expertsurv {
namespace {

double deviance(const ParameterVector& p, const SurvivalDataset& d, std::span<const ExpertPenalty> penalties,
                bool include_penalties) {
  double ll = data_loglik(p, d);
  if (include_penalties)
    for (const auto& pen : penalties) ll += penalty_logdensity(p, pen);
  return -2.0 * ll;
}

}  // namespace

DicResult dic(const PosteriorSample& samples, const SurvivalDataset& d, std::span<const ExpertPenalty> penalties,
              bool include_penalties) {
  if (samples.total_draws() == 0) throw PreconditionError("DIC needs at least one posterior draw");
  const std::size_t k = samples.spec.parameter_count();
  DicResult out;
  // Means as x0 + mean(x - x0): exact when all draws coincide.
  double dev_anchor = 0.0, dev_offset = 0.0;
  std::vector<double> anchor, offset(k, 0.0);
  for (std::size_t c = 0; c < samples.chain_count(); ++c) {
    for (std::size_t i = 0; i < samples.draws_per_chain(); ++i) {
      const double dv = deviance(samples.draw(c, i), d, penalties, include_penalties);
      if (!std::isfinite(dv)) {
        ++out.excluded;
        continue;
      }
      const auto& z = samples.unconstrained[c][i];
      if (anchor.empty()) {
        anchor = z;
        dev_anchor = dv;
      }
      for (std::size_t j = 0; j < k; ++j) offset[j] += z[j] - anchor[j];
      dev_offset += dv - dev_anchor;
      ++out.used;
    }
  }
  if (out.used == 0) throw NumericError("every posterior draw has a non-finite deviance");
  const double n = static_cast<double>(out.used);
  std::vector<double> zbar(k);
  for (std::size_t j = 0; j < k; ++j) zbar[j] = anchor[j] + offset[j] / n;
  out.mean_deviance = dev_anchor + dev_offset / n;
  out.deviance_at_mean = deviance(from_unconstrained(samples.spec, zbar), d, penalties, include_penalties);
  out.pd = out.mean_deviance - out.deviance_at_mean;
  out.dic = out.mean_deviance + out.pd;
  return out;
}

double bic(const FitResult& fit, const SurvivalDataset& d) {
  const std::size_t p = fit.params.values.size();
  if (p == 0) throw PreconditionError("BIC needs at least one parameter");
  if (fit.penalized) throw PreconditionError("BIC is defined for the fit without expert opinion");
  if (!fit.converged) throw FitFailure("BIC refused, fit did not converge: " + fit.message);
  if (d.empty()) throw PreconditionError("BIC needs a nonempty dataset");
  return -2.0 * fit.loglik_data + static_cast<double>(p) * std::log(static_cast<double>(d.size()));
}

double quantile_type7(std::vector<double> values, double p) {
  if (values.empty()) throw PreconditionError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw PreconditionError("quantile level must lie in [0, 1]");
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  std::nth_element(values.begin(), values.begin() + static_cast<long>(lo), values.end());
  const double xlo = values[lo];
  if (hi == lo) return xlo;
  const double xhi = *std::min_element(values.begin() + static_cast<long>(lo) + 1, values.end());
  return xlo + (h - static_cast<double>(lo)) * (xhi - xlo);
}

std::vector<CurveRow> survival_summary(const PosteriorSample& samples, std::span<const double> grid, int arm) {
  if (grid.empty()) throw PreconditionError("survival summary needs a nonempty time grid");
  for (double t : grid)
    if (!(t >= 0.0) || !std::isfinite(t)) throw PreconditionError("survival summary times must be nonnegative");
  std::vector<ParameterVector> arms;
  arms.reserve(samples.total_draws());
  for (std::size_t c = 0; c < samples.chain_count(); ++c)
    for (std::size_t i = 0; i < samples.draws_per_chain(); ++i) {
      const auto p = samples.draw(c, i);
      arms.push_back(for_arm(p, p.spec.treatment_effect ? arm : 0));
    }
  std::vector<CurveRow> rows;
  std::vector<double> s(arms.size());
  for (double t : grid) {
    CurveRow r;
    r.time = t;
    if (t > 0.0 && !arms.empty()) {
      double sum = 0.0;
      for (std::size_t i = 0; i < arms.size(); ++i) {
        s[i] = survival(arms[i], t);
        sum += s[i];
      }
      r.mean = sum / static_cast<double>(s.size());
      r.median = quantile_type7(s, 0.5);
      r.lower = quantile_type7(s, 0.025);
      r.upper = quantile_type7(s, 0.975);
    }
    rows.push_back(r);
  }
  return rows;
}

void ModelComparison::add(ComparisonRow row) {
  const bool by_dic = rank_ == RankBy::Dic;
  const double crit = by_dic ? row.dic : row.bic;
  if (!std::isfinite(crit) && row.status == "ok") row.status = by_dic ? "non-finite DIC" : "non-finite BIC";
  auto key = [by_dic](const ComparisonRow& r) {
    const double v = by_dic ? r.dic : r.bic;
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };
  const auto pos = std::upper_bound(rows_.begin(), rows_.end(), row,
                                    [&](const ComparisonRow& a, const ComparisonRow& b) { return key(a) < key(b); });
  rows_.insert(pos, std::move(row));
}

std::string ModelComparison::format_table() const {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-28s %12s %12s\n", "Model", "DIC", "BIC");
  os << buf;
  auto cell = [](double v) {
    char b[32];
    if (std::isfinite(v))
      std::snprintf(b, sizeof b, "%.2f", v);
    else
      std::snprintf(b, sizeof b, "-");
    return std::string(b);
  };
  for (const auto& r : rows_) {
    std::snprintf(buf, sizeof buf, "%-28s %12s %12s", r.model.c_str(), cell(r.dic).c_str(), cell(r.bic).c_str());
    os << buf;
    if (r.status != "ok") os << "  (" << r.status << ")";
    os << '\n';
  }
  return os.str();
}

}  // namespace expertsurv
