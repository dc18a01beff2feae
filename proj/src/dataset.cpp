#include "expertsurv/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "expertsurv/errors.hpp"

namespace expertsurv {

SurvivalDataset::SurvivalDataset(std::vector<SurvivalRecord> records) : records_(std::move(records)) {
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    const std::string where = "record " + std::to_string(i + 1);
    if (!(r.time > 0.0) || !std::isfinite(r.time)) throw InvalidParameter(where + ": time must be positive and finite");
    if (r.status != 0 && r.status != 1) throw InvalidParameter(where + ": status must be 0 or 1");
    if (r.arm && *r.arm != 0 && *r.arm != 1) throw InvalidParameter(where + ": arm must be 0 or 1");
    if (i > 0 && r.arm.has_value() != records_[0].arm.has_value())
      throw InvalidParameter(where + ": arm must be given for all records or none");
    events_ += static_cast<std::size_t>(r.status);
  }
  has_arms_ = !records_.empty() && records_[0].arm.has_value();
  canonical_ = records_;
  std::sort(canonical_.begin(), canonical_.end(), [](const SurvivalRecord& a, const SurvivalRecord& b) {
    if (a.time != b.time) return a.time < b.time;
    if (a.status != b.status) return a.status < b.status;
    return a.arm.value_or(0) < b.arm.value_or(0);
  });
  for (const auto& r : canonical_) total_time_ += r.time;
}

SurvivalDataset SurvivalDataset::from_columns(std::span<const double> times, std::span<const int> status,
                                              std::span<const int> arms) {
  if (times.size() != status.size() || (!arms.empty() && arms.size() != times.size()))
    throw InvalidParameter("dataset columns differ in length");
  std::vector<SurvivalRecord> records(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    records[i].time = times[i];
    records[i].status = status[i];
    if (!arms.empty()) records[i].arm = arms[i];
  }
  return SurvivalDataset(std::move(records));
}

std::vector<double> SurvivalDataset::event_times() const {
  std::vector<double> t;
  for (const auto& r : canonical_)
    if (r.status == 1) t.push_back(r.time);
  return t;
}

double SurvivalDataset::max_time() const {
  double m = 0.0;
  for (const auto& r : records_) m = std::max(m, r.time);
  return m;
}

}  // namespace expertsurv
