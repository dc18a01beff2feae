#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace expertsurv {

struct SurvivalRecord {
  double time = 0.0;
  int status = 0;  // 1 = event, 0 = right censored
  std::optional<int> arm;

  friend bool operator==(const SurvivalRecord&, const SurvivalRecord&) = default;
};

/// Right-censored observations. Validated on construction: times positive
/// and finite, status 0/1, arms 0/1 and present on all records or none.
class SurvivalDataset {
 public:
  SurvivalDataset() = default;
  explicit SurvivalDataset(std::vector<SurvivalRecord> records);

  static SurvivalDataset from_columns(std::span<const double> times, std::span<const int> status,
                                      std::span<const int> arms = {});

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  std::size_t events() const { return events_; }
  bool has_arms() const { return has_arms_; }
  double total_time() const { return total_time_; }
  const std::vector<SurvivalRecord>& records() const { return records_; }
  /// Records sorted by (time, status, arm); sums run over this order so
  /// results do not depend on input order.
  const std::vector<SurvivalRecord>& canonical_records() const { return canonical_; }
  /// Event times in increasing order.
  std::vector<double> event_times() const;
  double max_time() const;

  friend bool operator==(const SurvivalDataset& a, const SurvivalDataset& b) { return a.records_ == b.records_; }

 private:
  std::vector<SurvivalRecord> records_;
  std::vector<SurvivalRecord> canonical_;
  std::size_t events_ = 0;
  bool has_arms_ = false;
  double total_time_ = 0.0;
};

}  // namespace expertsurv
