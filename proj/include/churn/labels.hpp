#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "churn/eventlog.hpp"
#include "churn/features.hpp"

namespace churn {

class DegenerateLifetime : public std::runtime_error {
 public:
  explicit DegenerateLifetime(const std::string& user)
      : std::runtime_error("churn vector undefined for zero lifetime (user " + user + ")") {}
};

// remain_days / lifetime_days. Throws DegenerateLifetime when lifetime is 0;
// callers exclude such single-day users from every model.
double compute_churn_vector(int remain_days, int lifetime_days);

struct ChurnLabel {
  std::string user_id;
  int observation_day = 0;
  int remain_days = 0;        // last play day - observation day
  int lifetime_days = 0;      // last play day - first play day
  double churn_vector = 0;    // remain_days / lifetime_days, in [0, 1]
  bool churned_within_horizon = false;  // remain_days <= horizon
  bool vector_below_threshold = false;  // churn_vector <= tau
  bool censored = false;      // still active within quiet_gap days of dataset end
};

enum class Split { Train, Validation, Test };
const char* split_name(Split s);

struct LabeledExample {
  FeatureRow features;
  ChurnLabel label;
  Split split = Split::Train;
};

struct LabelParams {
  int warmup_end = 90;  // no observation days before this
  int horizon = 7;      // churn-day classification horizon
  double tau = 0.25;    // churn-vector classification threshold
  int quiet_gap = 14;   // censor users active in the final quiet_gap days
};

// One example per (user, observation day in [warmup_end, dataset_end) within
// the user's active span). Zero-lifetime users are dropped entirely.
std::vector<LabeledExample> label_dataset(const std::map<std::string, UserTimeline>& timelines,
                                          const std::vector<FeatureRow>& rows,
                                          int dataset_length_days, const LabelParams& params);

// User-level split: no user's rows ever straddle splits. Deterministic in seed.
void split_by_user(std::vector<LabeledExample>& examples, const std::array<double, 3>& ratios,
                   std::uint64_t seed);

void write_labeled_csv(const std::vector<LabeledExample>& examples, std::ostream& out);

}  // namespace churn
