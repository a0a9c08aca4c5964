#include "churn/labels.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "churn/io.hpp"
#include "churn/rng.hpp"

namespace churn {

const char* split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Validation: return "validation";
    case Split::Test: return "test";
  }
  return "?";
}

double compute_churn_vector(int remain_days, int lifetime_days) {
  if (remain_days < 0) throw std::invalid_argument("remain_days must be >= 0");
  if (lifetime_days < 0) throw std::invalid_argument("lifetime_days must be >= 0");
  if (lifetime_days == 0) throw DegenerateLifetime("?");
  return static_cast<double>(remain_days) / static_cast<double>(lifetime_days);
}

std::vector<LabeledExample> label_dataset(const std::map<std::string, UserTimeline>& timelines,
                                          const std::vector<FeatureRow>& rows,
                                          int dataset_length_days, const LabelParams& params) {
  if (params.warmup_end >= dataset_length_days) {
    throw std::invalid_argument("empty evaluation window: warmup_end >= dataset end");
  }
  if (params.horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (!(params.tau > 0.0 && params.tau < 1.0)) throw std::invalid_argument("tau must be in (0,1)");
  if (params.quiet_gap < 1) throw std::invalid_argument("quiet_gap must be >= 1");

  std::map<std::pair<std::string, int>, const FeatureRow*> row_index;
  for (const auto& r : rows) row_index[{r.user_id, r.day}] = &r;

  std::vector<LabeledExample> examples;
  for (const auto& [user_id, t] : timelines) {
    const int lifetime = t.last_play_day - t.first_play_day;
    if (lifetime == 0) continue;  // Eq. 1 undefined; excluded from all models
    const bool censored = t.last_play_day >= dataset_length_days - params.quiet_gap;
    const int from = std::max(params.warmup_end, t.first_play_day);
    for (int d = from; d <= t.last_play_day; ++d) {
      const auto it = row_index.find({user_id, d});
      if (it == row_index.end()) {
        throw std::runtime_error("no feature row for user " + user_id + " day " +
                                 std::to_string(d));
      }
      LabeledExample ex;
      ex.features = *it->second;
      ex.label.user_id = user_id;
      ex.label.observation_day = d;
      ex.label.remain_days = t.last_play_day - d;
      ex.label.lifetime_days = lifetime;
      ex.label.churn_vector = compute_churn_vector(ex.label.remain_days, lifetime);
      ex.label.churned_within_horizon = ex.label.remain_days <= params.horizon;
      ex.label.vector_below_threshold = ex.label.churn_vector <= params.tau;
      ex.label.censored = censored;
      examples.push_back(std::move(ex));
    }
  }
  return examples;
}

void split_by_user(std::vector<LabeledExample>& examples, const std::array<double, 3>& ratios,
                   std::uint64_t seed) {
  double sum = 0.0;
  for (double r : ratios) {
    if (r < 0.0) throw std::invalid_argument("split ratios must be nonnegative");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("split ratios must sum to 1");

  std::vector<std::string> users;
  for (const auto& ex : examples) {
    if (users.empty() || users.back() != ex.label.user_id) users.push_back(ex.label.user_id);
  }
  std::sort(users.begin(), users.end());
  users.erase(std::unique(users.begin(), users.end()), users.end());

  int nonzero = 0;
  for (double r : ratios) nonzero += r > 0.0 ? 1 : 0;
  if (static_cast<int>(users.size()) < nonzero) {
    throw std::invalid_argument("fewer users than nonzero splits");
  }

  Rng rng(seed);
  rng.shuffle(users);
  const auto n = static_cast<double>(users.size());
  const std::size_t c1 = static_cast<std::size_t>(std::llround(ratios[0] * n));
  const std::size_t c2 = static_cast<std::size_t>(std::llround((ratios[0] + ratios[1]) * n));
  std::map<std::string, Split> assignment;
  for (std::size_t i = 0; i < users.size(); ++i) {
    assignment[users[i]] = i < c1 ? Split::Train : (i < c2 ? Split::Validation : Split::Test);
  }
  for (auto& ex : examples) ex.split = assignment.at(ex.label.user_id);
}

void write_labeled_csv(const std::vector<LabeledExample>& examples, std::ostream& out) {
  out << "user,day";
  for (const char* name : feature_names()) out << ',' << name;
  out << ",split,remain_days,lifetime_days,churn_vector,cls_day,cls_vector,censored\n";
  for (const auto& ex : examples) {
    out << ex.label.user_id << ',' << ex.label.observation_day;
    for (int j = 0; j < ex.features.values.size(); ++j) {
      out << ',' << format_double(ex.features.values[j]);
    }
    out << ',' << split_name(ex.split) << ',' << ex.label.remain_days << ','
        << ex.label.lifetime_days << ',' << format_double(ex.label.churn_vector) << ','
        << (ex.label.churned_within_horizon ? 1 : 0) << ','
        << (ex.label.vector_below_threshold ? 1 : 0) << ',' << (ex.label.censored ? 1 : 0)
        << '\n';
  }
}

}  // namespace churn
