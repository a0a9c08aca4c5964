#include "churn/features.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>
#include <stdexcept>

#include "churn/io.hpp"

namespace churn {

const std::array<const char*, kFeatureCount>& feature_names() {
  static const std::array<const char*, kFeatureCount> names = {
      "play_time_today", "rank_today", "stages_cleared_today", "characters_obtained_today",
      "most_play_time", "highest_rank", "highest_stage_cleared", "total_characters",
      "delta_play_time", "delta_rank", "delta_stage", "delta_characters",
      "rate_play_time", "rate_rank", "rate_stage", "rate_characters"};
  return names;
}

namespace {

struct UserAgg {
  int first = 0;
  int last = 0;
  // All indexed by day - first.
  std::vector<long long> day_seconds;
  std::vector<int> stage_events;
  std::vector<int> char_events;
  std::vector<int> max_stage;            // running max stage id
  std::vector<long long> cum_resources;  // running sum
  std::vector<int> cum_distinct_chars;

  long long resources_at(int day) const {
    if (day < first) return 0;
    const int idx = std::min(day, last) - first;
    return cum_resources[static_cast<std::size_t>(idx)];
  }
};

UserAgg aggregate_user(const UserTimeline& t) {
  UserAgg agg;
  agg.first = t.first_play_day;
  agg.last = t.last_play_day;
  const std::size_t span = static_cast<std::size_t>(agg.last - agg.first + 1);
  agg.day_seconds.assign(span, 0);
  agg.stage_events.assign(span, 0);
  agg.char_events.assign(span, 0);
  agg.max_stage.assign(span, 0);
  agg.cum_resources.assign(span, 0);
  agg.cum_distinct_chars.assign(span, 0);

  std::vector<long long> res_gained(span, 0);
  std::vector<std::vector<const std::string*>> chars_by_day(span);
  for (const auto& e : t.events) {
    const std::size_t i = static_cast<std::size_t>(e.day - agg.first);
    switch (e.kind) {
      case EventKind::Login:
        agg.day_seconds[i] += e.session_seconds;
        break;
      case EventKind::StageClear:
        agg.stage_events[i] += 1;
        agg.max_stage[i] = std::max(agg.max_stage[i], e.stage_id);
        break;
      case EventKind::GetResource:
        res_gained[i] += e.resource_amount;
        break;
      case EventKind::GetCharacter:
        agg.char_events[i] += 1;
        chars_by_day[i].push_back(&e.character_id);
        break;
    }
  }
  std::set<std::string> owned;
  long long res_total = 0;
  int stage_max = 0;
  for (std::size_t i = 0; i < span; ++i) {
    res_total += res_gained[i];
    agg.cum_resources[i] = res_total;
    stage_max = std::max(stage_max, agg.max_stage[i]);
    agg.max_stage[i] = stage_max;
    for (const std::string* c : chars_by_day[i]) owned.insert(*c);
    agg.cum_distinct_chars[i] = static_cast<int>(owned.size());
  }
  return agg;
}

double rate(double delta, double prev, double epsilon) {
  return delta / std::max(std::abs(prev), epsilon);
}

}  // namespace

std::vector<DailyPlayerRecord> compute_daily_records(
    const std::map<std::string, UserTimeline>& timelines, int dataset_length_days,
    double epsilon) {
  std::vector<const UserTimeline*> users;
  users.reserve(timelines.size());
  for (const auto& [id, t] : timelines) {
    if (t.last_play_day >= dataset_length_days) {
      throw std::invalid_argument("timeline for " + id + " exceeds dataset length");
    }
    users.push_back(&t);
  }
  std::vector<UserAgg> aggs;
  aggs.reserve(users.size());
  for (const UserTimeline* t : users) aggs.push_back(aggregate_user(*t));

  // Daily dense ranks over everyone who has joined by day d.
  std::vector<std::vector<int>> ranks(users.size());  // per user, indexed by day - first
  for (std::size_t u = 0; u < users.size(); ++u) {
    ranks[u].assign(static_cast<std::size_t>(aggs[u].last - aggs[u].first + 1), 0);
  }
  std::vector<std::pair<long long, std::size_t>> board;
  for (int d = 0; d < dataset_length_days; ++d) {
    board.clear();
    for (std::size_t u = 0; u < users.size(); ++u) {
      if (aggs[u].first <= d) board.emplace_back(aggs[u].resources_at(d), u);
    }
    if (board.empty()) continue;
    std::sort(board.begin(), board.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    int r = 0;
    long long prev = -1;
    for (std::size_t i = 0; i < board.size(); ++i) {
      if (i == 0 || board[i].first != prev) ++r;
      prev = board[i].first;
      const std::size_t u = board[i].second;
      if (d <= aggs[u].last) ranks[u][static_cast<std::size_t>(d - aggs[u].first)] = r;
    }
  }

  std::vector<DailyPlayerRecord> records;
  for (std::size_t u = 0; u < users.size(); ++u) {
    const UserAgg& agg = aggs[u];
    double total_play = 0;
    double most_play = 0;
    int best_rank = 0;
    for (int d = agg.first; d <= agg.last; ++d) {
      const std::size_t i = static_cast<std::size_t>(d - agg.first);
      DailyPlayerRecord rec;
      rec.user_id = users[u]->user_id;
      rec.day = d;
      rec.play_time_today = static_cast<double>(agg.day_seconds[i]);
      rec.rank_today = ranks[u][i];
      rec.stages_cleared_today = agg.stage_events[i];
      rec.characters_obtained_today = agg.char_events[i];

      total_play += rec.play_time_today;
      most_play = std::max(most_play, rec.play_time_today);
      best_rank = (d == agg.first) ? rec.rank_today : std::min(best_rank, rec.rank_today);
      rec.total_play_time = total_play;
      rec.most_play_time = most_play;
      rec.highest_rank = best_rank;
      rec.highest_stage_cleared = agg.max_stage[i];
      rec.total_resources = agg.cum_resources[i];
      rec.total_characters = agg.cum_distinct_chars[i];

      if (d > agg.first) {
        const std::size_t p = i - 1;
        const double prev_play = static_cast<double>(agg.day_seconds[p]);
        const double prev_rank = static_cast<double>(ranks[u][p]);
        const double prev_stage = static_cast<double>(agg.max_stage[p]);
        const double prev_res = static_cast<double>(agg.cum_resources[p]);
        const double prev_chars = static_cast<double>(agg.cum_distinct_chars[p]);
        rec.delta_play_time = rec.play_time_today - prev_play;
        rec.delta_rank = static_cast<double>(rec.rank_today) - prev_rank;
        rec.delta_stage = static_cast<double>(rec.highest_stage_cleared) - prev_stage;
        rec.delta_resources = static_cast<double>(rec.total_resources) - prev_res;
        rec.delta_characters = static_cast<double>(rec.total_characters) - prev_chars;
        rec.rate_play_time = rate(rec.delta_play_time, prev_play, epsilon);
        rec.rate_rank = rate(rec.delta_rank, prev_rank, epsilon);
        rec.rate_stage = rate(rec.delta_stage, prev_stage, epsilon);
        rec.rate_resources = rate(rec.delta_resources, prev_res, epsilon);
        rec.rate_characters = rate(rec.delta_characters, prev_chars, epsilon);
      }
      records.push_back(std::move(rec));
    }
  }
  return records;
}

std::vector<FeatureRow> assemble_feature_rows(const std::vector<DailyPlayerRecord>& records) {
  std::vector<FeatureRow> rows;
  rows.reserve(records.size());
  for (const auto& r : records) {
    FeatureRow row;
    row.user_id = r.user_id;
    row.day = r.day;
    row.values.resize(kFeatureCount);
    row.values << r.play_time_today, static_cast<double>(r.rank_today),
        static_cast<double>(r.stages_cleared_today),
        static_cast<double>(r.characters_obtained_today), r.most_play_time,
        static_cast<double>(r.highest_rank), static_cast<double>(r.highest_stage_cleared),
        static_cast<double>(r.total_characters), r.delta_play_time, r.delta_rank, r.delta_stage,
        r.delta_characters, r.rate_play_time, r.rate_rank, r.rate_stage, r.rate_characters;
    for (int j = 0; j < kFeatureCount; ++j) {
      if (!std::isfinite(row.values[j])) {
        throw std::runtime_error("non-finite feature " + std::string(feature_names()[j]) +
                                 " for user " + r.user_id + " day " + std::to_string(r.day));
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<SequenceWindow> windowize(const std::vector<FeatureRow>& rows, int window) {
  if (window < 1) throw std::invalid_argument("window length must be >= 1");
  std::vector<SequenceWindow> windows;
  windows.reserve(rows.size());
  std::size_t user_start = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].user_id != rows[user_start].user_id) user_start = i;
    SequenceWindow w;
    w.user_id = rows[i].user_id;
    w.end_day = rows[i].day;
    w.values = Eigen::MatrixXd::Zero(window, kFeatureCount);
    w.mask = Eigen::VectorXd::Zero(window);
    for (int k = 0; k < window; ++k) {
      const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(i) - (window - 1 - k);
      if (src >= static_cast<std::ptrdiff_t>(user_start)) {
        w.values.row(k) = rows[static_cast<std::size_t>(src)].values.transpose();
        w.mask[k] = 1.0;
      }
    }
    windows.push_back(std::move(w));
  }
  return windows;
}

FeatureStats compute_feature_stats(const std::vector<FeatureRow>& training_rows) {
  if (training_rows.empty()) throw std::invalid_argument("no rows to compute feature stats");
  const int d = static_cast<int>(training_rows.front().values.size());
  FeatureStats stats;
  stats.mean = Eigen::VectorXd::Zero(d);
  stats.stddev = Eigen::VectorXd::Zero(d);
  for (const auto& r : training_rows) stats.mean += r.values;
  stats.mean /= static_cast<double>(training_rows.size());
  for (const auto& r : training_rows) {
    stats.stddev += (r.values - stats.mean).cwiseAbs2();
  }
  stats.stddev = (stats.stddev / static_cast<double>(training_rows.size())).cwiseSqrt();
  return stats;
}

namespace {
Eigen::VectorXd inverse_std(const FeatureStats& stats) {
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(stats.stddev.size());
  for (int j = 0; j < stats.stddev.size(); ++j) {
    inv[j] = stats.stddev[j] < 1e-12 ? 0.0 : 1.0 / stats.stddev[j];
  }
  return inv;
}
}  // namespace

void standardize_rows(std::vector<FeatureRow>& rows, const FeatureStats& stats) {
  const Eigen::VectorXd inv = inverse_std(stats);
  for (auto& r : rows) {
    if (r.values.size() != stats.mean.size()) {
      throw std::invalid_argument("feature stats dimension mismatch");
    }
    r.values = (r.values - stats.mean).cwiseProduct(inv);
  }
}

void standardize_windows(std::vector<SequenceWindow>& windows, const FeatureStats& stats) {
  const Eigen::VectorXd inv = inverse_std(stats);
  for (auto& w : windows) {
    if (w.values.cols() != stats.mean.size()) {
      throw std::invalid_argument("feature stats dimension mismatch");
    }
    for (int k = 0; k < w.values.rows(); ++k) {
      if (w.mask[k] != 0.0) {
        w.values.row(k) = (w.values.row(k).transpose() - stats.mean).cwiseProduct(inv).transpose();
      }
    }
  }
}

void write_feature_csv(const std::vector<FeatureRow>& rows, std::ostream& out) {
  out << "user,day";
  for (const char* name : feature_names()) out << ',' << name;
  out << '\n';
  for (const auto& r : rows) {
    out << r.user_id << ',' << r.day;
    for (int j = 0; j < r.values.size(); ++j) out << ',' << format_double(r.values[j]);
    out << '\n';
  }
}

void write_windows_csv(const std::vector<SequenceWindow>& windows, std::ostream& out) {
  out << "# one block per window: header line, then mask,features rows oldest-first\n";
  for (const auto& w : windows) {
    out << "# user=" << w.user_id << " end_day=" << w.end_day << " window=" << w.values.rows()
        << '\n';
    for (int k = 0; k < w.values.rows(); ++k) {
      out << format_double(w.mask[k]);
      for (int j = 0; j < w.values.cols(); ++j) out << ',' << format_double(w.values(k, j));
      out << '\n';
    }
    out << '\n';
  }
}

}  // namespace churn
