#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "churn/eventlog.hpp"

namespace churn {

// Per-user per-day aggregates: today's activity, running records, day-over-day
// changes and change rates. Ranking is a dense rank over cumulative resources,
// descending, among all users who have joined by that day (churned users keep
// their frozen totals on the board). Values at day d depend only on events
// with day <= d.
struct DailyPlayerRecord {
  std::string user_id;
  int day = 0;

  double play_time_today = 0;        // seconds, sum of the day's sessions
  int rank_today = 1;                // dense rank, 1 = most resources
  int stages_cleared_today = 0;      // stage-clear events today
  int characters_obtained_today = 0; // character events today

  double most_play_time = 0;         // max daily play so far
  int highest_rank = 1;              // best (smallest) rank so far
  int highest_stage_cleared = 0;     // max stage id so far
  int total_characters = 0;          // distinct character ids so far

  double total_play_time = 0;
  long long total_resources = 0;

  double delta_play_time = 0;
  double delta_rank = 0;
  double delta_stage = 0;            // change of highest_stage_cleared
  double delta_resources = 0;
  double delta_characters = 0;       // change of total_characters

  double rate_play_time = 0;         // delta / max(|previous value|, epsilon)
  double rate_rank = 0;
  double rate_stage = 0;
  double rate_resources = 0;
  double rate_characters = 0;
};

inline constexpr int kFeatureCount = 16;

// Canonical feature order: action group, record group, change group, change
// rate group.
const std::array<const char*, kFeatureCount>& feature_names();

struct FeatureRow {
  std::string user_id;
  int day = 0;
  Eigen::VectorXd values;  // length kFeatureCount
};

struct SequenceWindow {
  std::string user_id;
  int end_day = 0;
  Eigen::MatrixXd values;  // window_length x kFeatureCount, padded rows all-zero
  Eigen::VectorXd mask;    // 1 = observed day, 0 = padding
};

// One record per (user, day in [first_play_day, last_play_day]); gap days get
// explicit zero-activity records with carried-forward cumulatives.
std::vector<DailyPlayerRecord> compute_daily_records(
    const std::map<std::string, UserTimeline>& timelines, int dataset_length_days,
    double epsilon = 1.0);

std::vector<FeatureRow> assemble_feature_rows(const std::vector<DailyPlayerRecord>& records);

// One window per row; the window covers the row's day and the window-1
// preceding days, left-padded with masked zero rows before the user's history.
std::vector<SequenceWindow> windowize(const std::vector<FeatureRow>& rows, int window);

struct FeatureStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;  // population standard deviation
};

FeatureStats compute_feature_stats(const std::vector<FeatureRow>& training_rows);

// z-scores in place; features with stddev < 1e-12 map to 0. Padded window rows
// stay all-zero.
void standardize_rows(std::vector<FeatureRow>& rows, const FeatureStats& stats);
void standardize_windows(std::vector<SequenceWindow>& windows, const FeatureStats& stats);

void write_feature_csv(const std::vector<FeatureRow>& rows, std::ostream& out);
void write_windows_csv(const std::vector<SequenceWindow>& windows, std::ostream& out);

}  // namespace churn
