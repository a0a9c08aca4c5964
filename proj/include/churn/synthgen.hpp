#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "churn/eventlog.hpp"

namespace churn {

enum class Archetype { LoyalStayer, DecayingInterest, AbruptChurner, Casual };

const char* archetype_name(Archetype a);
Archetype archetype_from_name(const std::string& name);

// Distribution over lifetime_days = last_play_day - first_play_day.
struct LifetimeDist {
  enum class Kind { Fixed, UniformInt, LogNormalInt, FullSpan };
  Kind kind = Kind::Fixed;
  double a = 20.0;  // Fixed: value; UniformInt: lo; LogNormalInt: mu (log days)
  double b = 0.0;   // UniformInt: hi; LogNormalInt: sigma
};

// Expected session seconds as a function of relative day within the lifetime.
struct PlayCurve {
  enum class Kind { Constant, PlateauDecay };
  Kind kind = Kind::Constant;
  double peak_seconds = 1200.0;
  double plateau_frac = 0.3;  // PlateauDecay: flat until this fraction of life
  double floor_frac = 0.1;    // PlateauDecay: final value as a fraction of peak
};

// Expected daily seconds at relative day rel in [0, 1].
double play_curve_value(const PlayCurve& curve, double rel);

struct ArchetypeSpec {
  Archetype name = Archetype::Casual;
  LifetimeDist lifetime;
  PlayCurve curve;
  double stage_rate = 1.0;      // expected stage clears per active day at peak intensity
  double resource_rate = 4.0;   // expected resource events per active day at peak
  double character_rate = 0.1;  // expected character events per active day at peak
  double noise_sigma = 0.0;     // lognormal sigma of the per-day play jitter
  double active_prob = 1.0;     // chance a mid-span day has any activity
};

struct CohortConfig {
  int n_users = 800;
  int dataset_length_days = 240;
  std::vector<std::pair<ArchetypeSpec, double>> archetype_mix;  // weights sum to 1
  int join_window_days = 90;
  std::uint64_t rng_seed = 1;
};

// The seed-fixed cohort the comparison experiment runs on.
CohortConfig default_cohort_config();

struct GroundTruthRow {
  std::string user_id;
  Archetype archetype;
  int first_day = 0;
  int last_day = 0;
};

struct Cohort {
  std::vector<GameEvent> events;        // canonical order: user index, then day
  std::vector<GroundTruthRow> truth;
};

// Deterministic given config; every user logs in on their first and last day,
// so the ground-truth span matches the emitted log exactly.
Cohort generate_cohort(const CohortConfig& config);

void write_ground_truth_csv(const std::vector<GroundTruthRow>& rows, std::ostream& out);
std::vector<GroundTruthRow> read_ground_truth_csv(std::istream& in);

}  // namespace churn
