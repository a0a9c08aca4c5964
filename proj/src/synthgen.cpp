#include "churn/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "churn/rng.hpp"

namespace churn {

const char* archetype_name(Archetype a) {
  switch (a) {
    case Archetype::LoyalStayer: return "loyal_stayer";
    case Archetype::DecayingInterest: return "decaying_interest";
    case Archetype::AbruptChurner: return "abrupt_churner";
    case Archetype::Casual: return "casual";
  }
  return "?";
}

Archetype archetype_from_name(const std::string& name) {
  if (name == "loyal_stayer") return Archetype::LoyalStayer;
  if (name == "decaying_interest") return Archetype::DecayingInterest;
  if (name == "abrupt_churner") return Archetype::AbruptChurner;
  if (name == "casual") return Archetype::Casual;
  throw std::runtime_error("unknown archetype: " + name);
}

double play_curve_value(const PlayCurve& curve, double rel) {
  rel = std::clamp(rel, 0.0, 1.0);
  switch (curve.kind) {
    case PlayCurve::Kind::Constant:
      return curve.peak_seconds;
    case PlayCurve::Kind::PlateauDecay: {
      if (rel <= curve.plateau_frac) return curve.peak_seconds;
      const double span = 1.0 - curve.plateau_frac;
      const double t = (rel - curve.plateau_frac) / (span > 0.0 ? span : 1.0);
      return curve.peak_seconds * (1.0 - (1.0 - curve.floor_frac) * t);
    }
  }
  return curve.peak_seconds;
}

static void validate(const CohortConfig& cfg) {
  if (cfg.n_users < 1) throw std::invalid_argument("cohort: n_users must be >= 1");
  if (cfg.dataset_length_days < 2) throw std::invalid_argument("cohort: dataset_length_days must be >= 2");
  if (cfg.join_window_days < 1 || cfg.join_window_days > cfg.dataset_length_days) {
    throw std::invalid_argument("cohort: join_window_days out of range");
  }
  if (cfg.archetype_mix.empty()) throw std::invalid_argument("cohort: empty archetype mix");
  double sum = 0.0;
  for (const auto& [spec, w] : cfg.archetype_mix) {
    if (w < 0.0) throw std::invalid_argument("cohort: negative archetype weight");
    if (spec.stage_rate < 0 || spec.resource_rate < 0 || spec.character_rate < 0) {
      throw std::invalid_argument("cohort: negative event rate");
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("cohort: archetype weights must sum to 1");
}

static int draw_lifetime(const LifetimeDist& d, int max_lifetime, Rng& rng) {
  long long v = 1;
  switch (d.kind) {
    case LifetimeDist::Kind::Fixed:
      v = std::llround(d.a);
      break;
    case LifetimeDist::Kind::UniformInt:
      v = rng.uniform_int(static_cast<int>(d.a), static_cast<int>(d.b));
      break;
    case LifetimeDist::Kind::LogNormalInt:
      v = std::llround(rng.lognormal(d.a, d.b));
      break;
    case LifetimeDist::Kind::FullSpan:
      v = max_lifetime;
      break;
  }
  return static_cast<int>(std::clamp<long long>(v, 1, max_lifetime));
}

static const ArchetypeSpec& pick_archetype(const CohortConfig& cfg, Rng& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  for (const auto& [spec, w] : cfg.archetype_mix) {
    cum += w;
    if (u < cum) return spec;
  }
  return cfg.archetype_mix.back().first;
}

Cohort generate_cohort(const CohortConfig& cfg) {
  validate(cfg);
  Cohort out;
  const Rng root(cfg.rng_seed);
  const int id_width = cfg.n_users > 100000 ? 7 : 5;

  for (int u = 0; u < cfg.n_users; ++u) {
    Rng rng = root.substream(static_cast<std::uint64_t>(u));
    char id_buf[16];
    std::snprintf(id_buf, sizeof(id_buf), "u%0*d", id_width, u);
    const std::string user_id(id_buf);

    const ArchetypeSpec& spec = pick_archetype(cfg, rng);
    const int join = static_cast<int>(
        rng.below(static_cast<std::uint64_t>(std::min(cfg.join_window_days, cfg.dataset_length_days - 1))));
    const int max_lifetime = cfg.dataset_length_days - 1 - join;
    const int lifetime = draw_lifetime(spec.lifetime, max_lifetime, rng);
    const int last = join + lifetime;

    const double user_scale = rng.lognormal(0.0, 0.3);
    int current_stage = 0;

    for (int day = join; day <= last; ++day) {
      const bool endpoint = (day == join || day == last);
      const double rel = lifetime > 0 ? static_cast<double>(day - join) / lifetime : 0.0;
      const double expected = play_curve_value(spec.curve, rel) * user_scale;
      const double jitter = spec.noise_sigma > 0.0 ? rng.lognormal(0.0, spec.noise_sigma) : 1.0;
      const bool active = endpoint || spec.active_prob >= 1.0 || rng.uniform() < spec.active_prob;

      long long day_seconds = std::llround(expected * jitter);
      if (endpoint) day_seconds = std::max<long long>(day_seconds, 60);
      if (!active || day_seconds <= 0) continue;

      // Sessions split the daily total evenly; the daily sum is the signal.
      int n_sessions = 1 + static_cast<int>(rng.poisson(0.4));
      n_sessions = static_cast<int>(std::min<long long>(n_sessions, day_seconds));
      const long long base = day_seconds / n_sessions;
      long long remainder = day_seconds % n_sessions;
      for (int s = 0; s < n_sessions; ++s) {
        GameEvent e;
        e.user_id = user_id;
        e.day = day;
        e.kind = EventKind::Login;
        e.session_seconds = base + (remainder > 0 ? 1 : 0);
        if (remainder > 0) --remainder;
        out.events.push_back(std::move(e));
      }

      const double intensity =
          spec.curve.peak_seconds > 0 ? play_curve_value(spec.curve, rel) / spec.curve.peak_seconds : 1.0;
      const long long n_stages = rng.poisson(spec.stage_rate * intensity);
      for (long long s = 0; s < n_stages; ++s) {
        GameEvent e;
        e.user_id = user_id;
        e.day = day;
        e.kind = EventKind::StageClear;
        e.stage_id = ++current_stage;
        out.events.push_back(std::move(e));
      }
      const long long n_res = rng.poisson(spec.resource_rate * intensity);
      for (long long s = 0; s < n_res; ++s) {
        GameEvent e;
        e.user_id = user_id;
        e.day = day;
        e.kind = EventKind::GetResource;
        e.resource_amount = 1 + std::llround(rng.lognormal(2.5, 0.8));
        out.events.push_back(std::move(e));
      }
      const long long n_char = rng.poisson(spec.character_rate * intensity);
      for (long long s = 0; s < n_char; ++s) {
        GameEvent e;
        e.user_id = user_id;
        e.day = day;
        e.kind = EventKind::GetCharacter;
        char cid[8];
        std::snprintf(cid, sizeof(cid), "c%02d", static_cast<int>(rng.below(40)));
        e.character_id = cid;
        out.events.push_back(std::move(e));
      }
    }

    out.truth.push_back({user_id, spec.name, join, last});
  }
  return out;
}

CohortConfig default_cohort_config() {
  CohortConfig cfg;
  cfg.n_users = 800;
  cfg.dataset_length_days = 240;
  cfg.join_window_days = 90;
  cfg.rng_seed = 20240801;

  ArchetypeSpec loyal;
  loyal.name = Archetype::LoyalStayer;
  loyal.lifetime = {LifetimeDist::Kind::FullSpan, 0, 0};
  loyal.curve = {PlayCurve::Kind::Constant, 1500.0, 0, 0};
  loyal.stage_rate = 1.2;
  loyal.resource_rate = 5.0;
  loyal.character_rate = 0.12;
  loyal.noise_sigma = 0.25;
  loyal.active_prob = 0.95;

  ArchetypeSpec decaying;
  decaying.name = Archetype::DecayingInterest;
  decaying.lifetime = {LifetimeDist::Kind::LogNormalInt, std::log(75.0), 0.45};
  decaying.curve = {PlayCurve::Kind::PlateauDecay, 2200.0, 0.25, 0.08};
  decaying.stage_rate = 2.0;
  decaying.resource_rate = 8.0;
  decaying.character_rate = 0.2;
  decaying.noise_sigma = 0.25;
  decaying.active_prob = 0.92;

  ArchetypeSpec abrupt;
  abrupt.name = Archetype::AbruptChurner;
  abrupt.lifetime = {LifetimeDist::Kind::LogNormalInt, std::log(32.0), 0.5};
  abrupt.curve = {PlayCurve::Kind::Constant, 1200.0, 0, 0};
  abrupt.stage_rate = 1.5;
  abrupt.resource_rate = 6.0;
  abrupt.character_rate = 0.15;
  abrupt.noise_sigma = 0.25;
  abrupt.active_prob = 0.92;

  ArchetypeSpec casual;
  casual.name = Archetype::Casual;
  casual.lifetime = {LifetimeDist::Kind::UniformInt, 4, 28};
  casual.curve = {PlayCurve::Kind::Constant, 450.0, 0, 0};
  casual.stage_rate = 0.5;
  casual.resource_rate = 2.5;
  casual.character_rate = 0.06;
  casual.noise_sigma = 0.5;
  casual.active_prob = 0.6;

  cfg.archetype_mix = {{loyal, 0.20}, {decaying, 0.40}, {abrupt, 0.25}, {casual, 0.15}};
  return cfg;
}

void write_ground_truth_csv(const std::vector<GroundTruthRow>& rows, std::ostream& out) {
  out << "user,archetype,first_day,last_day\n";
  for (const auto& r : rows) {
    out << r.user_id << ',' << archetype_name(r.archetype) << ',' << r.first_day << ','
        << r.last_day << '\n';
  }
}

std::vector<GroundTruthRow> read_ground_truth_csv(std::istream& in) {
  std::vector<GroundTruthRow> rows;
  std::string line;
  if (!std::getline(in, line)) return rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    GroundTruthRow r;
    std::string field;
    std::getline(ss, r.user_id, ',');
    std::getline(ss, field, ',');
    r.archetype = archetype_from_name(field);
    std::getline(ss, field, ',');
    r.first_day = std::stoi(field);
    std::getline(ss, field, ',');
    r.last_day = std::stoi(field);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace churn
