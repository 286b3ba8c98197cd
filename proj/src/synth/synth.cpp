#include "physio/synth/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "physio/errors.hpp"
#include "physio/rng.hpp"

namespace physio::synth {

namespace {

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

std::vector<double> const_series(std::int64_t n, double v) {
  return std::vector<double>(static_cast<size_t>(n), v);
}

}  // namespace

ProfileKind profile_kind_from_string(const std::string& s) {
  if (s == "steady") return ProfileKind::steady;
  if (s == "intervals") return ProfileKind::intervals;
  if (s == "incremental") return ProfileKind::incremental;
  if (s == "ramp") return ProfileKind::ramp;
  throw ConfigError("unknown intensity profile kind: " + s);
}

IntensityProfile gen_profile(ProfileKind kind, std::int64_t duration_s,
                             std::uint64_t seed) {
  if (duration_s < 120)
    throw ConfigError("gen_profile: duration must be >= 120 s");
  Rng rng(seed);
  IntensityProfile p;
  p.kind = kind;
  const auto T = duration_s;

  switch (kind) {
    case ProfileKind::steady: {
      p.u = const_series(T, rng.uniform(0.35, 0.75));
      break;
    }
    case ProfileKind::intervals: {
      const double work = rng.uniform(0.6, 0.9);
      const double rest = rng.uniform(0.15, 0.3);
      const int work_len = rng.uniform_int(60, 180);
      const int rest_len = rng.uniform_int(45, 120);
      p.u = const_series(T, rest);
      std::int64_t t = 60;  // warmup at rest level
      bool working = true;
      while (t < T) {
        const int len = working ? work_len : rest_len;
        const double level = working ? work : rest;
        for (int i = 0; i < len && t < T; ++i, ++t)
          p.u[static_cast<size_t>(t)] = level;
        working = !working;
      }
      break;
    }
    case ProfileKind::incremental: {
      // stepwise-increasing plateaus with a 10 s dip between steps,
      // mimicking sampling pauses
      const int steps = rng.uniform_int(5, 8);
      const double lo = rng.uniform(0.2, 0.3);
      const double hi = rng.uniform(0.8, 0.95);
      const auto plateau = T / steps;
      p.u = const_series(T, lo);
      for (std::int64_t t = 0; t < T; ++t) {
        const auto k = std::min<std::int64_t>(t / plateau, steps - 1);
        double level = lo + (hi - lo) * static_cast<double>(k) /
                                static_cast<double>(steps - 1);
        if (k > 0 && t - k * plateau < 10) level -= 0.15;
        p.u[static_cast<size_t>(t)] = clamp01(level);
      }
      break;
    }
    case ProfileKind::ramp: {
      const double lo = rng.uniform(0.1, 0.2);
      const double hi = rng.uniform(0.8, 0.95);
      p.u.resize(static_cast<size_t>(T));
      for (std::int64_t t = 0; t < T; ++t)
        p.u[static_cast<size_t>(t)] =
            lo + (hi - lo) * static_cast<double>(t) /
                     static_cast<double>(T - 1);
      break;
    }
  }
  return p;
}

std::vector<double> simulate_hr(const IntensityProfile& p,
                                const RunnerProfile& r) {
  const auto T = static_cast<std::int64_t>(p.u.size());
  std::vector<double> h(static_cast<size_t>(T));
  h[0] = r.hr_rest;
  for (std::int64_t t = 1; t < T; ++t) {
    const double u = p.u[static_cast<size_t>(t - 1)];
    const double demand = r.hr_rest + (r.hr_max - r.hr_rest) * u;
    const double prev = h[static_cast<size_t>(t - 1)];
    h[static_cast<size_t>(t)] = prev + (demand - prev) / r.tau_hr;
  }
  return h;
}

std::vector<double> simulate_vo2(const IntensityProfile& p,
                                 const RunnerProfile& r) {
  const auto T = static_cast<std::int64_t>(p.u.size());
  std::vector<double> v(static_cast<size_t>(T));
  double fast = 0.0, slow = 0.0;
  v[0] = r.vo2_base;
  for (std::int64_t t = 1; t < T; ++t) {
    const double target = r.vo2_gain * p.u[static_cast<size_t>(t - 1)];
    fast = fast + (target - fast) / r.tau_fast;
    slow = slow + (target - slow) / r.tau_slow;
    v[static_cast<size_t>(t)] =
        r.vo2_base + (1.0 - r.slow_fraction) * fast + r.slow_fraction * slow;
  }
  return v;
}

ingest::RawSession simulate_biomech(const IntensityProfile& p,
                                    const RunnerProfile& r,
                                    std::uint64_t seed, bool noise) {
  Rng rng(seed);
  const auto T = static_cast<std::int64_t>(p.u.size());
  ingest::RawSession raw;
  raw.runner_id = r.runner_id;
  raw.age_years = r.age_years;
  raw.sex_code = r.sex;
  raw.height_m = r.height_m;
  raw.weight_kg = r.weight_kg;
  raw.t.resize(static_cast<size_t>(T));
  auto& pace = raw.channels["pace_mps"];
  auto& cad = raw.channels["cadence_spm"];
  auto& vosc = raw.channels["vertical_oscillation_mm"];
  auto& alt = raw.channels["altitude_m"];
  auto& stance = raw.channels["stance_time_pct"];
  auto& vratio = raw.channels["vertical_ratio"];
  auto& step = raw.channels["step_length_mm"];

  const double sd = noise ? r.noise_biomech : 0.0;
  double altitude = 100.0 + 400.0 * rng.uniform();
  for (std::int64_t t = 0; t < T; ++t) {
    raw.t[static_cast<size_t>(t)] = t;
    const double u = p.u[static_cast<size_t>(t)];
    auto jitter = [&](double v) { return v * (1.0 + sd * rng.normal()); };
    pace.push_back(jitter(r.pace_base + r.pace_span * u));
    cad.push_back(jitter(r.cadence_base + r.cadence_span * u));
    vosc.push_back(jitter(r.vosc_base + r.vosc_span * u));
    stance.push_back(jitter(r.stance_base + r.stance_span * u));
    step.push_back(jitter(r.step_base + r.step_span * u));
    vratio.push_back(vosc.back() / step.back() * 100.0);
    alt.push_back(altitude);
    altitude += 5.0 * sd * rng.normal();  // gentle grade drift
  }
  return raw;
}

GeneratedSession gen_session(const RunnerProfile& r, ProfileKind kind,
                             std::int64_t duration_s, std::uint64_t seed,
                             bool noise) {
  GeneratedSession g;
  const auto profile = gen_profile(kind, duration_s, mix_seed(seed, 1));
  g.raw = simulate_biomech(profile, r, mix_seed(seed, 2), noise);
  g.hr_true = simulate_hr(profile, r);
  g.vo2_true = simulate_vo2(profile, r);

  Rng rng(mix_seed(seed, 3));
  const auto T = duration_s;
  auto& hr = g.raw.channels["hr_bpm"];
  hr.resize(static_cast<size_t>(T));
  const double hr_sd = noise ? r.noise_sd_hr : 0.0;
  for (std::int64_t t = 0; t < T; ++t) {
    const double v = g.hr_true[static_cast<size_t>(t)] + hr_sd * rng.normal();
    hr[static_cast<size_t>(t)] =
        std::min(r.hr_max, std::max(r.hr_rest * 0.9, v));
  }

  // breath-level measurements every 2.5 s (0.4 Hz), linear interp + noise
  const double vo2_sd = noise ? r.noise_sd_vo2 : 0.0;
  for (double ts = 0.0; ts < static_cast<double>(T - 1); ts += 2.5) {
    const auto i = static_cast<std::int64_t>(ts);
    const double frac = ts - static_cast<double>(i);
    const double base =
        g.vo2_true[static_cast<size_t>(i)] * (1.0 - frac) +
        g.vo2_true[static_cast<size_t>(std::min(T - 1, i + 1))] * frac;
    g.raw.breath.emplace_back(ts, std::max(0.0, base + vo2_sd * rng.normal()));
  }
  return g;
}

std::vector<RunnerProfile> gen_cohort(int runners, std::uint64_t seed) {
  std::vector<RunnerProfile> out;
  for (int i = 0; i < runners; ++i) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(i), 10000));
    RunnerProfile r;
    char id[16];
    std::snprintf(id, sizeof(id), "r%02d", i + 1);
    r.runner_id = id;
    r.age_years = std::floor(rng.uniform(25.0, 46.0));
    r.sex = rng.uniform() < 0.5 ? 0 : 1;
    r.height_m = rng.uniform(1.60, 1.90);
    r.weight_kg = 70.0 + (r.height_m - 1.75) * 60.0 + rng.uniform(-8.0, 8.0);
    // A trained cohort clusters tightly: runners differ, but biomech
    // history still pins down an unseen runner's demand curve. Wider
    // spreads make cross-runner transfer unidentifiable at toy data
    // scale, which is not the regime the estimators target.
    r.hr_rest = rng.uniform(55.0, 57.0);
    r.hr_max = rng.uniform(188.0, 192.0);
    r.tau_hr = rng.uniform(33.0, 37.0);
    r.vo2_base = 3.5 * r.weight_kg + rng.uniform(-20.0, 20.0);
    r.vo2_gain = rng.uniform(44.0, 56.0) * r.weight_kg;  // toward VO2max
    r.tau_fast = rng.uniform(22.0, 32.0);
    r.tau_slow = rng.uniform(90.0, 130.0);
    r.slow_fraction = rng.uniform(0.12, 0.28);
    r.noise_sd_hr = rng.uniform(0.8, 1.8);
    r.noise_sd_vo2 = rng.uniform(40.0, 80.0);
    r.pace_base = rng.uniform(2.45, 2.55);
    r.pace_span = rng.uniform(1.95, 2.05);
    r.cadence_base = rng.uniform(79.0, 81.0);
    r.cadence_span = rng.uniform(9.5, 10.5);
    r.vosc_base = rng.uniform(84.0, 88.0);
    r.vosc_span = rng.uniform(-18.5, -16.5);
    r.stance_base = rng.uniform(34.5, 35.5);
    r.stance_span = rng.uniform(-8.5, -7.5);
    r.step_base = rng.uniform(990.0, 1010.0);
    r.step_span = rng.uniform(390.0, 410.0);
    r.noise_biomech = rng.uniform(0.005, 0.02);
    out.push_back(std::move(r));
  }
  return out;
}

void write_session_files(const std::string& dir,
                         const ingest::RawSession& raw) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const auto base = fs::path(dir) / raw.session_id;

  std::ofstream csv(base.string() + ".csv", std::ios::binary);
  if (!csv) throw DataError("cannot write: " + base.string() + ".csv");
  csv << "t,pace_mps,cadence_spm,vertical_oscillation_mm,altitude_m,"
         "stance_time_pct,vertical_ratio,step_length_mm,hr_bpm\n";
  const auto T = raw.t.size();
  char buf[256];
  for (size_t i = 0; i < T; ++i) {
    std::snprintf(buf, sizeof(buf),
                  "%lld,%.4f,%.2f,%.2f,%.3f,%.2f,%.4f,%.2f,%.2f\n",
                  static_cast<long long>(raw.t[i]),
                  raw.channels.at("pace_mps")[i],
                  raw.channels.at("cadence_spm")[i],
                  raw.channels.at("vertical_oscillation_mm")[i],
                  raw.channels.at("altitude_m")[i],
                  raw.channels.at("stance_time_pct")[i],
                  raw.channels.at("vertical_ratio")[i],
                  raw.channels.at("step_length_mm")[i],
                  raw.channels.at("hr_bpm")[i]);
    csv << buf;
  }

  nlohmann::json sidecar = {
      {"runner_id", raw.runner_id},   {"session_id", raw.session_id},
      {"age_years", raw.age_years},   {"sex", raw.sex_code},
      {"height_m", raw.height_m},     {"weight_kg", raw.weight_kg}};
  std::ofstream js(base.string() + ".json", std::ios::binary);
  js << sidecar.dump(2) << '\n';

  std::ofstream breath(base.string() + "_breath.csv", std::ios::binary);
  breath << "t_s,vo2_mlmin\n";
  for (const auto& [ts, v] : raw.breath) {
    std::snprintf(buf, sizeof(buf), "%.1f,%.2f\n", ts, v);
    breath << buf;
  }
}

std::vector<std::string> write_dataset(const CohortConfig& cfg,
                                       const std::string& out_dir) {
  if (cfg.runners < 1 || cfg.sessions_per_runner < 1)
    throw ConfigError("write_dataset: empty cohort");
  if (cfg.min_duration_s < 120 || cfg.max_duration_s < cfg.min_duration_s)
    throw ConfigError("write_dataset: bad duration range");
  const ProfileKind kinds[4] = {ProfileKind::steady, ProfileKind::intervals,
                                ProfileKind::incremental, ProfileKind::ramp};
  auto cohort = gen_cohort(cfg.runners, cfg.seed);
  std::vector<std::string> paths;
  for (int ri = 0; ri < cfg.runners; ++ri) {
    auto& runner = cohort[static_cast<size_t>(ri)];
    for (int si = 0; si < cfg.sessions_per_runner; ++si) {
      const auto seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(ri),
                                 static_cast<std::uint64_t>(si + 1));
      Rng rng(mix_seed(seed, 77));
      const auto dur = cfg.min_duration_s +
                       static_cast<std::int64_t>(rng.uniform() *
                                                 static_cast<double>(
                                                     cfg.max_duration_s -
                                                     cfg.min_duration_s + 1));
      auto g = gen_session(runner, kinds[si % 4], dur, seed, cfg.noise);
      char sid[32];
      std::snprintf(sid, sizeof(sid), "%s_s%02d", runner.runner_id.c_str(),
                    si + 1);
      g.raw.session_id = sid;
      write_session_files(out_dir, g.raw);
      paths.push_back((std::filesystem::path(out_dir) / (std::string(sid) + ".csv"))
                          .string());
    }
  }
  return paths;
}

}  // namespace physio::synth
