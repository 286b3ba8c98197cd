#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "physio/ingest/ingest.hpp"

namespace physio::synth {

struct RunnerProfile {
  std::string runner_id;
  double hr_rest = 55.0, hr_max = 190.0, tau_hr = 35.0;
  double vo2_base = 260.0, vo2_gain = 3200.0;
  double tau_fast = 28.0, tau_slow = 110.0, slow_fraction = 0.2;
  double noise_sd_hr = 1.2, noise_sd_vo2 = 60.0;
  // biomech channels respond affinely to intensity: base + span * u
  double pace_base = 2.5, pace_span = 2.0;      // m/s
  double cadence_base = 80.0, cadence_span = 10.0;
  double vosc_base = 85.0, vosc_span = -18.0;   // mm
  double stance_base = 35.0, stance_span = -8.0;
  double step_base = 1000.0, step_span = 400.0;  // mm
  double noise_biomech = 0.01;  // relative sd
  double age_years = 35.0;
  int sex = 0;
  double height_m = 1.75, weight_kg = 70.0;
};

enum class ProfileKind { steady, intervals, incremental, ramp };
ProfileKind profile_kind_from_string(const std::string& s);

struct IntensityProfile {
  std::vector<double> u;  // per second, in [0,1]
  ProfileKind kind = ProfileKind::steady;
};

IntensityProfile gen_profile(ProfileKind kind, std::int64_t duration_s,
                             std::uint64_t seed);

// noise-free state; measurement noise is added by gen_session
std::vector<double> simulate_hr(const IntensityProfile& p,
                                const RunnerProfile& r);
std::vector<double> simulate_vo2(const IntensityProfile& p,
                                 const RunnerProfile& r);
ingest::RawSession simulate_biomech(const IntensityProfile& p,
                                    const RunnerProfile& r,
                                    std::uint64_t seed, bool noise = true);

struct GeneratedSession {
  ingest::RawSession raw;       // measured channels incl. noisy hr + breath
  std::vector<double> hr_true;  // noise-free state series
  std::vector<double> vo2_true;
};

GeneratedSession gen_session(const RunnerProfile& r, ProfileKind kind,
                             std::int64_t duration_s, std::uint64_t seed,
                             bool noise = true);

std::vector<RunnerProfile> gen_cohort(int runners, std::uint64_t seed);

// <session_id>.csv + .json sidecar + _breath.csv, per the ingest schema
void write_session_files(const std::string& dir, const ingest::RawSession& raw);

struct CohortConfig {
  int runners = 10;
  int sessions_per_runner = 8;
  std::int64_t min_duration_s = 600;
  std::int64_t max_duration_s = 1800;
  std::uint64_t seed = 0;
  bool noise = true;
};

std::vector<std::string> write_dataset(const CohortConfig& cfg,
                                       const std::string& out_dir);

}  // namespace physio::synth
