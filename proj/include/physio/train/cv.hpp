#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace physio::train {

struct SessionKey {
  std::string session_id;
  std::string runner_id;
};

struct CvSplit {
  std::vector<std::string> held_out_runner_ids;
  std::vector<std::string> train_session_ids;
  std::vector<std::string> test_session_ids;
};

// Rotation over a seed-shuffled runner list: split i holds out the k runners
// starting at offset i*k, wrapping around, so ceil(R/k) splits cover every
// runner at least once and each split holds out exactly k.
std::vector<CvSplit> make_cv_splits(const std::vector<SessionKey>& sessions,
                                    int k_holdout, std::uint64_t seed);

}  // namespace physio::train
