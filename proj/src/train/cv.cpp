#include "physio/train/cv.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "physio/errors.hpp"
#include "physio/rng.hpp"

namespace physio::train {

std::vector<CvSplit> make_cv_splits(const std::vector<SessionKey>& sessions,
                                    int k_holdout, std::uint64_t seed) {
  if (k_holdout < 1) throw ConfigError("make_cv_splits: k_holdout must be >= 1");

  std::set<std::string> distinct;
  for (const auto& s : sessions) distinct.insert(s.runner_id);
  std::vector<std::string> runners(distinct.begin(), distinct.end());
  const auto r = static_cast<int>(runners.size());
  if (r < k_holdout + 1)
    throw ConfigError("make_cv_splits: " + std::to_string(r) +
                      " runners cannot support holding out " +
                      std::to_string(k_holdout));

  Rng rng(mix_seed(seed, 0x6376ULL));  // tag keeps the stream off other uses
  for (int i = r - 1; i > 0; --i)
    std::swap(runners[i], runners[rng.uniform_int(0, i)]);

  const int n_splits = (r + k_holdout - 1) / k_holdout;
  std::vector<CvSplit> splits(n_splits);
  for (int i = 0; i < n_splits; ++i) {
    std::set<std::string> held;
    for (int j = 0; j < k_holdout; ++j)
      held.insert(runners[(i * k_holdout + j) % r]);
    auto& sp = splits[i];
    sp.held_out_runner_ids.assign(held.begin(), held.end());
    for (const auto& s : sessions) {
      if (held.count(s.runner_id))
        sp.test_session_ids.push_back(s.session_id);
      else
        sp.train_session_ids.push_back(s.session_id);
    }
  }
  return splits;
}

}  // namespace physio::train
