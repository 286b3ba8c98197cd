#pragma once

#include <cstdint>
#include <vector>

#include "physio/ad/tensor.hpp"
#include "physio/ingest/ingest.hpp"
#include "physio/io/checkpoint.hpp"
#include "physio/rng.hpp"

namespace physio::train {

enum class TargetKind { hr, vo2 };

// z-score constants over the unmasked samples of the given sessions; a
// constant channel gets std 1 so it normalizes to zero
io::Normalization fit_normalization(
    const std::vector<ingest::FeatureSession>& sessions, TargetKind target);

struct WindowRef {
  int session = 0;
  std::int64_t start = 0;
  std::int64_t length = 0;
};

// Training windows: full-length only (short tails are a prediction-time
// concern), and the anchor sample at `start` must be observed since it seeds
// the filter state.
struct Dataset {
  std::vector<ingest::FeatureSession> sessions;
  io::Normalization norm;
  TargetKind target = TargetKind::hr;
  std::int64_t window_len = 60;
  std::vector<WindowRef> windows;
};

Dataset make_dataset(std::vector<ingest::FeatureSession> sessions,
                     TargetKind target, io::Normalization norm,
                     std::int64_t window_len = 60, std::int64_t stride = 60);

struct Batch {
  ad::Tensor x;           // [B x L x D] normalized, masked rows zeroed
  ad::Tensor target_raw;  // [B x L] raw units
  ad::Tensor mask;        // [B x L]
  std::vector<double> anchor_raw;  // first observed target per row
};

Batch assemble_batch(const Dataset& ds, const std::vector<WindowRef>& refs);

// shuffled copy of ds.windows cut into runs of at most batch_size
std::vector<std::vector<WindowRef>> make_batches(const Dataset& ds,
                                                 int batch_size, Rng& rng);

}  // namespace physio::train
