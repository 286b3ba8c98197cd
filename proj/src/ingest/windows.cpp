#include "physio/errors.hpp"
#include "physio/ingest/ingest.hpp"

namespace physio::ingest {

std::vector<Window> segment_windows(std::int64_t T, std::int64_t length,
                                    std::int64_t stride) {
  if (length < 2) throw ConfigError("segment_windows: length must be >= 2");
  if (stride < 1 || stride > length)
    throw ConfigError("segment_windows: stride must be in [1, length]");
  std::vector<Window> out;
  for (std::int64_t s = 0; s + length <= T; s += stride)
    out.push_back({s, length});
  return out;
}

}  // namespace physio::ingest
