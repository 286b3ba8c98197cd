#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "physio/hr/models.hpp"
#include "physio/ingest/ingest.hpp"
#include "physio/io/checkpoint.hpp"
#include "physio/train/dataset.hpp"
#include "physio/train/schedules.hpp"
#include "physio/vo2/model.hpp"

namespace physio::train {

enum class ModelKind { hr_ode, hr_kalman, vo2 };

const char* model_kind_name(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

struct FitConfig {
  ModelKind kind = ModelKind::vo2;
  hr::OdeHrSpec ode;
  hr::KalmanHrSpec kalman;
  vo2::Vo2Spec vo2;

  int max_epochs = 200;
  int batch_size = 32;
  std::int64_t window_len = 60;
  std::int64_t stride = 60;
  std::uint64_t seed = 0;

  double lr = 1e-3;
  double weight_decay = 1e-5;
  bool decoupled_decay = false;  // AdamW when true
  double clip = 1.0;             // fixed bound; ignored under adaptive_clip
  bool adaptive_clip = false;    // clip_value(epoch)
  bool curriculum_weights = false;
  LossWeights weights;  // used as-is when the curriculum is off

  enum class LrSchedule { plateau, cosine };
  LrSchedule schedule = LrSchedule::plateau;
  double plateau_factor = 0.5;
  int plateau_patience = 10;
  int cosine_t0 = 10;
  int cosine_t_mult = 2;
  double eta_min = 1e-6;

  enum class Monitor { val_loss, val_mae };
  Monitor monitor = Monitor::val_loss;
  int early_stop_patience = 20;
};

// per-model training recipe: optimizer family, schedule, patience
FitConfig default_fit_config(ModelKind kind);

struct EpochRecord {
  int epoch = 0;
  double w_base = 0, w_dynamic = 0, w_aux = 0;
  double clip = 0, lr = 0;
  double train_loss = 0, val_loss = 0, val_mae = 0;
};

// one JSON object per line, epochs in order
std::string report_jsonl(const std::vector<EpochRecord>& report);

struct FitResult {
  std::vector<EpochRecord> report;
  int best_epoch = 0;
  double best_val = 0.0;  // monitored value at best_epoch
  io::Checkpoint checkpoint;
};

// Trains on window batches cut from the train sessions; the model with the
// best monitored value is what lands in the checkpoint. An empty val list
// scores validation on the training windows instead.
FitResult fit(const FitConfig& cfg,
              const std::vector<ingest::FeatureSession>& train_sessions,
              const std::vector<ingest::FeatureSession>& val_sessions);

// a checkpointed model rebound to its own parameter store
struct LoadedModel {
  ModelKind kind = ModelKind::vo2;
  std::int64_t window_len = 60;
  ad::ParamStore ps{0};
  io::Normalization norm;
  hr::OdeHrModel ode;
  hr::KalmanHrModel kalman;
  vo2::Vo2Model vo2;
};

LoadedModel load_model(const io::Checkpoint& c);

}  // namespace physio::train
