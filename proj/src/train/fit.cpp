#include "physio/train/fit.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "physio/errors.hpp"
#include "physio/train/losses.hpp"
#include "physio/train/optim.hpp"

namespace physio::train {

const char* model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::hr_ode: return "hr_ode";
    case ModelKind::hr_kalman: return "hr_kalman";
    case ModelKind::vo2: return "vo2_kalman";
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "hr_ode") return ModelKind::hr_ode;
  if (s == "hr_kalman") return ModelKind::hr_kalman;
  if (s == "vo2" || s == "vo2_kalman") return ModelKind::vo2;
  throw ConfigError("unknown model kind: " + s);
}

FitConfig default_fit_config(ModelKind kind) {
  FitConfig c;
  c.kind = kind;
  switch (kind) {
    case ModelKind::hr_ode:
      c.lr = 1e-3;
      c.early_stop_patience = 20;
      break;
    case ModelKind::hr_kalman:
      c.lr = 1e-3;
      c.early_stop_patience = 100;
      break;
    case ModelKind::vo2:
      c.lr = 4e-3;
      c.decoupled_decay = true;
      c.adaptive_clip = true;
      c.curriculum_weights = true;
      c.schedule = FitConfig::LrSchedule::cosine;
      c.monitor = FitConfig::Monitor::val_mae;
      c.early_stop_patience = 50;
      break;
  }
  return c;
}

std::string report_jsonl(const std::vector<EpochRecord>& report) {
  std::string out;
  for (const auto& r : report) {
    nlohmann::json j{{"epoch", r.epoch},         {"w_base", r.w_base},
                     {"w_dynamic", r.w_dynamic}, {"w_aux", r.w_aux},
                     {"clip", r.clip},           {"lr", r.lr},
                     {"train_loss", r.train_loss}, {"val_loss", r.val_loss},
                     {"val_mae", r.val_mae}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

namespace {

// one trainable model of any kind, plus its loss
struct Driver {
  ModelKind kind;
  hr::OdeHrModel ode;
  hr::KalmanHrModel kalman;
  vo2::Vo2Model vo2m;
  io::Normalization norm;

  // scalar loss; also hands back the raw-unit prediction for MAE tracking
  ad::Tensor loss(const Batch& batch, const LossWeights& w, bool training,
                  Rng* rng, ad::Tensor* pred_raw_out) const {
    if (kind == ModelKind::vo2) {
      const auto b = static_cast<std::int64_t>(batch.anchor_raw.size());
      std::vector<double> y0(batch.anchor_raw);
      for (auto& v : y0) v = (v - norm.target_mean) / norm.target_std;
      const auto y0_t =
          ad::Tensor::from({static_cast<int>(b)}, std::move(y0));
      const auto out = vo2::vo2_forward(vo2m, batch.x, &y0_t, training, rng);
      if (pred_raw_out)
        *pred_raw_out = ad::add_scalar(
            ad::mul_scalar(out.y_seq, norm.target_std), norm.target_mean);
      return vo2_total_loss(out, batch.target_raw, batch.mask,
                            norm.target_mean, norm.target_std, w);
    }
    const auto b = static_cast<int>(batch.anchor_raw.size());
    const auto h0 = ad::Tensor::from({b}, batch.anchor_raw);
    const auto out =
        kind == ModelKind::hr_ode
            ? hr::ode_hr_forward(ode, batch.x, h0, nullptr, training, rng)
            : hr::kalman_hr_forward(kalman, batch.x, h0, nullptr, nullptr,
                                    training, rng);
    if (pred_raw_out) *pred_raw_out = out.h;
    return hr_total_loss(out.h, batch.target_raw, batch.mask, out.mu,
                         out.sigma, w.lambda_hr);
  }
};

Driver build_driver(ad::ParamStore& ps, const FitConfig& cfg,
                    const io::Normalization& norm) {
  Driver d;
  d.kind = cfg.kind;
  d.norm = norm;
  switch (cfg.kind) {
    case ModelKind::hr_ode: d.ode = hr::make_ode_hr(ps, cfg.ode); break;
    case ModelKind::hr_kalman:
      d.kalman = hr::make_kalman_hr(ps, cfg.kalman);
      break;
    case ModelKind::vo2: d.vo2m = vo2::make_vo2(ps, cfg.vo2); break;
  }
  return d;
}

std::vector<std::vector<WindowRef>> sequential_batches(const Dataset& ds,
                                                       int batch_size) {
  std::vector<std::vector<WindowRef>> batches;
  for (std::size_t at = 0; at < ds.windows.size();
       at += static_cast<std::size_t>(batch_size)) {
    const auto end =
        std::min(ds.windows.size(), at + static_cast<std::size_t>(batch_size));
    batches.emplace_back(ds.windows.begin() + static_cast<std::ptrdiff_t>(at),
                         ds.windows.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

nlohmann::json backbone_spec_json(const hr::BackboneSpec& s) {
  return {{"input", s.input},           {"enc_hidden", s.enc_hidden},
          {"hidden", s.hidden},         {"gru_layers", s.gru_layers},
          {"head_hidden", s.head_hidden}, {"dropout", s.dropout}};
}

hr::BackboneSpec backbone_spec_from_json(const nlohmann::json& j) {
  hr::BackboneSpec s;
  s.input = j.at("input");
  s.enc_hidden = j.at("enc_hidden");
  s.hidden = j.at("hidden");
  s.gru_layers = j.at("gru_layers");
  s.head_hidden = j.at("head_hidden");
  s.dropout = j.at("dropout");
  return s;
}

nlohmann::json model_config_json(const FitConfig& cfg) {
  nlohmann::json j{{"kind", model_kind_name(cfg.kind)},
                   {"window_len", cfg.window_len}};
  switch (cfg.kind) {
    case ModelKind::hr_ode:
      j["spec"] = {{"backbone", backbone_spec_json(cfg.ode.backbone)},
                   {"demand_hidden", cfg.ode.demand_hidden},
                   {"dt", cfg.ode.dt},
                   {"hr_min", cfg.ode.hr_min},
                   {"hr_max", cfg.ode.hr_max}};
      break;
    case ModelKind::hr_kalman:
      j["spec"] = {{"backbone", backbone_spec_json(cfg.kalman.backbone)},
                   {"head_hidden", cfg.kalman.head_hidden},
                   {"hr_min", cfg.kalman.hr_min},
                   {"hr_max", cfg.kalman.hr_max},
                   {"gamma", cfg.kalman.gamma},
                   {"p0", cfg.kalman.p0},
                   {"var_floor", cfg.kalman.var_floor}};
      break;
    case ModelKind::vo2:
      j["spec"] = {{"input", cfg.vo2.input},
                   {"enc_hidden", cfg.vo2.enc_hidden},
                   {"hidden", cfg.vo2.hidden},
                   {"layers", cfg.vo2.layers},
                   {"head_hidden", cfg.vo2.head_hidden},
                   {"dropout", cfg.vo2.dropout},
                   {"var_floor", cfg.vo2.var_floor},
                   {"delta_floor", cfg.vo2.delta_floor},
                   {"target_sigma", cfg.vo2.target_sigma},
                   {"trend_weight", cfg.vo2.trend_weight},
                   {"blend_scale", cfg.vo2.blend_scale},
                   {"blend_horizon", cfg.vo2.blend_horizon},
                   {"eps", cfg.vo2.eps},
                   {"learned_schedules", cfg.vo2.learned_schedules}};
      break;
  }
  return j;
}

}  // namespace

FitResult fit(const FitConfig& cfg_in,
              const std::vector<ingest::FeatureSession>& train_sessions,
              const std::vector<ingest::FeatureSession>& val_sessions) {
  if (train_sessions.empty()) throw ConfigError("fit: empty training split");
  FitConfig cfg = cfg_in;

  const auto target =
      cfg.kind == ModelKind::vo2 ? TargetKind::vo2 : TargetKind::hr;
  auto norm = fit_normalization(train_sessions, target);
  auto train_ds =
      make_dataset(train_sessions, target, norm, cfg.window_len, cfg.stride);
  if (train_ds.windows.empty())
    throw ConfigError("fit: no usable training windows");
  auto val_ds = val_sessions.empty()
                    ? train_ds
                    : make_dataset(val_sessions, target, norm, cfg.window_len,
                                   cfg.stride);
  if (val_ds.windows.empty())
    throw ConfigError("fit: no usable validation windows");

  // network input width follows the data
  const auto d = static_cast<int>(norm.feature_names.size());
  cfg.ode.backbone.input = d;
  cfg.kalman.backbone.input = d;
  cfg.vo2.input = d;
  // the raw-unit innovation clamp needs the target scale it will run under
  cfg.vo2.target_sigma = norm.target_std;

  ad::ParamStore ps(mix_seed(cfg.seed, 0x696e6974ULL));
  const Driver driver = build_driver(ps, cfg, norm);

  AdamConfig ocfg;
  ocfg.lr = cfg.lr;
  ocfg.weight_decay = cfg.weight_decay;
  ocfg.decoupled = cfg.decoupled_decay;
  Adam opt(ps, ocfg);
  PlateauScheduler plateau(cfg.lr, cfg.plateau_factor, cfg.plateau_patience);

  FitResult res;
  std::map<std::string, std::vector<double>> best_values;
  bool has_best = false;
  int bad = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    LossWeights w = cfg.curriculum_weights ? curriculum(epoch) : cfg.weights;
    w.alpha_dyn = cfg.weights.alpha_dyn;
    w.lambda_hr = cfg.weights.lambda_hr;
    const double clip = cfg.adaptive_clip ? clip_value(epoch) : cfg.clip;
    const double lr =
        cfg.schedule == FitConfig::LrSchedule::cosine
            ? cosine_warm_restart_lr(epoch, cfg.lr, cfg.cosine_t0,
                                     cfg.cosine_t_mult, cfg.eta_min)
            : plateau.lr();
    opt.set_lr(lr);

    Rng shuffle_rng(mix_seed(cfg.seed, 0x73687566ULL, epoch));
    Rng drop_rng(mix_seed(cfg.seed, 0x64726f70ULL, epoch));
    double tl_num = 0.0;
    std::int64_t tl_den = 0;
    for (const auto& refs : make_batches(train_ds, cfg.batch_size, shuffle_rng)) {
      const auto batch = assemble_batch(train_ds, refs);
      ps.zero_grad();
      const auto loss = driver.loss(batch, w, true, &drop_rng, nullptr);
      ad::backward(loss);
      clip_grad_norm(ps, clip);
      opt.step();
      tl_num += loss.item() * static_cast<double>(refs.size());
      tl_den += static_cast<std::int64_t>(refs.size());
    }

    double vl_num = 0.0, vmae_num = 0.0, vmae_den = 0.0;
    std::int64_t vl_den = 0;
    {
      ad::NoGradGuard no_grad;
      for (const auto& refs : sequential_batches(val_ds, cfg.batch_size)) {
        const auto batch = assemble_batch(val_ds, refs);
        ad::Tensor pred_raw;
        const auto loss = driver.loss(batch, w, false, nullptr, &pred_raw);
        vl_num += loss.item() * static_cast<double>(refs.size());
        vl_den += static_cast<std::int64_t>(refs.size());
        for (std::int64_t i = 0; i < batch.mask.numel(); ++i) {
          const double m = batch.mask.values()[i];
          vmae_num +=
              m * std::abs(pred_raw.values()[i] - batch.target_raw.values()[i]);
          vmae_den += m;
        }
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.w_base = w.w_base;
    rec.w_dynamic = w.w_dynamic;
    rec.w_aux = w.w_aux;
    rec.clip = clip;
    rec.lr = lr;
    rec.train_loss = tl_num / static_cast<double>(tl_den);
    rec.val_loss = vl_num / static_cast<double>(vl_den);
    rec.val_mae = vmae_num / vmae_den;
    res.report.push_back(rec);

    plateau.observe(rec.val_loss);

    const double monitored = cfg.monitor == FitConfig::Monitor::val_mae
                                 ? rec.val_mae
                                 : rec.val_loss;
    if (!has_best || monitored < res.best_val) {
      has_best = true;
      res.best_val = monitored;
      res.best_epoch = epoch;
      best_values.clear();
      for (const auto& [path, t] : ps.items()) best_values[path] = t.values();
      bad = 0;
    } else if (++bad >= cfg.early_stop_patience) {
      break;
    }
  }

  for (const auto& [path, values] : best_values) ps.set_values(path, values);

  res.checkpoint.model = model_kind_name(cfg.kind);
  res.checkpoint.config = model_config_json(cfg);
  res.checkpoint.norm = norm;
  res.checkpoint.params = io::params_to_json(ps);
  return res;
}

LoadedModel load_model(const io::Checkpoint& c) {
  LoadedModel m;
  m.kind = model_kind_from_string(c.model);
  m.norm = c.norm;
  m.window_len = c.config.at("window_len");
  const auto& spec = c.config.at("spec");
  ad::ParamStore ps(0);
  switch (m.kind) {
    case ModelKind::hr_ode: {
      hr::OdeHrSpec s;
      s.backbone = backbone_spec_from_json(spec.at("backbone"));
      s.demand_hidden = spec.at("demand_hidden");
      s.dt = spec.at("dt");
      s.hr_min = spec.at("hr_min");
      s.hr_max = spec.at("hr_max");
      hr::make_ode_hr(ps, s);
      io::params_from_json(ps, c.params);
      m.ps = std::move(ps);
      m.ode = hr::bind_ode_hr(m.ps, s);
      break;
    }
    case ModelKind::hr_kalman: {
      hr::KalmanHrSpec s;
      s.backbone = backbone_spec_from_json(spec.at("backbone"));
      s.head_hidden = spec.at("head_hidden");
      s.hr_min = spec.at("hr_min");
      s.hr_max = spec.at("hr_max");
      s.gamma = spec.at("gamma");
      s.p0 = spec.at("p0");
      s.var_floor = spec.at("var_floor");
      hr::make_kalman_hr(ps, s);
      io::params_from_json(ps, c.params);
      m.ps = std::move(ps);
      m.kalman = hr::bind_kalman_hr(m.ps, s);
      break;
    }
    case ModelKind::vo2: {
      vo2::Vo2Spec s;
      s.input = spec.at("input");
      s.enc_hidden = spec.at("enc_hidden");
      s.hidden = spec.at("hidden");
      s.layers = spec.at("layers");
      s.head_hidden = spec.at("head_hidden");
      s.dropout = spec.at("dropout");
      s.var_floor = spec.at("var_floor");
      s.delta_floor = spec.at("delta_floor");
      s.target_sigma = spec.at("target_sigma");
      s.trend_weight = spec.at("trend_weight");
      s.blend_scale = spec.at("blend_scale");
      s.blend_horizon = spec.at("blend_horizon");
      s.eps = spec.at("eps");
      s.learned_schedules = spec.at("learned_schedules");
      vo2::make_vo2(ps, s);
      io::params_from_json(ps, c.params);
      m.ps = std::move(ps);
      m.vo2 = vo2::bind_vo2(m.ps, s);
      break;
    }
  }
  return m;
}

}  // namespace physio::train
