#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "physio/cli/cli.hpp"
#include "physio/errors.hpp"
#include "physio/hr/models.hpp"
#include "physio/ingest/ingest.hpp"
#include "physio/io/checkpoint.hpp"
#include "physio/rng.hpp"
#include "physio/synth/synth.hpp"
#include "physio/train/cv.hpp"
#include "physio/train/fit.hpp"
#include "physio/train/metrics.hpp"
#include "physio/vo2/model.hpp"

namespace physio::cli {

namespace {

namespace fsys = std::filesystem;

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fsys::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir + ": " + ec.message());
}

void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path + " for writing");
  f << body;
  f.flush();
  if (!f) throw DataError("short write to " + path);
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_resolved(const std::string& out, const nlohmann::json& j) {
  io::write_json_file((fsys::path(out) / "resolved_config.json").string(), j);
}

std::string split_dir_name(std::size_t i) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "split_%02zu", i);
  return buf;
}

ingest::FeatureMode feature_mode_from_string(const std::string& s) {
  if (s == "hr") return ingest::FeatureMode::hr;
  if (s == "vo2") return ingest::FeatureMode::vo2;
  throw ConfigError("mode must be hr or vo2, got '" + s + "'");
}

ingest::FeatureMode mode_for_kind(train::ModelKind kind) {
  return kind == train::ModelKind::vo2 ? ingest::FeatureMode::vo2
                                       : ingest::FeatureMode::hr;
}

std::vector<ingest::FeatureSession> load_features(
    const std::vector<std::string>& files, ingest::FeatureMode mode) {
  std::vector<ingest::FeatureSession> out;
  out.reserve(files.size());
  for (const auto& f : files)
    out.push_back(ingest::transform_features(ingest::load_session(f), mode));
  return out;
}

std::int64_t first_observed(const ingest::FeatureSession& fs) {
  for (std::int64_t t = 0; t < fs.T; ++t)
    if (fs.mask[static_cast<std::size_t>(t)] != 0.0) return t;
  throw DataError(fs.session_id + ": no observed samples");
}

const std::vector<double>& target_of(const ingest::FeatureSession& fs,
                                     train::ModelKind kind) {
  return kind == train::ModelKind::vo2 ? fs.vo2 : fs.hr;
}

void write_prediction_csv(const std::string& path, std::int64_t t0,
                          const std::vector<double>& truth,
                          const std::vector<double>& pred) {
  std::string body = "t,value_true,value_pred\n";
  for (std::size_t i = 0; i < pred.size(); ++i) {
    body += std::to_string(t0 + static_cast<std::int64_t>(i));
    body += ',';
    body += g17(truth[i]);
    body += ',';
    body += g17(pred[i]);
    body += '\n';
  }
  write_text_file(path, body);
}

// Runs fn(i) for i in [0, n) across `jobs` threads; the first failure by
// index is rethrown so error behavior does not depend on scheduling.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs < 1) throw ConfigError("--jobs must be >= 1");
  if (jobs == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errs(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        fn(i);
      } catch (...) {
        errs[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const auto width = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  pool.reserve(width);
  for (std::size_t i = 0; i < width; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

// Pooled predictions grouped for per-runner rows and the aggregate row.
struct SeriesSet {
  std::vector<std::vector<double>> pred, truth;
  std::vector<std::string> runner;

  void add(std::string runner_id, std::vector<double> t, std::vector<double> p) {
    runner.push_back(std::move(runner_id));
    truth.push_back(std::move(t));
    pred.push_back(std::move(p));
  }
  void absorb(SeriesSet&& o) {
    for (std::size_t i = 0; i < o.pred.size(); ++i)
      add(std::move(o.runner[i]), std::move(o.truth[i]), std::move(o.pred[i]));
  }
};

nlohmann::json series_report(const SeriesSet& s,
                             std::vector<std::string>* csv_rows,
                             const std::string& row_tag) {
  const auto agg = train::evaluate(s.pred, s.truth);
  nlohmann::json per_runner = nlohmann::json::object();
  std::map<std::string, std::vector<std::size_t>> by_runner;
  for (std::size_t i = 0; i < s.runner.size(); ++i)
    by_runner[s.runner[i]].push_back(i);
  for (const auto& [rid, idx] : by_runner) {
    std::vector<std::vector<double>> p, t;
    for (auto i : idx) {
      p.push_back(s.pred[i]);
      t.push_back(s.truth[i]);
    }
    const auto row = train::evaluate(p, t).overall;
    per_runner[rid] = train::metric_row_to_json(row);
    if (csv_rows)
      csv_rows->push_back(row_tag + "," + rid + "," + std::to_string(row.n) +
                          "," + g17(row.mae) + "," + g17(row.rmse) + "," +
                          g17(row.mape_pct));
  }
  if (csv_rows)
    csv_rows->push_back(row_tag + ",aggregate," + std::to_string(agg.overall.n) +
                        "," + g17(agg.overall.mae) + "," + g17(agg.overall.rmse) +
                        "," + g17(agg.overall.mape_pct));
  return {{"aggregate", train::metrics_to_json(agg)},
          {"per_runner", per_runner}};
}

std::vector<double> window_mean_baseline(const std::vector<double>& truth,
                                         std::int64_t window_len) {
  std::vector<double> out(truth.size(), 0.0);
  const auto n = static_cast<std::int64_t>(truth.size());
  for (std::int64_t s = 0; s < n; s += window_len) {
    const auto e = std::min(n, s + window_len);
    double mean = 0.0;
    for (std::int64_t t = s; t < e; ++t) mean += truth[static_cast<std::size_t>(t)];
    mean /= static_cast<double>(e - s);
    for (std::int64_t t = s; t < e; ++t) out[static_cast<std::size_t>(t)] = mean;
  }
  return out;
}

}  // namespace

std::vector<std::string> list_session_files(const std::string& dir) {
  if (!fsys::is_directory(dir))
    throw DataError("dataset directory not found: " + dir);
  std::vector<std::string> files;
  for (const auto& entry : fsys::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto path = entry.path();
    if (path.extension() != ".csv") continue;
    const auto stem = path.stem().string();
    if (stem.size() >= 7 && stem.substr(stem.size() - 7) == "_breath") continue;
    files.push_back(path.string());
  }
  if (files.empty()) throw DataError("no session csv files in " + dir);
  std::sort(files.begin(), files.end());
  return files;
}

int cmd_synth(const SynthOpts& o) {
  ensure_dir(o.out);
  synth::CohortConfig cc;
  cc.runners = o.runners;
  cc.sessions_per_runner = o.sessions_per_runner;
  cc.min_duration_s = o.min_duration_s;
  cc.max_duration_s = o.max_duration_s;
  cc.seed = o.seed;
  cc.noise = !o.no_noise;
  const auto paths = synth::write_dataset(cc, o.out);

  nlohmann::json manifest;
  manifest["count"] = paths.size();
  auto& sessions = manifest["sessions"] = nlohmann::json::array();
  for (const auto& p : paths) sessions.push_back(fsys::path(p).filename().string());
  io::write_json_file((fsys::path(o.out) / "manifest.json").string(), manifest);
  write_resolved(o.out, resolved_json("synth", o));
  std::cout << "synth: wrote " << paths.size() << " sessions to " << o.out
            << "\n";
  return 0;
}

int cmd_preprocess(const PreprocessOpts& o) {
  const auto mode = feature_mode_from_string(o.mode);
  const auto files = list_session_files(o.data);
  ensure_dir(o.out);

  nlohmann::json index;
  index["mode"] = o.mode;
  auto& sess = index["sessions"] = nlohmann::json::array();
  for (const auto& f : files) {
    const auto fs = ingest::transform_features(ingest::load_session(f), mode);
    if (index.find("feature_names") == index.end())
      index["feature_names"] = fs.feature_names;

    std::string body = "t";
    for (const auto& n : fs.feature_names) body += "," + n;
    body += ",target,mask\n";
    const auto& target = mode == ingest::FeatureMode::vo2 ? fs.vo2 : fs.hr;
    std::int64_t observed = 0;
    for (std::int64_t t = 0; t < fs.T; ++t) {
      body += std::to_string(t);
      for (std::int64_t d = 0; d < fs.D; ++d)
        body += "," + g17(fs.x[static_cast<std::size_t>(t * fs.D + d)]);
      body += "," + g17(target.empty() ? 0.0 : target[static_cast<std::size_t>(t)]);
      body += "," + g17(fs.mask[static_cast<std::size_t>(t)]);
      body += '\n';
      if (fs.mask[static_cast<std::size_t>(t)] != 0.0) ++observed;
    }
    write_text_file(
        (fsys::path(o.out) / (fs.session_id + "_features.csv")).string(), body);
    sess.push_back({{"session_id", fs.session_id},
                    {"runner_id", fs.runner_id},
                    {"rows", fs.T},
                    {"observed", observed}});
  }
  io::write_json_file((fsys::path(o.out) / "features.json").string(), index);
  write_resolved(o.out, resolved_json("preprocess", o));
  std::cout << "preprocess: wrote " << files.size() << " feature tables to "
            << o.out << "\n";
  return 0;
}

namespace {

train::FitConfig build_fit_config(const TrainOpts& o, train::ModelKind kind) {
  auto cfg = train::default_fit_config(kind);
  if (!o.preset.empty()) {
    if (kind == train::ModelKind::vo2) {
      cfg.vo2 = vo2::vo2_preset(o.preset);
    } else {
      const auto bb = hr::backbone_preset(o.preset);
      cfg.ode.backbone = bb;
      cfg.kalman.backbone = bb;
    }
  }
  auto& ob = cfg.ode.backbone;
  auto& kb = cfg.kalman.backbone;
  if (o.enc_hidden > 0) {
    cfg.vo2.enc_hidden = o.enc_hidden;
    ob.enc_hidden = kb.enc_hidden = o.enc_hidden;
  }
  if (o.hidden > 0) {
    cfg.vo2.hidden = o.hidden;
    ob.hidden = kb.hidden = o.hidden;
  }
  if (o.layers > 0) {
    cfg.vo2.layers = o.layers;
    ob.gru_layers = kb.gru_layers = o.layers;
  }
  if (o.head_hidden > 0) {
    cfg.vo2.head_hidden = o.head_hidden;
    ob.head_hidden = kb.head_hidden = o.head_hidden;
    cfg.ode.demand_hidden = o.head_hidden;
    cfg.kalman.head_hidden = o.head_hidden;
  }
  if (o.epochs > 0) cfg.max_epochs = o.epochs;
  if (o.batch > 0) cfg.batch_size = o.batch;
  if (o.window > 0) {
    cfg.window_len = o.window;
    cfg.stride = o.window;
  }
  if (o.stride > 0) cfg.stride = o.stride;
  if (o.lr > 0.0) cfg.lr = o.lr;
  return cfg;
}

}  // namespace

int cmd_train(const TrainOpts& o) {
  const auto kind = train::model_kind_from_string(o.model);
  if (o.val_fraction < 0.0 || o.val_fraction >= 1.0)
    throw ConfigError("--val-fraction must lie in [0, 1)");
  const auto files = list_session_files(o.data);
  const auto sessions = load_features(files, mode_for_kind(kind));

  std::vector<train::SessionKey> keys;
  keys.reserve(sessions.size());
  for (const auto& fs : sessions) keys.push_back({fs.session_id, fs.runner_id});
  auto splits = train::make_cv_splits(keys, o.k_holdout, o.seed);
  if (o.max_splits > 0 &&
      splits.size() > static_cast<std::size_t>(o.max_splits))
    splits.resize(static_cast<std::size_t>(o.max_splits));

  ensure_dir(o.out);
  std::vector<nlohmann::json> entries(splits.size());

  parallel_for(splits.size(), o.jobs, [&](std::size_t i) {
    const auto& sp = splits[i];
    const std::set<std::string> train_ids(sp.train_session_ids.begin(),
                                          sp.train_session_ids.end());
    std::vector<ingest::FeatureSession> pool;
    for (const auto& fs : sessions)
      if (train_ids.count(fs.session_id)) pool.push_back(fs);

    // deterministic validation carve from the split's training sessions
    std::vector<std::size_t> order(pool.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    Rng carve(mix_seed(o.seed, 0x76616cULL, static_cast<std::uint64_t>(i)));
    for (std::size_t k = order.size(); k > 1; --k)
      std::swap(order[k - 1],
                order[static_cast<std::size_t>(
                    carve.uniform_int(0, static_cast<std::int64_t>(k) - 1))]);
    std::size_t n_val = 0;
    if (o.val_fraction > 0.0 && pool.size() >= 2) {
      n_val = static_cast<std::size_t>(
          std::llround(o.val_fraction * static_cast<double>(pool.size())));
      n_val = std::max<std::size_t>(n_val, 1);
      n_val = std::min(n_val, pool.size() - 1);
    }
    std::set<std::size_t> val_idx(order.begin(),
                                  order.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<ingest::FeatureSession> train_fs, val_fs;
    for (std::size_t k = 0; k < pool.size(); ++k)
      (val_idx.count(k) ? val_fs : train_fs).push_back(pool[k]);

    auto cfg = build_fit_config(o, kind);
    cfg.seed = mix_seed(o.seed, 0x666974ULL, static_cast<std::uint64_t>(i));
    const auto res = train::fit(cfg, train_fs, val_fs);

    const auto dir = (fsys::path(o.out) / split_dir_name(i)).string();
    ensure_dir(dir);
    io::save_checkpoint((fsys::path(dir) / "checkpoint.json").string(),
                        res.checkpoint);
    write_text_file((fsys::path(dir) / "report.jsonl").string(),
                    train::report_jsonl(res.report));

    nlohmann::json e;
    e["split"] = i;
    e["dir"] = split_dir_name(i);
    e["held_out"] = sp.held_out_runner_ids;
    e["test_sessions"] = sp.test_session_ids;
    e["n_train_sessions"] = train_fs.size();
    e["n_val_sessions"] = val_fs.size();
    e["best_epoch"] = res.best_epoch;
    e["best_val"] = res.best_val;
    e["epochs_run"] = res.report.size();
    io::write_json_file((fsys::path(dir) / "split.json").string(), e);
    entries[i] = std::move(e);
  });

  nlohmann::json summary;
  summary["model"] = train::model_kind_name(kind);
  summary["k_holdout"] = o.k_holdout;
  summary["splits"] = entries;
  io::write_json_file((fsys::path(o.out) / "splits.json").string(), summary);
  write_resolved(o.out, resolved_json("train", o));

  for (const auto& e : entries)
    std::cout << "train " << e["dir"].get<std::string>() << ": held_out="
              << e["held_out"].dump() << " best_epoch=" << e["best_epoch"]
              << " best_val=" << g17(e["best_val"].get<double>()) << "\n";
  return 0;
}

namespace {

struct EvalSets {
  SeriesSet main, second, baseline;
};

// One split: load its checkpoint, predict its held-out sessions, write the
// per-session CSVs. `second` carries the generative lane for HR models.
EvalSets eval_split(const EvalOpts& o, const nlohmann::json& entry,
                    const std::map<std::string, const ingest::RawSession*>& raws) {
  const auto dir = entry.at("dir").get<std::string>();
  const auto ck = io::load_checkpoint(
      (fsys::path(o.checkpoints) / dir / "checkpoint.json").string());
  const auto lm = train::load_model(ck);

  train::LoadedModel hr_lm;
  bool replace_hr = false;
  if (o.hr_source != "true") {
    if (lm.kind != train::ModelKind::vo2)
      throw ConfigError("--hr-source applies to vo2 checkpoints only");
    if (o.hr_checkpoints.empty())
      throw ConfigError("--hr-source " + o.hr_source +
                        " needs --hr-checkpoints");
    const char* want = nullptr;
    if (o.hr_source == "ode_pred") want = "hr_ode";
    else if (o.hr_source == "kalman_pred") want = "hr_kalman";
    else
      throw ConfigError("--hr-source must be true, ode_pred or kalman_pred");
    const auto hck = io::load_checkpoint(
        (fsys::path(o.hr_checkpoints) / dir / "checkpoint.json").string());
    if (hck.model != want)
      throw ConfigError("--hr-source " + o.hr_source + " expects a " +
                        std::string(want) + " checkpoint, found " + hck.model);
    hr_lm = train::load_model(hck);
    replace_hr = true;
  }

  const auto pred_dir = (fsys::path(o.out) / "predictions" / dir).string();
  ensure_dir(pred_dir);

  EvalSets sets;
  for (const auto& sid_json : entry.at("test_sessions")) {
    const auto sid = sid_json.get<std::string>();
    const auto it = raws.find(sid);
    if (it == raws.end())
      throw DataError("test session " + sid + " not present in --data");
    const auto& raw = *it->second;
    auto fs = ingest::transform_features(raw, mode_for_kind(lm.kind));
    const auto t0 = first_observed(fs);
    const auto& full_truth = target_of(fs, lm.kind);
    const std::vector<double> truth(full_truth.begin() + t0, full_truth.end());

    if (lm.kind == train::ModelKind::vo2) {
      if (replace_hr) {
        auto hfs = ingest::transform_features(raw, ingest::FeatureMode::hr);
        const auto hpred =
            hr_lm.kind == train::ModelKind::hr_ode
                ? hr::predict_hr_session(hr_lm.ode, hfs, hr_lm.norm,
                                         hr::HrMode::generative,
                                         hr_lm.window_len)
                : hr::predict_hr_session(hr_lm.kalman, hfs, hr_lm.norm,
                                         hr::HrMode::generative,
                                         hr_lm.window_len);
        const auto at = std::find(fs.feature_names.begin(),
                                  fs.feature_names.end(), "hr_bpm");
        if (at == fs.feature_names.end())
          throw DataError("vo2 feature set lacks the hr channel");
        const auto hr_idx =
            static_cast<std::int64_t>(at - fs.feature_names.begin());
        for (std::int64_t t = 0; t < fs.T; ++t)
          fs.x[static_cast<std::size_t>(t * fs.D + hr_idx)] =
              hpred[static_cast<std::size_t>(t)];
      }
      const auto full = vo2::predict_vo2_session(lm.vo2, fs, lm.norm,
                                                 lm.window_len);
      const std::vector<double> pred(full.begin() + t0, full.end());
      write_prediction_csv((fsys::path(pred_dir) / (sid + ".csv")).string(),
                           t0, truth, pred);
      sets.main.add(fs.runner_id, truth, pred);
      sets.baseline.add(fs.runner_id, truth,
                        std::vector<double>(truth.size(), truth.front()));
    } else {
      auto predict = [&](hr::HrMode mode) {
        const auto full =
            lm.kind == train::ModelKind::hr_ode
                ? hr::predict_hr_session(lm.ode, fs, lm.norm, mode,
                                         lm.window_len)
                : hr::predict_hr_session(lm.kalman, fs, lm.norm, mode,
                                         lm.window_len);
        return std::vector<double>(full.begin() + t0, full.end());
      };
      const auto std_pred = predict(hr::HrMode::standard);
      const auto gen_pred = predict(hr::HrMode::generative);
      write_prediction_csv(
          (fsys::path(pred_dir) / (sid + "_standard.csv")).string(), t0, truth,
          std_pred);
      write_prediction_csv(
          (fsys::path(pred_dir) / (sid + "_generative.csv")).string(), t0,
          truth, gen_pred);
      sets.main.add(fs.runner_id, truth, std_pred);
      sets.second.add(fs.runner_id, truth, gen_pred);
      sets.baseline.add(fs.runner_id, truth,
                        window_mean_baseline(truth, lm.window_len));
    }
  }
  return sets;
}

}  // namespace

int cmd_eval(const EvalOpts& o) {
  const auto splits_doc = io::read_json_file(
      (fsys::path(o.checkpoints) / "splits.json").string());
  const auto& entries = splits_doc.at("splits");
  const auto model_name = splits_doc.at("model").get<std::string>();

  const auto files = list_session_files(o.data);
  std::vector<ingest::RawSession> raw_store;
  raw_store.reserve(files.size());
  for (const auto& f : files) raw_store.push_back(ingest::load_session(f));
  std::map<std::string, const ingest::RawSession*> raws;
  for (const auto& r : raw_store) raws[r.session_id] = &r;

  ensure_dir(o.out);
  ensure_dir((fsys::path(o.out) / "predictions").string());

  std::vector<EvalSets> per_split(entries.size());
  parallel_for(entries.size(), o.jobs, [&](std::size_t i) {
    per_split[i] = eval_split(o, entries[static_cast<int>(i)], raws);
  });

  EvalSets all;
  for (auto& s : per_split) {
    all.main.absorb(std::move(s.main));
    all.second.absorb(std::move(s.second));
    all.baseline.absorb(std::move(s.baseline));
  }
  if (all.main.pred.empty()) throw DataError("no test sessions evaluated");

  const bool is_vo2 = model_name == "vo2_kalman";
  std::vector<std::string> csv_rows;
  nlohmann::json metrics;
  metrics["model"] = model_name;
  if (is_vo2) {
    metrics["hr_source"] = o.hr_source;
    metrics["prediction"] = series_report(all.main, &csv_rows, "model");
    metrics["baseline_persistence"] =
        series_report(all.baseline, &csv_rows, "baseline");
  } else {
    metrics["standard"] = series_report(all.main, &csv_rows, "standard");
    metrics["generative"] = series_report(all.second, &csv_rows, "generative");
    metrics["baseline_window_mean"] =
        series_report(all.baseline, &csv_rows, "baseline");
  }

  std::string csv = "series,runner_id,n,mae,rmse,mape_pct\n";
  for (const auto& r : csv_rows) csv += r + "\n";
  write_text_file((fsys::path(o.out) / "per_runner.csv").string(), csv);
  io::write_json_file((fsys::path(o.out) / "metrics.json").string(), metrics);
  write_resolved(o.out, resolved_json("eval", o));

  auto agg_line = [&](const char* tag, const nlohmann::json& block) {
    const auto& row = block.at("aggregate").at("overall");
    std::cout << "eval " << model_name << " " << tag
              << ": mae=" << g17(row.at("mae").get<double>())
              << " rmse=" << g17(row.at("rmse").get<double>())
              << " mape_pct=" << g17(row.at("mape_pct").get<double>())
              << " n=" << row.at("n").get<std::int64_t>() << "\n";
  };
  if (is_vo2) {
    agg_line(("hr_source=" + o.hr_source).c_str(), metrics["prediction"]);
    agg_line("baseline_persistence", metrics["baseline_persistence"]);
  } else {
    agg_line("standard", metrics["standard"]);
    agg_line("generative", metrics["generative"]);
    agg_line("baseline_window_mean", metrics["baseline_window_mean"]);
  }
  return 0;
}

int cmd_predict(const PredictOpts& o) {
  const auto ck = io::load_checkpoint(o.checkpoint);
  const auto lm = train::load_model(ck);
  const auto raw = ingest::load_session(o.session);
  const auto fs = ingest::transform_features(raw, mode_for_kind(lm.kind));

  std::vector<double> pred;
  if (lm.kind == train::ModelKind::vo2) {
    pred = vo2::predict_vo2_session(lm.vo2, fs, lm.norm, lm.window_len);
  } else {
    const auto mode = hr::hr_mode_from_string(o.mode);
    pred = lm.kind == train::ModelKind::hr_ode
               ? hr::predict_hr_session(lm.ode, fs, lm.norm, mode,
                                        lm.window_len)
               : hr::predict_hr_session(lm.kalman, fs, lm.norm, mode,
                                        lm.window_len);
  }
  const auto& truth = target_of(fs, lm.kind);

  ensure_dir(o.out);
  write_prediction_csv((fsys::path(o.out) / "prediction.csv").string(), 0,
                       truth, pred);
  const auto metrics = train::evaluate({pred}, {truth});
  nlohmann::json summary;
  summary["model"] = ck.model;
  summary["session_id"] = fs.session_id;
  summary["runner_id"] = fs.runner_id;
  summary["rows"] = fs.T;
  summary["mode"] = lm.kind == train::ModelKind::vo2 ? "first_second_anchor"
                                                     : o.mode;
  summary["metrics"] = train::metrics_to_json(metrics);
  io::write_json_file((fsys::path(o.out) / "summary.json").string(), summary);
  write_resolved(o.out, resolved_json("predict", o));

  std::cout << "predict " << fs.session_id << ": mae="
            << g17(metrics.overall.mae) << " rmse=" << g17(metrics.overall.rmse)
            << " mape_pct=" << g17(metrics.overall.mape_pct) << " rows=" << fs.T
            << "\n";
  return 0;
}

}  // namespace physio::cli
