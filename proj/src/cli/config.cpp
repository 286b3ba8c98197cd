#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "physio/cli/cli.hpp"
#include "physio/errors.hpp"
#include "physio/io/checkpoint.hpp"

namespace physio::cli {

namespace {

void add_common(CLI::App* sub, CommonOpts& o) {
  sub->add_option("--config", o.config_path, "JSON config file; flags win");
  sub->add_option("--seed", o.seed, "master seed");
  sub->add_option("--out", o.out, "output directory");
  sub->add_option("--jobs", o.jobs, "parallel split workers");
}

nlohmann::json load_config_file(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  nlohmann::json j;
  try {
    j = io::read_json_file(path);
  } catch (const Error& e) {
    throw ConfigError(std::string("config file: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  return j;
}

// A config value fills a slot only when its flag was not given.
template <typename T>
void take(const nlohmann::json& j, const CLI::App* sub, const std::string& flag,
          const char* key, T& slot) {
  if (sub->count(flag) > 0 || !j.contains(key)) return;
  try {
    slot = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config key '") + key +
                      "' has the wrong type");
  }
}

void merge_common(const nlohmann::json& j, const CLI::App* sub, CommonOpts& o) {
  take(j, sub, "--seed", "seed", o.seed);
  take(j, sub, "--out", "out", o.out);
  take(j, sub, "--jobs", "jobs", o.jobs);
}

nlohmann::json common_json(const char* command, const CommonOpts& o) {
  return {{"command", command},
          {"seed", o.seed},
          {"out", o.out},
          {"jobs", o.jobs}};
}

}  // namespace

nlohmann::json resolved_json(const char* command, const SynthOpts& o) {
  auto j = common_json(command, o);
  j["runners"] = o.runners;
  j["sessions_per_runner"] = o.sessions_per_runner;
  j["min_duration_s"] = o.min_duration_s;
  j["max_duration_s"] = o.max_duration_s;
  j["noise"] = !o.no_noise;
  return j;
}

nlohmann::json resolved_json(const char* command, const PreprocessOpts& o) {
  auto j = common_json(command, o);
  j["data"] = o.data;
  j["mode"] = o.mode;
  return j;
}

nlohmann::json resolved_json(const char* command, const TrainOpts& o) {
  auto j = common_json(command, o);
  j["data"] = o.data;
  j["model"] = o.model;
  j["preset"] = o.preset;
  j["enc_hidden"] = o.enc_hidden;
  j["hidden"] = o.hidden;
  j["layers"] = o.layers;
  j["head_hidden"] = o.head_hidden;
  j["epochs"] = o.epochs;
  j["batch"] = o.batch;
  j["window"] = o.window;
  j["stride"] = o.stride;
  j["lr"] = o.lr;
  j["k_holdout"] = o.k_holdout;
  j["max_splits"] = o.max_splits;
  j["val_fraction"] = o.val_fraction;
  return j;
}

nlohmann::json resolved_json(const char* command, const EvalOpts& o) {
  auto j = common_json(command, o);
  j["data"] = o.data;
  j["checkpoints"] = o.checkpoints;
  j["hr_source"] = o.hr_source;
  j["hr_checkpoints"] = o.hr_checkpoints;
  return j;
}

nlohmann::json resolved_json(const char* command, const PredictOpts& o) {
  auto j = common_json(command, o);
  j["checkpoint"] = o.checkpoint;
  j["session"] = o.session;
  j["mode"] = o.mode;
  return j;
}

int run(int argc, const char* const* argv) {
  CLI::App app{"physiological state estimation: synthesize, train, evaluate"};
  app.require_subcommand(1);

  SynthOpts so;
  auto* synth = app.add_subcommand("synth", "generate a synthetic cohort");
  add_common(synth, so);
  synth->add_option("--runners", so.runners, "cohort size");
  synth->add_option("--sessions-per-runner", so.sessions_per_runner);
  synth->add_option("--min-duration", so.min_duration_s, "seconds");
  synth->add_option("--max-duration", so.max_duration_s, "seconds");
  synth->add_flag("--no-noise", so.no_noise, "emit noise-free measurements");

  PreprocessOpts po;
  auto* prep = app.add_subcommand("preprocess",
                                  "write per-session feature tables");
  add_common(prep, po);
  prep->add_option("--data", po.data, "dataset directory");
  prep->add_option("--mode", po.mode, "hr | vo2");

  TrainOpts to;
  auto* train = app.add_subcommand("train",
                                   "cross-validated training with checkpoints");
  add_common(train, to);
  train->add_option("--data", to.data, "dataset directory");
  train->add_option("--model", to.model, "hr_ode | hr_kalman | vo2");
  train->add_option("--preset", to.preset, "hr: small|large, vo2: 128-4|256-2");
  train->add_option("--enc-hidden", to.enc_hidden);
  train->add_option("--hidden", to.hidden);
  train->add_option("--layers", to.layers);
  train->add_option("--head-hidden", to.head_hidden);
  train->add_option("--epochs", to.epochs);
  train->add_option("--batch", to.batch);
  train->add_option("--window", to.window, "window length, also sets stride");
  train->add_option("--stride", to.stride);
  train->add_option("--lr", to.lr);
  train->add_option("--k-holdout", to.k_holdout, "runners held out per split");
  train->add_option("--max-splits", to.max_splits, "0 trains every split");
  train->add_option("--val-fraction", to.val_fraction);

  EvalOpts eo;
  auto* eval = app.add_subcommand("eval", "held-out metrics for trained splits");
  add_common(eval, eo);
  eval->add_option("--data", eo.data, "dataset directory");
  eval->add_option("--checkpoints", eo.checkpoints, "train output directory");
  eval->add_option("--hr-source", eo.hr_source, "true | ode_pred | kalman_pred");
  eval->add_option("--hr-checkpoints", eo.hr_checkpoints,
                   "HR train output for *_pred sources");

  PredictOpts ro;
  auto* pred = app.add_subcommand("predict", "one-session prediction CSV");
  add_common(pred, ro);
  pred->add_option("--checkpoint", ro.checkpoint, "checkpoint.json path");
  pred->add_option("--session", ro.session, "raw session csv");
  pred->add_option("--mode", ro.mode, "standard | generative (HR models)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (synth->parsed()) {
    const auto j = load_config_file(so.config_path);
    merge_common(j, synth, so);
    take(j, synth, "--runners", "runners", so.runners);
    take(j, synth, "--sessions-per-runner", "sessions_per_runner",
         so.sessions_per_runner);
    take(j, synth, "--min-duration", "min_duration_s", so.min_duration_s);
    take(j, synth, "--max-duration", "max_duration_s", so.max_duration_s);
    if (synth->count("--no-noise") == 0 && j.contains("noise"))
      so.no_noise = !j.at("noise").get<bool>();
    return cmd_synth(so);
  }
  if (prep->parsed()) {
    const auto j = load_config_file(po.config_path);
    merge_common(j, prep, po);
    take(j, prep, "--data", "data", po.data);
    take(j, prep, "--mode", "mode", po.mode);
    return cmd_preprocess(po);
  }
  if (train->parsed()) {
    const auto j = load_config_file(to.config_path);
    merge_common(j, train, to);
    take(j, train, "--data", "data", to.data);
    take(j, train, "--model", "model", to.model);
    take(j, train, "--preset", "preset", to.preset);
    take(j, train, "--enc-hidden", "enc_hidden", to.enc_hidden);
    take(j, train, "--hidden", "hidden", to.hidden);
    take(j, train, "--layers", "layers", to.layers);
    take(j, train, "--head-hidden", "head_hidden", to.head_hidden);
    take(j, train, "--epochs", "epochs", to.epochs);
    take(j, train, "--batch", "batch", to.batch);
    take(j, train, "--window", "window", to.window);
    take(j, train, "--stride", "stride", to.stride);
    take(j, train, "--lr", "lr", to.lr);
    take(j, train, "--k-holdout", "k_holdout", to.k_holdout);
    take(j, train, "--max-splits", "max_splits", to.max_splits);
    take(j, train, "--val-fraction", "val_fraction", to.val_fraction);
    return cmd_train(to);
  }
  if (eval->parsed()) {
    const auto j = load_config_file(eo.config_path);
    merge_common(j, eval, eo);
    take(j, eval, "--data", "data", eo.data);
    take(j, eval, "--checkpoints", "checkpoints", eo.checkpoints);
    take(j, eval, "--hr-source", "hr_source", eo.hr_source);
    take(j, eval, "--hr-checkpoints", "hr_checkpoints", eo.hr_checkpoints);
    return cmd_eval(eo);
  }
  const auto j = load_config_file(ro.config_path);
  merge_common(j, pred, ro);
  take(j, pred, "--checkpoint", "checkpoint", ro.checkpoint);
  take(j, pred, "--session", "session", ro.session);
  take(j, pred, "--mode", "mode", ro.mode);
  return cmd_predict(ro);
}

}  // namespace physio::cli
