#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "testutil.hpp"

namespace {

namespace fsys = std::filesystem;

std::string cli_path() {
  if (const char* env = std::getenv("PHYSIO_CLI")) return env;
  // fallback for direct runs: the binary sits next to this test executable
  char buf[4096];
  const auto n = readlink("/proc/self/exe", buf, sizeof(buf) - 1);
  if (n <= 0) return {};
  buf[n] = '\0';
  return (fsys::path(buf).parent_path() / "physio").string();
}

int run_cli(const std::string& args, std::string* output = nullptr) {
  const auto cmd = "\"" + cli_path() + "\" " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[512];
  while (std::fgets(buf, sizeof buf, pipe)) out += buf;
  const int status = pclose(pipe);
  if (output) *output = out;
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const fsys::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

nlohmann::json slurp_json(const fsys::path& p) {
  return nlohmann::json::parse(slurp(p));
}

std::vector<std::vector<std::string>> read_csv(const fsys::path& p) {
  std::ifstream f(p);
  REQUIRE(f.good());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(f, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

// a small cohort every CLI case shares; built once, read-only afterwards
const fsys::path& shared_data() {
  static fsys::path dir = [] {
    auto d = testutil::temp_dir("cli_data");
    const auto rc = run_cli("synth --out " + d.string() +
                            " --runners 3 --sessions-per-runner 2"
                            " --min-duration 150 --max-duration 200 --seed 11");
    REQUIRE(rc == 0);
    return d;
  }();
  return dir;
}

const std::string kTinyModel =
    " --enc-hidden 4 --hidden 4 --layers 1 --head-hidden 4"
    " --epochs 2 --batch 8 --window 16";

// vo2 training run reused by eval/predict cases
const fsys::path& shared_vo2_run() {
  static fsys::path dir = [] {
    auto d = testutil::temp_dir("cli_vo2_run");
    const auto rc = run_cli("train --data " + shared_data().string() +
                            " --model vo2" + kTinyModel +
                            " --max-splits 2 --seed 7 --out " + d.string());
    REQUIRE(rc == 0);
    return d;
  }();
  return dir;
}

const fsys::path& shared_hr_run() {
  static fsys::path dir = [] {
    auto d = testutil::temp_dir("cli_hr_run");
    const auto rc = run_cli("train --data " + shared_data().string() +
                            " --model hr_ode" + kTinyModel +
                            " --max-splits 2 --seed 7 --out " + d.string());
    REQUIRE(rc == 0);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("synth writes a deterministic manifest-backed cohort") {
  const auto& d1 = shared_data();
  const auto manifest = slurp_json(d1 / "manifest.json");
  CHECK(manifest.at("count") == 6);
  CHECK(manifest.at("sessions").size() == 6);
  for (const auto& s : manifest.at("sessions"))
    CHECK(fsys::exists(d1 / s.get<std::string>()));
  CHECK(fsys::exists(d1 / "resolved_config.json"));
  const auto resolved = slurp_json(d1 / "resolved_config.json");
  CHECK(resolved.at("command") == "synth");
  CHECK(resolved.at("seed") == 11);

  // a rerun with the same seed reproduces every session byte for byte
  const auto d2 = testutil::temp_dir("cli_data_rerun");
  REQUIRE(run_cli("synth --out " + d2.string() +
                  " --runners 3 --sessions-per-runner 2"
                  " --min-duration 150 --max-duration 200 --seed 11") == 0);
  for (const auto& s : manifest.at("sessions")) {
    const auto name = s.get<std::string>();
    const auto stem = name.substr(0, name.size() - 4);
    for (const auto& suffix : {".csv", ".json", "_breath.csv"})
      CHECK(slurp(d1 / (stem + suffix)) == slurp(d2 / (stem + suffix)));
  }

  // a different seed actually changes the data
  const auto d3 = testutil::temp_dir("cli_data_seed2");
  REQUIRE(run_cli("synth --out " + d3.string() +
                  " --runners 3 --sessions-per-runner 2"
                  " --min-duration 150 --max-duration 200 --seed 12") == 0);
  const auto first = manifest.at("sessions")[0].get<std::string>();
  CHECK(slurp(d1 / first) != slurp(d3 / first));
}

TEST_CASE("preprocess emits aligned feature tables") {
  const auto out = testutil::temp_dir("cli_feats");
  REQUIRE(run_cli("preprocess --data " + shared_data().string() +
                  " --mode vo2 --out " + out.string()) == 0);
  const auto index = slurp_json(out / "features.json");
  CHECK(index.at("mode") == "vo2");
  CHECK(index.at("feature_names").size() == 15);
  REQUIRE(index.at("sessions").size() == 6);

  const auto& s0 = index.at("sessions")[0];
  const auto table =
      read_csv(out / (s0.at("session_id").get<std::string>() + "_features.csv"));
  CHECK(table.size() == s0.at("rows").get<std::size_t>() + 1);
  REQUIRE(table[0].size() == 18);  // t + 15 features + target + mask
  CHECK(table[0][0] == "t");
  CHECK(table[0][16] == "target");
  CHECK(table[0][17] == "mask");
  // every data row parses and the mask column is 0/1
  for (std::size_t i = 1; i < table.size(); ++i) {
    REQUIRE(table[i].size() == 18);
    const double mask = std::stod(table[i][17]);
    CHECK((mask == 0.0 || mask == 1.0));
  }
}

TEST_CASE("cli maps error classes to exit codes") {
  std::string out;
  CHECK(run_cli("train --data " + shared_data().string() +
                " --model bogus --out /tmp/x", &out) == 2);
  CHECK(out.find("config error") != std::string::npos);
  CHECK(run_cli("train --data /definitely/missing --model vo2 --out /tmp/x",
                &out) == 3);
  CHECK(out.find("data error") != std::string::npos);
  CHECK(run_cli("--definitely-not-a-flag") == 2);
  CHECK(run_cli("eval --data " + shared_data().string() +
                " --checkpoints /definitely/missing --out /tmp/x") == 3);
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("synth --help") == 0);
  // 3 runners cannot support hold-4-out splits
  CHECK(run_cli("train --data " + shared_data().string() +
                " --model vo2 --k-holdout 4 --out /tmp/x") == 2);
  // config file with a mistyped value
  const auto dir = testutil::temp_dir("cli_badcfg");
  testutil::write_file(dir / "cfg.json", "{\"runners\": \"many\"}");
  CHECK(run_cli("synth --config " + (dir / "cfg.json").string() +
                " --out " + (dir / "o").string()) == 2);
  testutil::write_file(dir / "broken.json", "{nope");
  CHECK(run_cli("synth --config " + (dir / "broken.json").string() +
                " --out " + (dir / "o").string()) == 2);
}

TEST_CASE("config file values merge under explicit flags") {
  const auto dir = testutil::temp_dir("cli_cfg");
  testutil::write_file(dir / "cfg.json",
                       "{\"runners\": 2, \"sessions_per_runner\": 1,"
                       " \"min_duration_s\": 150, \"max_duration_s\": 160,"
                       " \"seed\": 99}");
  REQUIRE(run_cli("synth --config " + (dir / "cfg.json").string() + " --out " +
                  (dir / "a").string()) == 0);
  CHECK(slurp_json(dir / "a" / "manifest.json").at("count") == 2);
  const auto resolved = slurp_json(dir / "a" / "resolved_config.json");
  CHECK(resolved.at("runners") == 2);
  CHECK(resolved.at("seed") == 99);

  // the flag wins over the file
  REQUIRE(run_cli("synth --config " + (dir / "cfg.json").string() +
                  " --runners 1 --out " + (dir / "b").string()) == 0);
  CHECK(slurp_json(dir / "b" / "manifest.json").at("count") == 1);
  CHECK(slurp_json(dir / "b" / "resolved_config.json").at("runners") == 1);
}

TEST_CASE("train writes per-split artifacts and reruns bit-exactly") {
  const auto& run = shared_vo2_run();
  const auto splits = slurp_json(run / "splits.json");
  CHECK(splits.at("model") == "vo2_kalman");
  REQUIRE(splits.at("splits").size() == 2);

  std::set<std::string> held;
  for (const auto& e : splits.at("splits")) {
    const auto dir = run / e.at("dir").get<std::string>();
    CHECK(fsys::exists(dir / "checkpoint.json"));
    CHECK(fsys::exists(dir / "split.json"));
    for (const auto& r : e.at("held_out")) held.insert(r.get<std::string>());
    CHECK(e.at("test_sessions").size() == 2);
    CHECK(e.at("n_train_sessions").get<int>() +
              e.at("n_val_sessions").get<int>() ==
          4);
    CHECK(e.at("n_val_sessions").get<int>() >= 1);

    // report lines parse; epochs contiguous from 0
    std::ifstream rep(dir / "report.jsonl");
    REQUIRE(rep.good());
    std::string line;
    int epoch = 0;
    while (std::getline(rep, line)) {
      const auto j = nlohmann::json::parse(line);
      CHECK(j.at("epoch") == epoch++);
      CHECK(std::isfinite(j.at("train_loss").get<double>()));
      CHECK(std::isfinite(j.at("val_loss").get<double>()));
    }
    CHECK(epoch == 2);
  }
  CHECK(held.size() == 2);

  // rerun: identical checkpoints and reports, byte for byte
  const auto rerun = testutil::temp_dir("cli_vo2_rerun");
  REQUIRE(run_cli("train --data " + shared_data().string() + " --model vo2" +
                  kTinyModel + " --max-splits 2 --seed 7 --out " +
                  rerun.string()) == 0);
  for (const auto& e : splits.at("splits")) {
    const auto d = e.at("dir").get<std::string>();
    CHECK(slurp(run / d / "checkpoint.json") ==
          slurp(rerun / d / "checkpoint.json"));
    CHECK(slurp(run / d / "report.jsonl") == slurp(rerun / d / "report.jsonl"));
  }

  // parallel split workers change nothing
  const auto par = testutil::temp_dir("cli_vo2_jobs2");
  REQUIRE(run_cli("train --data " + shared_data().string() + " --model vo2" +
                  kTinyModel + " --max-splits 2 --seed 7 --jobs 2 --out " +
                  par.string()) == 0);
  for (const auto& e : splits.at("splits")) {
    const auto d = e.at("dir").get<std::string>();
    CHECK(slurp(run / d / "checkpoint.json") ==
          slurp(par / d / "checkpoint.json"));
    CHECK(slurp(run / d / "report.jsonl") == slurp(par / d / "report.jsonl"));
  }

  // a different seed trains a different model
  const auto other = testutil::temp_dir("cli_vo2_seed2");
  REQUIRE(run_cli("train --data " + shared_data().string() + " --model vo2" +
                  kTinyModel + " --max-splits 1 --seed 8 --out " +
                  other.string()) == 0);
  CHECK(slurp(run / "split_00" / "checkpoint.json") !=
        slurp(other / "split_00" / "checkpoint.json"));
}

TEST_CASE("eval aggregates per-runner rows with a persistence baseline") {
  const auto out = testutil::temp_dir("cli_vo2_eval");
  REQUIRE(run_cli("eval --data " + shared_data().string() + " --checkpoints " +
                  shared_vo2_run().string() + " --out " + out.string()) == 0);

  const auto m = slurp_json(out / "metrics.json");
  CHECK(m.at("model") == "vo2_kalman");
  CHECK(m.at("hr_source") == "true");
  const auto& agg = m.at("prediction").at("aggregate").at("overall");
  const auto& per = m.at("prediction").at("per_runner");
  REQUIRE(per.size() == 2);

  // the aggregate MAE is the sample-weighted mean of the per-runner MAEs
  double wsum = 0.0, nsum = 0.0, mape_wsum = 0.0, mape_nsum = 0.0;
  for (const auto& [rid, row] : per.items()) {
    (void)rid;
    wsum += row.at("mae").get<double>() * row.at("n").get<double>();
    nsum += row.at("n").get<double>();
    mape_wsum += row.at("mape_pct").get<double>() * row.at("n_mape").get<double>();
    mape_nsum += row.at("n_mape").get<double>();
  }
  CHECK(agg.at("mae").get<double>() ==
        doctest::Approx(wsum / nsum).epsilon(1e-12));
  CHECK(agg.at("mape_pct").get<double>() ==
        doctest::Approx(mape_wsum / mape_nsum).epsilon(1e-12));
  CHECK(agg.at("n").get<double>() == nsum);

  CHECK(m.at("baseline_persistence").at("aggregate").at("overall").at("mae")
            .get<double>() > 0.0);

  // per-runner csv: header + (2 runners + aggregate) x (model, baseline)
  const auto rows = read_csv(out / "per_runner.csv");
  CHECK(rows.size() == 7);
  CHECK(rows[0][0] == "series");
  // prediction CSVs exist for each held-out session of each split
  const auto splits = slurp_json(shared_vo2_run() / "splits.json");
  for (const auto& e : splits.at("splits"))
    for (const auto& sid : e.at("test_sessions"))
      CHECK(fsys::exists(out / "predictions" / e.at("dir").get<std::string>() /
                         (sid.get<std::string>() + ".csv")));

  // identical rerun reproduces the metrics byte for byte
  const auto out2 = testutil::temp_dir("cli_vo2_eval2");
  REQUIRE(run_cli("eval --data " + shared_data().string() + " --checkpoints " +
                  shared_vo2_run().string() + " --out " + out2.string()) == 0);
  CHECK(slurp(out / "metrics.json") == slurp(out2 / "metrics.json"));
  CHECK(slurp(out / "per_runner.csv") == slurp(out2 / "per_runner.csv"));
}

TEST_CASE("hr eval reports standard and generative lanes") {
  const auto out = testutil::temp_dir("cli_hr_eval");
  REQUIRE(run_cli("eval --data " + shared_data().string() + " --checkpoints " +
                  shared_hr_run().string() + " --out " + out.string()) == 0);
  const auto m = slurp_json(out / "metrics.json");
  CHECK(m.at("model") == "hr_ode");
  for (const char* lane : {"standard", "generative", "baseline_window_mean"})
    CHECK(m.at(lane).at("aggregate").at("overall").at("mae").get<double>() >
          0.0);
  const auto splits = slurp_json(shared_hr_run() / "splits.json");
  const auto& e0 = splits.at("splits")[0];
  const auto sid = e0.at("test_sessions")[0].get<std::string>();
  const auto pdir = out / "predictions" / e0.at("dir").get<std::string>();
  CHECK(fsys::exists(pdir / (sid + "_standard.csv")));
  CHECK(fsys::exists(pdir / (sid + "_generative.csv")));
}

TEST_CASE("eval composes vo2 with generative hr predictions") {
  const auto out = testutil::temp_dir("cli_xeval");
  REQUIRE(run_cli("eval --data " + shared_data().string() + " --checkpoints " +
                  shared_vo2_run().string() +
                  " --hr-source ode_pred --hr-checkpoints " +
                  shared_hr_run().string() + " --out " + out.string()) == 0);
  const auto m = slurp_json(out / "metrics.json");
  CHECK(m.at("hr_source") == "ode_pred");
  CHECK(m.at("prediction").at("aggregate").at("overall").at("mape_pct")
            .get<double>() > 0.0);

  // misconfigured sources are config errors
  CHECK(run_cli("eval --data " + shared_data().string() + " --checkpoints " +
                shared_vo2_run().string() +
                " --hr-source ode_pred --out /tmp/x") == 2);
  CHECK(run_cli("eval --data " + shared_data().string() + " --checkpoints " +
                shared_vo2_run().string() +
                " --hr-source kalman_pred --hr-checkpoints " +
                shared_hr_run().string() + " --out /tmp/x") == 2);
  CHECK(run_cli("eval --data " + shared_data().string() + " --checkpoints " +
                shared_vo2_run().string() +
                " --hr-source sideways --hr-checkpoints " +
                shared_hr_run().string() + " --out /tmp/x") == 2);
}

TEST_CASE("predict round-trips through its own csv") {
  const auto manifest = slurp_json(shared_data() / "manifest.json");
  const auto session = manifest.at("sessions")[0].get<std::string>();
  const auto ckpt = shared_vo2_run() / "split_00" / "checkpoint.json";
  const auto out = testutil::temp_dir("cli_predict");
  REQUIRE(run_cli("predict --checkpoint " + ckpt.string() + " --session " +
                  (shared_data() / session).string() + " --out " +
                  out.string()) == 0);

  const auto rows = read_csv(out / "prediction.csv");
  const auto summary = slurp_json(out / "summary.json");
  CHECK(rows[0] == std::vector<std::string>{"t", "value_true", "value_pred"});
  CHECK(rows.size() == summary.at("rows").get<std::size_t>() + 1);

  // recompute the summary metrics from the csv itself
  double abs_sum = 0.0, sq_sum = 0.0;
  std::size_t n = rows.size() - 1;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double y = std::stod(rows[i][1]);
    const double p = std::stod(rows[i][2]);
    abs_sum += std::abs(p - y);
    sq_sum += (p - y) * (p - y);
  }
  const auto& overall = summary.at("metrics").at("overall");
  CHECK(overall.at("mae").get<double>() ==
        doctest::Approx(abs_sum / static_cast<double>(n)).epsilon(1e-12));
  CHECK(overall.at("rmse").get<double>() ==
        doctest::Approx(std::sqrt(sq_sum / static_cast<double>(n)))
            .epsilon(1e-12));

  // rerun is byte-identical
  const auto out2 = testutil::temp_dir("cli_predict2");
  REQUIRE(run_cli("predict --checkpoint " + ckpt.string() + " --session " +
                  (shared_data() / session).string() + " --out " +
                  out2.string()) == 0);
  CHECK(slurp(out / "prediction.csv") == slurp(out2 / "prediction.csv"));
  CHECK(slurp(out / "summary.json") == slurp(out2 / "summary.json"));
}

TEST_CASE("generative predictions ignore targets beyond the first second") {
  // copy one session, perturb its breath samples from t >= 30
  const auto manifest = slurp_json(shared_data() / "manifest.json");
  const auto name = manifest.at("sessions")[0].get<std::string>();
  const auto stem = name.substr(0, name.size() - 4);
  const auto dir = testutil::temp_dir("cli_perturb");
  for (const auto& suffix : {".csv", ".json", "_breath.csv"})
    fsys::copy_file(shared_data() / (stem + suffix), dir / (stem + suffix));

  {
    std::ifstream in(dir / (stem + "_breath.csv"));
    std::ostringstream patched;
    std::string line;
    std::getline(in, line);
    patched << line << "\n";
    while (std::getline(in, line)) {
      const auto comma = line.find(',');
      const double t = std::stod(line.substr(0, comma));
      if (t >= 30.0) {
        const double v = std::stod(line.substr(comma + 1)) * 1.5;
        patched << line.substr(0, comma) << "," << v << "\n";
      } else {
        patched << line << "\n";  // untouched rows stay byte-identical
      }
    }
    in.close();
    std::ofstream(dir / (stem + "_breath.csv"), std::ios::trunc)
        << patched.str();
  }

  const auto ckpt = shared_vo2_run() / "split_00" / "checkpoint.json";
  const auto base = testutil::temp_dir("cli_perturb_base");
  const auto pert = testutil::temp_dir("cli_perturb_out");
  REQUIRE(run_cli("predict --checkpoint " + ckpt.string() + " --session " +
                  (shared_data() / name).string() + " --out " +
                  base.string()) == 0);
  REQUIRE(run_cli("predict --checkpoint " + ckpt.string() + " --session " +
                  (dir / name).string() + " --out " + pert.string()) == 0);

  const auto a = read_csv(base / "prediction.csv");
  const auto b = read_csv(pert / "prediction.csv");
  REQUIRE(a.size() == b.size());
  bool truth_changed = false;
  for (std::size_t i = 1; i < a.size(); ++i) {
    CHECK(a[i][2] == b[i][2]);  // predictions never read later targets
    if (a[i][1] != b[i][1]) truth_changed = true;
  }
  CHECK(truth_changed);  // but the perturbation is visible in the truth column
}

TEST_CASE("hr standard mode re-anchors while generative does not") {
  // perturb the hr column of the main csv from t >= 30
  const auto manifest = slurp_json(shared_data() / "manifest.json");
  const auto name = manifest.at("sessions")[0].get<std::string>();
  const auto stem = name.substr(0, name.size() - 4);
  const auto dir = testutil::temp_dir("cli_hr_perturb");
  for (const auto& suffix : {".csv", ".json", "_breath.csv"})
    fsys::copy_file(shared_data() / (stem + suffix), dir / (stem + suffix));

  {
    const auto rows = read_csv(dir / (stem + ".csv"));
    std::size_t hr_col = 0;
    for (std::size_t c = 0; c < rows[0].size(); ++c)
      if (rows[0][c] == "hr_bpm") hr_col = c;
    REQUIRE(hr_col > 0);
    std::ostringstream patched;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto cells = rows[i];
      if (i >= 31) cells[hr_col] = "190";  // t >= 30 with the header offset
      for (std::size_t c = 0; c < cells.size(); ++c)
        patched << (c ? "," : "") << cells[c];
      patched << "\n";
    }
    std::ofstream(dir / (stem + ".csv"), std::ios::trunc) << patched.str();
  }

  const auto ckpt = shared_hr_run() / "split_00" / "checkpoint.json";
  auto predict_to = [&](const fsys::path& session, const std::string& mode,
                        const std::string& tag) {
    const auto out = testutil::temp_dir("cli_hrp_" + tag);
    REQUIRE(run_cli("predict --checkpoint " + ckpt.string() + " --session " +
                    session.string() + " --mode " + mode + " --out " +
                    out.string()) == 0);
    return read_csv(out / "prediction.csv");
  };
  const auto gen_a = predict_to(shared_data() / name, "generative", "ga");
  const auto gen_b = predict_to(dir / name, "generative", "gb");
  const auto std_a = predict_to(shared_data() / name, "standard", "sa");
  const auto std_b = predict_to(dir / name, "standard", "sb");

  bool std_changed = false;
  for (std::size_t i = 1; i < gen_a.size(); ++i) {
    CHECK(gen_a[i][2] == gen_b[i][2]);
    if (std_a[i][2] != std_b[i][2]) std_changed = true;
  }
  CHECK(std_changed);  // window re-anchoring reads the measured series
}
