#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "physio/ad/ops.hpp"
#include "physio/errors.hpp"
#include "physio/hr/models.hpp"
#include "physio/rng.hpp"

using namespace physio;
namespace ad = physio::ad;
using namespace physio::hr;

namespace {

BackboneSpec tiny_backbone() {
  BackboneSpec s;
  s.input = 3;
  s.enc_hidden = 4;
  s.hidden = 4;
  s.gru_layers = 1;
  s.head_hidden = 3;
  return s;
}

ad::Tensor rand_window(int B, int T, int D, std::uint64_t seed) {
  Rng rg(seed);
  std::vector<double> v(static_cast<size_t>(B) * T * D);
  for (auto& x : v) x = rg.uniform(-1.0, 1.0);
  return ad::Tensor::from({B, T, D}, std::move(v));
}

void zero_params(ad::ParamStore& ps) {
  for (const auto& [path, t] : ps.items())
    ps.set_values(path, std::vector<double>(t.values().size(), 0.0));
}

ingest::FeatureSession make_fs(std::int64_t T, std::int64_t D,
                               std::uint64_t seed) {
  ingest::FeatureSession fs;
  fs.T = T;
  fs.D = D;
  fs.runner_id = "r01";
  fs.session_id = "r01_s01";
  Rng rg(seed);
  fs.x.resize(static_cast<size_t>(T * D));
  for (auto& v : fs.x) v = rg.uniform(-1.0, 1.0);
  fs.hr.resize(static_cast<size_t>(T));
  for (auto& v : fs.hr) v = rg.uniform(70.0, 170.0);
  fs.mask.assign(static_cast<size_t>(T), 1.0);
  for (std::int64_t d = 0; d < D; ++d)
    fs.feature_names.push_back("f" + std::to_string(d));
  return fs;
}

io::Normalization ident_norm(const ingest::FeatureSession& fs) {
  io::Normalization n;
  n.feature_names = fs.feature_names;
  n.feature_mean.assign(static_cast<size_t>(fs.D), 0.0);
  n.feature_std.assign(static_cast<size_t>(fs.D), 1.0);
  return n;
}

OdeHrSpec tiny_ode(double hr_min = 30.0, double hr_max = 220.0) {
  OdeHrSpec s;
  s.backbone = tiny_backbone();
  s.demand_hidden = 3;
  s.hr_min = hr_min;
  s.hr_max = hr_max;
  return s;
}

KalmanHrSpec tiny_kalman(double hr_min = 30.0, double hr_max = 220.0) {
  KalmanHrSpec s;
  s.backbone = tiny_backbone();
  s.head_hidden = 3;
  s.hr_min = hr_min;
  s.hr_max = hr_max;
  return s;
}

}  // namespace

TEST_SUITE("hr_models") {

TEST_CASE("latent decode is the affine read-out") {
  auto g = ad::Tensor::from({1, 3}, {-1.0, 0.0, 1.0});
  auto mu = ad::Tensor::from({1}, {120.0});
  auto sigma = ad::Tensor::from({1}, {10.0});
  auto h = decode_hr(g, mu, sigma);
  CHECK(h.values() == std::vector<double>{110.0, 120.0, 130.0});

  auto zero_g = ad::Tensor::zeros({1, 3});
  CHECK(decode_hr(zero_g, mu, sigma).values() ==
        std::vector<double>{120.0, 120.0, 120.0});

  // decode then re-standardize recovers the latent
  Rng rg(3);
  for (int i = 0; i < 50; ++i) {
    const double m = rg.uniform(50.0, 180.0), s = rg.uniform(0.5, 30.0);
    const double gv = rg.uniform(-4.0, 4.0);
    auto hv = decode_hr(ad::Tensor::from({1, 1}, {gv}),
                        ad::Tensor::from({1}, {m}), ad::Tensor::from({1}, {s}))
                  .values()[0];
    CHECK((hv - m) / s == doctest::Approx(gv).epsilon(1e-12));
  }
}

TEST_CASE("rk4 step matches the exponential relaxation") {
  // equilibrium: d == g is a fixed point, bitwise
  auto g0 = ad::Tensor::from({2}, {80.0, -3.0});
  CHECK(rk4_step(g0, g0, 1.0).values() == g0.values());

  // one step from 0 vs c(1 - e^-dt), local truncation O(dt^5)
  for (double c : {2.0, -5.0, 40.0}) {
    for (double dt : {0.25, 0.5, 1.0}) {
      auto g1 = rk4_step(ad::Tensor::zeros({1}), ad::Tensor::from({1}, {c}),
                         dt);
      const double exact = c * (1.0 - std::exp(-dt));
      CHECK(std::abs(g1.values()[0] - exact) <=
            std::pow(dt, 5) / 100.0 * std::abs(c));
    }
  }

  // linearity in (g, d)
  auto ga = ad::Tensor::from({1}, {1.7});
  auto da = ad::Tensor::from({1}, {0.4});
  const double one = rk4_step(ga, da, 1.0).values()[0];
  const double scaled =
      rk4_step(ad::mul_scalar(ga, 6.0), ad::mul_scalar(da, 6.0), 1.0)
          .values()[0];
  CHECK(scaled == doctest::Approx(6.0 * one).epsilon(1e-12));

  // ten steps of dt=0.1 against the closed form at t=1
  const double c = 37.0;
  auto d = ad::Tensor::from({1}, {c});
  auto g = ad::Tensor::zeros({1});
  for (int i = 0; i < 10; ++i) g = rk4_step(g, d, 0.1);
  double exact = c * (1.0 - std::exp(-1.0));
  CHECK(std::abs(g.values()[0] - exact) / std::abs(exact) < 1e-6);

  // ten unit steps reach t=10; global error of the A-stable rational
  // approximation (0.375^10 vs e^-10) keeps the relative error near 5e-6
  g = ad::Tensor::zeros({1});
  for (int i = 0; i < 10; ++i) g = rk4_step(g, d, 1.0);
  exact = c * (1.0 - std::exp(-10.0));
  CHECK(std::abs(g.values()[0] - exact) / std::abs(exact) < 2e-5);
  CHECK(std::abs(g.values()[0] - exact) / std::abs(exact) > 1e-6);
}

TEST_CASE("zero parameters give closed-form backbone moments") {
  ad::ParamStore ps(5);
  auto bb = make_backbone(ps, "bb", tiny_backbone());
  zero_params(ps);
  ps.set_values("bb.mu.b1", {7.25});

  auto out = backbone_forward(bb, rand_window(2, 4, 3, 9));
  for (double v : out.s_seq.values()) CHECK(v == 0.0);
  for (double v : out.mu.values()) CHECK(v == 7.25);
  const double sig0 = std::log(2.0) + 1e-3;
  for (double v : out.sigma.values())
    CHECK(v == doctest::Approx(sig0).epsilon(1e-15));

  CHECK_THROWS_AS(backbone_forward(bb, ad::Tensor::zeros({4, 3})), ShapeError);
}

TEST_CASE("zero parameters give closed-form rollouts") {
  // ODE: demand 0, so each unit RK4 step multiplies the latent by 0.375;
  // kalman: gain sigmoid(0)=0.5 pulls the latent halfway to observation 0.
  const std::int64_t T = 4;
  auto fs = make_fs(T, 3, 21);
  fs.hr.assign(static_cast<size_t>(T), 100.0);
  auto norm = ident_norm(fs);

  ad::ParamStore ps_o(5);
  auto ode = make_ode_hr(ps_o, tiny_ode());
  zero_params(ps_o);
  auto po = predict_hr_session(ode, fs, norm, HrMode::standard, 60);
  CHECK(po[0] == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(po[1] == doctest::Approx(37.5).epsilon(1e-9));
  CHECK(po[2] == doctest::Approx(30.0).epsilon(1e-9));  // clipped
  CHECK(po[3] == doctest::Approx(30.0).epsilon(1e-9));

  ad::ParamStore ps_k(5);
  auto kal = make_kalman_hr(ps_k, tiny_kalman());
  zero_params(ps_k);
  auto pk = predict_hr_session(kal, fs, norm, HrMode::standard, 60);
  CHECK(pk[0] == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(pk[1] == doctest::Approx(50.0).epsilon(1e-9));
  CHECK(pk[2] == doctest::Approx(30.0).epsilon(1e-9));  // 25 clips to 30
  CHECK(pk[3] == doctest::Approx(30.0).epsilon(1e-9));

  // covariance recursion at k=0.5: P- = P + softplus(0) + floor, P' = P-/2
  auto kal2 = bind_kalman_hr(ps_k, tiny_kalman());
  KalmanHrStats st;
  auto x = window_tensor(fs, norm, 0, T);
  auto h0 = ad::Tensor::from({1}, {100.0});
  kalman_hr_forward(kal2, x, h0, nullptr, nullptr, false, nullptr, &st);
  const double q = std::log(2.0) + kal2.spec.var_floor;
  REQUIRE(st.k.size() == static_cast<size_t>(T - 1));
  CHECK(st.k[0] == 0.5);
  CHECK(st.pg_pre[0] == doctest::Approx(1.0 + q).epsilon(1e-15));
  CHECK(st.pg_post[0] == doctest::Approx(0.5 * (1.0 + q)).epsilon(1e-15));
  CHECK(st.r[0] == doctest::Approx(q).epsilon(1e-15));
  CHECK(st.pg_pre[1] ==
        doctest::Approx(st.pg_post[0] + q).epsilon(1e-15));
}

TEST_CASE("kalman update arithmetic") {
  KalmanHrState pred;
  pred.g = ad::Tensor::from({2}, {1.0, 2.0});
  pred.gdot = ad::Tensor::from({2}, {0.5, -1.0});
  pred.Pg = ad::Tensor::from({2}, {1.0, 2.0});
  pred.Pgd = ad::Tensor::from({2}, {3.0, 4.0});
  auto nu = ad::Tensor::from({2}, {2.0, -2.0});
  auto k = ad::Tensor::from({2}, {0.8, 0.8});

  auto out = kalman_hr_update(pred, nu, k, 0.5);
  CHECK(out.g.values()[0] == doctest::Approx(2.6).epsilon(1e-12));
  CHECK(out.g.values()[1] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(out.gdot.values()[0] == doctest::Approx(1.3).epsilon(1e-12));
  CHECK(out.gdot.values()[1] == doctest::Approx(-1.8).epsilon(1e-12));
  // covariance multipliers (1-k, 1-gamma*k) = (0.2, 0.6)
  CHECK(out.Pg.values()[0] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(out.Pg.values()[1] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(out.Pgd.values()[0] == doctest::Approx(1.8).epsilon(1e-12));
  CHECK(out.Pgd.values()[1] == doctest::Approx(2.4).epsilon(1e-12));

  // zero innovation: state passes through, covariance still shrinks
  auto still = kalman_hr_update(pred, ad::Tensor::zeros({2}), k, 0.5);
  CHECK(still.g.values() == pred.g.values());
  CHECK(still.gdot.values() == pred.gdot.values());
  CHECK(still.Pg.values()[0] < pred.Pg.values()[0]);

  // zero gain: pure prediction, P' = P-
  auto frozen = kalman_hr_update(pred, nu, ad::Tensor::zeros({2}), 0.5);
  CHECK(frozen.g.values() == pred.g.values());
  CHECK(frozen.Pg.values() == pred.Pg.values());
  CHECK(frozen.Pgd.values() == pred.Pgd.values());
}

TEST_CASE("backbone gradients match finite differences") {
  ad::ParamStore ps(17);
  auto bb = make_backbone(ps, "bb", tiny_backbone());
  auto x = rand_window(2, 3, 3, 31);
  auto report = oracles::check_gradients(
      ps,
      [&] {
        auto out = backbone_forward(bb, x);
        return ad::sum(ad::add(out.mu, out.sigma));
      },
      1e-5, 1e-4);
  INFO(report.first_failure);
  CHECK(report.failed == 0);
  CHECK(report.checked == ps.total_values());
}

TEST_CASE("ode chain gradients match finite differences") {
  // wide bounds keep every clamp inactive so the loss stays smooth
  ad::ParamStore ps(23);
  auto m = make_ode_hr(ps, tiny_ode(-1e9, 1e9));
  auto x = rand_window(2, 4, 3, 41);
  auto h0 = ad::Tensor::from({2}, {100.0, 150.0});
  auto report = oracles::check_gradients(
      ps,
      [&] {
        auto out = ode_hr_forward(m, x, h0);
        return ad::sum(out.h);
      },
      1e-5, 1e-3);
  INFO(report.first_failure);
  CHECK(report.failed == 0);
  CHECK(report.checked == ps.total_values());
}

TEST_CASE("kalman chain gradients match finite differences") {
  ad::ParamStore ps(29);
  auto m = make_kalman_hr(ps, tiny_kalman(-1e9, 1e9));
  auto x = rand_window(2, 4, 3, 43);
  auto h0 = ad::Tensor::from({2}, {100.0, 150.0});
  auto report = oracles::check_gradients(
      ps,
      [&] {
        auto out = kalman_hr_forward(m, x, h0);
        return ad::sum(out.h);
      },
      1e-5, 1e-3);
  INFO(report.first_failure);
  CHECK(report.failed == 0);
  CHECK(report.checked == ps.total_values());
}

TEST_CASE("kalman rollout invariants hold") {
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    ad::ParamStore ps(seed);
    auto m = make_kalman_hr(ps, tiny_kalman());
    const int B = 2, T = 25;
    auto x = rand_window(B, T, 3, seed + 100);
    Rng rg(seed + 200);
    auto h0 = ad::Tensor::from(
        {B}, {rg.uniform(50.0, 190.0), rg.uniform(50.0, 190.0)});

    KalmanHrStats st;
    auto out = kalman_hr_forward(m, x, h0, nullptr, nullptr, false, nullptr,
                                 &st);
    const size_t n = st.k.size();
    REQUIRE(n == static_cast<size_t>(B * (T - 1)));
    for (size_t i = 0; i < n; ++i) {
      CHECK(st.k[i] > 0.0);
      CHECK(st.k[i] < 1.0);
      CHECK(st.q_g[i] > m.spec.var_floor);
      CHECK(st.q_gd[i] > m.spec.var_floor);
      CHECK(st.r[i] > m.spec.var_floor);
      CHECK(st.pg_pre[i] > 0.0);
      CHECK(st.pgd_pre[i] > 0.0);
      // variance grows in prediction, shrinks in update
      const double prev_g = i < static_cast<size_t>(B)
                                ? m.spec.p0
                                : st.pg_post[i - static_cast<size_t>(B)];
      const double prev_gd = i < static_cast<size_t>(B)
                                 ? m.spec.p0
                                 : st.pgd_post[i - static_cast<size_t>(B)];
      CHECK(st.pg_pre[i] > prev_g);
      CHECK(st.pgd_pre[i] > prev_gd);
      CHECK(st.pg_post[i] <= st.pg_pre[i]);
      CHECK(st.pgd_post[i] <= st.pgd_pre[i]);
      CHECK(st.pg_post[i] > 0.0);
      CHECK(st.pgd_post[i] > 0.0);
    }
    for (double h : out.h.values()) {
      CHECK(h >= 30.0 - 1e-9);
      CHECK(h <= 220.0 + 1e-9);
    }
  }
}

TEST_CASE("decoded heart rate stays inside the configured range") {
  ad::ParamStore ps_o(3);
  auto ode = make_ode_hr(ps_o, tiny_ode());
  ad::ParamStore ps_k(3);
  auto kal = make_kalman_hr(ps_k, tiny_kalman());

  auto x = rand_window(1, 12, 3, 77);
  for (double anchor : {10.0, 250.0}) {
    auto h0 = ad::Tensor::from({1}, {anchor});
    const double clipped = anchor < 30.0 ? 30.0 : 220.0;
    auto ho = ode_hr_forward(ode, x, h0).h.values();
    auto hk = kalman_hr_forward(kal, x, h0).h.values();
    CHECK(ho[0] == doctest::Approx(clipped).epsilon(1e-9));
    CHECK(hk[0] == doctest::Approx(clipped).epsilon(1e-9));
    for (double v : ho) {
      CHECK(v >= 30.0 - 1e-9);
      CHECK(v <= 220.0 + 1e-9);
    }
    for (double v : hk) {
      CHECK(v >= 30.0 - 1e-9);
      CHECK(v <= 220.0 + 1e-9);
    }
  }
}

TEST_CASE("gru carry links consecutive windows") {
  ad::ParamStore ps(13);
  auto bb = make_backbone(ps, "bb", tiny_backbone());
  auto wa = rand_window(1, 5, 3, 51);
  auto wb = rand_window(1, 5, 3, 52);

  auto a = backbone_forward(bb, wa);
  auto cold = backbone_forward(bb, wb);
  auto warm = backbone_forward(bb, wb, &a.gru_carry);
  double diff = 0.0;
  for (size_t i = 0; i < cold.s_final.values().size(); ++i)
    diff = std::max(diff, std::abs(cold.s_final.values()[i] -
                                   warm.s_final.values()[i]));
  CHECK(diff > 1e-9);
}

TEST_CASE("window tensor normalizes and zeroes masked rows") {
  ingest::FeatureSession fs;
  fs.T = 3;
  fs.D = 2;
  fs.x = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  fs.mask = {1.0, 0.0, 1.0};
  fs.feature_names = {"a", "b"};
  io::Normalization n;
  n.feature_names = {"a", "b"};
  n.feature_mean = {1.0, 2.0};
  n.feature_std = {2.0, 4.0};

  auto t = window_tensor(fs, n, 0, 3);
  CHECK(t.shape() == ad::Shape{1, 3, 2});
  CHECK(t.values() == std::vector<double>{0.0, 0.0, 0.0, 0.0, 2.0, 1.0});

  CHECK_THROWS_AS(window_tensor(fs, n, 2, 2), ShapeError);
  n.feature_names = {"a", "c"};
  CHECK_THROWS_AS(window_tensor(fs, n, 0, 3), DataError);
}

TEST_CASE("session prediction anchors per mode") {
  auto fs = make_fs(50, 3, 61);
  auto norm = ident_norm(fs);

  ad::ParamStore ps_o(7);
  auto ode = make_ode_hr(ps_o, tiny_ode());
  ad::ParamStore ps_k(7);
  auto kal = make_kalman_hr(ps_k, tiny_kalman());

  // one window: the two modes share the single anchor
  auto one = make_fs(20, 3, 62);
  auto n1 = ident_norm(one);
  CHECK(predict_hr_session(ode, one, n1, HrMode::standard, 20) ==
        predict_hr_session(ode, one, n1, HrMode::generative, 20));
  CHECK(predict_hr_session(kal, one, n1, HrMode::standard, 20) ==
        predict_hr_session(kal, one, n1, HrMode::generative, 20));

  // standard mode re-anchors each window on the measured value
  auto ps = predict_hr_session(kal, fs, norm, HrMode::standard, 20);
  CHECK(ps.size() == 50);
  CHECK(ps[0] == doctest::Approx(fs.hr[0]).epsilon(1e-9));
  CHECK(ps[20] == doctest::Approx(fs.hr[20]).epsilon(1e-9));
  CHECK(ps[40] == doctest::Approx(fs.hr[40]).epsilon(1e-9));

  // generative mode chains its own output instead
  auto pg = predict_hr_session(kal, fs, norm, HrMode::generative, 20);
  CHECK(pg[0] == doctest::Approx(fs.hr[0]).epsilon(1e-9));
  double moved = std::abs(pg[20] - ps[20]) + std::abs(pg[40] - ps[40]);
  CHECK(moved > 1e-9);

  // trailing single second: standard emits the anchor, generative the carry
  auto tail = make_fs(21, 3, 63);
  auto nt = ident_norm(tail);
  auto ts = predict_hr_session(ode, tail, nt, HrMode::standard, 20);
  auto tg = predict_hr_session(ode, tail, nt, HrMode::generative, 20);
  CHECK(ts[20] == tail.hr[20]);
  CHECK(tg[20] == tg[19]);

  // anchoring needs a valid measurement
  auto bad = make_fs(30, 3, 64);
  auto nb = ident_norm(bad);
  bad.mask[0] = 0.0;
  CHECK_THROWS_AS(predict_hr_session(ode, bad, nb, HrMode::standard, 20),
                  DataError);
  CHECK_THROWS_AS(predict_hr_session(ode, bad, nb, HrMode::generative, 20),
                  DataError);
  bad.mask[0] = 1.0;
  bad.mask[20] = 0.0;
  CHECK_THROWS_AS(predict_hr_session(ode, bad, nb, HrMode::standard, 20),
                  DataError);
  CHECK_NOTHROW(predict_hr_session(ode, bad, nb, HrMode::generative, 20));

  CHECK(hr_mode_from_string("standard") == HrMode::standard);
  CHECK(hr_mode_from_string("generative") == HrMode::generative);
  CHECK_THROWS_AS(hr_mode_from_string("free"), ConfigError);
}

TEST_CASE("generative mode reads measured heart rate only at the start") {
  auto fs = make_fs(50, 3, 71);
  auto norm = ident_norm(fs);
  ad::ParamStore ps_k(11);
  auto kal = make_kalman_hr(ps_k, tiny_kalman());
  ad::ParamStore ps_o(11);
  auto ode = make_ode_hr(ps_o, tiny_ode());

  auto base_k = predict_hr_session(kal, fs, norm, HrMode::generative, 20);
  auto base_o = predict_hr_session(ode, fs, norm, HrMode::generative, 20);
  auto base_std = predict_hr_session(kal, fs, norm, HrMode::standard, 20);

  auto fuzz = fs;
  Rng rg(99);
  for (std::int64_t t = 1; t < fs.T; ++t)
    fuzz.hr[static_cast<size_t>(t)] += rg.uniform(-40.0, 40.0);

  CHECK(predict_hr_session(kal, fuzz, norm, HrMode::generative, 20) == base_k);
  CHECK(predict_hr_session(ode, fuzz, norm, HrMode::generative, 20) == base_o);
  // standard mode does depend on the later anchors
  CHECK(predict_hr_session(kal, fuzz, norm, HrMode::standard, 20) != base_std);
}

}  // TEST_SUITE
