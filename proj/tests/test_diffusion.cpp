#include <cmath>

#include "dac/diffusion.hpp"
#include "doctest.h"

using namespace dac;

TEST_CASE("linear schedule tables match the closed form") {
  const NoiseSchedule s = NoiseSchedule::linear();
  CHECK(s.T == 10);
  CHECK(s.beta[1] == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(s.beta[10] == doctest::Approx(2e-2).epsilon(1e-12));
  CHECK(s.alpha_bar[0] == 1.0);
  double prod = 1.0;
  for (int t = 1; t <= 10; ++t) {
    CHECK(s.beta[t] > 0.0);
    CHECK(s.beta[t] < 1.0);
    if (t > 1) CHECK(s.beta[t] > s.beta[t - 1]);
    CHECK(s.alpha[t] == 1.0 - s.beta[t]);
    prod *= s.alpha[t];
    CHECK(s.alpha_bar[t] == doctest::Approx(prod).epsilon(1e-14));
    CHECK(s.alpha_bar[t] < s.alpha_bar[t - 1]);
    if (t >= 2) {
      CHECK(s.beta_tilde[t] > 0.0);
      CHECK(s.beta_tilde[t] <= s.beta[t]);
    }
    CHECK(s.beta_tilde[t] ==
          doctest::Approx((1.0 - s.alpha_bar[t - 1]) / (1.0 - s.alpha_bar[t]) *
                          s.beta[t]).epsilon(1e-14));
  }
  CHECK(s.alpha_bar[10] > 0.0);
  CHECK(s.alpha_bar[10] < 1.0);
}

TEST_CASE("feasibility mask follows the floor/ceiling rule") {
  const ManeuverLimits lim;
  CHECK(feasibility_mask(1, lim).count() == 27);
  const FeasibilityMask floor = feasibility_mask(0, lim);
  const FeasibilityMask ceil = feasibility_mask(2, lim);
  CHECK(floor.count() == 18);
  CHECK(ceil.count() == 18);
  for (int i = 0; i < kNumActions; ++i) {
    const ActionTriple t = decode_action(ActionClass{i});
    CHECK(floor.feasible[i] == (t.a_h != -1));
    CHECK(ceil.feasible[i] == (t.a_h != 1));
  }
  CHECK_THROWS_AS(feasibility_mask(3, lim), std::domain_error);
}

TEST_CASE("forward noising monte-carlo moments match the marginal") {
  const NoiseSchedule s = NoiseSchedule::linear();
  Rng rng = Rng::stream(314, 0);
  LogitVector y0(kNumActions);
  for (int i = 0; i < kNumActions; ++i) y0[i] = 0.1 * (i - 13);

  const int n = 100000;
  const int t = s.T;
  Vec sum(kNumActions, 0.0), sumsq(kNumActions, 0.0);
  for (int k = 0; k < n; ++k) {
    const LogitVector y = forward_noising(y0, t, s, rng);
    for (int i = 0; i < kNumActions; ++i) {
      sum[i] += y[i];
      sumsq[i] += y[i] * y[i];
    }
  }
  const double mean_coef = std::sqrt(s.alpha_bar[t]);
  const double var_true = 1.0 - s.alpha_bar[t];
  const double sigma_mean = std::sqrt(var_true / n);
  const double sigma_var = var_true * std::sqrt(2.0 / (n - 1));
  for (int i = 0; i < kNumActions; ++i) {
    const double mean = sum[i] / n;
    const double var = sumsq[i] / n - mean * mean;
    CHECK(std::abs(mean - mean_coef * y0[i]) < 3.0 * sigma_mean);
    CHECK(std::abs(var - var_true) < 3.0 * sigma_var);
  }
  CHECK_THROWS_AS(forward_noising(y0, 0, s, rng), std::domain_error);
  CHECK_THROWS_AS(forward_noising(y0, s.T + 1, s, rng), std::domain_error);
}

TEST_CASE("forward noising is reproducible from the seed") {
  const NoiseSchedule s = NoiseSchedule::linear();
  LogitVector y0(kNumActions, 0.5);
  Rng a = Rng::stream(9, 9), b = Rng::stream(9, 9);
  CHECK(forward_noising(y0, 4, s, a) == forward_noising(y0, 4, s, b));
}

TEST_CASE("reverse step coefficients form an affine identity") {
  const NoiseSchedule s = NoiseSchedule::linear();
  for (int t = 1; t <= s.T; ++t) {
    const double c0 = std::sqrt(s.alpha_bar[t - 1]) * s.beta[t] / (1.0 - s.alpha_bar[t]);
    const double ct = std::sqrt(s.alpha[t]) * (1.0 - s.alpha_bar[t - 1]) / (1.0 - s.alpha_bar[t]);
    // With exact schedule consistency the two coefficients reproduce a
    // constant: c0 + ct differs from 1 only by O(beta^2) terms.
    Rng rng = Rng::stream(1, t);
    const LogitVector c(kNumActions, 0.7);
    LogitVector mu = reverse_step(c, c, t, s, rng);
    if (t > 1) {
      // strip the injected noise by regenerating it
      Rng rng2 = Rng::stream(1, t);
      const double sigma = std::sqrt(s.beta_tilde[t]);
      for (int i = 0; i < kNumActions; ++i) mu[i] -= sigma * rng2.normal();
    }
    for (int i = 0; i < kNumActions; ++i) {
      CHECK(mu[i] == doctest::Approx(0.7 * (c0 + ct)).epsilon(1e-12));
      CHECK(std::abs(mu[i] - 0.7) < 1e-3);
    }
  }
}

TEST_CASE("reverse step hand value at t=5") {
  const NoiseSchedule s = NoiseSchedule::linear();
  Rng rng = Rng::stream(2, 5);
  const LogitVector y0_hat(kNumActions, 0.0);
  const LogitVector y_t(kNumActions, 1.0);
  LogitVector y = reverse_step(y_t, y0_hat, 5, s, rng);
  Rng rng2 = Rng::stream(2, 5);
  const double sigma = std::sqrt(s.beta_tilde[5]);
  const double expected =
      std::sqrt(s.alpha[5]) * (1.0 - s.alpha_bar[4]) / (1.0 - s.alpha_bar[5]);
  for (int i = 0; i < kNumActions; ++i) {
    CHECK(y[i] - sigma * rng2.normal() == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("reverse step adds no noise at t=1") {
  const NoiseSchedule s = NoiseSchedule::linear();
  Rng a = Rng::stream(3, 0);
  LogitVector y_t(kNumActions), y0(kNumActions);
  for (int i = 0; i < kNumActions; ++i) {
    y_t[i] = a.normal();
    y0[i] = a.normal();
  }
  Rng r1 = Rng::stream(4, 0), r2 = Rng::stream(5, 0);
  CHECK(reverse_step(y_t, y0, 1, s, r1) == reverse_step(y_t, y0, 1, s, r2));
}

TEST_CASE("masked softmax known values and properties") {
  const ManeuverLimits lim;
  const FeasibilityMask all = feasibility_mask(1, lim);
  const FeasibilityMask floor = feasibility_mask(0, lim);

  LogitVector zero(kNumActions, 0.0);
  Vec p = masked_softmax(zero, all);
  for (int i = 0; i < kNumActions; ++i) {
    CHECK(p[i] == doctest::Approx(1.0 / 27.0).epsilon(1e-14));
  }
  p = masked_softmax(zero, floor);
  for (int i = 0; i < kNumActions; ++i) {
    if (floor.feasible[i]) {
      CHECK(p[i] == doctest::Approx(1.0 / 18.0).epsilon(1e-14));
    } else {
      CHECK(p[i] == 0.0);
    }
  }

  LogitVector one_up(kNumActions, 0.0);
  one_up[7] = std::log(2.0);
  p = masked_softmax(one_up, all);
  CHECK(p[7] == doctest::Approx(2.0 / 28.0).epsilon(1e-12));

  // shift invariance and normalization
  Rng rng = Rng::stream(6, 0);
  for (int inst = 0; inst < 100; ++inst) {
    LogitVector l(kNumActions);
    for (auto& v : l) v = rng.uniform(-5.0, 5.0);
    const Vec p1 = masked_softmax(l, floor);
    LogitVector shifted = l;
    for (auto& v : shifted) v += 3.21;
    const Vec p2 = masked_softmax(shifted, floor);
    double sum = 0.0;
    for (int i = 0; i < kNumActions; ++i) {
      CHECK(std::abs(p1[i] - p2[i]) < 1e-12);
      sum += p1[i];
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }

  FeasibilityMask none;
  CHECK_THROWS_AS(masked_softmax(zero, none), std::logic_error);
}

TEST_CASE("teacher logits smoothing and round trip") {
  Vec uniform(kNumActions, 1.0 / 27.0);
  LogitVector y = teacher_to_logits(uniform, 0.0);
  for (double v : y) CHECK(v == doctest::Approx(std::log(1.0 / 27.0)).epsilon(1e-12));

  Vec with_zero(kNumActions, 0.0);
  with_zero[0] = 1.0;
  y = teacher_to_logits(with_zero, 1e-3);
  CHECK(std::isfinite(y[5]));
  CHECK(y[5] == doctest::Approx(std::log(1e-3 / 27.0)).epsilon(1e-12));

  Vec negative(kNumActions, 0.0);
  negative[3] = -0.1;
  CHECK_THROWS_AS(teacher_to_logits(negative, 1e-3), std::domain_error);

  // round trip: TV distance bounded by 2*eps_sm over random simplex points
  const ManeuverLimits lim;
  const FeasibilityMask all = feasibility_mask(1, lim);
  Rng rng = Rng::stream(7, 0);
  for (int inst = 0; inst < 200; ++inst) {
    Vec p(kNumActions);
    double z = 0.0;
    for (auto& v : p) {
      v = -std::log(rng.uniform01() + 1e-300);
      z += v;
    }
    for (auto& v : p) v /= z;
    const Vec q = masked_softmax(teacher_to_logits(p, 1e-3), all);
    double tv = 0.0;
    for (int i = 0; i < kNumActions; ++i) tv += std::abs(p[i] - q[i]);
    tv *= 0.5;
    CHECK(tv <= 2e-3);
  }
}

TEST_CASE("cross entropy of a distribution with itself is its entropy") {
  Vec p(kNumActions, 0.0);
  p[0] = 0.5;
  p[1] = 0.5;
  CHECK(cross_entropy(p, p) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

namespace {
DenoiserFn constant_stub(const LogitVector& c) {
  return [c](const Vec&, const LogitVector&, int) { return c; };
}
}  // namespace

TEST_CASE("single feasible class is always chosen") {
  const NoiseSchedule s = NoiseSchedule::linear();
  FeasibilityMask mask;
  mask.feasible[11] = true;
  Rng rng = Rng::stream(8, 0);
  const Vec obs(22, 0.0);
  const PolicySample ps =
      sample_policy(obs, mask, constant_stub(LogitVector(kNumActions, 0.0)), s, rng);
  CHECK(ps.chosen.index == 11);
  CHECK(ps.probs[11] == 1.0);
}

TEST_CASE("constant stub with a unique maximum is deterministic") {
  const NoiseSchedule s = NoiseSchedule::linear();
  const ManeuverLimits lim;
  const FeasibilityMask all = feasibility_mask(1, lim);
  LogitVector c(kNumActions, 0.0);
  c[19] = 2.0;
  Rng rng = Rng::stream(9, 0);
  const Vec obs(22, 0.0);
  for (int i = 0; i < 200; ++i) {
    CHECK(sample_policy(obs, all, constant_stub(c), s, rng).chosen.index == 19);
  }
}

TEST_CASE("constant stub logits pass through to the masked softmax") {
  const NoiseSchedule s = NoiseSchedule::linear();
  const ManeuverLimits lim;
  const FeasibilityMask all = feasibility_mask(1, lim);
  LogitVector c(kNumActions);
  for (int i = 0; i < kNumActions; ++i) c[i] = 0.05 * i - 0.4;
  Rng rng = Rng::stream(10, 0);
  const Vec obs(22, 0.0);
  for (int i = 0; i < 50; ++i) {
    const PolicySample ps = sample_policy(obs, all, constant_stub(c), s, rng);
    CHECK(ps.logits == c);
  }
}

TEST_CASE("bimodal constant stub splits ties evenly via diffusion noise") {
  const NoiseSchedule s = NoiseSchedule::linear();
  const ManeuverLimits lim;
  const FeasibilityMask all = feasibility_mask(1, lim);
  LogitVector c(kNumActions, -1.0);
  c[4] = 3.0;
  c[21] = 3.0;
  Rng rng = Rng::stream(11, 0);
  const Vec obs(22, 0.0);
  int n4 = 0, n21 = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const int a = sample_policy(obs, all, constant_stub(c), s, rng).chosen.index;
    REQUIRE((a == 4 || a == 21));
    if (a == 4) ++n4;
    else ++n21;
  }
  CHECK(std::abs(n4 / static_cast<double>(n) - 0.5) <= 0.02);
  CHECK(std::abs(n21 / static_cast<double>(n) - 0.5) <= 0.02);
}

TEST_CASE("sampled class is always feasible for every flight level") {
  const NoiseSchedule s = NoiseSchedule::linear();
  const ManeuverLimits lim;
  Rng rng = Rng::stream(12, 0);
  const Vec obs(22, 0.0);
  for (int fl = 0; fl <= 2; ++fl) {
    const FeasibilityMask mask = feasibility_mask(fl, lim);
    for (int i = 0; i < 2000; ++i) {
      LogitVector c(kNumActions);
      for (auto& v : c) v = rng.normal();
      const PolicySample ps = sample_policy(obs, mask, constant_stub(c), s, rng);
      CHECK(mask.feasible[ps.chosen.index]);
    }
  }
}

TEST_CASE("argmax is invariant to positive scaling of logits") {
  const ManeuverLimits lim;
  const FeasibilityMask all = feasibility_mask(1, lim);
  Rng rng = Rng::stream(13, 0);
  for (int inst = 0; inst < 500; ++inst) {
    LogitVector l(kNumActions);
    for (auto& v : l) v = rng.normal();
    auto argmax = [&](const Vec& p) {
      int best = 0;
      for (int i = 1; i < kNumActions; ++i) {
        if (p[i] > p[best]) best = i;
      }
      return best;
    };
    LogitVector scaled = l;
    for (auto& v : scaled) v *= 7.5;
    CHECK(argmax(masked_softmax(l, all)) == argmax(masked_softmax(scaled, all)));
  }
}
