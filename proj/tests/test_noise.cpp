#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support/oracles.hpp"
#include "tdoa/noise.hpp"

#include <cmath>
#include <set>

using namespace tdoa;

namespace {

PairCondition make_cond(LinkCondition i, LinkCondition j, LinkCondition aa) {
  PairCondition c;
  c.tag_to_i = i;
  c.tag_to_j = j;
  c.anchor_to_anchor = aa;
  c.in_range = true;
  return c;
}

const LinkCondition kLos = LinkCondition::Los;
const LinkCondition kCommon = LinkCondition::CommonNlos;
const LinkCondition kSevere = LinkCondition::SevereNlos;

}  // namespace

TEST_CASE("rng streams are deterministic and substreams differ") {
  RngStream a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  RngStream s1 = RngStream::substream(7, 1, 2, 3);
  RngStream s2 = RngStream::substream(7, 1, 2, 4);
  bool differs = false;
  for (int i = 0; i < 10; ++i) differs |= s1.next_u64() != s2.next_u64();
  CHECK(differs);
}

TEST_CASE("rng normal moments") {
  RngStream rng(11);
  const auto m = oracle::sample_moments(200000, [&] { return rng.normal(); });
  CHECK(std::abs(m.mean) < 4 * m.se_mean + 1e-12);
  CHECK(std::abs(m.variance - 1.0) < 4 * m.se_var);
}

TEST_CASE("gaussian_approx_lognormal matches the closed-form moments") {
  const auto g = gaussian_approx_lognormal({0.0, 1.0, +1});
  CHECK(g.mean == doctest::Approx(1.6487212707001282).epsilon(1e-12));
  CHECK(g.variance == doctest::Approx(4.670774270471604).epsilon(1e-12));

  const auto gm = gaussian_approx_lognormal({0.0, 1.0, -1});
  CHECK(gm.mean == doctest::Approx(-1.6487212707001282).epsilon(1e-12));
  CHECK(gm.variance == doctest::Approx(g.variance).epsilon(1e-15));

  // mu=-2, s=0.1: frozen from the closed-form oracle and cross-checked below
  const auto gs = gaussian_approx_lognormal({-2.0, 0.1, +1});
  CHECK(gs.mean == doctest::Approx(oracle::lognormal_mean(-2.0, 0.1)).epsilon(1e-12));
  CHECK(gs.mean == doctest::Approx(0.13601365417).epsilon(1e-9));
  CHECK(gs.variance == doctest::Approx(oracle::lognormal_var(-2.0, 0.1)).epsilon(1e-12));
  CHECK(gs.variance == doctest::Approx(1.8592521791e-4).epsilon(1e-9));

  CHECK_THROWS_AS(gaussian_approx_lognormal({0.0, 0.0, +1}), ValidationError);
}

TEST_CASE("gaussian_approx_lognormal agrees with Monte-Carlo moments") {
  RngStream rng(99);
  const LogNormalParams params{-2.0, 0.1, +1};
  const auto g = gaussian_approx_lognormal(params);
  const auto m = oracle::sample_moments(1000000, [&] { return rng.lognormal(params.mu, params.s); });
  CHECK(std::abs(m.mean - g.mean) < 5 * m.se_mean);
  CHECK(std::abs(m.variance - g.variance) < 5 * m.se_var);
}

TEST_CASE("compose_model: all-LOS condition is pure measurement noise") {
  NoiseParams params;
  params.sigma_los = 0.05;
  const ErrorModel m = compose_model(make_cond(kLos, kLos, kLos), params);
  CHECK(m.mean == 0.0);
  CHECK(m.variance == doctest::Approx(0.0025).epsilon(1e-15));
  CHECK(m.component_count == 0);
}

TEST_CASE("compose_model: single common NLOS on the j link") {
  NoiseParams params;
  params.sigma_los = 0.05;
  params.common_tag = {0.0, 1.0, +1};
  const ErrorModel m = compose_model(make_cond(kLos, kCommon, kLos), params);
  CHECK(m.mean == doctest::Approx(1.6487212707).epsilon(1e-9));
  CHECK(m.variance == doctest::Approx(0.0025 + 4.6707742705).epsilon(1e-9));
  CHECK(m.component_count == 1);
}

TEST_CASE("compose_model: identical severe biases on both tag links cancel in the mean") {
  NoiseParams params;
  params.sigma_los = 0.05;
  const ErrorModel m = compose_model(make_cond(kSevere, kSevere, kLos), params);
  CHECK(m.mean == doctest::Approx(0.0).epsilon(1e-12));
  const double var_severe = gaussian_approx_lognormal(params.severe_tag).variance;
  CHECK(m.variance == doctest::Approx(0.0025 + 2 * var_severe).epsilon(1e-12));

  // convolution oracle on sampled data
  RngStream rng(5);
  const auto cond = make_cond(kSevere, kSevere, kLos);
  const auto mc = oracle::sample_moments(400000, [&] { return sample_error(cond, params, rng); });
  CHECK(std::abs(mc.mean - m.mean) < 5 * mc.se_mean);
  CHECK(std::abs(mc.variance - m.variance) < 5 * mc.se_var);
}

TEST_CASE("compose_model mean is additive across independent components") {
  NoiseParams params;
  const double mj = compose_model(make_cond(kLos, kCommon, kLos), params).mean;
  const double maa = compose_model(make_cond(kLos, kLos, kSevere), params).mean;
  const double joint = compose_model(make_cond(kLos, kCommon, kSevere), params).mean;
  CHECK(joint == doctest::Approx(mj + maa).epsilon(1e-12));

  const double mi = compose_model(make_cond(kSevere, kLos, kLos), params).mean;
  const double joint2 = compose_model(make_cond(kSevere, kCommon, kLos), params).mean;
  CHECK(joint2 == doctest::Approx(mi + mj).epsilon(1e-12));
}

TEST_CASE("compose_model rejects unusable conditions") {
  NoiseParams params;
  PairCondition blocked = make_cond(kLos, kLos, kLos);
  blocked.tag_to_i = LinkCondition::Blocked;
  CHECK_THROWS_AS(compose_model(blocked, params), ValidationError);

  PairCondition oor = make_cond(kLos, kLos, kLos);
  oor.in_range = false;
  CHECK_THROWS_AS(compose_model(oor, params), ValidationError);
}

TEST_CASE("the 27 condition triples give 27 distinct models") {
  NoiseParams params;  // documented defaults have distinct per-category values
  const LinkCondition all[] = {kLos, kCommon, kSevere};
  std::set<std::pair<double, double>> seen;
  for (LinkCondition i : all) {
    for (LinkCondition j : all) {
      for (LinkCondition aa : all) {
        const ErrorModel m = compose_model(make_cond(i, j, aa), params);
        seen.insert({m.mean, m.variance});
      }
    }
  }
  CHECK(seen.size() == 27);
}

TEST_CASE("sample_error: degenerate noise and determinism") {
  NoiseParams params;
  params.sigma_los = 1e-300;  // effectively zero while satisfying sigma > 0
  RngStream rng(3);
  const auto cond = make_cond(kLos, kLos, kLos);
  for (int i = 0; i < 10; ++i) CHECK(std::abs(sample_error(cond, params, rng)) < 1e-290);

  NoiseParams defaults;
  RngStream r1(123), r2(123);
  const auto mixed = make_cond(kSevere, kCommon, kSevere);
  for (int i = 0; i < 50; ++i) {
    CHECK(sample_error(mixed, defaults, r1) == sample_error(mixed, defaults, r2));
  }
}

TEST_CASE("sample_error mean matches compose_model for a single NLOS link") {
  NoiseParams params;
  const auto cond = make_cond(kLos, kCommon, kLos);
  const ErrorModel model = compose_model(cond, params);
  RngStream rng(17);
  const auto m = oracle::sample_moments(1000000, [&] { return sample_error(cond, params, rng); });
  CHECK(std::abs(m.mean - model.mean) < 3 * m.se_mean);
  CHECK(std::abs(m.variance - model.variance) < 5 * m.se_var);
}
