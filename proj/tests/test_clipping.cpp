#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "dpdecay/clipping.hpp"
#include "dpdecay/numerics.hpp"
#include "dpdecay/rng.hpp"

using dpdecay::ClipKind;
using dpdecay::ClipPolicy;
using dpdecay::DenseVector;
using dpdecay::RandomSource;
using dpdecay::ScaledBatch;

namespace {

DenseVector vec(std::vector<double> values) {
  return DenseVector::from_data(std::move(values));
}

}  // namespace

TEST_CASE("two-branch scaling is uniform below the threshold") {
  const ClipPolicy p = ClipPolicy::make(ClipKind::v2, 1.0, 10.0, 1.0);
  CHECK(*dpdecay::scale_factor(p, 5.0) == 0.1);
  CHECK(*dpdecay::scale_factor(p, 0.0) == 0.1);
  // The boundary belongs to the lower branch.
  CHECK(*dpdecay::scale_factor(p, 10.0) == 0.1);
}

TEST_CASE("two-branch scaling clips smoothly above the threshold") {
  const ClipPolicy p = ClipPolicy::make(ClipKind::v2, 1.0, 10.0, 1.0);
  const double gamma = *dpdecay::scale_factor(p, 12.0);
  CHECK(gamma == doctest::Approx(0.08280254777070063).epsilon(1e-15));
  CHECK(12.0 * gamma == doctest::Approx(0.9936305732484076).epsilon(1e-15));
  // The factor drops across the threshold; the two branches do not meet.
  CHECK(*dpdecay::scale_factor(p, 10.5) < 0.1);
}

TEST_CASE("norm-capped scaling is the identity below the bound") {
  const ClipPolicy p = ClipPolicy::make(ClipKind::dpsgd, 1.0);
  CHECK(*dpdecay::scale_factor(p, 0.0) == 1.0);
  CHECK(*dpdecay::scale_factor(p, 0.5) == 1.0);
  CHECK(*dpdecay::scale_factor(p, 1.0) == 1.0);
  CHECK(*dpdecay::scale_factor(p, 4.0) == 0.25);
}

TEST_CASE("stabilized scaling divides by the shifted norm") {
  const ClipPolicy p = ClipPolicy::make(ClipKind::autos, 1.0, 0.0, 1.0, 0.01);
  const double gamma = *dpdecay::scale_factor(p, 3.0);
  CHECK(gamma == doctest::Approx(0.33222591362126247).epsilon(1e-15));
  CHECK(3.0 * gamma == doctest::Approx(0.9966777408637875).epsilon(1e-15));
  const ClipPolicy bare = ClipPolicy::make(ClipKind::autos, 1.0, 0.0, 1.0, 0.0);
  CHECK(*dpdecay::scale_factor(bare, 0.0) == 1.0);
  // With r = 0 the scaled norm lands exactly on the bound.
  CHECK(*dpdecay::scale_factor(bare, 2.0) == 0.5);
}

TEST_CASE("per-sample adaptive scaling matches its closed form") {
  const ClipPolicy p = ClipPolicy::make(ClipKind::psac, 1.0, 0.0, 1.0);
  const double gamma = *dpdecay::scale_factor(p, 10.0);
  CHECK(gamma == doctest::Approx(0.09909909909909909).epsilon(1e-15));
  CHECK(10.0 * gamma == doctest::Approx(0.9909909909909909).epsilon(1e-15));
}

TEST_CASE("discarding scaling drops samples above the threshold") {
  const ClipPolicy p = ClipPolicy::make(ClipKind::global, 1.0, 10.0);
  CHECK(dpdecay::scale_factor(p, 10.0).has_value());
  CHECK_FALSE(dpdecay::scale_factor(p, 10.000001).has_value());
  CHECK(*dpdecay::scale_factor(p, 4.0) == 0.1);
}

TEST_CASE("adaptive-threshold scaling clips instead of discarding") {
  const ClipPolicy p = ClipPolicy::make(ClipKind::global_adapt, 1.0, 10.0);
  CHECK(*dpdecay::scale_factor(p, 4.0) == 0.1);
  // Above the threshold the sample is norm-clipped to exactly c0.
  CHECK(*dpdecay::scale_factor(p, 20.0) == 0.05);
  CHECK(20.0 * *dpdecay::scale_factor(p, 20.0) == 1.0);
}

TEST_CASE("scale factor rejects invalid norms") {
  const ClipPolicy p = ClipPolicy::make(ClipKind::dpsgd, 1.0);
  CHECK_THROWS_AS(dpdecay::scale_factor(p, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(
      dpdecay::scale_factor(p, std::numeric_limits<double>::infinity()),
      std::invalid_argument);
  CHECK_THROWS_AS(
      dpdecay::scale_factor(p, std::numeric_limits<double>::quiet_NaN()),
      std::invalid_argument);
}

TEST_CASE("every policy respects the sensitivity bound on random norms") {
  const std::vector<ClipPolicy> policies = {
      ClipPolicy::make(ClipKind::v2, 0.7, 4.0, 1.3),
      ClipPolicy::make(ClipKind::dpsgd, 0.7),
      ClipPolicy::make(ClipKind::autos, 0.7, 0.0, 1.0, 0.01),
      ClipPolicy::make(ClipKind::psac, 0.7, 0.0, 1.3),
      ClipPolicy::make(ClipKind::global, 0.7, 4.0),
      ClipPolicy::make(ClipKind::global_adapt, 0.7, 4.0),
  };
  RandomSource rng(314159);
  for (int i = 0; i < 5000; ++i) {
    // Log-uniform norms across nine decades.
    const double norm = std::pow(10.0, -6.0 + 9.0 * rng.uniform());
    for (const ClipPolicy& p : policies) {
      const std::optional<double> gamma = dpdecay::scale_factor(p, norm);
      if (!gamma.has_value()) {
        CHECK(p.kind == ClipKind::global);
        CHECK(norm > p.z);
        continue;
      }
      CHECK(norm * *gamma <= p.c0 + 1e-12);
    }
  }
}

TEST_CASE("batch scaling records norms and discards") {
  const ClipPolicy p = ClipPolicy::make(ClipKind::global, 1.0, 10.0);
  const std::vector<DenseVector> grads = {
      vec({0.3, 0.4}),   // norm 0.5
      vec({3.0, 0.0}),   // norm 3
      vec({0.0, 12.0}),  // norm 12, discarded
      vec({0.0, 0.0}),   // norm 0
  };
  const ScaledBatch batch = dpdecay::scale_batch(p, grads);
  CHECK(batch.discarded == 1);
  REQUIRE(batch.kept.size() == 3);
  REQUIRE(batch.raw_norms.size() == 4);
  CHECK(batch.raw_norms[0] == 0.5);
  CHECK(batch.raw_norms[1] == 3.0);
  CHECK(batch.raw_norms[2] == 12.0);
  CHECK(batch.raw_norms[3] == 0.0);
  CHECK(batch.max_raw_norm == 12.0);
  CHECK(batch.mean_raw_norm == doctest::Approx(3.875).epsilon(1e-15));
  // Survivors keep input order and the uniform factor c0/z = 0.1.
  CHECK(batch.kept[0].span()[0] == doctest::Approx(0.03).epsilon(1e-15));
  CHECK(batch.kept[1].span()[0] == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(batch.kept[2].span()[1] == 0.0);
}

TEST_CASE("batch scaling flags a corrupted policy as a logic error") {
  // Bypass make(): a negative stabilizer weight sends the denominator of
  // the scaling rule through zero, so the factor is non-finite.
  ClipPolicy p;
  p.kind = ClipKind::psac;
  p.c0 = 1.0;
  p.w = -0.5;
  const std::vector<DenseVector> grads = {vec({1.0})};
  CHECK_THROWS_AS(dpdecay::scale_batch(p, grads), std::logic_error);
}

TEST_CASE("empty batch scales to an empty result") {
  const ClipPolicy p = ClipPolicy::make(ClipKind::dpsgd, 1.0);
  const ScaledBatch batch = dpdecay::scale_batch(p, {});
  CHECK(batch.kept.empty());
  CHECK(batch.discarded == 0);
  CHECK(batch.mean_raw_norm == 0.0);
  CHECK(batch.max_raw_norm == 0.0);
}

TEST_CASE("threshold adaptation follows the geometric update") {
  ClipPolicy p =
      ClipPolicy::make(ClipKind::global_adapt, 1.0, 2.0, 1.0, 0.01, 0.3);
  RandomSource rng(1);
  // Two of four norms exceed z = 2, so f = 0.5 and z' = 2 exp(0.2).
  const double z = dpdecay::adapt_threshold(p, {1.0, 3.0, 5.0, 1.0}, 0.0, rng);
  CHECK(z == doctest::Approx(2.4428055163203397).epsilon(1e-15));
  CHECK(p.z == z);
}

TEST_CASE("threshold adaptation clamps just above the sensitivity bound") {
  ClipPolicy p =
      ClipPolicy::make(ClipKind::global_adapt, 1.0, 1.5, 1.0, 0.01, 0.9);
  RandomSource rng(1);
  // No norm exceeds z, so the raw update 1.5 exp(-0.9) dips below c0.
  const double z = dpdecay::adapt_threshold(p, {0.5, 0.25}, 0.0, rng);
  CHECK(z == 1.000001);
  CHECK(p.z > p.c0);
}

TEST_CASE("threshold adaptation with an empty batch is a no-op") {
  ClipPolicy p =
      ClipPolicy::make(ClipKind::global_adapt, 1.0, 2.0, 1.0, 0.01, 0.3);
  RandomSource used(9);
  RandomSource fresh(9);
  CHECK(dpdecay::adapt_threshold(p, {}, 0.5, used) == 2.0);
  CHECK(p.z == 2.0);
  // The no-op consumed no randomness.
  CHECK(used.uniform() == fresh.uniform());
}

TEST_CASE("noisy threshold adaptation draws one deviate scaled by batch") {
  ClipPolicy p =
      ClipPolicy::make(ClipKind::global_adapt, 1.0, 2.0, 1.0, 0.01, 0.3);
  RandomSource rng(11);
  RandomSource twin(11);
  const double got = dpdecay::adapt_threshold(p, {1.0, 3.0, 5.0, 1.0}, 0.5, rng);
  const double noise = 0.5 * twin.gaussian();
  const double noisy = 0.5 + noise / 4.0;
  CHECK(got == 2.0 * std::exp(noisy - 0.3));
}

TEST_CASE("threshold adaptation rejects misuse") {
  ClipPolicy dpsgd = ClipPolicy::make(ClipKind::dpsgd, 1.0);
  RandomSource rng(1);
  CHECK_THROWS_AS(dpdecay::adapt_threshold(dpsgd, {1.0}, 0.0, rng),
                  std::invalid_argument);
  ClipPolicy p =
      ClipPolicy::make(ClipKind::global_adapt, 1.0, 2.0, 1.0, 0.01, 0.3);
  CHECK_THROWS_AS(dpdecay::adapt_threshold(p, {1.0}, -1.0, rng),
                  std::invalid_argument);
}

TEST_CASE("policy construction validates its parameters") {
  CHECK_THROWS_WITH_AS(ClipPolicy::make(ClipKind::dpsgd, 0.0),
                       doctest::Contains("c0"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(ClipPolicy::make(ClipKind::psac, 1.0, 0.0, -1.0),
                       doctest::Contains("w"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(ClipPolicy::make(ClipKind::autos, 1.0, 0.0, 1.0, -0.1),
                       doctest::Contains("r"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      ClipPolicy::make(ClipKind::global_adapt, 1.0, 2.0, 1.0, 0.01, 1.0),
      doctest::Contains("adapt_target_fraction"), std::invalid_argument);
  // Threshold kinds demand z > c0; kinds without a threshold ignore z.
  CHECK_THROWS_WITH_AS(ClipPolicy::make(ClipKind::v2, 1.0, 1.0),
                       doctest::Contains("z"), std::invalid_argument);
  CHECK_THROWS_AS(ClipPolicy::make(ClipKind::global, 1.0, 0.5),
                  std::invalid_argument);
  CHECK_NOTHROW(ClipPolicy::make(ClipKind::dpsgd, 1.0, 0.0));
  CHECK_NOTHROW(ClipPolicy::make(ClipKind::psac, 1.0, 0.0));
}

TEST_CASE("threshold replacement enforces the lower bound") {
  ClipPolicy p = ClipPolicy::make(ClipKind::v2, 1.0, 10.0);
  dpdecay::set_threshold(p, 5.0);
  CHECK(p.z == 5.0);
  CHECK_THROWS_AS(dpdecay::set_threshold(p, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(
      dpdecay::set_threshold(p, std::numeric_limits<double>::infinity()),
      std::invalid_argument);
}

TEST_CASE("clip kind names round-trip") {
  for (ClipKind kind :
       {ClipKind::v2, ClipKind::dpsgd, ClipKind::autos, ClipKind::psac,
        ClipKind::global, ClipKind::global_adapt}) {
    CHECK(dpdecay::clip_kind_from_string(dpdecay::to_string(kind)) == kind);
  }
  CHECK_THROWS_AS(dpdecay::clip_kind_from_string("clipless"),
                  std::invalid_argument);
}
