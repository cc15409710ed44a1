#include <catch2/catch_amalgamated.hpp>

#include "testing_util.hpp"

using namespace submax;

namespace {

// Coverage family on 2k+1 elements used across the suites, k = 2:
// S1={1,5}, S2={2,5}, S3={3}, S4={4}, S5={1,2,5} in 1-based element ids.
SetFunction k2_family() {
  return coverage_from_sets({{0, 4}, {1, 4}, {2}, {3}, {0, 1, 4}}, 5);
}

}  // namespace

TEST_CASE("subset basics") {
  Subset s(70);
  s.insert(0);
  s.insert(69);
  s.insert(64);
  CHECK(s.size() == 3);
  CHECK(s.contains(69));
  CHECK_FALSE(s.contains(1));
  s.erase(64);
  CHECK(s.members() == std::vector<int>{0, 69});
  CHECK(Subset::from_mask(5, 0b10110).members() == std::vector<int>{1, 2, 4});
  CHECK(Subset::from_indices(4, {1, 3}).indicator() == Vec{0.0, 1.0, 0.0, 1.0});
  CHECK((Subset::from_mask(4, 0b0011) | Subset::from_mask(4, 0b0110)).mask64() == 0b0111);
  CHECK((Subset::from_mask(4, 0b0011) & Subset::from_mask(4, 0b0110)).mask64() == 0b0010);
  CHECK(Subset::from_mask(4, 0b0011).is_subset_of(Subset::from_mask(4, 0b1011)));
}

TEST_CASE("coverage function values") {
  const SetFunction f = k2_family();
  CHECK(f.eval(Subset::from_indices(5, {0})) == 2.0);        // |{1,5}|
  CHECK(f.eval(Subset(5)) == 0.0);                           // empty union
  CHECK(f.eval(Subset::full(5)) == 5.0);                     // whole universe
  CHECK(f.eval(Subset::from_indices(5, {0, 1})) == 3.0);     // {1,2,5}
  CHECK(f.monotone);
  CHECK(f.submodular);
}

TEST_CASE("coverage input validation") {
  CHECK_THROWS_AS(coverage_from_sets({{5}}, 5), InputError);
  CHECK_THROWS_AS(coverage_from_sets({{-1}}, 5), InputError);
}

TEST_CASE("facility location values") {
  RatingsMatrix single;
  single.n_users = 1;
  single.n_items = 2;
  single.rows = {{{0, 5.0}, {1, 3.0}}};
  single.max_rating = 5.0;
  const SetFunction f = facility_location(single);
  CHECK(f.eval(Subset::from_indices(2, {1})) == 3.0);
  CHECK(f.eval(Subset(2)) == 0.0);

  RatingsMatrix two;
  two.n_users = 2;
  two.n_items = 2;
  two.rows = {{{0, 5.0}}, {{1, 4.0}}};
  two.max_rating = 5.0;
  CHECK(facility_location(two).eval(Subset::full(2)) == 4.5);  // (5+4)/2
}

TEST_CASE("concave over modular values") {
  RatingsMatrix R;
  R.n_users = 1;
  R.n_items = 2;
  R.rows = {{{0, 4.0}, {1, 9.0}}};
  R.max_rating = 9.0;
  const SetFunction f = concave_over_modular(R, 0.5);
  CHECK_THAT(f.eval(Subset::full(2)), Catch::Matchers::WithinAbs(std::sqrt(13.0), 1e-12));
  CHECK(f.eval(Subset(2)) == 0.0);

  // power = 1 reduces to the modular mean.
  const SetFunction linear = concave_over_modular(R, 1.0);
  CHECK(linear.eval(Subset::from_indices(2, {0})) == 4.0);
  CHECK(linear.eval(Subset::full(2)) == 13.0);

  CHECK_THROWS_AS(concave_over_modular(R, 0.0), InputError);
  CHECK_THROWS_AS(concave_over_modular(R, 1.5), InputError);
}

TEST_CASE("per-user components average to the full objective") {
  Rng rng(0x5e7f1);
  const RatingsMatrix R = testutil::random_ratings(5, 6, rng);
  auto shared = std::make_shared<const RatingsMatrix>(R);
  const auto fl_parts = facility_location_components(shared);
  const SetFunction fl = facility_location(R);
  const auto com_parts = concave_over_modular_components(shared, 0.5);
  const SetFunction com = concave_over_modular(R, 0.5);
  Rng sets(0xabc);
  for (int trial = 0; trial < 50; ++trial) {
    Subset s(6);
    for (int i = 0; i < 6; ++i)
      if (sets.bernoulli(0.5)) s.insert(i);
    double fl_mean = 0.0, com_mean = 0.0;
    for (const auto& f : fl_parts) fl_mean += f.eval(s);
    for (const auto& f : com_parts) com_mean += f.eval(s);
    CHECK_THAT(fl_mean / 5.0, Catch::Matchers::WithinAbs(fl.eval(s), 1e-12));
    CHECK_THAT(com_mean / 5.0, Catch::Matchers::WithinAbs(com.eval(s), 1e-12));
  }
}

TEST_CASE("bruteforce submodularity check") {
  CHECK(check_submodular_bruteforce(k2_family(), true));
  CHECK(check_submodular_bruteforce(modular_function({1.0, 2.0, 0.5})));

  // |S|^2 is supermodular: A={1}, B={2} gives 1+1 < 0+4.
  SetFunction square;
  square.n = 3;
  square.eval = [](const Subset& s) { return static_cast<double>(s.size() * s.size()); };
  CHECK_FALSE(check_submodular_bruteforce(square));

  SetFunction big;
  big.n = 13;
  big.eval = [](const Subset& s) { return static_cast<double>(s.size()); };
  CHECK_THROWS_AS(check_submodular_bruteforce(big), CapabilityError);
  Rng rng(7);
  CHECK(check_submodular_sampled(big, 2000, rng, true));
}

TEST_CASE("random instances pass the structural checks") {
  Rng rng(0x11111);
  for (int trial = 0; trial < 10; ++trial) {
    const SetFunction f = testutil::random_monotone_submodular(6, rng);
    CHECK(check_submodular_bruteforce(f, true));
  }
}

TEST_CASE("l1 smoothness constant is the max singleton") {
  CHECK(smoothness_bound_l1(k2_family()) == 3.0);  // f({5}) = |{1,2,5}|
  CHECK(smoothness_bound_l1(modular_function({0.25, 2.0, 1.0})) == 2.0);

  Rng rng(42);
  const RatingsMatrix R = testutil::random_ratings(6, 5, rng, 0.7, 5.0);
  CHECK(smoothness_bound_l1(facility_location(R)) <= 5.0);

  SetFunction not_flagged;
  not_flagged.n = 2;
  not_flagged.eval = [](const Subset& s) { return static_cast<double>(s.size()); };
  CHECK_THROWS_AS(smoothness_bound_l1(not_flagged), InputError);
}
