#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>
#include <vector>

#include "reclab/augment/augment.hpp"
#include "reclab/common/error.hpp"
#include "reclab/common/rng.hpp"

using namespace reclab;
using namespace reclab::augment;
using reclab::data::Vocabulary;

namespace {

// Vocabulary over city names a..j (ids 2..11) in one country.
Vocabulary make_vocab(int n_cities) {
  Vocabulary v;
  v.id_to_city = {"<pad>", "<mask>"};
  for (int i = 0; i < n_cities; ++i) {
    std::string name(1, static_cast<char>('a' + i));
    v.city_to_id[name] = 2 + i;
    v.id_to_city.push_back(name);
  }
  v.country_to_id["X"] = 0;
  v.id_to_country = {"X"};
  return v;
}

// Full similarity graph: every city neighbors every other with equal score.
baselines::SimilarityIndex full_similarity(const Vocabulary& v) {
  std::map<std::string, std::vector<baselines::Neighbor>> nb;
  for (const auto& [name, id] : v.city_to_id) {
    (void)id;
    for (const auto& [other, oid] : v.city_to_id) {
      (void)oid;
      if (other != name) nb[name].push_back({other, 0.5});
    }
  }
  return baselines::SimilarityIndex::from_neighbors(std::move(nb), 16);
}

TripSample make_trip(const std::string& id, std::vector<int> cities) {
  TripSample t;
  t.trip_id = id;
  t.cities = std::move(cities);
  t.countries.assign(t.cities.size(), 0);
  t.durations.resize(t.cities.size());
  t.step_dense.resize(t.cities.size());
  for (std::size_t i = 0; i < t.cities.size(); ++i) {
    t.durations[i] = static_cast<int>(i + 1);
    t.step_dense[i] = Eigen::RowVectorXd::Constant(3, static_cast<double>(i));
  }
  t.start_month = 6;
  return t;
}

}  // namespace

TEST_CASE("expand_prefixes enumerates every proper prefix exactly once") {
  TripSample t = make_trip("t", {2, 3, 4, 5, 6});
  auto samples = expand_prefixes(t);
  REQUIRE(samples.size() == 4);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const PrefixSample& s = samples[i];
    REQUIRE(s.prefix.size() == i + 1);
    // prefix == first i+1 cities; label == the next one
    for (std::size_t j = 0; j <= i; ++j) CHECK(s.prefix[j] == t.cities[j]);
    CHECK(s.label_city == t.cities[i + 1]);
    CHECK(s.label_country == 0);
    CHECK(s.trip_id == "t");
    CHECK(s.start_month == 6);
    // aligned per-step arrays slice with the prefix
    REQUIRE(s.durations.size() == s.prefix.size());
    REQUIRE(s.step_dense.size() == s.prefix.size());
    for (std::size_t j = 0; j <= i; ++j) {
      CHECK(s.durations[j] == t.durations[j]);
      CHECK(s.step_dense[j] == t.step_dense[j]);
    }
  }

  // minimal case
  auto minimal = expand_prefixes(make_trip("m", {7, 9}));
  REQUIRE(minimal.size() == 1);
  CHECK(minimal[0].prefix == std::vector<int>{7});
  CHECK(minimal[0].label_city == 9);

  CHECK_THROWS_AS(expand_prefixes(make_trip("x", {2})), TripTooShort);
}

TEST_CASE("policy validation") {
  PerturbationPolicy p;
  p.validate();  // defaults sum to 1
  p.p_none = 0.5;
  CHECK_THROWS_AS(p.validate(), InvalidConfig);
  p = {};
  p.p_drop = -0.1;
  p.p_none = 1.1;
  CHECK_THROWS_AS(p.validate(), InvalidConfig);
  p = {};
  p.substitute_top_k = 0;
  CHECK_THROWS_AS(p.validate(), InvalidConfig);
}

TEST_CASE("none mode is the identity") {
  Vocabulary v = make_vocab(8);
  auto sim = full_similarity(v);
  PerturbationPolicy policy{0.0, 0.0, 0.0, 1.0, 5, 0};
  Rng rng(1);
  PrefixSample s = expand_prefixes(make_trip("t", {2, 3, 4, 5}))[2];
  PrefixSample out = perturb(s, policy, sim, v, rng);
  CHECK(out.prefix == s.prefix);
  CHECK(out.durations == s.durations);
  CHECK(out.label_city == s.label_city);
}

TEST_CASE("drop removes exactly one position and realigns features") {
  Vocabulary v = make_vocab(8);
  auto sim = full_similarity(v);
  PerturbationPolicy policy{1.0, 0.0, 0.0, 0.0, 5, 0};
  PrefixSample s = expand_prefixes(make_trip("t", {2, 3, 4, 5, 6}))[3];
  REQUIRE(s.prefix.size() == 4);

  for (std::uint64_t attempt = 0; attempt < 50; ++attempt) {
    Rng rng(attempt);
    PrefixSample out = perturb(s, policy, sim, v, rng);
    REQUIRE(out.prefix.size() == 3);
    CHECK(out.label_city == s.label_city);
    // the survivors must be the original sequence minus one position,
    // with durations and dense rows still aligned
    int dropped = -1;
    for (std::size_t j = 0, k = 0; j < s.prefix.size(); ++j) {
      if (k < out.prefix.size() && out.prefix[k] == s.prefix[j] &&
          out.durations[k] == s.durations[j] &&
          out.step_dense[k] == s.step_dense[j]) {
        ++k;
      } else {
        CHECK(dropped == -1);
        dropped = static_cast<int>(j);
      }
    }
    CHECK(dropped >= 0);
  }

  // a length-1 prefix cannot drop; documented fallback masks instead
  PrefixSample one = expand_prefixes(make_trip("o", {4, 5}))[0];
  Rng rng(3);
  PrefixSample out = perturb(one, policy, sim, v, rng);
  REQUIRE(out.prefix.size() == 1);
  CHECK(out.prefix[0] == Vocabulary::kMaskId);
}

TEST_CASE("mask preserves length and touches one position") {
  Vocabulary v = make_vocab(8);
  auto sim = full_similarity(v);
  PerturbationPolicy policy{0.0, 1.0, 0.0, 0.0, 5, 0};
  PrefixSample s = expand_prefixes(make_trip("t", {2, 3, 4, 5, 6}))[3];
  std::set<int> masked_positions;
  for (std::uint64_t attempt = 0; attempt < 80; ++attempt) {
    Rng rng(attempt);
    PrefixSample out = perturb(s, policy, sim, v, rng);
    REQUIRE(out.prefix.size() == s.prefix.size());
    int changed = 0, where = -1;
    for (std::size_t j = 0; j < s.prefix.size(); ++j) {
      if (out.prefix[j] != s.prefix[j]) {
        ++changed;
        where = static_cast<int>(j);
      }
      CHECK(out.durations[j] == s.durations[j]);  // features untouched
    }
    REQUIRE(changed == 1);
    CHECK(out.prefix[static_cast<std::size_t>(where)] == Vocabulary::kMaskId);
    masked_positions.insert(where);
    CHECK(out.label_city == s.label_city);
  }
  CHECK(masked_positions.size() == 4);  // uniform choice reaches every slot
}

TEST_CASE("substitute draws a real neighbor, never pad or the original") {
  Vocabulary v = make_vocab(8);
  auto sim = full_similarity(v);
  PerturbationPolicy policy{0.0, 0.0, 1.0, 0.0, 5, 0};
  PrefixSample s = expand_prefixes(make_trip("t", {2, 3, 4, 5, 6}))[3];
  std::set<int> replacements;
  for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
    Rng rng(attempt);
    PrefixSample out = perturb(s, policy, sim, v, rng);
    REQUIRE(out.prefix.size() == s.prefix.size());
    int changed = 0;
    for (std::size_t j = 0; j < s.prefix.size(); ++j) {
      if (out.prefix[j] != s.prefix[j]) {
        ++changed;
        CHECK(out.prefix[j] >= 2);  // real city
        CHECK(out.prefix[j] != s.prefix[j]);
        replacements.insert(out.prefix[j]);
      }
    }
    CHECK(changed == 1);
    CHECK(out.label_city == s.label_city);
  }
  CHECK(replacements.size() > 1);

  // neighbor lists exhausted by top-k truncation to invalid ids -> mask
  std::map<std::string, std::vector<baselines::Neighbor>> nb;
  auto lonely = baselines::SimilarityIndex::from_neighbors(std::move(nb), 5);
  Rng rng(5);
  PrefixSample out = perturb(s, policy, lonely, v, rng);
  int masks = 0;
  for (int id : out.prefix) masks += id == Vocabulary::kMaskId;
  CHECK(masks == 1);
}

TEST_CASE("augment_dataset accounting and reproducibility") {
  Vocabulary v = make_vocab(10);
  auto sim = full_similarity(v);
  std::vector<TripSample> trips;
  for (int i = 0; i < 100; ++i) {
    std::vector<int> cities;
    for (int j = 0; j < 5; ++j) cities.push_back(2 + (i + j) % 10);
    trips.push_back(make_trip("t" + std::to_string(i), cities));
  }
  // short trips are skipped by the min-length rule
  trips.push_back(make_trip("short", {2, 3, 4}));

  PerturbationPolicy nop{0.0, 0.0, 0.0, 1.0, 5, 42};
  auto plain = augment_dataset(trips, nop, sim, v, 4, 0);
  CHECK(plain.size() == 100 * 4);  // sum over retained trips of |t|-1

  // all-drop policy: every sample one step shorter (mask fallback at len 1)
  PerturbationPolicy all_drop{1.0, 0.0, 0.0, 0.0, 5, 42};
  auto dropped = augment_dataset(trips, all_drop, sim, v, 4, 0);
  REQUIRE(dropped.size() == plain.size());
  for (std::size_t i = 0; i < dropped.size(); ++i) {
    if (plain[i].prefix.size() == 1) {
      CHECK(dropped[i].prefix.size() == 1);
      CHECK(dropped[i].prefix[0] == Vocabulary::kMaskId);
    } else {
      CHECK(dropped[i].prefix.size() == plain[i].prefix.size() - 1);
    }
    CHECK(dropped[i].label_city == plain[i].label_city);
    CHECK(dropped[i].label_country == plain[i].label_country);
  }

  // same (policy, epoch) -> identical output; new epoch -> redrawn
  PerturbationPolicy mixed{0.25, 0.25, 0.25, 0.25, 5, 42};
  auto e0a = augment_dataset(trips, mixed, sim, v, 4, 0);
  auto e0b = augment_dataset(trips, mixed, sim, v, 4, 0);
  auto e1 = augment_dataset(trips, mixed, sim, v, 4, 1);
  REQUIRE(e0a.size() == e0b.size());
  bool identical = true;
  for (std::size_t i = 0; i < e0a.size(); ++i)
    identical = identical && e0a[i].prefix == e0b[i].prefix;
  CHECK(identical);
  bool any_differ = false;
  for (std::size_t i = 0; i < e0a.size(); ++i)
    any_differ = any_differ || e0a[i].prefix != e1[i].prefix;
  CHECK(any_differ);

  // min_trip_len below the default admits the short trip
  auto with_short = augment_dataset(trips, nop, sim, v, 3, 0);
  CHECK(with_short.size() == 100 * 4 + 2);
}
