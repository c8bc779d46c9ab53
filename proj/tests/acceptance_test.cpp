// Acceptance gate: ten end-to-end checks, one printed verdict line each.
// Tolerances are pinned here, next to the checks they govern.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "reclab/augment/augment.hpp"
#include "reclab/baselines/itemknn.hpp"
#include "reclab/baselines/popularity.hpp"
#include "reclab/cli/run.hpp"
#include "reclab/common/error.hpp"
#include "reclab/common/hash.hpp"
#include "reclab/common/rng.hpp"
#include "reclab/data/ops.hpp"
#include "reclab/data/synthetic.hpp"
#include "reclab/eval/metrics.hpp"
#include "reclab/features/pipeline.hpp"
#include "reclab/losses/focal.hpp"
#include "reclab/model/narm.hpp"
#include "reclab/train/batching.hpp"
#include "reclab/train/trainer.hpp"

using namespace reclab;
using Mat = Eigen::MatrixXd;

namespace {

class Stopwatch {
public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

void report(int n, bool ok, const std::string& what, double secs) {
  std::printf("criterion %2d: %s  %s  (%.1f s)\n", n, ok ? "PASS" : "FAIL",
              what.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

// Random but reproducible batch over the given prefixes of real city ids.
model::Batch make_batch(const model::NarmConfig& cfg, int city_space,
                        int countries,
                        const std::vector<std::vector<int>>& prefixes,
                        int window, std::uint64_t seed) {
  Rng rng(seed);
  model::Batch b;
  b.window = window;
  for (const auto& p : prefixes) {
    std::vector<int> ids(static_cast<std::size_t>(window), 0);
    std::vector<int> durs(static_cast<std::size_t>(window), 0);
    for (std::size_t t = 0; t < p.size(); ++t) {
      ids[t] = p[t];
      durs[t] = 1 + static_cast<int>(rng.uniform_int(7));
    }
    b.city_ids.push_back(std::move(ids));
    b.durations.push_back(std::move(durs));
    b.lengths.push_back(static_cast<int>(p.size()));
    b.start_months.push_back(1 + static_cast<int>(rng.uniform_int(12)));
    if (cfg.use_step_stats) {
      Mat sd(window, cfg.step_dense_dim);
      for (Eigen::Index r = 0; r < sd.rows(); ++r)
        for (Eigen::Index c = 0; c < sd.cols(); ++c) sd(r, c) = rng.normal();
      b.step_dense.push_back(std::move(sd));
    }
    b.label_city.push_back(2 + static_cast<int>(rng.uniform_int(
                                   static_cast<std::uint64_t>(city_space - 2))));
    b.label_country.push_back(
        static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(countries))));
  }
  auto n = static_cast<Eigen::Index>(b.size());
  if (cfg.use_bypass) {
    b.user_dense = Mat(n, cfg.user_dense_dim);
    b.user_embedding = Mat(n, cfg.user_embedding_dim);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int c = 0; c < cfg.user_dense_dim; ++c)
        b.user_dense(i, c) = rng.normal();
      for (int c = 0; c < cfg.user_embedding_dim; ++c)
        b.user_embedding(i, c) = rng.normal();
      b.device_ids.push_back(static_cast<int>(
          rng.uniform_int(static_cast<std::uint64_t>(cfg.device_vocab_size))));
      b.booker_ids.push_back(static_cast<int>(
          rng.uniform_int(static_cast<std::uint64_t>(cfg.booker_vocab_size))));
    }
  }
  return b;
}

// Trip sequences as vocabulary ids, without any dense features attached.
std::vector<augment::TripSample> id_samples(const data::TripDataset& ds,
                                            const data::Vocabulary& vocab) {
  std::vector<augment::TripSample> out;
  for (const auto& trip : ds.trips) {
    augment::TripSample ts;
    ts.trip_id = trip.trip_id;
    ts.start_month = trip.start_month();
    for (const auto& r : trip.reservations) {
      ts.cities.push_back(vocab.city_id(r.city_id));
      ts.countries.push_back(vocab.country_id(r.country_id));
      ts.durations.push_back(static_cast<int>(r.stay_days()));
    }
    out.push_back(std::move(ts));
  }
  return out;
}

// Evaluation outcomes of the desk-scale ordering run, reused by the
// pad/mask-hygiene sweep.
struct OrderingCorpus {
  std::vector<eval::MetricsReport> reports;
  std::string pad_name;
  std::string mask_name;
  bool ran = false;
};
OrderingCorpus g_corpus;

double median3(double a, double b, double c) {
  std::vector<double> v{a, b, c};
  std::sort(v.begin(), v.end());
  return v[1];
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("1: focal loss matches independent closed forms") {
  Stopwatch watch;
  Rng rng(101);
  const int rows = 1000, classes = 17;
  Mat probs(rows, classes);
  std::vector<int> targets;
  for (int i = 0; i < rows; ++i) {
    double sum = 0.0;
    for (int c = 0; c < classes; ++c) {
      probs(i, c) = rng.uniform() + 1e-3;  // keep every class well above 0
      sum += probs(i, c);
    }
    probs.row(i) /= sum;
    targets.push_back(static_cast<int>(rng.uniform_int(classes)));
  }

  // gamma=0, alpha=1 must collapse to plain categorical cross-entropy
  double lib = losses::focal_loss(probs, targets, {1.0, 0.0});
  double mine = 0.0;
  for (int i = 0; i < rows; ++i) mine -= std::log(probs(i, targets[i]));
  mine /= rows;
  bool ce_ok = std::abs(lib - mine) < 1e-9;

  // point value: -1 * (1-0.5)^3 * ln(0.5)
  Mat half(1, 2);
  half << 0.5, 0.5;
  double point = losses::focal_loss(half, {0}, {1.0, 3.0});
  bool point_ok = std::abs(point - 0.08664339756999316) <= 1e-6;

  bool ok = ce_ok && point_ok;
  report(1, ok,
         "focal(gamma=0,alpha=1) == cross-entropy on 1000 simplex rows; "
         "FL(0.5;1,3) == 0.0866434 +/- 1e-6",
         watch.seconds());
  CHECK(ce_ok);
  CHECK(point_ok);
}

TEST_CASE("2: analytic gradients of the full model match finite differences") {
  Stopwatch watch;
  model::NarmConfig cfg = model::NarmConfig::for_variant("narm_v2");
  cfg.hidden = 8;
  cfg.city_dim = 8;
  cfg.month_dim = 4;
  cfg.duration_dim = 4;
  cfg.cat_dim = 4;
  cfg.dropout = 0.0;
  cfg.step_dense_dim = 4;
  cfg.user_dense_dim = 4;
  cfg.user_embedding_dim = 4;
  cfg.device_vocab_size = 3;
  cfg.booker_vocab_size = 3;

  const int city_space = 20, countries = 5;
  model::NarmModel m(cfg, city_space, countries, 2024);
  model::Batch b = make_batch(cfg, city_space, countries,
                              {{3, 5, 2}, {4, 2}, {7}, {2, 9, 11, 13, 17}}, 5,
                              41);
  losses::CombinedParams lp;  // beta 0.5, focal gamma 3, alpha 1

  auto loss_value = [&]() {
    nn::Graph g;
    return m.training_loss(g, b, lp)->val()(0, 0);
  };
  m.params().zero_grads();
  {
    nn::Graph g;
    g.backward(m.training_loss(g, b, lp));
  }

  const double eps = 1e-5;
  double worst = 0.0;
  std::string worst_param;
  bool ok = true;
  for (nn::Param* p : m.params().all()) {
    double tensor_worst = 0.0;
    for (Eigen::Index r = 0; r < p->value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p->value.cols(); ++c) {
        double orig = p->value(r, c);
        p->value(r, c) = orig + eps;
        double up = loss_value();
        p->value(r, c) = orig - eps;
        double down = loss_value();
        p->value(r, c) = orig;
        double num = (up - down) / (2.0 * eps);
        double ana = p->grad(r, c);
        double rel = std::abs(num - ana) /
                     std::max({std::abs(num), std::abs(ana), 1e-6});
        tensor_worst = std::max(tensor_worst, rel);
      }
    }
    if (tensor_worst > worst) {
      worst = tensor_worst;
      worst_param = p->name;
    }
    if (tensor_worst >= 1e-3) ok = false;  // per-tensor ceiling
  }
  report(2, ok,
         "central differences within 1e-3 for every tensor (worst " +
             fmt(worst) + " in " + worst_param + ")",
         watch.seconds());
  CHECK(ok);
}

TEST_CASE("3: top-k accuracy agrees with brute-force membership") {
  Stopwatch watch;
  Rng rng(303);
  std::vector<std::string> pool;
  for (int i = 0; i < 40; ++i) pool.push_back("city_" + std::to_string(i));

  int mismatches = 0;
  for (int iter = 0; iter < 1000; ++iter) {
    int k = 1 + static_cast<int>(rng.uniform_int(8));
    int m = 1 + static_cast<int>(rng.uniform_int(10));
    std::vector<int> idx(pool.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    rng.shuffle(idx);
    std::vector<std::string> ranked;
    for (int i = 0; i < m; ++i) ranked.push_back(pool[idx[i]]);
    std::string truth = rng.uniform() < 0.5
                            ? ranked[rng.uniform_int(
                                  static_cast<std::uint64_t>(m))]
                            : "elsewhere_" + std::to_string(iter);
    int brute = 0;
    for (int i = 0; i < std::min(k, m); ++i)
      if (ranked[static_cast<std::size_t>(i)] == truth) brute = 1;
    if (eval::accuracy_at_k(ranked, truth, k) != brute) ++mismatches;
  }
  bool ok = mismatches == 0;
  report(3, ok, "1000 randomized (ranking, truth) pairs, exact agreement",
         watch.seconds());
  CHECK(ok);
}

TEST_CASE("4: baseline similarity and popularity match brute-force oracles") {
  Stopwatch watch;
  data::SyntheticConfig world;
  world.n_users = 40;
  world.n_trips = 50;
  world.n_cities = 20;
  world.n_countries = 2;
  data::TripDataset ds = data::generate_synthetic(world, 404);
  REQUIRE(ds.trips.size() == 50);

  // brute-force binary incidence: city -> set of trips containing it
  std::map<std::string, std::set<std::string>> incidence;
  for (const auto& t : ds.trips)
    for (const auto& r : t.reservations) incidence[r.city_id].insert(t.trip_id);
  auto brute_cos = [&](const std::string& a, const std::string& b) {
    const auto& sa = incidence.at(a);
    const auto& sb = incidence.at(b);
    long co = 0;
    for (const auto& t : sa) co += sb.count(t) ? 1 : 0;
    if (co == 0) return 0.0;
    return static_cast<double>(co) /
           std::sqrt(static_cast<double>(sa.size()) *
                     static_cast<double>(sb.size()));
  };

  auto index = baselines::SimilarityIndex::fit(ds, 19);  // full neighbor lists
  bool sim_ok = true;
  for (const auto& [a, _sa] : incidence) {
    std::map<std::string, double> expect;
    for (const auto& [b, _sb] : incidence) {
      if (a == b) continue;
      double s = brute_cos(a, b);
      if (s > 0.0) expect[b] = s;
    }
    const auto& got = index.neighbors(a);
    if (got.size() != expect.size()) sim_ok = false;
    double prev = 2.0;
    for (const auto& nb : got) {
      auto it = expect.find(nb.city);
      if (it == expect.end() || std::abs(it->second - nb.score) > 1e-9)
        sim_ok = false;
      if (nb.score > prev + 1e-12) sim_ok = false;  // sorted descending
      prev = nb.score;
    }
    for (const auto& [b, s] : expect)
      if (std::abs(index.similarity(a, b) - s) > 1e-9 ||
          std::abs(index.similarity(b, a) - s) > 1e-9)
        sim_ok = false;
  }

  // popularity counts cover every reservation
  std::map<std::string, std::map<std::string, long>> tally;
  for (const auto& t : ds.trips)
    for (const auto& r : t.reservations) ++tally[r.country_id][r.city_id];
  auto pop = baselines::CountryPopularity::fit(ds);
  bool pop_ok = true;
  for (const auto& [country, cities] : tally)
    for (const auto& [city, n] : cities)
      if (pop.count(country, city) != n) pop_ok = false;
  if (pop.count("no_such_country", "no_such_city") != 0) pop_ok = false;

  bool ok = sim_ok && pop_ok;
  report(4, ok,
         "20-city/50-trip cosine matrix within 1e-9; reservation tallies exact",
         watch.seconds());
  CHECK(sim_ok);
  CHECK(pop_ok);
}

TEST_CASE("5: augmentation produces exactly the documented samples") {
  Stopwatch watch;
  data::SyntheticConfig world;
  world.n_users = 80;
  world.n_trips = 100;
  world.n_cities = 30;
  world.n_countries = 3;
  data::TripDataset ds = data::generate_synthetic(world, 505);
  REQUIRE(ds.trips.size() == 100);
  data::Vocabulary vocab = data::build_vocab(ds);
  auto trips = id_samples(ds, vocab);

  // prefix expansion: n-1 samples per trip, labels = the followed city
  std::size_t expected = 0;
  bool expand_ok = true;
  for (const auto& ts : trips) {
    expected += ts.cities.size() - 1;
    auto prefixes = augment::expand_prefixes(ts);
    if (prefixes.size() != ts.cities.size() - 1) expand_ok = false;
    for (std::size_t k = 1; k < ts.cities.size(); ++k) {
      const auto& s = prefixes[k - 1];
      if (s.prefix.size() != k || s.label_city != ts.cities[k] ||
          s.label_country != ts.countries[k])
        expand_ok = false;
      for (std::size_t t = 0; t < k; ++t)
        if (s.prefix[t] != ts.cities[t] || s.durations[t] != ts.durations[t])
          expand_ok = false;
    }
  }

  auto sim = baselines::SimilarityIndex::fit(ds, 5);
  const int kMask = data::Vocabulary::kMaskId;
  auto run = [&](double pd, double pm, double ps, double pn) {
    augment::PerturbationPolicy pol;
    pol.p_drop = pd;
    pol.p_mask = pm;
    pol.p_substitute = ps;
    pol.p_none = pn;
    pol.substitute_top_k = 5;
    pol.seed = 55;
    return augment::augment_dataset(trips, pol, sim, vocab, 2, 7);
  };

  auto base = run(0, 0, 0, 1);
  bool count_ok = base.size() == expected;

  // identity policy returns the untouched expansion
  bool none_ok = true;
  std::size_t i = 0;
  for (const auto& ts : trips)
    for (std::size_t k = 1; k < ts.cities.size(); ++k, ++i)
      if (base[i].prefix != std::vector<int>(ts.cities.begin(),
                                             ts.cities.begin() +
                                                 static_cast<long>(k)))
        none_ok = false;

  auto dropped = run(1, 0, 0, 0);
  bool drop_ok = dropped.size() == expected;
  for (std::size_t s = 0; s < dropped.size() && drop_ok; ++s) {
    const auto& o = base[s];
    const auto& d = dropped[s];
    if (d.label_city != o.label_city || d.label_country != o.label_country)
      drop_ok = false;
    if (o.prefix.size() == 1) {
      // too short to drop: the single city is masked instead
      if (d.prefix != std::vector<int>{kMask} || d.durations != o.durations)
        drop_ok = false;
      continue;
    }
    if (d.prefix.size() != o.prefix.size() - 1) drop_ok = false;
    bool consistent = false;  // some position p was removed from both arrays
    for (std::size_t p = 0; p < o.prefix.size() && !consistent; ++p) {
      bool match = true;
      for (std::size_t t = 0; t < d.prefix.size(); ++t) {
        std::size_t src = t < p ? t : t + 1;
        if (d.prefix[t] != o.prefix[src] || d.durations[t] != o.durations[src])
          match = false;
      }
      consistent = match;
    }
    if (!consistent) drop_ok = false;
  }

  auto masked = run(0, 1, 0, 0);
  bool mask_ok = masked.size() == expected;
  for (std::size_t s = 0; s < masked.size() && mask_ok; ++s) {
    const auto& o = base[s];
    const auto& m = masked[s];
    if (m.prefix.size() != o.prefix.size() || m.durations != o.durations ||
        m.label_city != o.label_city || m.label_country != o.label_country)
      mask_ok = false;
    int changed = 0;
    for (std::size_t t = 0; t < m.prefix.size(); ++t)
      if (m.prefix[t] != o.prefix[t]) {
        ++changed;
        if (m.prefix[t] != kMask) mask_ok = false;
      }
    if (changed != 1) mask_ok = false;
  }

  auto substituted = run(0, 0, 1, 0);
  bool sub_ok = substituted.size() == expected;
  for (std::size_t s = 0; s < substituted.size() && sub_ok; ++s) {
    const auto& o = base[s];
    const auto& u = substituted[s];
    if (u.prefix.size() != o.prefix.size() || u.durations != o.durations ||
        u.label_city != o.label_city || u.label_country != o.label_country)
      sub_ok = false;
    int changed = 0;
    for (std::size_t t = 0; t < u.prefix.size(); ++t)
      if (u.prefix[t] != o.prefix[t]) {
        ++changed;
        bool real = u.prefix[t] >= 2 && u.prefix[t] < vocab.city_space();
        if (!real && u.prefix[t] != kMask) sub_ok = false;
        if (real) {
          // must be one of the original city's nearest neighbors
          const auto& nbs = sim.neighbors(vocab.id_to_city[static_cast<std::size_t>(
              o.prefix[t])]);
          bool found = false;
          for (std::size_t q = 0; q < nbs.size() && q < 5; ++q)
            if (vocab.city_id(nbs[q].city) == u.prefix[t]) found = true;
          if (!found) sub_ok = false;
        }
      }
    if (changed != 1) sub_ok = false;
  }

  bool ok = expand_ok && count_ok && none_ok && drop_ok && mask_ok && sub_ok;
  report(5, ok,
         "prefix count == sum(len-1) == " + std::to_string(expected) +
             "; drop/mask/substitute verified on every sample",
         watch.seconds());
  CHECK(expand_ok);
  CHECK(count_ok);
  CHECK(none_ok);
  CHECK(drop_ok);
  CHECK(mask_ok);
  CHECK(sub_ok);
}

TEST_CASE("6: the full variant memorizes 64 samples over 50 cities") {
  Stopwatch watch;
  model::NarmConfig cfg = model::NarmConfig::for_variant("narm_v2");
  cfg.hidden = 64;
  cfg.city_dim = 32;
  cfg.month_dim = 8;
  cfg.duration_dim = 8;
  cfg.cat_dim = 8;
  cfg.dropout = 0.0;
  cfg.step_dense_dim = 4;
  cfg.user_dense_dim = 4;
  cfg.user_embedding_dim = 4;
  cfg.device_vocab_size = 3;
  cfg.booker_vocab_size = 3;

  const int city_space = 52;  // 50 real cities plus pad and mask
  Rng feat_rng(606);
  std::vector<augment::PrefixSample> samples;
  for (int i = 0; i < 64; ++i) {
    augment::PrefixSample s;
    s.trip_id = "s" + std::to_string(i);
    s.prefix = {2 + i % 50, 2 + (i / 8) % 50};  // distinct pairs
    s.durations = {1 + i % 7, 1 + (i * 3) % 7};
    s.start_month = 1 + i % 12;
    s.label_city = 2 + (i * 29 + 11) % 50;
    s.label_country = i % 5;
    for (std::size_t t = 0; t < s.prefix.size(); ++t)
      s.step_dense.push_back(Eigen::RowVectorXd::Constant(
          4, 0.1 * static_cast<double>(i % 9) + static_cast<double>(t)));
    s.user_dense = Eigen::RowVectorXd(4);
    s.user_embedding = Eigen::RowVectorXd(4);
    for (int c = 0; c < 4; ++c) {
      s.user_dense(c) = feat_rng.normal();
      s.user_embedding(c) = feat_rng.normal();
    }
    s.device_id = i % 3;
    s.booker_id = (i / 3) % 3;
    samples.push_back(std::move(s));
  }

  model::NarmModel m(cfg, city_space, 5, 660);
  train::TrainConfig tc;
  tc.learning_rate = 0.01;
  tc.weight_decay = 0.0;
  tc.batch_size = 16;
  tc.history_window = 4;
  tc.early_stop_patience = 200;
  tc.max_epochs = 200;
  tc.seed = 66;
  tc.loss = "focal";

  auto res = train::train_model(
      m, [&](std::uint64_t) { return samples; }, samples, tc);
  double final_acc =
      train::acc_at_4_on_samples(m, samples, tc.history_window, tc.batch_size);
  bool ok = !res.diverged && res.best_val_acc4 == 1.0 && final_acc == 1.0;
  report(6, ok,
         "training Acc@4 reached " + fmt(final_acc) + " (best epoch " +
             std::to_string(res.best_epoch) + " of <= 200)",
         watch.seconds());
  CHECK(ok);
}

TEST_CASE("7: desk-scale ordering on the default synthetic world") {
  Stopwatch watch;

  // the stock world: 20k trips, 200 cities, 10 countries, route strength 0.9,
  // seasonality 0.5, generation seed 13 — prepared exactly like the CLI does
  data::SyntheticConfig world;
  const std::uint64_t data_seed = 13;
  data::TripDataset ds = data::generate_synthetic(world, data_seed);
  auto [train_full_raw, test] = data::split_by_trip(
      ds, 0.8, seed_stream({data_seed, fnv1a("split_train_test")}));
  data::TripDataset train_full = data::filter_trips(train_full_raw, 4, 10, 22);
  auto [train, valid] = data::split_by_trip(
      train_full, 0.9, seed_stream({data_seed, fnv1a("split_train_valid")}));
  data::Vocabulary vocab = data::build_vocab(train_full);
  g_corpus.pad_name = vocab.id_to_city[0];
  g_corpus.mask_name = vocab.id_to_city[1];

  auto pop = baselines::CountryPopularity::fit(train_full);
  eval::PopularityRecommender pop_rec(pop);
  eval::MetricsReport pop_report = eval::evaluate(pop_rec, test, 4);
  double pop_acc = pop_report.acc_at_4;
  g_corpus.reports.push_back(pop_report);

  features::FeatureConfig fcfg;
  features::UserEncoder::Options ae;
  ae.latent_dim = 32;
  ae.hidden_dim = 48;
  ae.max_epochs = 60;
  ae.patience = 10;

  auto base_dims = [](model::NarmConfig& c) {
    c.hidden = 64;
    c.city_dim = 40;
    c.month_dim = 12;
    c.duration_dim = 12;
    c.cat_dim = 16;
    c.dropout = 0.25;
  };
  train::TrainConfig base_tc;
  base_tc.batch_size = 128;
  base_tc.history_window = 10;

  std::vector<double> narm_accs, v2_accs;
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    {
      // sequence-only variant: trains on final transitions alone
      model::NarmConfig mcfg = model::NarmConfig::for_variant("narm");
      base_dims(mcfg);
      auto pipeline =
          features::FeaturePipeline::fit(train, vocab, fcfg, seed, false);
      auto train_trips = pipeline.featurize(train, vocab);
      auto valid_samples =
          train::final_transitions(pipeline.featurize(valid, vocab));
      auto fixed = train::final_transitions(train_trips);
      model::NarmModel m(mcfg, vocab.city_space(), vocab.country_count(), seed);
      train::TrainConfig tc = base_tc;
      tc.seed = seed;
      tc.loss = "cross_entropy";
      tc.max_epochs = 30;
      tc.early_stop_patience = 30;
      auto res = train::train_model(
          m, [&](std::uint64_t) { return fixed; }, valid_samples, tc);
      REQUIRE_FALSE(res.diverged);
      eval::NarmRecommender rec("narm", m, pipeline, vocab,
                                tc.history_window);
      eval::MetricsReport rep = eval::evaluate(rec, test, 4);
      narm_accs.push_back(rep.acc_at_4);
      g_corpus.reports.push_back(std::move(rep));
    }
    {
      // full variant: dense features, attention pre-layer, augmentation
      model::NarmConfig mcfg = model::NarmConfig::for_variant("narm_v2");
      base_dims(mcfg);
      auto pipeline =
          features::FeaturePipeline::fit(train, vocab, fcfg, seed, true, ae);
      mcfg.step_dense_dim =
          static_cast<int>(features::step_feature_names(fcfg).size());
      mcfg.user_dense_dim =
          static_cast<int>(features::user_feature_names(fcfg).size());
      mcfg.user_embedding_dim = pipeline.encoder().latent_dim();
      mcfg.device_vocab_size = pipeline.device_vocab().size();
      mcfg.booker_vocab_size = pipeline.booker_vocab().size();
      auto train_trips = pipeline.featurize(train, vocab);
      auto valid_samples =
          train::final_transitions(pipeline.featurize(valid, vocab));
      auto sim = baselines::SimilarityIndex::fit(train, 10);
      augment::PerturbationPolicy policy;
      policy.seed = seed;
      model::NarmModel m(mcfg, vocab.city_space(), vocab.country_count(), seed);
      train::TrainConfig tc = base_tc;
      tc.seed = seed;
      tc.loss = "focal";
      tc.max_epochs = 12;
      tc.early_stop_patience = 12;
      auto res = train::train_model(
          m,
          [&](std::uint64_t epoch) {
            return augment::augment_dataset(train_trips, policy, sim, vocab, 4,
                                            epoch);
          },
          valid_samples, tc);
      REQUIRE_FALSE(res.diverged);
      eval::NarmRecommender rec("narm_v2", m, pipeline, vocab,
                                tc.history_window);
      eval::MetricsReport rep = eval::evaluate(rec, test, 4);
      v2_accs.push_back(rep.acc_at_4);
      g_corpus.reports.push_back(std::move(rep));
    }
  }
  g_corpus.ran = true;

  double narm_med = median3(narm_accs[0], narm_accs[1], narm_accs[2]);
  double v2_med = median3(v2_accs[0], v2_accs[1], v2_accs[2]);
  bool pop_below = pop_acc < narm_med;
  bool v2_at_least = narm_med <= v2_med;
  bool margin = v2_med >= pop_acc + 0.05;
  bool ok = pop_below && v2_at_least && margin;
  report(7, ok,
         "median Acc@4: popularity " + fmt(pop_acc) + " < narm " +
             fmt(narm_med) + " <= narm_v2 " + fmt(v2_med) +
             " (margin >= 0.05 over popularity)",
         watch.seconds());
  CHECK(pop_below);
  CHECK(v2_at_least);
  CHECK(margin);
}

TEST_CASE("8: pad and mask stay out of rankings; attention ignores padding") {
  Stopwatch watch;

  bool corpus_ok = g_corpus.ran && !g_corpus.reports.empty();
  long scanned = 0;
  for (const auto& rep : g_corpus.reports)
    for (const auto& rec : rep.records)
      for (const auto& name : rec.top) {
        ++scanned;
        if (name == g_corpus.pad_name || name == g_corpus.mask_name)
          corpus_ok = false;
      }

  // appending pad positions must not change the attended real rows
  model::NarmConfig cfg = model::NarmConfig::for_variant("narm_v2");
  cfg.hidden = 8;
  cfg.city_dim = 8;
  cfg.month_dim = 4;
  cfg.duration_dim = 4;
  cfg.cat_dim = 4;
  cfg.dropout = 0.0;
  cfg.step_dense_dim = 4;
  cfg.user_dense_dim = 4;
  cfg.user_embedding_dim = 4;
  cfg.device_vocab_size = 3;
  cfg.booker_vocab_size = 3;
  model::NarmModel m(cfg, 30, 3, 88);

  Rng rng(808);
  double worst = 0.0;
  for (int iter = 0; iter < 100; ++iter) {
    int len = 1 + static_cast<int>(rng.uniform_int(6));
    std::vector<int> prefix, durs;
    for (int t = 0; t < len; ++t) {
      prefix.push_back(2 + static_cast<int>(rng.uniform_int(28)));
      durs.push_back(1 + static_cast<int>(rng.uniform_int(9)));
    }
    int month = 1 + static_cast<int>(rng.uniform_int(12));
    Mat dense(len, 4);
    for (Eigen::Index r = 0; r < dense.rows(); ++r)
      for (Eigen::Index c = 0; c < dense.cols(); ++c)
        dense(r, c) = rng.normal();
    Mat steps = m.embed_steps(prefix, durs, month, &dense);

    Mat base = m.self_attend(steps, std::vector<bool>(prefix.size(), true));
    int extra = 1 + static_cast<int>(rng.uniform_int(4));
    Mat padded = Mat::Zero(len + extra, steps.cols());
    padded.topRows(len) = steps;
    std::vector<bool> valid(static_cast<std::size_t>(len + extra), false);
    for (int t = 0; t < len; ++t) valid[static_cast<std::size_t>(t)] = true;
    Mat att = m.self_attend(padded, valid);
    worst = std::max(worst,
                     (att.topRows(len) - base).cwiseAbs().maxCoeff());
  }
  bool fuzz_ok = worst < 1e-5;

  bool ok = corpus_ok && fuzz_ok;
  report(8, ok,
         std::to_string(scanned) +
             " ranked entries free of pad/mask; pad-extension drift " +
             fmt(worst) + " < 1e-5 over 100 sequences",
         watch.seconds());
  CHECK(corpus_ok);
  CHECK(fuzz_ok);
}

TEST_CASE("9: a manifest replays to a byte-identical metrics file") {
  Stopwatch watch;
  namespace fs = std::filesystem;
  auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
  fs::path root = fs::temp_directory_path() /
                  ("acc_replay_" + std::to_string(stamp));
  fs::path dir1 = root / "first", dir2 = root / "second";

  nlohmann::json doc = {
      {"data",
       {{"seed", 21},
        {"synthetic",
         {{"n_users", 60}, {"n_trips", 200}, {"n_cities", 12},
          {"n_countries", 2}}}}},
      {"model",
       {{"variant", "narm_v2"}, {"hidden", 16}, {"city_dim", 8},
        {"month_dim", 4}, {"duration_dim", 4}, {"cat_dim", 4},
        {"dropout", 0.1}}},
      {"training", {{"max_epochs", 3}, {"batch_size", 32}}},
      {"features",
       {{"autoencoder",
         {{"latent_dim", 4}, {"hidden_dim", 8}, {"max_epochs", 20},
          {"patience", 20}}}}}};

  cli::RunConfig cfg = cli::RunConfig::from_json(doc);
  setenv("REC_LAB_OUT", dir1.string().c_str(), 1);
  cli::cmd_train(cfg);

  nlohmann::json manifest;
  {
    std::ifstream in(dir1 / "run_manifest.json");
    in >> manifest;
  }
  cli::RunConfig replay = cli::RunConfig::from_json(manifest.at("config"));
  setenv("REC_LAB_OUT", dir2.string().c_str(), 1);
  cli::cmd_train(replay);
  unsetenv("REC_LAB_OUT");

  std::string first = read_file(dir1 / "metrics.jsonl");
  std::string second = read_file(dir2 / "metrics.jsonl");
  bool ok = !first.empty() && first == second;
  report(9, ok,
         "rerun from run_manifest.json reproduced metrics.jsonl (" +
             std::to_string(first.size()) + " bytes)",
         watch.seconds());
  CHECK(!first.empty());
  CHECK(first == second);
  fs::remove_all(root);
}

TEST_CASE("10: the user autoencoder beats the column-mean baseline") {
  Stopwatch watch;
  data::SyntheticConfig world;
  world.n_users = 500;
  world.n_trips = 500;
  data::TripDataset ds = data::generate_synthetic(world, 1001);
  data::Vocabulary vocab = data::build_vocab(ds);
  features::FeatureConfig fcfg;
  auto pipeline = features::FeaturePipeline::fit(ds, vocab, fcfg, 1, false);
  Mat raw = pipeline.user_matrix(ds);
  REQUIRE(raw.rows() == 500);

  Rng rng(1002);
  std::vector<int> order(static_cast<std::size_t>(raw.rows()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  rng.shuffle(order);
  const int n_hold = 50;
  Mat train_rows(raw.rows() - n_hold, raw.cols());
  Mat hold_rows(n_hold, raw.cols());
  for (Eigen::Index i = 0; i < train_rows.rows(); ++i)
    train_rows.row(i) = raw.row(order[static_cast<std::size_t>(i)]);
  for (Eigen::Index i = 0; i < n_hold; ++i)
    hold_rows.row(i) = raw.row(
        order[static_cast<std::size_t>(train_rows.rows() + i)]);

  auto norm = features::NormalizationStats::fit(train_rows);
  Mat ntrain = norm.apply(train_rows);
  Mat nhold = norm.apply(hold_rows);

  features::UserEncoder::Options opt;  // stock options, latent width 100
  auto enc = features::UserEncoder::train(ntrain, opt, 1003);
  bool latent_ok = enc.latent_dim() == 100;

  Mat recon = enc.reconstruct(nhold);
  double mse = (recon - nhold).squaredNorm() /
               static_cast<double>(nhold.size());
  double baseline = features::column_mean_baseline_mse(ntrain, nhold);
  bool beats = mse < baseline;

  bool ok = latent_ok && beats;
  report(10, ok,
         "latent width " + std::to_string(enc.latent_dim()) +
             "; held-out MSE " + fmt(mse) + " < column-mean " + fmt(baseline),
         watch.seconds());
  CHECK(latent_ok);
  CHECK(beats);
}
