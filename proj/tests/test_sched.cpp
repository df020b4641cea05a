#include <algorithm>
#include <map>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "tiesched/rng.hpp"
#include "tiesched/sched.hpp"

using namespace tie;

namespace {

Request arrival(uint64_t id, double t, uint32_t max_tokens = 2048) {
  Request r;
  r.id = id;
  r.arrival_s = t;
  r.prompt_tokens = 100;
  r.true_output_tokens = 10;
  r.max_tokens = max_tokens;
  return r;
}

ScoreConfig fixed_beta(double b) {
  ScoreConfig cfg;
  cfg.beta_mode = BetaMode::Fixed;
  cfg.beta_fixed = b;
  return cfg;
}

}  // namespace

TEST_CASE("compute_beta: fixed and linear-clamp policies") {
  ScoreConfig f = fixed_beta(0.3);
  for (size_t q : {0u, 5u, 1000000u}) CHECK(compute_beta(f, q) == 0.3);

  ScoreConfig a;
  a.beta_mode = BetaMode::AdaptiveLinear;
  a.beta_max = 0.5;
  a.q_sat = 128.0;
  CHECK(compute_beta(a, 0) == 0.0);
  CHECK(compute_beta(a, 64) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(compute_beta(a, 128) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(compute_beta(a, 1000000) == 0.5);

  double prev = -1.0;
  for (size_t q = 0; q <= 300; q += 7) {
    double b = compute_beta(a, q);
    CHECK(b >= prev);
    prev = b;
  }

  ScoreConfig bad = fixed_beta(-0.1);
  CHECK_THROWS_AS(compute_beta(bad, 1), std::domain_error);
  bad = a;
  bad.q_sat = 0.0;
  CHECK_THROWS_AS(compute_beta(bad, 1), std::domain_error);
}

TEST_CASE("compute_score: arithmetic and invariant checks") {
  CHECK(compute_score(100.0, 400.0, 0.3) == doctest::Approx(220.0).epsilon(1e-15));
  CHECK(compute_score(123.0, 456.0, 0.0) == 123.0);

  // zero-uncertainty entries order by length for any beta
  std::vector<double> lens = {80.0, 5.0, 10.0, 300.0};
  for (double beta : {0.0, 0.3, 0.7, 5.0}) {
    std::vector<double> scores;
    for (double L : lens) scores.push_back(compute_score(L, L, beta));
    size_t amin = std::min_element(scores.begin(), scores.end()) - scores.begin();
    CHECK(amin == 1);
    CHECK(std::is_sorted(scores.begin(), scores.end()) ==
          std::is_sorted(lens.begin(), lens.end()));
  }

  CHECK_THROWS_AS(compute_score(200.0, 100.0, 0.3), std::invalid_argument);
  CHECK_THROWS_AS(compute_score(0.0, 100.0, 0.3), std::domain_error);
  CHECK_THROWS_AS(compute_score(1.0, 1.0 / 0.0, 0.3), std::domain_error);
}

TEST_CASE("waiting queue: push/pop ordering and validation") {
  WaitingQueue q;
  CHECK(!q.pop_min().has_value());

  for (auto [id, key] : std::vector<std::pair<uint64_t, double>>{{1, 5.0}, {2, 3.0}, {3, 9.0}}) {
    QueueEntry e;
    e.req_id = id;
    e.key = key;
    q.push(e);
    CHECK(q.validate());
  }
  auto top = q.pop_min();
  REQUIRE(top.has_value());
  CHECK(top->key == 3.0);
  CHECK(top->req_id == 2);

  // heapsort property over random keys
  WaitingQueue h;
  Rng rng(404);
  for (uint64_t id = 0; id < 100; ++id) {
    QueueEntry e;
    e.req_id = id;
    e.key = rng.uniform(0.0, 1000.0);
    h.push(e);
  }
  CHECK(h.validate());
  double prev = -1.0;
  while (auto e = h.pop_min()) {
    CHECK(e->key >= prev);
    prev = e->key;
  }

  QueueEntry dup;
  dup.req_id = 50;
  dup.key = 1.0;
  q.push(dup);
  CHECK_THROWS_AS(q.push(dup), std::invalid_argument);
  CHECK_THROWS_AS(q.update(777, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(q.at(777), std::invalid_argument);
  dup.req_id = 99;
  dup.key = 1.0 / 0.0;
  CHECK_THROWS_AS(q.push(dup), std::domain_error);
}

TEST_CASE("waiting queue: equal keys break ties by id") {
  WaitingQueue q;
  for (uint64_t id : {7, 2, 9, 4, 0}) {
    QueueEntry e;
    e.req_id = id;
    e.key = 2048.0;
    q.push(e);
  }
  std::vector<uint64_t> order;
  while (auto e = q.pop_min()) order.push_back(e->req_id);
  CHECK(order == std::vector<uint64_t>{0, 2, 4, 7, 9});
}

TEST_CASE("waiting queue: decrease-key surfaces the entry") {
  WaitingQueue q;
  for (uint64_t id = 0; id < 10; ++id) {
    QueueEntry e;
    e.req_id = id;
    e.key = 1000.0 + (double)id;
    q.push(e);
  }
  q.update(7, 1.0);
  CHECK(q.validate());
  CHECK(q.at(7).key == 1.0);
  auto e = q.pop_min();
  REQUIRE(e.has_value());
  CHECK(e->req_id == 7);

  q.update(3, 5000.0);  // increase-key sifts the other way
  CHECK(q.validate());
  std::vector<uint64_t> rest;
  while (auto r = q.pop_min()) rest.push_back(r->req_id);
  CHECK(rest.back() == 3);
}

TEST_CASE("waiting queue: randomized interleaving mirrors an ordered map") {
  WaitingQueue q;
  std::map<std::pair<double, uint64_t>, bool> mirror;  // (key, id) -> present
  Rng rng(6060);
  uint64_t next_id = 0;
  std::map<uint64_t, double> key_of;

  for (int op = 0; op < 4000; ++op) {
    double dice = rng.uniform01();
    if (dice < 0.45 || q.empty()) {
      QueueEntry e;
      e.req_id = next_id++;
      e.key = rng.uniform(0.0, 100.0);
      q.push(e);
      mirror[{e.key, e.req_id}] = true;
      key_of[e.req_id] = e.key;
    } else if (dice < 0.7) {
      // re-key a uniformly chosen live entry
      size_t pick = (size_t)rng.uniform_u32(0, (uint32_t)q.size() - 1);
      uint64_t id = q.entries()[pick].req_id;
      double nk = rng.uniform(0.0, 100.0);
      mirror.erase({key_of[id], id});
      q.update(id, nk);
      mirror[{nk, id}] = true;
      key_of[id] = nk;
    } else {
      auto e = q.pop_min();
      REQUIRE(e.has_value());
      auto expect = mirror.begin();
      CHECK(e->key == expect->first.first);
      CHECK(e->req_id == expect->first.second);
      mirror.erase(expect);
      key_of.erase(e->req_id);
    }
    if (op % 50 == 0) CHECK(q.validate());
  }
  CHECK(q.size() == mirror.size());
}

TEST_CASE("scheduler: policy selection semantics") {
  // FCFS pops in arrival order whatever the predictions say
  Scheduler fcfs(Policy::FCFS, fixed_beta(0.3));
  fcfs.on_arrival(arrival(5, 1.0));
  fcfs.on_arrival(arrival(3, 2.0));
  fcfs.on_prediction(5, 5000.0, 6000.0);  // ignored
  CHECK(fcfs.next_request() == 5);
  CHECK(fcfs.next_request() == 3);
  CHECK(!fcfs.next_request().has_value());

  // SEPT keys by expectation alone
  Scheduler sept(Policy::SEPT, fixed_beta(0.3));
  sept.on_arrival(arrival(1, 0.0));
  sept.on_arrival(arrival(2, 0.1));
  sept.on_prediction(1, 100.0, 2000.0);
  sept.on_prediction(2, 120.0, 130.0);
  CHECK(sept.next_request() == 1);

  // TIE at beta>0 deprioritizes the fat-tailed request on equal expectations
  Scheduler tie(Policy::TIE, fixed_beta(0.3));
  tie.on_arrival(arrival(1, 0.0));
  tie.on_arrival(arrival(2, 0.1));
  tie.on_prediction(1, 100.0, 900.0);
  tie.on_prediction(2, 100.0, 200.0);
  CHECK(tie.next_request() == 2);

  // unpredicted entries sink via their max_tokens key
  Scheduler mixed(Policy::TIE, fixed_beta(0.3));
  mixed.on_arrival(arrival(1, 0.0, 2048));
  mixed.on_prediction(1, 100.0, 500.0);  // key 250
  mixed.on_arrival(arrival(2, 0.1, 2048));
  CHECK(mixed.queue().at(2).key == 2048.0);
  CHECK(mixed.next_request() == 1);

  // two unpredicted entries with equal budgets pop FIFO
  Scheduler plain(Policy::TIE, fixed_beta(0.3));
  plain.on_arrival(arrival(9, 0.0, 1024));
  plain.on_arrival(arrival(4, 0.1, 1024));
  CHECK(plain.next_request() == 4);

  CHECK_THROWS_AS(tie.on_prediction(777, 10.0, 20.0), std::invalid_argument);
  Scheduler twice(Policy::TIE, fixed_beta(0.3));
  twice.on_arrival(arrival(1, 0.0));
  twice.on_prediction(1, 10.0, 20.0);
  CHECK_THROWS_AS(twice.on_prediction(1, 11.0, 21.0), std::invalid_argument);
}

TEST_CASE("scheduler: beta drift triggers a rebuild that can flip the order") {
  // adaptive beta 0.5 * min(1, q/4); all predictions land at q=4 (beta .5);
  // after one pop beta drops to .375, drifting past the 0.1 threshold.
  //   X: E=100, CVaR=2000   key(.5) = 1100   key(.375) = 850
  //   Y: E=671, CVaR=671    key(.5) = 1006.5 key(.375) = 922.625
  // so their score lines cross at beta = 571/1329 = 0.4297
  ScoreConfig cfg;
  cfg.beta_mode = BetaMode::AdaptiveLinear;
  cfg.beta_max = 0.5;
  cfg.q_sat = 4.0;
  cfg.rebuild_threshold = 0.1;

  auto build = [&]() {
    Scheduler s(Policy::TIE, cfg);
    for (uint64_t id = 0; id < 4; ++id) s.on_arrival(arrival(id, 0.1 * (double)id));
    s.on_prediction(0, 5.0, 10.0);      // key 10, pops first
    s.on_prediction(1, 100.0, 2000.0);  // X
    s.on_prediction(2, 671.0, 671.0);   // Y
    return s;                           // id 3 stays unpredicted at key 2048
  };

  // explicit rebuild: keys re-derive from beta_now and membership is kept
  Scheduler s = build();
  CHECK(s.next_request() == 0);
  CHECK(s.queue().at(1).key == doctest::Approx(1100.0).epsilon(1e-15));
  CHECK(s.queue().at(2).key == doctest::Approx(1006.5).epsilon(1e-15));
  CHECK(s.rebuild_if_drifted());
  CHECK(s.queue().size() == 3);
  CHECK(s.queue().validate());
  CHECK(s.queue().at(1).key == doctest::Approx(850.0).epsilon(1e-15));
  CHECK(s.queue().at(2).key == doctest::Approx(922.625).epsilon(1e-15));
  CHECK(s.queue().at(3).key == 2048.0);  // unpredicted key untouched
  CHECK(!s.rebuild_if_drifted());        // second call sees no further drift
  CHECK(s.next_request() == 1);          // X surfaced by the rebuild

  // the pop path itself rebuilds when drift exceeds the threshold
  Scheduler auto_s = build();
  CHECK(auto_s.next_request() == 0);
  CHECK(auto_s.next_request() == 1);

  // below the threshold the stale keys stand and Y stays on top
  cfg.rebuild_threshold = 0.2;
  Scheduler stale = build();
  CHECK(stale.next_request() == 0);
  CHECK(!stale.rebuild_if_drifted());  // drift .125 <= threshold .2
  CHECK(stale.queue().at(1).key == doctest::Approx(1100.0).epsilon(1e-15));
  CHECK(stale.next_request() == 2);
}
