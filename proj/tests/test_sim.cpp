#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "tiesched/serialize.hpp"
#include "tiesched/sim.hpp"

using namespace tie;

namespace {

Request req(uint64_t id, double arrival, uint32_t len, uint32_t prompt = 100,
            uint32_t max_tokens = 2048) {
  Request r;
  r.id = id;
  r.arrival_s = arrival;
  r.prompt_tokens = prompt;
  r.true_output_tokens = len;
  r.max_tokens = max_tokens;
  r.true_mu = std::log((double)len);
  r.true_sigma = 1e-9;  // zero-uncertainty truths: E = CVaR = len
  return r;
}

EngineConfig bare_engine(int slots, double c0) {
  EngineConfig e;
  e.batch_slots = slots;
  e.c0 = c0;
  e.c1 = 0.0;
  e.c2 = 0.0;
  return e;
}

PredictorConfig instant_oracle() {
  PredictorConfig p;
  p.kind = PredictorKind::Oracle;
  p.batched = false;  // predictions usable the moment a request arrives
  return p;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  double n = (double)x.size();
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST_CASE("hand trace: single request") {
  std::vector<Request> w = {req(0, 0.0, 10)};
  SimReport r = run_sim(w, Policy::TIE, {}, bare_engine(4, 0.1), instant_oracle(), 1);
  REQUIRE(r.events.size() == 1);
  const RequestEvent& e = r.events[0];
  CHECK(e.admit_s == 0.0);
  CHECK(e.first_token_s == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(e.completion_s == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(e.emitted_tokens == 10);
  CHECK(r.metrics.ttft_avg == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(r.metrics.ttft_p90 == r.metrics.ttft_avg);
  CHECK(r.metrics.ptla_avg == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("hand trace: FCFS head-of-line blocking vs oracle TIE") {
  std::vector<Request> w = {req(0, 0.0, 10), req(1, 0.0, 2)};
  EngineConfig eng = bare_engine(1, 0.1);

  SimReport fcfs = run_sim(w, Policy::FCFS, {}, eng, instant_oracle(), 1);
  CHECK(fcfs.events[0].completion_s == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fcfs.events[1].completion_s == doctest::Approx(1.2).epsilon(1e-12));
  CHECK(fcfs.metrics.ptla_avg == doctest::Approx(0.5 * (0.10 + 0.60)).epsilon(1e-9));

  SimReport tie = run_sim(w, Policy::TIE, {}, eng, instant_oracle(), 1);
  CHECK(tie.events[1].completion_s == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(tie.events[0].completion_s == doctest::Approx(1.2).epsilon(1e-12));
  CHECK(tie.metrics.ptla_avg == doctest::Approx(0.5 * (0.10 + 0.12)).epsilon(1e-9));
}

TEST_CASE("hand trace: max_tokens censors the emission") {
  std::vector<Request> w = {req(0, 0.0, 100, 100, 5)};
  SimReport r = run_sim(w, Policy::FCFS, {}, bare_engine(1, 0.1), instant_oracle(), 1);
  CHECK(r.events[0].emitted_tokens == 5);
  CHECK(r.events[0].completion_s == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("conservation, causality, occupancy, and work conservation") {
  WorkloadSpec spec;
  spec.n_requests = 200;
  spec.rps = 30.0;
  spec.mu_range = {2.0, 3.5};
  spec.sigma_range = {0.5, 1.2};
  spec.max_tokens = 512;
  auto w = gen_logt_workload(spec, 77);

  PredictorConfig pc;
  pc.kind = PredictorKind::Noisy;
  pc.noise = {0.2, 0.1};
  EngineConfig eng;  // defaults: 8 slots
  SimReport r = run_sim(w, Policy::TIE, {}, eng, pc, 99);

  REQUIRE(r.events.size() == w.size());
  uint64_t emitted = 0, expected = 0;
  for (size_t i = 0; i < w.size(); ++i) {
    const RequestEvent& e = r.events[i];
    CHECK(e.req_id == w[i].id);  // both in id order
    CHECK(e.arrival_s <= e.admit_s);
    CHECK(e.admit_s < e.first_token_s);
    CHECK(e.first_token_s <= e.completion_s);
    CHECK(e.emitted_tokens == std::min(w[i].true_output_tokens, w[i].max_tokens));
    emitted += e.emitted_tokens;
    expected += std::min(w[i].true_output_tokens, w[i].max_tokens);
    REQUIRE(e.predict_ready_s.has_value());
    CHECK(*e.predict_ready_s > e.arrival_s);
  }
  CHECK(emitted == expected);

  // sweep the admit/complete boundaries: slots never exceed B, and no request
  // keeps waiting across a boundary that left a slot free
  std::vector<std::pair<double, int>> deltas;
  for (const RequestEvent& e : r.events) {
    deltas.push_back({e.admit_s, +1});
    deltas.push_back({e.completion_s, -1});
  }
  std::sort(deltas.begin(), deltas.end(),
            [](auto& a, auto& b) { return a.first < b.first || (a.first == b.first && a.second < b.second); });
  int occ = 0;
  size_t i = 0;
  while (i < deltas.size()) {
    double t = deltas[i].first;
    while (i < deltas.size() && deltas[i].first == t) occ += deltas[i++].second;
    CHECK(occ <= eng.batch_slots);
    if (occ < eng.batch_slots) {
      int waiting = 0;
      for (const RequestEvent& e : r.events) waiting += e.arrival_s <= t && e.admit_s > t;
      CHECK(waiting == 0);
    }
  }
  CHECK(occ == 0);

  // percentile sanity
  CHECK(r.metrics.ttft_p90 >= r.metrics.ttft_avg * 0.0);
  std::vector<double> ttfts;
  for (const RequestEvent& e : r.events) ttfts.push_back(e.first_token_s - e.arrival_s);
  std::sort(ttfts.begin(), ttfts.end());
  CHECK(r.metrics.ttft_p90 >= ttfts[ttfts.size() / 2]);
}

TEST_CASE("determinism: byte-identical serialization, seed sensitivity") {
  WorkloadSpec spec;
  spec.n_requests = 120;
  spec.rps = 25.0;
  spec.mu_range = {2.0, 3.5};
  auto w = gen_logt_workload(spec, 5);

  PredictorConfig pc;
  pc.kind = PredictorKind::Noisy;
  pc.noise = {0.3, 0.2};
  SimReport a = run_sim(w, Policy::TIE, {}, {}, pc, 11);
  SimReport b = run_sim(w, Policy::TIE, {}, {}, pc, 11);
  CHECK(report_to_json(a, "x").dump() == report_to_json(b, "x").dump());
  CHECK(events_csv(a.events) == events_csv(b.events));

  SimReport c = run_sim(w, Policy::TIE, {}, {}, pc, 12);  // noise reseeded
  CHECK(report_to_json(a, "x").dump() != report_to_json(c, "x").dump());
}

TEST_CASE("predictor None leaves max_tokens keys: degenerates to arrival order") {
  WorkloadSpec spec;
  spec.n_requests = 80;
  spec.rps = 40.0;
  spec.mu_range = {2.0, 3.5};
  auto w = gen_logt_workload(spec, 21);  // equal max_tokens across requests

  PredictorConfig none;
  none.kind = PredictorKind::None;
  SimReport tie = run_sim(w, Policy::TIE, {}, {}, none, 1);
  SimReport fcfs = run_sim(w, Policy::FCFS, {}, {}, none, 1);
  for (size_t i = 0; i < w.size(); ++i) {
    CHECK(tie.events[i].admit_s == fcfs.events[i].admit_s);
    CHECK(tie.events[i].completion_s == fcfs.events[i].completion_s);
    CHECK(!tie.events[i].predict_ready_s.has_value());
  }
}

TEST_CASE("simultaneous zero-uncertainty batch runs shortest-first under TIE and SEPT") {
  std::vector<uint32_t> lens = {40, 7, 23, 4, 55, 12};
  std::vector<Request> w;
  for (uint64_t i = 0; i < lens.size(); ++i) w.push_back(req(i, 0.0, lens[i]));
  EngineConfig eng = bare_engine(1, 0.05);

  for (Policy pol : {Policy::SEPT, Policy::TIE}) {
    SimReport r = run_sim(w, pol, {}, eng, instant_oracle(), 3);
    // completion order == sorted length order
    std::vector<std::pair<double, uint32_t>> completions;
    for (const RequestEvent& e : r.events) completions.push_back({e.completion_s, e.emitted_tokens});
    std::sort(completions.begin(), completions.end());
    std::vector<uint32_t> sorted_lens(lens.begin(), lens.end());
    std::sort(sorted_lens.begin(), sorted_lens.end());
    for (size_t i = 0; i < lens.size(); ++i) CHECK(completions[i].second == sorted_lens[i]);

    // brute-force check: no service permutation beats the SJF mean completion
    std::vector<size_t> perm(lens.size());
    std::iota(perm.begin(), perm.end(), 0);
    double best = 1e300;
    do {
      double t = 0.0, total = 0.0;
      for (size_t k : perm) {
        t += 0.05 * (double)lens[k];
        total += t;
      }
      best = std::min(best, total / (double)lens.size());
    } while (std::next_permutation(perm.begin(), perm.end()));
    double mean_completion = 0.0;
    for (const RequestEvent& e : r.events) mean_completion += e.completion_s;
    mean_completion /= (double)lens.size();
    CHECK(mean_completion == doctest::Approx(best).epsilon(1e-9));
  }
}

TEST_CASE("TIE lifts the completion-vs-length correlation over FCFS") {
  WorkloadSpec spec;
  spec.n_requests = 400;
  spec.rps = 15.0;  // ~1.5x the default engine's drain rate: queues form
  spec.mu_range = {2.0, 3.6};
  spec.sigma_range = {0.5, 1.2};
  spec.max_tokens = 512;
  auto w = gen_logt_workload(spec, 31);

  auto corr_of = [&](Policy pol) {
    SimReport r = run_sim(w, pol, {}, {}, instant_oracle(), 7);
    std::vector<double> comp, len;
    for (const RequestEvent& e : r.events) {
      comp.push_back(e.completion_s);
      len.push_back((double)e.emitted_tokens);
    }
    return pearson(comp, len);
  };
  CHECK(corr_of(Policy::TIE) > corr_of(Policy::FCFS));
}

TEST_CASE("summarize: aggregates and window counters") {
  RequestEvent e{};
  e.req_id = 0;
  e.arrival_s = 0.0;
  e.admit_s = 0.0;
  e.first_token_s = 0.1;
  e.completion_s = 1.0;
  e.emitted_tokens = 9;
  Metrics one = summarize({e}, {}, {});
  CHECK(one.ttft_avg == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(one.ttft_p90 == one.ttft_avg);

  std::vector<RequestEvent> evs;
  for (int i = 1; i <= 10; ++i) {
    RequestEvent v{};
    v.req_id = (uint64_t)i;
    v.first_token_s = 0.05;
    v.completion_s = (double)i;
    v.emitted_tokens = 1;
    evs.push_back(v);
  }
  Metrics m = summarize(evs, {3, 10, 11}, {0.5, 10.0});
  REQUIRE(m.time_at_k.size() == 2);  // k=11 unavailable
  CHECK(m.time_at_k[0].first == 3);
  CHECK(m.time_at_k[0].second == 3.0);
  CHECK(m.time_at_k[1].second == 10.0);
  REQUIRE(m.throughput_at_w.size() == 2);
  CHECK(m.throughput_at_w[0].second == 0);
  CHECK(m.throughput_at_w[1].second == 10);

  CHECK_THROWS_AS(summarize({}, {}, {}), std::invalid_argument);
  RequestEvent bad{};
  bad.emitted_tokens = 0;
  CHECK_THROWS_AS(summarize({bad}, {}, {}), std::invalid_argument);
}

TEST_CASE("heatmap: mass preservation and clipping") {
  RequestEvent e{};
  e.completion_s = 10.0;
  e.emitted_tokens = 100;
  HeatmapSpec spec;
  spec.time_bins = 4;
  spec.len_bins = 4;
  spec.time_max = 40.0;
  spec.len_max = 400.0;
  Heatmap h = heatmap({e}, spec);
  CHECK(h.counts[(size_t)1 * 4 + 1] == 1);
  CHECK(std::accumulate(h.counts.begin(), h.counts.end(), (uint64_t)0) == 1);

  std::vector<RequestEvent> evs;
  for (int i = 0; i < 100; ++i) {
    RequestEvent v{};
    v.completion_s = (double)i * 2.0;  // runs past time_max: clipped
    v.emitted_tokens = (uint32_t)(i * 17 % 700 + 1);
    evs.push_back(v);
  }
  Heatmap hh = heatmap(evs, spec);
  CHECK(std::accumulate(hh.counts.begin(), hh.counts.end(), (uint64_t)0) == evs.size());

  HeatmapSpec bad = spec;
  bad.time_bins = 0;
  CHECK_THROWS_AS(heatmap(evs, bad), std::domain_error);
  bad = spec;
  bad.len_max = 0.0;
  CHECK_THROWS_AS(heatmap(evs, bad), std::domain_error);
}

TEST_CASE("run_sim: input validation") {
  CHECK(run_sim({}, Policy::FCFS, {}, {}, {}, 1).events.empty());

  std::vector<Request> w = {req(0, 0.0, 10)};
  EngineConfig bad;
  bad.batch_slots = 0;
  CHECK_THROWS_AS(run_sim(w, Policy::FCFS, {}, bad, {}, 1), std::domain_error);
  bad = EngineConfig{};
  bad.c0 = 0.0;
  CHECK_THROWS_AS(run_sim(w, Policy::FCFS, {}, bad, {}, 1), std::domain_error);

  std::vector<Request> dup = {req(3, 0.0, 5), req(3, 0.1, 5)};
  CHECK_THROWS_AS(run_sim(dup, Policy::FCFS, {}, {}, {}, 1), std::invalid_argument);
}
