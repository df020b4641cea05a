#include "tiesched/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "tiesched/dist.hpp"

namespace tie {

namespace {

struct StreamEvent {
  double time;
  int kind;  // 0 arrival, 1 prediction ready (arrivals first at equal times)
  uint64_t req_id;

  bool operator<(const StreamEvent& o) const {
    if (time != o.time) return time < o.time;
    if (kind != o.kind) return kind < o.kind;
    return req_id < o.req_id;
  }
};

struct Running {
  uint64_t req_id;
  uint32_t remaining;
  bool awaiting_first_token;
};

struct Scores {
  double expectation;
  double cvar;
};

}  // namespace

SimReport run_sim(const std::vector<Request>& workload, Policy policy,
                  const ScoreConfig& score_cfg, const EngineConfig& engine_cfg,
                  const PredictorConfig& predictor_cfg, uint64_t seed,
                  const std::vector<uint64_t>& ks, const std::vector<double>& ws) {
  if (engine_cfg.batch_slots < 1) throw std::domain_error("run_sim: batch_slots must be >= 1");
  if (!(engine_cfg.c0 > 0.0) || engine_cfg.c1 < 0.0 || engine_cfg.c2 < 0.0)
    throw std::domain_error("run_sim: need c0 > 0 and c1, c2 >= 0");

  SimReport report;
  report.seed = seed;
  report.policy = policy;
  if (workload.empty()) return report;

  std::vector<Request> reqs(workload);
  std::stable_sort(reqs.begin(), reqs.end(), [](const Request& a, const Request& b) {
    return a.arrival_s < b.arrival_s || (a.arrival_s == b.arrival_s && a.id < b.id);
  });
  std::unordered_map<uint64_t, const Request*> by_id;
  for (const Request& r : reqs) {
    if (!(r.arrival_s >= 0.0) || !std::isfinite(r.arrival_s))
      throw std::domain_error("run_sim: arrivals must be finite and >= 0");
    if (r.max_tokens < 1) throw std::domain_error("run_sim: max_tokens must be >= 1");
    if (r.true_output_tokens < 1)
      throw std::domain_error("run_sim: true_output_tokens must be >= 1");
    if (!by_id.emplace(r.id, &r).second)
      throw std::invalid_argument("run_sim: duplicate request id " + std::to_string(r.id));
  }

  // The prediction pipeline depends only on arrivals, so scores and ready
  // times are precomputed for the whole workload.
  std::vector<StreamEvent> stream;
  stream.reserve(reqs.size() * 2);
  for (const Request& r : reqs) stream.push_back({r.arrival_s, 0, r.id});

  std::unordered_map<uint64_t, Scores> scores;
  std::unordered_map<uint64_t, double> ready_at;
  if (predictor_cfg.kind != PredictorKind::None) {
    McContext mc(predictor_cfg.nu, predictor_cfg.mc_samples, predictor_cfg.mc_seed);
    for (const Request& r : reqs) {
      PredictedDist p = predictor_cfg.kind == PredictorKind::Oracle
                            ? oracle_predict(r)
                            : noisy_predict(r, predictor_cfg.noise, seed);
      Scores s;
      if (predictor_cfg.family == ScoreFamily::LogT) {
        CensoredLogT cl(LogTParams(p.mu_hat, p.sigma_hat, predictor_cfg.nu),
                        (double)r.max_tokens);
        s.expectation = censored_expectation(cl, mc);
        s.cvar = censored_cvar(cl, mc, score_cfg.alpha);
      } else {
        s.expectation = lognormal_censored_expectation(p.mu_hat, p.sigma_hat, (double)r.max_tokens);
        s.cvar = lognormal_censored_cvar(p.mu_hat, p.sigma_hat, (double)r.max_tokens,
                                         score_cfg.alpha);
      }
      // CVaR >= E holds exactly for both estimators over a shared sample set;
      // only summation rounding can flip it by an ulp when sigma is near zero.
      s.cvar = std::max(s.cvar, s.expectation);
      scores[r.id] = s;
    }
    if (predictor_cfg.batched) {
      std::vector<Submission> subs;
      subs.reserve(reqs.size());
      for (const Request& r : reqs) subs.push_back({r.id, r.arrival_s});
      for (const PredictionReady& pr : batch_schedule(subs, predictor_cfg.batcher))
        ready_at[pr.req_id] = pr.ready_s;
    } else {
      for (const Request& r : reqs) ready_at[r.id] = r.arrival_s;
    }
    for (const Request& r : reqs) stream.push_back({ready_at[r.id], 1, r.id});
  }
  std::sort(stream.begin(), stream.end());

  std::unordered_map<uint64_t, RequestEvent> out;
  for (const Request& r : reqs) {
    RequestEvent ev;
    ev.req_id = r.id;
    ev.arrival_s = r.arrival_s;
    if (auto it = ready_at.find(r.id); it != ready_at.end()) ev.predict_ready_s = it->second;
    out[r.id] = ev;
  }

  Scheduler sched(policy, score_cfg);
  std::vector<Running> running;
  running.reserve(engine_cfg.batch_slots);
  size_t next_event = 0;
  size_t completed = 0;
  double now = 0.0;
  double prefill_pending = 0.0;  // prompt tokens admitted at the current boundary

  auto process_events_until = [&](double t) {
    while (next_event < stream.size() && stream[next_event].time <= t) {
      const StreamEvent& ev = stream[next_event++];
      if (ev.kind == 0) {
        sched.on_arrival(*by_id.at(ev.req_id));
      } else if (sched.waiting_on(ev.req_id)) {
        // predictions arriving after admission are stale and dropped
        const Scores& s = scores.at(ev.req_id);
        sched.on_prediction(ev.req_id, s.expectation, s.cvar);
      }
    }
  };

  auto admit = [&](double t) {
    while ((int)running.size() < engine_cfg.batch_slots) {
      std::optional<uint64_t> id = sched.next_request();
      if (!id) break;
      const Request& r = *by_id.at(*id);
      out[*id].admit_s = t;
      running.push_back({*id, std::min(r.true_output_tokens, r.max_tokens), true});
      prefill_pending += (double)r.prompt_tokens;
    }
  };

  while (completed < reqs.size()) {
    if (running.empty()) {
      if (sched.waiting() == 0) {
        if (next_event >= stream.size()) break;  // defensive; all requests complete first
        now = std::max(now, stream[next_event].time);
      }
      process_events_until(now);
      admit(now);
      if (running.empty()) continue;  // nothing admissible yet; jump to next event
    }
    double d = engine_cfg.c0 + engine_cfg.c1 * (double)running.size() +
               engine_cfg.c2 * prefill_pending;
    prefill_pending = 0.0;
    double iter_end = now + d;
    process_events_until(iter_end);  // queue mutations only; admission waits for the boundary
    now = iter_end;
    for (size_t i = 0; i < running.size();) {
      Running& ru = running[i];
      RequestEvent& ev = out[ru.req_id];
      ++ev.emitted_tokens;
      if (ru.awaiting_first_token) {
        ev.first_token_s = iter_end;
        ru.awaiting_first_token = false;
      }
      if (--ru.remaining == 0) {
        ev.completion_s = iter_end;
        ++completed;
        running[i] = running.back();
        running.pop_back();
      } else {
        ++i;
      }
    }
    admit(now);
  }

  report.events.reserve(reqs.size());
  for (const Request& r : reqs) report.events.push_back(out.at(r.id));
  std::sort(report.events.begin(), report.events.end(),
            [](const RequestEvent& a, const RequestEvent& b) { return a.req_id < b.req_id; });
  report.metrics = summarize(report.events, ks, ws);
  return report;
}

Metrics summarize(const std::vector<RequestEvent>& events, const std::vector<uint64_t>& ks,
                  const std::vector<double>& ws) {
  if (events.empty()) throw std::invalid_argument("summarize: no events");
  double n = (double)events.size();
  std::vector<double> ttft, ptla, completions;
  ttft.reserve(events.size());
  ptla.reserve(events.size());
  completions.reserve(events.size());
  for (const RequestEvent& e : events) {
    if (e.emitted_tokens == 0) throw std::invalid_argument("summarize: request emitted no tokens");
    ttft.push_back(e.first_token_s - e.arrival_s);
    ptla.push_back((e.completion_s - e.arrival_s) / (double)e.emitted_tokens);
    completions.push_back(e.completion_s);
  }
  std::sort(ttft.begin(), ttft.end());
  std::sort(ptla.begin(), ptla.end());
  std::sort(completions.begin(), completions.end());

  auto avg = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / (double)v.size();
  };
  auto p90 = [&](const std::vector<double>& v) {  // nearest rank
    size_t k = (size_t)std::ceil(0.9 * n);
    k = std::max<size_t>(1, std::min(k, v.size()));
    return v[k - 1];
  };

  Metrics m;
  m.ttft_avg = avg(ttft);
  m.ttft_p90 = p90(ttft);
  m.ptla_avg = avg(ptla);
  m.ptla_p90 = p90(ptla);
  for (uint64_t k : ks)
    if (k >= 1 && k <= completions.size()) m.time_at_k.push_back({k, completions[k - 1]});
  for (double w : ws) {
    auto it = std::upper_bound(completions.begin(), completions.end(), w);
    m.throughput_at_w.push_back({w, (uint64_t)(it - completions.begin())});
  }
  return m;
}

Heatmap heatmap(const std::vector<RequestEvent>& events, const HeatmapSpec& spec) {
  if (spec.time_bins < 1 || spec.len_bins < 1)
    throw std::domain_error("heatmap: bin counts must be >= 1");
  if (!(spec.time_max > 0.0) || !(spec.len_max > 0.0))
    throw std::domain_error("heatmap: bin ranges must be > 0");
  Heatmap h;
  h.spec = spec;
  h.counts.assign((size_t)spec.time_bins * spec.len_bins, 0);
  auto bin = [](double v, double vmax, int bins) {
    int b = (int)std::floor(v / vmax * bins);
    return std::max(0, std::min(bins - 1, b));  // clip outliers to the edge bins
  };
  for (const RequestEvent& e : events) {
    int tb = bin(e.completion_s, spec.time_max, spec.time_bins);
    int lb = bin((double)e.emitted_tokens, spec.len_max, spec.len_bins);
    ++h.counts[(size_t)tb * spec.len_bins + lb];
  }
  return h;
}

}  // namespace tie
