#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tiesched/predictor.hpp"
#include "tiesched/sched.hpp"
#include "tiesched/workload.hpp"

namespace tie {

// iteration duration d = c0 + c1*b + c2*(prefill tokens admitted this round)
struct EngineConfig {
  int batch_slots = 8;
  double c0 = 0.02;
  double c1 = 0.002;
  double c2 = 0.0001;
};

enum class PredictorKind { None, Oracle, Noisy };

// family used to turn (mu_hat, sigma_hat) into E / CVaR scores
enum class ScoreFamily { LogT, LogNormal };

struct PredictorConfig {
  PredictorKind kind = PredictorKind::Oracle;
  ScoreFamily family = ScoreFamily::LogT;
  NoiseSpec noise;
  bool batched = true;  // false: predictions ready at arrival (no pipeline delay)
  BatcherConfig batcher;
  double nu = 3.5;
  int mc_samples = McContext::kDefaultSamples;
  uint64_t mc_seed = McContext::kDefaultSeed;
};

struct RequestEvent {
  uint64_t req_id;
  double arrival_s;
  std::optional<double> predict_ready_s;
  double admit_s;
  double first_token_s;
  double completion_s;
  uint32_t emitted_tokens;
};

struct Metrics {
  double ttft_avg = 0.0;
  double ttft_p90 = 0.0;
  double ptla_avg = 0.0;  // per-token latency: (completion - arrival) / emitted
  double ptla_p90 = 0.0;
  std::vector<std::pair<uint64_t, double>> time_at_k;      // completion time of k-th finish
  std::vector<std::pair<double, uint64_t>> throughput_at_w;  // completions within window
};

struct HeatmapSpec {
  int time_bins = 24;
  int len_bins = 24;
  double time_max = 240.0;
  double len_max = 512.0;
};

struct Heatmap {
  HeatmapSpec spec;
  std::vector<uint64_t> counts;  // row-major [time_bin][len_bin]; out-of-range clipped
};

struct SimReport {
  uint64_t seed = 0;
  Policy policy = Policy::FCFS;
  std::vector<RequestEvent> events;  // one per request, in id order
  Metrics metrics;
};

SimReport run_sim(const std::vector<Request>& workload, Policy policy,
                  const ScoreConfig& score_cfg, const EngineConfig& engine_cfg,
                  const PredictorConfig& predictor_cfg, uint64_t seed,
                  const std::vector<uint64_t>& ks = {}, const std::vector<double>& ws = {});

Metrics summarize(const std::vector<RequestEvent>& events, const std::vector<uint64_t>& ks,
                  const std::vector<double>& ws);

Heatmap heatmap(const std::vector<RequestEvent>& events, const HeatmapSpec& spec);

}  // namespace tie
