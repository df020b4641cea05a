#pragma once

#include <cstdint>
#include <vector>

#include "tiesched/dist.hpp"
#include "tiesched/workload.hpp"

namespace tie {

struct PredictedDist {
  double mu_hat;
  double sigma_hat;
};

// Gaussian perturbation in (mu, sigma~) space with sigma~ = log(1 + sigma);
// deterministic per (seed, req id)
struct NoiseSpec {
  double mu_sd = 0.0;
  double log_sigma_sd = 0.0;
};

struct BatcherConfig {
  double timeout_s = 0.003;
  int max_batch = 32;
  double latency_base_s = 0.002;
  double latency_per_item_s = 0.0001;
};

PredictedDist oracle_predict(const Request& req);
PredictedDist noisy_predict(const Request& req, const NoiseSpec& noise, uint64_t seed);

// scalar expected censored length only (SEPT-style point prediction)
double point_predict(const Request& req, const NoiseSpec& noise, uint64_t seed,
                     const McContext& mc);

struct Submission {
  uint64_t req_id;
  double submit_s;
};

struct PredictionReady {
  uint64_t req_id;
  double ready_s;
};

// Dynamic batching: a batch dispatches when it holds max_batch items or when
// its oldest member has waited timeout_s; ready = dispatch + base + b*per_item.
std::vector<PredictionReady> batch_schedule(const std::vector<Submission>& submissions,
                                            const BatcherConfig& cfg);

}  // namespace tie
