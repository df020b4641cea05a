#include "tiesched/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tiesched/rng.hpp"

namespace tie {

namespace {
constexpr double kSigmaHatFloor = 1e-6;
}

PredictedDist oracle_predict(const Request& req) {
  if (!req.true_mu || !req.true_sigma)
    throw std::invalid_argument("oracle_predict: request " + std::to_string(req.id) +
                                " carries no ground-truth parameters");
  return {*req.true_mu, *req.true_sigma};
}

PredictedDist noisy_predict(const Request& req, const NoiseSpec& noise, uint64_t seed) {
  if (noise.mu_sd < 0.0 || noise.log_sigma_sd < 0.0)
    throw std::domain_error("noisy_predict: noise standard deviations must be >= 0");
  PredictedDist truth = oracle_predict(req);
  Rng rng(mix64(seed, req.id));
  double mu_hat = truth.mu_hat + noise.mu_sd * rng.normal();
  double st = std::log1p(truth.sigma_hat) + noise.log_sigma_sd * rng.normal();
  double sigma_hat = std::max(std::expm1(st), kSigmaHatFloor);
  return {mu_hat, sigma_hat};
}

double point_predict(const Request& req, const NoiseSpec& noise, uint64_t seed,
                     const McContext& mc) {
  PredictedDist p = noisy_predict(req, noise, seed);
  CensoredLogT cl(LogTParams(p.mu_hat, p.sigma_hat, mc.nu), (double)req.max_tokens);
  return censored_expectation(cl, mc);
}

std::vector<PredictionReady> batch_schedule(const std::vector<Submission>& submissions,
                                            const BatcherConfig& cfg) {
  if (!(cfg.timeout_s > 0.0)) throw std::domain_error("batch_schedule: timeout_s must be > 0");
  if (cfg.max_batch < 1) throw std::domain_error("batch_schedule: max_batch must be >= 1");
  if (cfg.latency_base_s < 0.0 || cfg.latency_per_item_s < 0.0)
    throw std::domain_error("batch_schedule: latencies must be >= 0");
  for (size_t i = 1; i < submissions.size(); ++i)
    if (submissions[i].submit_s < submissions[i - 1].submit_s)
      throw std::invalid_argument("batch_schedule: submissions must be sorted by submit time");

  std::vector<PredictionReady> out;
  out.reserve(submissions.size());
  size_t i = 0;
  while (i < submissions.size()) {
    double oldest = submissions[i].submit_s;
    double deadline = oldest + cfg.timeout_s;
    size_t j = i;  // one past the batch end
    double dispatch = deadline;
    while (j < submissions.size() && submissions[j].submit_s <= deadline &&
           (int)(j - i) < cfg.max_batch) {
      ++j;
      if ((int)(j - i) == cfg.max_batch) {
        dispatch = submissions[j - 1].submit_s;  // filled before the timeout
        break;
      }
    }
    int b = (int)(j - i);
    double ready = dispatch + cfg.latency_base_s + b * cfg.latency_per_item_s;
    for (size_t k = i; k < j; ++k) out.push_back({submissions[k].req_id, ready});
    i = j;
  }
  return out;
}

}  // namespace tie
