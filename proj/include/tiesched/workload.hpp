#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace tie {

struct Request {
  uint64_t id;
  double arrival_s;
  uint32_t prompt_tokens;
  uint32_t true_output_tokens;
  uint32_t max_tokens;
  std::optional<double> true_mu;     // log-t ground truth, when known
  std::optional<double> true_sigma;
};

// termination-rate mixture: p ~ Beta(alpha, 1), L ~ Geometric(p), L >= 1;
// realizes P(L > n) ~ Gamma(alpha + 1) * n^-alpha
struct TailLawSpec {
  double alpha;
  size_t n;
};

struct WorkloadSpec {
  size_t n_requests = 2000;
  double rps = 100.0;
  std::pair<double, double> mu_range = {3.0, 5.0};
  std::pair<double, double> sigma_range = {0.5, 1.2};
  double nu = 3.5;
  std::pair<uint32_t, uint32_t> prompt_range = {64, 512};
  uint32_t max_tokens = 2048;
};

std::vector<long long> gen_termination_mixture(const TailLawSpec& spec, uint64_t seed);

// per-request truths drawn uniformly from the spec ranges; one realized
// length per request; arrivals homogeneous Poisson
std::vector<Request> gen_logt_workload(const WorkloadSpec& spec, uint64_t seed);

// strictly increasing cumulative exponential gaps
std::vector<double> poisson_arrivals(double rps, size_t n, uint64_t seed);

void save_trace(const std::vector<Request>& reqs, const std::string& path);

// JSONL trace; records missing arrival_s get Poisson arrivals at fill_rps
std::vector<Request> load_trace(const std::string& path, std::optional<double> fill_rps = {},
                                uint64_t seed = 0);

}  // namespace tie
