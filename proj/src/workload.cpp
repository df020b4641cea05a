#include "tiesched/workload.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "tiesched/rng.hpp"

namespace tie {

using json = nlohmann::json;

std::vector<long long> gen_termination_mixture(const TailLawSpec& spec, uint64_t seed) {
  if (!(spec.alpha > 0.0) || !std::isfinite(spec.alpha))
    throw std::domain_error("gen_termination_mixture: alpha must be finite and > 0");
  Rng rng(seed);
  std::vector<long long> out(spec.n);
  for (auto& L : out) {
    double p = std::pow(rng.uniform01(), 1.0 / spec.alpha);  // Beta(alpha, 1) via inverse CDF
    double u = rng.uniform01();
    double denom = std::log1p(-p);
    if (denom == 0.0 || p >= 1.0) {
      L = 1;
      continue;
    }
    // first success at trial L: P(L > n) = (1-p)^n
    L = 1 + (long long)std::floor(std::log(u) / denom);
    if (L < 1) L = 1;
  }
  return out;
}

std::vector<double> poisson_arrivals(double rps, size_t n, uint64_t seed) {
  if (!(rps > 0.0) || !std::isfinite(rps))
    throw std::domain_error("poisson_arrivals: rps must be finite and > 0");
  Rng rng(seed);
  std::vector<double> out(n);
  double t = 0.0;
  for (auto& a : out) {
    t += rng.exponential(rps);
    a = t;
  }
  return out;
}

std::vector<Request> gen_logt_workload(const WorkloadSpec& spec, uint64_t seed) {
  if (!(spec.mu_range.first <= spec.mu_range.second))
    throw std::domain_error("gen_logt_workload: bad mu_range");
  if (!(spec.sigma_range.first > 0.0) || !(spec.sigma_range.first <= spec.sigma_range.second))
    throw std::domain_error("gen_logt_workload: bad sigma_range");
  if (!(spec.nu > 0.0)) throw std::domain_error("gen_logt_workload: nu must be > 0");
  if (spec.prompt_range.first < 1 || spec.prompt_range.first > spec.prompt_range.second)
    throw std::domain_error("gen_logt_workload: bad prompt_range");
  if (spec.max_tokens < 1) throw std::domain_error("gen_logt_workload: max_tokens must be >= 1");

  std::vector<double> arrivals = poisson_arrivals(spec.rps, spec.n_requests, mix64(seed, 1));
  Rng rng(mix64(seed, 2));
  std::vector<Request> reqs(spec.n_requests);
  for (size_t i = 0; i < spec.n_requests; ++i) {
    Request& r = reqs[i];
    r.id = (uint64_t)i;
    r.arrival_s = arrivals[i];
    r.true_mu = rng.uniform(spec.mu_range.first, spec.mu_range.second);
    r.true_sigma = rng.uniform(spec.sigma_range.first, spec.sigma_range.second);
    r.prompt_tokens = rng.uniform_u32(spec.prompt_range.first, spec.prompt_range.second);
    r.max_tokens = spec.max_tokens;
    double ln_len = *r.true_mu + *r.true_sigma * rng.student_t(spec.nu);
    double len = ln_len > 22.0 ? 4294967295.0 : std::round(std::exp(ln_len));  // u32 guard
    if (len < 1.0) len = 1.0;
    if (len > 4294967295.0) len = 4294967295.0;
    r.true_output_tokens = (uint32_t)len;
  }
  return reqs;
}

namespace {

void append_request(json& j, const Request& r) {
  j["id"] = r.id;
  j["arrival_s"] = r.arrival_s;
  j["prompt_tokens"] = r.prompt_tokens;
  j["output_tokens"] = r.true_output_tokens;
  j["max_tokens"] = r.max_tokens;
  if (r.true_mu) j["mu"] = *r.true_mu;
  if (r.true_sigma) j["sigma"] = *r.true_sigma;
}

}  // namespace

void save_trace(const std::vector<Request>& reqs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_trace: cannot open " + path);
  for (const Request& r : reqs) {
    json j;
    append_request(j, r);
    out << j.dump() << "\n";
  }
  if (!out) throw std::runtime_error("save_trace: write failed on " + path);
}

std::vector<Request> load_trace(const std::string& path, std::optional<double> fill_rps,
                                uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_trace: cannot open " + path);
  std::vector<Request> reqs;
  std::vector<size_t> missing_arrival;
  std::set<uint64_t> seen;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw std::runtime_error("load_trace: " + path + ":" + std::to_string(lineno) +
                               ": bad JSON: " + e.what());
    }
    auto require = [&](const char* field) {
      if (!j.contains(field))
        throw std::runtime_error("load_trace: " + path + ":" + std::to_string(lineno) +
                                 ": missing field '" + field + "'");
    };
    require("id");
    require("prompt_tokens");
    require("output_tokens");
    require("max_tokens");
    Request r;
    r.id = j.at("id").get<uint64_t>();
    if (!seen.insert(r.id).second)
      throw std::runtime_error("load_trace: " + path + ":" + std::to_string(lineno) +
                               ": duplicate id " + std::to_string(r.id));
    r.prompt_tokens = j.at("prompt_tokens").get<uint32_t>();
    r.true_output_tokens = j.at("output_tokens").get<uint32_t>();
    r.max_tokens = j.at("max_tokens").get<uint32_t>();
    if (j.contains("arrival_s")) {
      r.arrival_s = j.at("arrival_s").get<double>();
    } else {
      r.arrival_s = -1.0;
      missing_arrival.push_back(reqs.size());
    }
    if (j.contains("mu")) r.true_mu = j.at("mu").get<double>();
    if (j.contains("sigma")) r.true_sigma = j.at("sigma").get<double>();
    reqs.push_back(r);
  }
  if (!missing_arrival.empty()) {
    if (!fill_rps)
      throw std::runtime_error("load_trace: " + path +
                               ": records missing arrival_s but no fill rate supplied");
    std::vector<double> arr = poisson_arrivals(*fill_rps, missing_arrival.size(), seed);
    for (size_t k = 0; k < missing_arrival.size(); ++k) reqs[missing_arrival[k]].arrival_s = arr[k];
  }
  std::stable_sort(reqs.begin(), reqs.end(),
                   [](const Request& a, const Request& b) { return a.arrival_s < b.arrival_s; });
  return reqs;
}

}  // namespace tie
