#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "tiesched/fit.hpp"
#include "tiesched/sim.hpp"

namespace tie {

inline std::string policy_name(Policy p) {
  switch (p) {
    case Policy::FCFS: return "fcfs";
    case Policy::SEPT: return "sept";
    case Policy::TIE: return "tie";
  }
  return "?";
}

// shortest round-trip double text (what nlohmann emits in documents)
inline std::string num(double v) { return nlohmann::json(v).dump(); }

inline nlohmann::json metrics_to_json(const Metrics& m) {
  nlohmann::json j;
  j["ttft_avg"] = m.ttft_avg;
  j["ttft_p90"] = m.ttft_p90;
  j["ptla_avg"] = m.ptla_avg;
  j["ptla_p90"] = m.ptla_p90;
  nlohmann::json tk = nlohmann::json::object();
  for (auto& [k, v] : m.time_at_k) tk[std::to_string(k)] = v;
  j["time_at_k"] = tk;
  nlohmann::json tw = nlohmann::json::object();
  for (auto& [w, c] : m.throughput_at_w) tw[num(w)] = c;
  j["throughput_at_w"] = tw;
  return j;
}

inline nlohmann::json report_to_json(const SimReport& r, const std::string& config_digest) {
  nlohmann::json j;
  j["config_digest"] = config_digest;
  j["seed"] = r.seed;
  j["policy"] = policy_name(r.policy);
  j["metrics"] = metrics_to_json(r.metrics);
  nlohmann::json evs = nlohmann::json::array();
  for (const RequestEvent& e : r.events) {
    nlohmann::json je;
    je["req_id"] = e.req_id;
    je["arrival_s"] = e.arrival_s;
    if (e.predict_ready_s) je["predict_ready_s"] = *e.predict_ready_s;
    je["admit_s"] = e.admit_s;
    je["first_token_s"] = e.first_token_s;
    je["completion_s"] = e.completion_s;
    je["emitted_tokens"] = e.emitted_tokens;
    evs.push_back(je);
  }
  j["events"] = evs;
  return j;
}

inline std::string events_csv(const std::vector<RequestEvent>& events) {
  std::string out = "req_id,arrival_s,admit_s,first_token_s,completion_s,emitted_tokens\n";
  for (const RequestEvent& e : events) {
    out += std::to_string(e.req_id);
    out += ',';
    out += num(e.arrival_s);
    out += ',';
    out += num(e.admit_s);
    out += ',';
    out += num(e.first_token_s);
    out += ',';
    out += num(e.completion_s);
    out += ',';
    out += std::to_string(e.emitted_tokens);
    out += '\n';
  }
  return out;
}

inline std::string heatmap_csv(const Heatmap& h) {
  std::string out = "time_bin,len_bin,count\n";
  for (int t = 0; t < h.spec.time_bins; ++t)
    for (int l = 0; l < h.spec.len_bins; ++l) {
      out += std::to_string(t);
      out += ',';
      out += std::to_string(l);
      out += ',';
      out += std::to_string(h.counts[(size_t)t * h.spec.len_bins + l]);
      out += '\n';
    }
  return out;
}

inline nlohmann::json fit_to_json(const FitResult& f) {
  nlohmann::json j;
  j["family"] = family_name(f.family);
  if (f.family == FitFamily::Exponential) {
    j["rate"] = f.rate;
  } else {
    j["mu"] = f.mu;
    j["sigma"] = f.sigma;
    if (f.family != FitFamily::LogNormal) j["nu"] = f.nu;
  }
  j["log_likelihood"] = f.log_likelihood;
  j["converged"] = f.converged;
  j["iterations"] = f.iterations;
  j["degenerate"] = f.degenerate;
  return j;
}

// FNV-1a over the canonical dump (object keys sorted by nlohmann)
inline std::string config_digest(const nlohmann::json& resolved) {
  std::string s = resolved.dump();
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  snprintf(buf, sizeof buf, "%016llx", (unsigned long long)h);
  return std::string(buf);
}

}  // namespace tie
