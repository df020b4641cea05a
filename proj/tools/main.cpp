// tie: fit generation-length distributions, check termination tail laws, and
// run scheduling simulations, all driven by one JSON config plus flag
// overrides. Exit codes: 0 success, 2 config/parse error, 3 check failure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tiesched/dist.hpp"
#include "tiesched/fit.hpp"
#include "tiesched/rng.hpp"
#include "tiesched/serialize.hpp"
#include "tiesched/sim.hpp"
#include "tiesched/workload.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// configuration problems exit with 2; everything else that throws exits 3
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json default_config() {
  json c;
  c["seed"] = 1;
  c["out"] = "out";
  c["workload"] = {
      {"trace", nullptr},
      {"n_requests", 2000},
      {"rps", 100.0},
      {"rps_sweep", json::array()},
      {"mu_range", {3.0, 5.0}},
      {"sigma_range", {0.5, 1.2}},
      {"nu", 3.5},
      {"prompt_range", {64, 512}},
      {"max_tokens", 2048},
  };
  c["engine"] = {{"batch_slots", 8}, {"c0", 0.02}, {"c1", 0.002}, {"c2", 0.0001}};
  c["score"] = {
      {"alpha", 0.9},          {"beta_mode", "adaptive"}, {"beta_fixed", 0.1},
      {"beta_max", 0.5},       {"q_sat", 128.0},          {"rebuild_threshold", 0.1},
  };
  c["predictor"] = {
      {"kind", "oracle"},
      {"family", "logt"},
      {"mu_sd", 0.0},
      {"log_sigma_sd", 0.0},
      {"batched", true},
      {"batcher",
       {{"timeout_s", 0.003},
        {"max_batch", 32},
        {"latency_base_s", 0.002},
        {"latency_per_item_s", 0.0001}}},
      {"nu", 3.5},
      {"mc_samples", tie::McContext::kDefaultSamples},
      {"mc_seed", tie::McContext::kDefaultSeed},
  };
  c["sim"] = {
      {"policy", "tie"},
      {"ks", json::array()},
      {"ws", json::array()},
      {"heatmap",
       {{"time_bins", 24}, {"len_bins", 24}, {"time_max", 240.0}, {"len_max", 512.0}}},
  };
  c["fit"] = {{"input", nullptr}, {"family", "logt"}, {"nu", 3.5}};
  c["tail"] = {{"alpha", 1.5}, {"n", 1000000}, {"n_min", 40}, {"const_n", 100}};
  c["repeat"] = {
      {"reps", {5, 10, 20, 50, 100}}, {"trials", 500},          {"mu_range", {3.0, 5.0}},
      {"sigma_range", {0.5, 1.2}},    {"nu", 3.5},
  };
  c["nu_sweep"] = {
      {"input", nullptr},       {"grid_lo", 1.0},  {"grid_hi", 10.0},
      {"grid_step", 0.5},       {"prompts", 200},  {"draws", 100},
      {"true_nu", 3.5},         {"mu_range", {3.0, 5.0}},
      {"sigma_range", {0.5, 1.2}},
  };
  c["ablate"] = {{"betas", {0.1, 0.3}}};
  return c;
}

bool type_compatible(const json& slot, const json& value) {
  if (slot.is_null()) return value.is_null() || value.is_string();
  if (slot.is_number()) return value.is_number();
  if (slot.is_boolean()) return value.is_boolean();
  if (slot.is_string()) return value.is_string();
  if (slot.is_array()) return value.is_array();
  if (slot.is_object()) return value.is_object();
  return false;
}

// overlay user keys onto the defaults; unknown keys and type changes rejected
void merge_config(json& base, const json& user, const std::string& prefix) {
  for (auto it = user.begin(); it != user.end(); ++it) {
    std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError("unknown config key: " + path);
    json& slot = base[it.key()];
    if (slot.is_object() && it.value().is_object()) {
      merge_config(slot, it.value(), path);
    } else if (type_compatible(slot, it.value())) {
      slot = it.value();
    } else {
      throw ConfigError("config key " + path + ": expected " + std::string(slot.type_name()) +
                        ", got " + std::string(it.value().type_name()));
    }
  }
}

// --set a.b.c=value, value parsed as JSON when possible, else taken as string
void apply_set(json& cfg, const std::string& assignment) {
  size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("--set expects key.path=value, got: " + assignment);
  std::string path = assignment.substr(0, eq);
  std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json* node = &cfg;
  size_t start = 0;
  for (;;) {
    size_t dot = path.find('.', start);
    std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (!node->is_object() || !node->contains(key))
      throw ConfigError("unknown config key: " + path);
    node = &(*node)[key];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (node->is_object()) throw ConfigError("cannot assign to config section: " + path);
  if (!type_compatible(*node, value))
    throw ConfigError("config key " + path + ": expected " + std::string(node->type_name()) +
                      ", got " + std::string(value.type_name()));
  *node = value;
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  json user = json::parse(in, nullptr, false);
  if (user.is_discarded()) throw ConfigError("config is not valid JSON: " + path);
  if (!user.is_object()) throw ConfigError("config root must be an object: " + path);
  return user;
}

std::pair<double, double> range_from(const json& section, const char* key) {
  const json& r = section[key];
  if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number())
    throw ConfigError(std::string(key) + " must be [lo, hi]");
  double lo = r[0], hi = r[1];
  if (!(lo <= hi)) throw ConfigError(std::string(key) + ": lo must be <= hi");
  return {lo, hi};
}

tie::WorkloadSpec workload_from(const json& w) {
  tie::WorkloadSpec s;
  s.n_requests = w["n_requests"];
  s.rps = w["rps"];
  s.mu_range = range_from(w, "mu_range");
  s.sigma_range = range_from(w, "sigma_range");
  s.nu = w["nu"];
  auto pr = range_from(w, "prompt_range");
  s.prompt_range = {(uint32_t)pr.first, (uint32_t)pr.second};
  s.max_tokens = w["max_tokens"];
  if (s.rps <= 0.0) throw ConfigError("workload.rps must be > 0");
  if (s.sigma_range.first <= 0.0) throw ConfigError("workload.sigma_range must be positive");
  if (s.nu <= 0.0) throw ConfigError("workload.nu must be > 0");
  if (pr.first < 1.0) throw ConfigError("workload.prompt_range must be >= 1");
  if (s.max_tokens < 1) throw ConfigError("workload.max_tokens must be >= 1");
  return s;
}

tie::EngineConfig engine_from(const json& e) {
  tie::EngineConfig c;
  c.batch_slots = e["batch_slots"];
  c.c0 = e["c0"];
  c.c1 = e["c1"];
  c.c2 = e["c2"];
  if (c.batch_slots < 1) throw ConfigError("engine.batch_slots must be >= 1");
  if (c.c0 <= 0.0 || c.c1 < 0.0 || c.c2 < 0.0)
    throw ConfigError("engine cost curve needs c0 > 0, c1 >= 0, c2 >= 0");
  return c;
}

tie::ScoreConfig score_from(const json& s) {
  tie::ScoreConfig c;
  c.alpha = s["alpha"];
  std::string mode = s["beta_mode"];
  if (mode == "adaptive") c.beta_mode = tie::BetaMode::AdaptiveLinear;
  else if (mode == "fixed") c.beta_mode = tie::BetaMode::Fixed;
  else throw ConfigError("score.beta_mode must be adaptive|fixed");
  c.beta_fixed = s["beta_fixed"];
  c.beta_max = s["beta_max"];
  c.q_sat = s["q_sat"];
  c.rebuild_threshold = s["rebuild_threshold"];
  if (!(c.alpha >= 0.0 && c.alpha < 1.0)) throw ConfigError("score.alpha must be in [0, 1)");
  if (c.beta_fixed < 0.0 || c.beta_max < 0.0) throw ConfigError("score betas must be >= 0");
  if (c.q_sat <= 0.0) throw ConfigError("score.q_sat must be > 0");
  if (c.rebuild_threshold < 0.0) throw ConfigError("score.rebuild_threshold must be >= 0");
  return c;
}

tie::PredictorConfig predictor_from(const json& p) {
  tie::PredictorConfig c;
  std::string kind = p["kind"];
  if (kind == "none") c.kind = tie::PredictorKind::None;
  else if (kind == "oracle") c.kind = tie::PredictorKind::Oracle;
  else if (kind == "noisy") c.kind = tie::PredictorKind::Noisy;
  else throw ConfigError("predictor.kind must be none|oracle|noisy");
  std::string family = p["family"];
  if (family == "logt") c.family = tie::ScoreFamily::LogT;
  else if (family == "lognormal") c.family = tie::ScoreFamily::LogNormal;
  else throw ConfigError("predictor.family must be logt|lognormal");
  c.noise.mu_sd = p["mu_sd"];
  c.noise.log_sigma_sd = p["log_sigma_sd"];
  c.batched = p["batched"];
  const json& b = p["batcher"];
  c.batcher.timeout_s = b["timeout_s"];
  c.batcher.max_batch = b["max_batch"];
  c.batcher.latency_base_s = b["latency_base_s"];
  c.batcher.latency_per_item_s = b["latency_per_item_s"];
  c.nu = p["nu"];
  c.mc_samples = p["mc_samples"];
  c.mc_seed = p["mc_seed"];
  if (c.noise.mu_sd < 0.0 || c.noise.log_sigma_sd < 0.0)
    throw ConfigError("predictor noise sds must be >= 0");
  if (c.batcher.timeout_s < 0.0 || c.batcher.max_batch < 1 || c.batcher.latency_base_s < 0.0 ||
      c.batcher.latency_per_item_s < 0.0)
    throw ConfigError("predictor.batcher: timeout_s/latencies >= 0, max_batch >= 1");
  if (c.nu <= 0.0) throw ConfigError("predictor.nu must be > 0");
  if (c.mc_samples < 2) throw ConfigError("predictor.mc_samples must be >= 2");
  return c;
}

tie::Policy policy_from(const std::string& name) {
  if (name == "fcfs") return tie::Policy::FCFS;
  if (name == "sept") return tie::Policy::SEPT;
  if (name == "tie") return tie::Policy::TIE;
  throw ConfigError("policy must be fcfs|sept|tie");
}

std::vector<tie::Request> make_workload(const json& cfg, uint64_t seed) {
  const json& w = cfg["workload"];
  if (!w["trace"].is_null()) {
    std::string path = w["trace"];
    std::optional<double> fill;
    if (w["rps"].get<double>() > 0.0) fill = w["rps"].get<double>();
    try {
      return tie::load_trace(path, fill, seed);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("trace: ") + e.what());
    }
  }
  return tie::gen_logt_workload(workload_from(w), seed);
}

std::string fmt_g(double v) {
  char buf[48];
  snprintf(buf, sizeof buf, "%.6g", v);
  return std::string(buf);
}

void write_file(const std::string& path, const std::string& content) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

void write_json(const std::string& path, const json& doc) { write_file(path, doc.dump(2) + "\n"); }

std::string out_path(const json& cfg, const std::string& name) {
  return (fs::path(cfg["out"].get<std::string>()) / name).string();
}

// ---- plain SVG emitters (line chart and grid heatmap) ----------------------

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> pts;
};

std::string svg_line_chart(const std::string& title, const std::string& xlabel,
                           const std::string& ylabel, const std::vector<Series>& series,
                           bool log_x = false) {
  const double W = 640, H = 440, L = 70, R = 20, T = 40, B = 50;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const Series& s : series)
    for (auto [x, y] : s.pts) {
      double xv = log_x ? std::log10(x) : x;
      xmin = std::min(xmin, xv), xmax = std::max(xmax, xv);
      ymin = std::min(ymin, y), ymax = std::max(ymax, y);
    }
  if (xmin >= xmax) xmax = xmin + 1.0;
  if (ymin >= ymax) ymax = ymin + 1.0;
  double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad, ymax += ypad;
  auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                 "#8c564b", "#17becf", "#7f7f7f"};
  std::string s;
  char b[512];
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"440\" "
       "font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"640\" height=\"440\" fill=\"white\"/>\n";
  snprintf(b, sizeof b, "<text x=\"%g\" y=\"20\" font-size=\"14\">%s</text>\n", L, title.c_str());
  s += b;
  // axes with five ticks per side
  snprintf(b, sizeof b,
           "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n"
           "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n",
           L, H - B, W - R, H - B, L, T, L, H - B);
  s += b;
  for (int i = 0; i <= 4; ++i) {
    double xv = xmin + (xmax - xmin) * i / 4.0;
    double yv = ymin + (ymax - ymin) * i / 4.0;
    snprintf(b, sizeof b,
             "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">%s</text>\n", px(xv), H - B + 18,
             fmt_g(log_x ? std::pow(10.0, xv) : xv).c_str());
    s += b;
    snprintf(b, sizeof b, "<text x=\"%g\" y=\"%g\" text-anchor=\"end\">%s</text>\n", L - 6,
             py(yv) + 4, fmt_g(yv).c_str());
    s += b;
  }
  snprintf(b, sizeof b, "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">%s</text>\n",
           L + (W - L - R) / 2, H - 10, xlabel.c_str());
  s += b;
  snprintf(b, sizeof b,
           "<text x=\"16\" y=\"%g\" text-anchor=\"middle\" transform=\"rotate(-90 16 %g)\">%s"
           "</text>\n",
           T + (H - T - B) / 2, T + (H - T - B) / 2, ylabel.c_str());
  s += b;
  for (size_t k = 0; k < series.size(); ++k) {
    const char* col = colors[k % 8];
    std::string pts;
    for (auto [x, y] : series[k].pts) {
      snprintf(b, sizeof b, "%g,%g ", px(log_x ? std::log10(x) : x), py(y));
      pts += b;
    }
    snprintf(b, sizeof b, "<polyline points=\"%s\" fill=\"none\" stroke=\"%s\" stroke-width=\"1.5\"/>\n",
             pts.c_str(), col);
    s += b;
    snprintf(b, sizeof b, "<text x=\"%g\" y=\"%g\" fill=\"%s\">%s</text>\n", W - R - 150,
             T + 16.0 * (double)k + 8, col, series[k].label.c_str());
    s += b;
  }
  s += "</svg>\n";
  return s;
}

std::string svg_heatmap(const tie::Heatmap& h) {
  const double cell = 18, L = 60, T = 40;
  int tb = h.spec.time_bins, lb = h.spec.len_bins;
  uint64_t mx = 1;
  for (uint64_t c : h.counts) mx = std::max(mx, c);
  double W = L + tb * cell + 20, H = T + lb * cell + 50;
  std::string s;
  char b[512];
  snprintf(b, sizeof b,
           "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" "
           "font-family=\"sans-serif\" font-size=\"12\">\n",
           W, H);
  s += b;
  snprintf(b, sizeof b, "<rect width=\"%g\" height=\"%g\" fill=\"white\"/>\n", W, H);
  s += b;
  s += "<text x=\"60\" y=\"20\" font-size=\"14\">completions (time bin vs length bin)</text>\n";
  for (int t = 0; t < tb; ++t)
    for (int l = 0; l < lb; ++l) {
      uint64_t c = h.counts[(size_t)t * lb + l];
      int shade = 255 - (int)std::lround(255.0 * (double)c / (double)mx);
      // length bin 0 at the bottom row
      snprintf(b, sizeof b,
               "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"rgb(%d,%d,255)\"/>\n",
               L + t * cell, T + (lb - 1 - l) * cell, cell, cell, shade, shade);
      s += b;
    }
  snprintf(b, sizeof b, "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">time bin (0..%d, max %ss)"
           "</text>\n", L + tb * cell / 2, T + lb * cell + 30, tb - 1,
           fmt_g(h.spec.time_max).c_str());
  s += b;
  snprintf(b, sizeof b, "<text x=\"14\" y=\"%g\" transform=\"rotate(-90 14 %g)\" "
           "text-anchor=\"middle\">length bin (0..%d, max %s)</text>\n", T + lb * cell / 2,
           T + lb * cell / 2, lb - 1, fmt_g(h.spec.len_max).c_str());
  s += b;
  s += "</svg>\n";
  return s;
}

// ---- aligned stdout tables --------------------------------------------------

void print_table(const std::vector<std::vector<std::string>>& rows) {
  if (rows.empty()) return;
  std::vector<size_t> w(rows[0].size(), 0);
  for (const auto& r : rows)
    for (size_t i = 0; i < r.size(); ++i) w[i] = std::max(w[i], r[i].size());
  for (const auto& r : rows) {
    std::string line;
    for (size_t i = 0; i < r.size(); ++i) {
      line += r[i];
      if (i + 1 < r.size()) line.append(w[i] - r[i].size() + 2, ' ');
    }
    std::cout << line << "\n";
  }
}

// ---- fit input: JSONL {"prompt_id","lengths"} or CSV prompt_id,length ------

struct PromptSamples {
  std::string prompt_id;
  std::vector<double> lengths;
};

std::vector<PromptSamples> load_fit_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open input: " + path);
  std::vector<PromptSamples> prompts;
  std::map<std::string, size_t> index;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw ConfigError(path + ":" + std::to_string(lineno) + ": " + msg);
  };
  bool csv = path.size() >= 4 && path.substr(path.size() - 4) == ".csv";
  if (csv) {
    if (!std::getline(in, line)) throw ConfigError(path + ": empty file");
    lineno = 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "prompt_id,length") fail("expected header prompt_id,length");
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      size_t comma = line.find(',');
      if (comma == std::string::npos) fail("expected prompt_id,length");
      std::string id = line.substr(0, comma);
      long long len = 0;
      try {
        size_t used = 0;
        len = std::stoll(line.substr(comma + 1), &used);
        if (used != line.size() - comma - 1) fail("length must be an integer");
      } catch (const ConfigError&) {
        throw;
      } catch (...) {
        fail("length must be an integer");
      }
      if (len < 1) fail("length must be >= 1");
      auto [it, fresh] = index.try_emplace(id, prompts.size());
      if (fresh) prompts.push_back({id, {}});
      prompts[it->second].lengths.push_back((double)len);
    }
  } else {
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      json rec = json::parse(line, nullptr, false);
      if (rec.is_discarded()) fail("invalid JSON");
      if (!rec.is_object() || !rec.contains("prompt_id") || !rec.contains("lengths"))
        fail("expected {\"prompt_id\", \"lengths\"}");
      if (!rec["prompt_id"].is_string()) fail("prompt_id must be a string");
      if (!rec["lengths"].is_array()) fail("lengths must be an array");
      std::string id = rec["prompt_id"];
      if (index.count(id)) fail("duplicate prompt_id " + id);
      index[id] = prompts.size();
      PromptSamples ps{id, {}};
      for (const json& v : rec["lengths"]) {
        if (!v.is_number_integer() || v.get<long long>() < 1)
          fail("lengths must be integers >= 1");
        ps.lengths.push_back((double)v.get<long long>());
      }
      prompts.push_back(std::move(ps));
    }
  }
  if (prompts.empty()) throw ConfigError(path + ": no prompts found");
  return prompts;
}

// ---- commands ---------------------------------------------------------------

std::vector<tie::FitFamily> families_from(const std::string& name) {
  if (name == "logt") return {tie::FitFamily::LogTFixedNu};
  if (name == "logt-free") return {tie::FitFamily::LogTFreeNu};
  if (name == "lognormal") return {tie::FitFamily::LogNormal};
  if (name == "exponential") return {tie::FitFamily::Exponential};
  if (name == "all")
    return {tie::FitFamily::LogTFixedNu, tie::FitFamily::LogTFreeNu, tie::FitFamily::LogNormal,
            tie::FitFamily::Exponential};
  throw ConfigError("fit.family must be logt|logt-free|lognormal|exponential|all");
}

int cmd_fit(const json& cfg, const std::string& digest) {
  const json& f = cfg["fit"];
  if (f["input"].is_null()) throw ConfigError("fit needs an input file (positional or fit.input)");
  double nu = f["nu"];
  if (nu <= 0.0) throw ConfigError("fit.nu must be > 0");
  std::vector<tie::FitFamily> fams = families_from(f["family"]);
  std::vector<PromptSamples> prompts = load_fit_input(f["input"]);
  for (const PromptSamples& p : prompts)
    if (p.lengths.size() < 5)
      throw ConfigError("prompt " + p.prompt_id + " has fewer than 5 samples");

  struct Agg {
    double loglik = 0.0, p_sum = 0.0;
    size_t pass = 0;
  };
  std::map<std::string, Agg> agg;
  std::string jsonl;
  for (const PromptSamples& p : prompts) {
    json rec;
    rec["prompt_id"] = p.prompt_id;
    rec["n"] = p.lengths.size();
    json fits = json::object();
    for (tie::FitFamily fam : fams) {
      tie::FitResult fr;
      switch (fam) {
        case tie::FitFamily::LogTFixedNu: fr = tie::fit_logt_fixed_nu(p.lengths, nu); break;
        case tie::FitFamily::LogTFreeNu: fr = tie::fit_logt_free_nu(p.lengths); break;
        case tie::FitFamily::LogNormal: fr = tie::fit_lognormal(p.lengths); break;
        case tie::FitFamily::Exponential: fr = tie::fit_exponential(p.lengths); break;
      }
      tie::KsResult ks =
          tie::ks_test(p.lengths, [&](double x) { return tie::fit_cdf(fr, x); });
      json jf = tie::fit_to_json(fr);
      jf["ks"] = {{"statistic", ks.statistic}, {"p_value", ks.p_value}, {"n", ks.n}};
      fits[tie::family_name(fam)] = jf;
      Agg& a = agg[tie::family_name(fam)];
      a.loglik += fr.log_likelihood;
      a.p_sum += ks.p_value;
      if (ks.p_value > 0.05) ++a.pass;
    }
    rec["fits"] = fits;
    if (p.lengths.size() >= 10) {
      tie::TailStats ts = tie::tail_stats(p.lengths);
      rec["tail"] = {{"skewness", ts.skewness},
                     {"cv", ts.cv},
                     {"p90_over_p50", ts.p90_over_p50},
                     {"p99_over_p50", ts.p99_over_p50},
                     {"top10_share", ts.top10_share}};
    } else {
      rec["tail"] = nullptr;
    }
    jsonl += rec.dump() + "\n";
  }
  write_file(out_path(cfg, "fit_results.jsonl"), jsonl);

  json summary;
  summary["config_digest"] = digest;
  summary["input"] = f["input"];
  summary["prompts"] = prompts.size();
  json per_family = json::object();
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"family", "prompts", "pass_rate", "mean_p", "mean_loglik"});
  for (tie::FitFamily fam : fams) {
    const Agg& a = agg[tie::family_name(fam)];
    double n = (double)prompts.size();
    per_family[tie::family_name(fam)] = {{"pass_rate", (double)a.pass / n},
                                         {"mean_p", a.p_sum / n},
                                         {"mean_log_likelihood", a.loglik / n}};
    rows.push_back({tie::family_name(fam), std::to_string(prompts.size()),
                    fmt_g((double)a.pass / n), fmt_g(a.p_sum / n), fmt_g(a.loglik / n)});
  }
  summary["families"] = per_family;
  write_json(out_path(cfg, "fit_summary.json"), summary);
  print_table(rows);
  return 0;
}

int cmd_tail_check(const json& cfg, const std::string& digest, bool svg) {
  const json& t = cfg["tail"];
  double alpha = t["alpha"];
  long long n = t["n"];
  long long n_min = t["n_min"];
  long long const_n = t["const_n"];
  if (alpha <= 0.0) throw ConfigError("tail.alpha must be > 0");
  if (n < 10000) throw ConfigError("tail.n must be >= 10^4");
  if (n_min < 1 || const_n < 1) throw ConfigError("tail.n_min and tail.const_n must be >= 1");
  uint64_t seed = cfg["seed"];

  std::vector<long long> lengths = tie::gen_termination_mixture({alpha, (size_t)n}, seed);
  tie::TailLawFit fit;
  try {
    fit = tie::fit_tail_slope(lengths, n_min);
  } catch (const std::exception& e) {
    std::cerr << "tail-check: " << e.what() << "\n";
    return 3;
  }

  // constant check: n^alpha * S(n) should sit near Gamma(alpha + 1)
  std::sort(lengths.begin(), lengths.end());
  double surv = (double)(lengths.end() -
                         std::upper_bound(lengths.begin(), lengths.end(), const_n)) /
                (double)lengths.size();
  double const_hat = std::pow((double)const_n, alpha) * surv;
  double const_expected = std::tgamma(alpha + 1.0);
  bool pass = std::abs(fit.alpha_hat - alpha) <= 0.15;

  json doc;
  doc["config_digest"] = digest;
  doc["alpha"] = alpha;
  doc["n"] = n;
  doc["seed"] = seed;
  doc["alpha_hat"] = fit.alpha_hat;
  doc["intercept"] = fit.intercept;
  doc["r_squared"] = fit.r_squared;
  doc["n_tail_points"] = fit.n_tail_points;
  doc["const_n"] = const_n;
  doc["const_hat"] = const_hat;
  doc["const_expected"] = const_expected;
  doc["pass"] = pass;
  write_json(out_path(cfg, "tail_check.json"), doc);

  // survival side table on the same log-spaced grid the fit uses
  std::string csv = "n,survival\n";
  std::vector<std::pair<double, double>> pts;
  const double factor = std::pow(10.0, 1.0 / 16.0);
  long long prev = -1;
  for (double nf = (double)n_min; nf <= (double)lengths.back(); nf *= factor) {
    long long k = std::llround(nf);
    if (k <= prev) continue;
    prev = k;
    double s = (double)(lengths.end() - std::upper_bound(lengths.begin(), lengths.end(), k)) /
               (double)lengths.size();
    if (s < 50.0 / (double)lengths.size()) break;
    csv += std::to_string(k) + "," + tie::num(s) + "\n";
    pts.push_back({(double)k, std::log10(s)});
  }
  write_file(out_path(cfg, "tail_survival.csv"), csv);
  if (svg) {
    std::vector<Series> series{{"empirical log10 S(n)", pts}, {"fitted slope", {}}};
    for (auto [x, y] : pts)
      series[1].pts.push_back({x, (fit.intercept - fit.alpha_hat * std::log(x)) / std::log(10.0)});
    write_file(out_path(cfg, "tail_check.svg"),
               svg_line_chart("termination tail, alpha=" + fmt_g(alpha), "n", "log10 survival",
                              series, true));
  }

  print_table({{"alpha", "alpha_hat", "r_squared", "tail_points", "const_n", "const_hat",
                "const_expected", "pass"},
               {fmt_g(alpha), fmt_g(fit.alpha_hat), fmt_g(fit.r_squared),
                std::to_string(fit.n_tail_points), std::to_string(const_n), fmt_g(const_hat),
                fmt_g(const_expected), pass ? "1" : "0"}});
  return pass ? 0 : 3;
}

json metrics_row(double rps, const tie::Metrics& m) {
  return {{"rps", rps},           {"ttft_avg", m.ttft_avg}, {"ttft_p90", m.ttft_p90},
          {"ptla_avg", m.ptla_avg}, {"ptla_p90", m.ptla_p90}};
}

int cmd_simulate(const json& cfg, const std::string& digest, bool svg) {
  tie::Policy policy = policy_from(cfg["sim"]["policy"]);
  tie::ScoreConfig score = score_from(cfg["score"]);
  tie::EngineConfig engine = engine_from(cfg["engine"]);
  tie::PredictorConfig predictor = predictor_from(cfg["predictor"]);
  uint64_t seed = cfg["seed"];
  std::vector<uint64_t> ks;
  for (const json& k : cfg["sim"]["ks"]) ks.push_back(k.get<uint64_t>());
  std::vector<double> ws;
  for (const json& w : cfg["sim"]["ws"]) ws.push_back(w.get<double>());
  const json& hm = cfg["sim"]["heatmap"];
  tie::HeatmapSpec hspec{hm["time_bins"], hm["len_bins"], hm["time_max"], hm["len_max"]};
  if (hspec.time_bins < 1 || hspec.len_bins < 1 || hspec.time_max <= 0.0 || hspec.len_max <= 0.0)
    throw ConfigError("sim.heatmap: bins >= 1 and maxima > 0");

  std::vector<std::vector<std::string>> rows;
  rows.push_back({"policy", "rps", "requests", "ttft_avg", "ttft_p90", "ptla_avg", "ptla_p90"});
  auto run_one = [&](double rps, const std::string& suffix) -> tie::Metrics {
    json wcfg = cfg;
    wcfg["workload"]["rps"] = rps;
    std::vector<tie::Request> workload = make_workload(wcfg, seed);
    tie::SimReport rep = tie::run_sim(workload, policy, score, engine, predictor, seed, ks, ws);
    write_json(out_path(cfg, "report" + suffix + ".json"), tie::report_to_json(rep, digest));
    write_file(out_path(cfg, "events" + suffix + ".csv"), tie::events_csv(rep.events));
    tie::Heatmap h = tie::heatmap(rep.events, hspec);
    write_file(out_path(cfg, "heatmap" + suffix + ".csv"), tie::heatmap_csv(h));
    if (svg) write_file(out_path(cfg, "heatmap" + suffix + ".svg"), svg_heatmap(h));
    rows.push_back({tie::policy_name(policy), fmt_g(rps), std::to_string(rep.events.size()),
                    fmt_g(rep.metrics.ttft_avg), fmt_g(rep.metrics.ttft_p90),
                    fmt_g(rep.metrics.ptla_avg), fmt_g(rep.metrics.ptla_p90)});
    return rep.metrics;
  };

  std::vector<double> sweep;
  for (const json& r : cfg["workload"]["rps_sweep"]) sweep.push_back(r.get<double>());
  if (sweep.empty()) {
    run_one(cfg["workload"]["rps"], "");
  } else {
    json summary;
    summary["config_digest"] = digest;
    summary["policy"] = tie::policy_name(policy);
    summary["seed"] = seed;
    json jrows = json::array();
    std::string csv = "rps,ttft_avg,ttft_p90,ptla_avg,ptla_p90\n";
    Series ptla{"ptla_avg", {}}, ttft{"ttft_avg", {}};
    for (double r : sweep) {
      if (r <= 0.0) throw ConfigError("workload.rps_sweep entries must be > 0");
      tie::Metrics m = run_one(r, "_rps" + fmt_g(r));
      jrows.push_back(metrics_row(r, m));
      csv += tie::num(r) + "," + tie::num(m.ttft_avg) + "," + tie::num(m.ttft_p90) + "," +
             tie::num(m.ptla_avg) + "," + tie::num(m.ptla_p90) + "\n";
      ptla.pts.push_back({r, m.ptla_avg});
      ttft.pts.push_back({r, m.ttft_avg});
    }
    summary["rows"] = jrows;
    write_json(out_path(cfg, "sweep_summary.json"), summary);
    write_file(out_path(cfg, "sweep_summary.csv"), csv);
    if (svg)
      write_file(out_path(cfg, "sweep_summary.svg"),
                 svg_line_chart("load sweep, policy=" + tie::policy_name(policy),
                                "requests per second", "seconds", {ptla, ttft}));
  }
  print_table(rows);
  return 0;
}

int cmd_ablate(const json& cfg, const std::string& digest, bool svg) {
  tie::ScoreConfig base_score = score_from(cfg["score"]);
  tie::EngineConfig engine = engine_from(cfg["engine"]);
  tie::PredictorConfig base_pred = predictor_from(cfg["predictor"]);
  uint64_t seed = cfg["seed"];
  std::vector<uint64_t> ks;
  for (const json& k : cfg["sim"]["ks"]) ks.push_back(k.get<uint64_t>());
  std::vector<double> ws;
  for (const json& w : cfg["sim"]["ws"]) ws.push_back(w.get<double>());
  std::vector<double> betas;
  for (const json& b : cfg["ablate"]["betas"]) {
    double v = b.get<double>();
    if (v < 0.0) throw ConfigError("ablate.betas must be >= 0");
    betas.push_back(v);
  }

  std::vector<tie::Request> workload = make_workload(cfg, seed);

  struct Mode {
    std::string label;
    tie::Policy policy;
    std::optional<double> beta_fixed;  // empty + TIE means adaptive
  };
  std::vector<Mode> modes{{"sept", tie::Policy::SEPT, {}}};
  for (double b : betas) modes.push_back({"fixed_beta_" + fmt_g(b), tie::Policy::TIE, b});
  modes.push_back({"adaptive_beta", tie::Policy::TIE, {}});
  const std::pair<tie::ScoreFamily, std::string> families[] = {
      {tie::ScoreFamily::LogT, "logt"}, {tie::ScoreFamily::LogNormal, "lognormal"}};

  json jrows = json::array();
  std::string csv = "score,family,ptla_avg,ptla_p90,ttft_avg,ttft_p90,time_at_k,throughput_at_w\n";
  std::vector<std::vector<std::string>> table;
  table.push_back({"score", "family", "ptla_avg", "ptla_p90", "ttft_avg", "ttft_p90"});
  std::vector<Series> chart{{ "logt", {}}, {"lognormal", {}}};
  for (const Mode& mode : modes)
    for (auto& [fam, fam_name] : families) {
      tie::ScoreConfig sc = base_score;
      if (mode.beta_fixed) {
        sc.beta_mode = tie::BetaMode::Fixed;
        sc.beta_fixed = *mode.beta_fixed;
      } else {
        sc.beta_mode = tie::BetaMode::AdaptiveLinear;
      }
      tie::PredictorConfig pc = base_pred;
      pc.family = fam;
      tie::SimReport rep = tie::run_sim(workload, mode.policy, sc, engine, pc, seed, ks, ws);
      const tie::Metrics& m = rep.metrics;
      json row = {{"score", mode.label},       {"family", fam_name},
                  {"ptla_avg", m.ptla_avg},    {"ptla_p90", m.ptla_p90},
                  {"ttft_avg", m.ttft_avg},    {"ttft_p90", m.ttft_p90}};
      std::string tk, tw;
      if (!m.time_at_k.empty()) {
        row["time_at_k"] = m.time_at_k.front().second;
        tk = tie::num(m.time_at_k.front().second);
      }
      if (!m.throughput_at_w.empty()) {
        row["throughput_at_w"] = m.throughput_at_w.front().second;
        tw = std::to_string(m.throughput_at_w.front().second);
      }
      jrows.push_back(row);
      csv += mode.label + "," + fam_name + "," + tie::num(m.ptla_avg) + "," +
             tie::num(m.ptla_p90) + "," + tie::num(m.ttft_avg) + "," + tie::num(m.ttft_p90) +
             "," + tk + "," + tw + "\n";
      table.push_back({mode.label, fam_name, fmt_g(m.ptla_avg), fmt_g(m.ptla_p90),
                       fmt_g(m.ttft_avg), fmt_g(m.ttft_p90)});
      chart[fam == tie::ScoreFamily::LogT ? 0 : 1].pts.push_back(
          {(double)(&mode - modes.data()), m.ptla_avg});
    }

  json doc;
  doc["config_digest"] = digest;
  doc["seed"] = seed;
  doc["rows"] = jrows;
  write_json(out_path(cfg, "ablation.json"), doc);
  write_file(out_path(cfg, "ablation.csv"), csv);
  if (svg)
    write_file(out_path(cfg, "ablation.svg"),
               svg_line_chart("ablation: avg per-token latency by score mode", "score mode index",
                              "ptla_avg (s)", chart));
  print_table(table);
  return 0;
}

int cmd_repeat_sweep(const json& cfg, const std::string& digest, bool svg) {
  const json& r = cfg["repeat"];
  std::vector<int> reps;
  for (const json& v : r["reps"]) reps.push_back(v.get<int>());
  std::sort(reps.begin(), reps.end());
  reps.erase(std::unique(reps.begin(), reps.end()), reps.end());
  if (reps.empty()) throw ConfigError("repeat.reps must be non-empty");
  for (int v : reps)
    if (v < 2 || v > 100) throw ConfigError("repeat.reps entries must lie in [2, 100]");
  if (reps.back() != 100) throw ConfigError("repeat.reps must include the baseline 100");
  int trials = r["trials"];
  if (trials < 1) throw ConfigError("repeat.trials must be >= 1");
  auto mu_range = range_from(r, "mu_range");
  auto sigma_range = range_from(r, "sigma_range");
  double nu = r["nu"];
  if (sigma_range.first <= 0.0) throw ConfigError("repeat.sigma_range must be positive");
  if (nu <= 0.0) throw ConfigError("repeat.nu must be > 0");
  uint64_t seed = cfg["seed"];

  // per truth draw: 100 samples, fits on nested prefixes, errors vs the
  // 100-sample fit (the baseline compares to itself by construction)
  std::vector<double> mu_err(reps.size(), 0.0), sigma_err(reps.size(), 0.0);
  tie::Rng rng(seed);
  for (int t = 0; t < trials; ++t) {
    double mu = rng.uniform(mu_range.first, mu_range.second);
    double sigma = rng.uniform(sigma_range.first, sigma_range.second);
    tie::LogTParams truth(mu, sigma, nu);
    std::vector<double> x = tie::sample_logt(truth, 100, tie::mix64(seed, (uint64_t)t));
    tie::FitResult base = tie::fit_logt_fixed_nu(x, nu);
    for (size_t i = 0; i < reps.size(); ++i) {
      std::vector<double> prefix(x.begin(), x.begin() + reps[i]);
      tie::FitResult fr = tie::fit_logt_fixed_nu(prefix, nu);
      mu_err[i] += std::abs(fr.mu - base.mu) / std::abs(base.mu);
      sigma_err[i] += std::abs(fr.sigma - base.sigma) / base.sigma;
    }
  }

  json doc;
  doc["config_digest"] = digest;
  doc["seed"] = seed;
  doc["trials"] = trials;
  json jrows = json::array();
  std::string csv = "rep_count,mu_rel_err,sigma_rel_err\n";
  std::vector<std::vector<std::string>> table{{"rep_count", "mu_rel_err", "sigma_rel_err"}};
  Series mu_s{"mu_rel_err", {}}, sigma_s{"sigma_rel_err", {}};
  for (size_t i = 0; i < reps.size(); ++i) {
    double me = mu_err[i] / trials, se = sigma_err[i] / trials;
    jrows.push_back({{"rep_count", reps[i]}, {"mu_rel_err", me}, {"sigma_rel_err", se}});
    csv += std::to_string(reps[i]) + "," + tie::num(me) + "," + tie::num(se) + "\n";
    table.push_back({std::to_string(reps[i]), fmt_g(me), fmt_g(se)});
    mu_s.pts.push_back({(double)reps[i], me});
    sigma_s.pts.push_back({(double)reps[i], se});
  }
  doc["rows"] = jrows;
  write_json(out_path(cfg, "repeat_sweep.json"), doc);
  write_file(out_path(cfg, "repeat_sweep.csv"), csv);
  if (svg)
    write_file(out_path(cfg, "repeat_sweep.svg"),
               svg_line_chart("fit error vs repetition count", "repetitions",
                              "mean relative error", {mu_s, sigma_s}));
  print_table(table);
  return 0;
}

int cmd_nu_sweep(const json& cfg, const std::string& digest, bool svg) {
  const json& s = cfg["nu_sweep"];
  double lo = s["grid_lo"], hi = s["grid_hi"], step = s["grid_step"];
  if (!(lo >= 1.0 && hi <= 10.0 && lo < hi)) throw ConfigError("nu_sweep grid must lie in [1, 10]");
  if (step <= 0.0) throw ConfigError("nu_sweep.grid_step must be > 0");
  uint64_t seed = cfg["seed"];

  std::vector<PromptSamples> prompts;
  if (!s["input"].is_null()) {
    prompts = load_fit_input(s["input"]);
    for (const PromptSamples& p : prompts)
      if (p.lengths.size() < 5)
        throw ConfigError("prompt " + p.prompt_id + " has fewer than 5 samples");
  } else {
    int n_prompts = s["prompts"], draws = s["draws"];
    if (n_prompts < 1 || draws < 5) throw ConfigError("nu_sweep needs prompts >= 1, draws >= 5");
    double true_nu = s["true_nu"];
    if (true_nu <= 0.0) throw ConfigError("nu_sweep.true_nu must be > 0");
    auto mu_range = range_from(s, "mu_range");
    auto sigma_range = range_from(s, "sigma_range");
    if (sigma_range.first <= 0.0) throw ConfigError("nu_sweep.sigma_range must be positive");
    tie::Rng rng(seed);
    for (int i = 0; i < n_prompts; ++i) {
      double mu = rng.uniform(mu_range.first, mu_range.second);
      double sigma = rng.uniform(sigma_range.first, sigma_range.second);
      tie::LogTParams truth(mu, sigma, true_nu);
      prompts.push_back({"synth" + std::to_string(i),
                         tie::sample_logt(truth, (size_t)draws, tie::mix64(seed, (uint64_t)i))});
    }
  }

  json doc;
  doc["config_digest"] = digest;
  doc["seed"] = seed;
  doc["prompts"] = prompts.size();
  json jrows = json::array();
  std::string csv = "nu,mean_p\n";
  std::vector<std::vector<std::string>> table{{"nu", "mean_p"}};
  Series line{"mean KS p-value", {}};
  double best_nu = lo, best_p = -1.0;
  for (double nu = lo; nu <= hi + 1e-9; nu += step) {
    double p_sum = 0.0;
    for (const PromptSamples& p : prompts) {
      tie::FitResult fr = tie::fit_logt_fixed_nu(p.lengths, nu);
      p_sum += tie::ks_test(p.lengths, [&](double x) { return tie::fit_cdf(fr, x); }).p_value;
    }
    double mean_p = p_sum / (double)prompts.size();
    jrows.push_back({{"nu", nu}, {"mean_p", mean_p}});
    csv += tie::num(nu) + "," + tie::num(mean_p) + "\n";
    table.push_back({fmt_g(nu), fmt_g(mean_p)});
    line.pts.push_back({nu, mean_p});
    if (mean_p > best_p) best_p = mean_p, best_nu = nu;
  }
  doc["rows"] = jrows;
  doc["peak_nu"] = best_nu;
  doc["peak_mean_p"] = best_p;
  write_json(out_path(cfg, "nu_sweep.json"), doc);
  write_file(out_path(cfg, "nu_sweep.csv"), csv);
  if (svg)
    write_file(out_path(cfg, "nu_sweep.svg"),
               svg_line_chart("goodness of fit across fixed nu", "nu", "mean KS p-value", {line}));
  print_table(table);
  std::cout << "peak_nu=" << fmt_g(best_nu) << " peak_mean_p=" << fmt_g(best_p) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"uncertainty-aware inference scheduling toolkit"};
  app.require_subcommand(1);

  struct Common {
    std::string config_path, out;
    std::vector<std::string> sets;
    uint64_t seed = 0;
    bool svg = false;
  };
  std::map<std::string, Common> opts;
  auto add_common = [&](CLI::App* sub, bool with_svg) {
    Common& c = opts[sub->get_name()];
    sub->add_option("--config", c.config_path, "JSON config file; overlays the defaults");
    sub->add_option("--seed", c.seed, "global seed");
    sub->add_option("--out", c.out, "output directory");
    sub->add_option("--set", c.sets, "dotted-path override, e.g. --set workload.rps=50");
    if (with_svg) sub->add_flag("--svg", c.svg, "also emit SVG plots");
  };

  auto* fit = app.add_subcommand("fit", "fit length distributions per prompt");
  std::string fit_input, fit_family, sim_policy, sim_family, nusweep_input;
  double fit_nu = 0, tail_alpha = 0, sim_rps = 0, sim_alpha = 0, sim_beta_fixed = 0, nusweep_nu = 0;
  long long tail_n = 0;
  uint64_t sim_n = 0;
  std::string sim_input;
  add_common(fit, false);
  fit->add_option("input", fit_input, "samples as JSONL {\"prompt_id\",\"lengths\"} or CSV");
  fit->add_option("--family", fit_family, "logt|logt-free|lognormal|exponential|all");
  fit->add_option("--nu", fit_nu, "degrees of freedom for the fixed-nu fit");

  auto* tail = app.add_subcommand("tail-check", "verify the termination-mixture tail law");
  add_common(tail, true);
  tail->add_option("--alpha", tail_alpha, "tail exponent of the generating mixture");
  tail->add_option("--n", tail_n, "number of trajectories");

  auto* sim = app.add_subcommand("simulate", "run the batching simulator");
  add_common(sim, true);
  sim->add_option("--policy", sim_policy, "fcfs|sept|tie");
  sim->add_option("--rps", sim_rps, "arrival rate; disables workload.rps_sweep");
  sim->add_option("--n", sim_n, "number of requests");
  sim->add_option("--family", sim_family, "scoring family: logt|lognormal");
  sim->add_option("--alpha", sim_alpha, "CVaR level");
  sim->add_option("--beta-fixed", sim_beta_fixed, "use a fixed beta instead of adaptive");
  sim->add_option("--input", sim_input, "JSONL trace to replay instead of synthetic workload");

  auto* abl = app.add_subcommand("ablate", "score-mode x family grid on one workload");
  add_common(abl, true);

  auto* rep = app.add_subcommand("repeat-sweep", "fit error vs repetition count");
  add_common(rep, true);

  auto* nus = app.add_subcommand("nu-sweep", "goodness of fit across the nu grid");
  add_common(nus, true);
  nus->add_option("--input", nusweep_input, "fit-schema input instead of synthetic data");
  nus->add_option("--nu", nusweep_nu, "true nu of the synthetic data");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  const Common& c = opts[name];
  try {
    json cfg = default_config();
    if (!c.config_path.empty()) merge_config(cfg, load_config_file(c.config_path), "");
    for (const std::string& s : c.sets) apply_set(cfg, s);
    if (sub->count("--seed")) cfg["seed"] = c.seed;
    if (sub->count("--out")) cfg["out"] = c.out;
    if (name == "fit") {
      if (sub->count("input")) cfg["fit"]["input"] = fit_input;
      if (sub->count("--family")) cfg["fit"]["family"] = fit_family;
      if (sub->count("--nu")) cfg["fit"]["nu"] = fit_nu;
    } else if (name == "tail-check") {
      if (sub->count("--alpha")) cfg["tail"]["alpha"] = tail_alpha;
      if (sub->count("--n")) cfg["tail"]["n"] = tail_n;
    } else if (name == "simulate") {
      if (sub->count("--policy")) cfg["sim"]["policy"] = sim_policy;
      if (sub->count("--rps")) {
        cfg["workload"]["rps"] = sim_rps;
        cfg["workload"]["rps_sweep"] = json::array();
      }
      if (sub->count("--n")) cfg["workload"]["n_requests"] = sim_n;
      if (sub->count("--family")) cfg["predictor"]["family"] = sim_family;
      if (sub->count("--alpha")) cfg["score"]["alpha"] = sim_alpha;
      if (sub->count("--beta-fixed")) {
        cfg["score"]["beta_mode"] = "fixed";
        cfg["score"]["beta_fixed"] = sim_beta_fixed;
      }
      if (sub->count("--input")) cfg["workload"]["trace"] = sim_input;
    } else if (name == "nu-sweep") {
      if (sub->count("--input")) cfg["nu_sweep"]["input"] = nusweep_input;
      if (sub->count("--nu")) cfg["nu_sweep"]["true_nu"] = nusweep_nu;
    }
    cfg["command"] = name;
    json digest_doc = cfg;  // where outputs land does not change what they say
    digest_doc.erase("out");
    std::string digest = tie::config_digest(digest_doc);

    if (name == "fit") return cmd_fit(cfg, digest);
    if (name == "tail-check") return cmd_tail_check(cfg, digest, c.svg);
    if (name == "simulate") return cmd_simulate(cfg, digest, c.svg);
    if (name == "ablate") return cmd_ablate(cfg, digest, c.svg);
    if (name == "repeat-sweep") return cmd_repeat_sweep(cfg, digest, c.svg);
    if (name == "nu-sweep") return cmd_nu_sweep(cfg, digest, c.svg);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
