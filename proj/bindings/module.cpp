// Python surface: the censored log-t distribution machinery, the fitting and
// tail-law estimators, workload generation, TIE scoring, and the simulator.
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tiesched/dist.hpp"
#include "tiesched/fit.hpp"
#include "tiesched/predictor.hpp"
#include "tiesched/sched.hpp"
#include "tiesched/sim.hpp"
#include "tiesched/workload.hpp"

namespace py = pybind11;
using namespace tie;

PYBIND11_MODULE(_core, m) {
  m.doc() = "censored log-t length modeling, tail-risk scores, and a "
            "continuous-batching scheduling simulator";
  m.attr("__version__") = "0.1.0";

  // distribution
  py::class_<LogTParams>(m, "LogTParams")
      .def(py::init<double, double, double>(), py::arg("mu"), py::arg("sigma"), py::arg("nu"))
      .def_readonly("mu", &LogTParams::mu)
      .def_readonly("sigma", &LogTParams::sigma)
      .def_readonly("nu", &LogTParams::nu)
      .def_readonly("sigma_clamped", &LogTParams::sigma_clamped)
      .def("__repr__", [](const LogTParams& p) {
        return "LogTParams(mu=" + std::to_string(p.mu) + ", sigma=" + std::to_string(p.sigma) +
               ", nu=" + std::to_string(p.nu) + ")";
      });

  py::class_<CensoredLogT>(m, "CensoredLogT")
      .def(py::init<LogTParams, double>(), py::arg("dist"), py::arg("x_max"))
      .def_readonly("dist", &CensoredLogT::dist)
      .def_readonly("x_max", &CensoredLogT::x_max);

  py::class_<McContext>(m, "McContext")
      .def(py::init<double, int, uint64_t>(), py::arg("nu"),
           py::arg("n_samples") = McContext::kDefaultSamples,
           py::arg("seed") = McContext::kDefaultSeed)
      .def_readonly("nu", &McContext::nu)
      .def_readonly("seed", &McContext::seed)
      .def_property_readonly("n_samples",
                             [](const McContext& mc) { return mc.samples.size(); });

  m.def("t_pdf", &t_pdf, py::arg("y"), py::arg("nu"));
  m.def("t_cdf", &t_cdf, py::arg("y"), py::arg("nu"));
  m.def("t_quantile", &t_quantile, py::arg("p"), py::arg("nu"));
  m.def("logt_pdf", &logt_pdf, py::arg("x"), py::arg("params"));
  m.def("logt_cdf", &logt_cdf, py::arg("x"), py::arg("params"));
  m.def("sample_logt", &sample_logt, py::arg("params"), py::arg("n"), py::arg("seed"));
  m.def("psi", &psi, py::arg("y"), py::arg("params"), py::arg("mc"));
  m.def("censored_expectation", &censored_expectation, py::arg("censored"), py::arg("mc"));
  m.def("censored_cvar", &censored_cvar, py::arg("censored"), py::arg("mc"), py::arg("alpha"));
  m.def("lognormal_censored_expectation", &lognormal_censored_expectation, py::arg("mu"),
        py::arg("sigma"), py::arg("x_max"));
  m.def("lognormal_censored_cvar", &lognormal_censored_cvar, py::arg("mu"), py::arg("sigma"),
        py::arg("x_max"), py::arg("alpha"));

  // fitting
  py::enum_<FitFamily>(m, "FitFamily")
      .value("LogTFixedNu", FitFamily::LogTFixedNu)
      .value("LogTFreeNu", FitFamily::LogTFreeNu)
      .value("LogNormal", FitFamily::LogNormal)
      .value("Exponential", FitFamily::Exponential);

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("family", &FitResult::family)
      .def_readonly("mu", &FitResult::mu)
      .def_readonly("sigma", &FitResult::sigma)
      .def_readonly("nu", &FitResult::nu)
      .def_readonly("rate", &FitResult::rate)
      .def_readonly("log_likelihood", &FitResult::log_likelihood)
      .def_readonly("converged", &FitResult::converged)
      .def_readonly("iterations", &FitResult::iterations)
      .def_readonly("degenerate", &FitResult::degenerate);

  m.def("logt_loglik", &logt_loglik, py::arg("x"), py::arg("mu"), py::arg("sigma"), py::arg("nu"));
  m.def("logt_loglik_grad", &logt_loglik_grad, py::arg("x"), py::arg("mu"), py::arg("sigma"),
        py::arg("nu"));
  m.def("fit_logt_fixed_nu", &fit_logt_fixed_nu, py::arg("x"), py::arg("nu") = 3.5);
  m.def("fit_logt_free_nu", &fit_logt_free_nu, py::arg("x"),
        py::arg("nu_grid") = default_nu_grid());
  m.def("fit_lognormal", &fit_lognormal, py::arg("x"));
  m.def("fit_exponential", &fit_exponential, py::arg("x"));
  m.def("fit_cdf", &fit_cdf, py::arg("fit"), py::arg("x"));

  py::class_<KsResult>(m, "KsResult")
      .def_readonly("statistic", &KsResult::statistic)
      .def_readonly("p_value", &KsResult::p_value)
      .def_readonly("n", &KsResult::n);

  m.def("ks_test", &ks_test, py::arg("samples"), py::arg("cdf"));
  m.def(
      "ks_test_fit",
      [](const std::vector<double>& samples, const FitResult& f) {
        return ks_test(samples, [&](double v) { return fit_cdf(f, v); });
      },
      py::arg("samples"), py::arg("fit"),
      "KS test of samples against a fitted family's CDF (avoids a Python callback per sample)");

  py::class_<TailStats>(m, "TailStats")
      .def_readonly("skewness", &TailStats::skewness)
      .def_readonly("cv", &TailStats::cv)
      .def_readonly("p90_over_p50", &TailStats::p90_over_p50)
      .def_readonly("p99_over_p50", &TailStats::p99_over_p50)
      .def_readonly("top10_share", &TailStats::top10_share);
  m.def("tail_stats", &tail_stats, py::arg("samples"));

  py::class_<TailLawFit>(m, "TailLawFit")
      .def_readonly("alpha_hat", &TailLawFit::alpha_hat)
      .def_readonly("intercept", &TailLawFit::intercept)
      .def_readonly("r_squared", &TailLawFit::r_squared)
      .def_readonly("n_tail_points", &TailLawFit::n_tail_points);
  m.def("fit_tail_slope", &fit_tail_slope, py::arg("lengths"), py::arg("n_min") = 40);

  // workload
  py::class_<Request>(m, "Request")
      .def(py::init<>())
      .def_readwrite("id", &Request::id)
      .def_readwrite("arrival_s", &Request::arrival_s)
      .def_readwrite("prompt_tokens", &Request::prompt_tokens)
      .def_readwrite("true_output_tokens", &Request::true_output_tokens)
      .def_readwrite("max_tokens", &Request::max_tokens)
      .def_readwrite("true_mu", &Request::true_mu)
      .def_readwrite("true_sigma", &Request::true_sigma);

  py::class_<TailLawSpec>(m, "TailLawSpec")
      .def(py::init<double, size_t>(), py::arg("alpha"), py::arg("n"))
      .def_readwrite("alpha", &TailLawSpec::alpha)
      .def_readwrite("n", &TailLawSpec::n);

  py::class_<WorkloadSpec>(m, "WorkloadSpec")
      .def(py::init<>())
      .def_readwrite("n_requests", &WorkloadSpec::n_requests)
      .def_readwrite("rps", &WorkloadSpec::rps)
      .def_readwrite("mu_range", &WorkloadSpec::mu_range)
      .def_readwrite("sigma_range", &WorkloadSpec::sigma_range)
      .def_readwrite("nu", &WorkloadSpec::nu)
      .def_readwrite("prompt_range", &WorkloadSpec::prompt_range)
      .def_readwrite("max_tokens", &WorkloadSpec::max_tokens);

  m.def("gen_termination_mixture", &gen_termination_mixture, py::arg("spec"), py::arg("seed"));
  m.def("gen_logt_workload", &gen_logt_workload, py::arg("spec"), py::arg("seed"));
  m.def("poisson_arrivals", &poisson_arrivals, py::arg("rps"), py::arg("n"), py::arg("seed"));
  m.def("save_trace", &save_trace, py::arg("requests"), py::arg("path"));
  m.def("load_trace", &load_trace, py::arg("path"),
        py::arg("fill_rps") = std::optional<double>{}, py::arg("seed") = 0);

  // scoring and policies
  py::enum_<Policy>(m, "Policy")
      .value("FCFS", Policy::FCFS)
      .value("SEPT", Policy::SEPT)
      .value("TIE", Policy::TIE);

  py::enum_<BetaMode>(m, "BetaMode")
      .value("Fixed", BetaMode::Fixed)
      .value("AdaptiveLinear", BetaMode::AdaptiveLinear);

  py::class_<ScoreConfig>(m, "ScoreConfig")
      .def(py::init<>())
      .def_readwrite("alpha", &ScoreConfig::alpha)
      .def_readwrite("beta_mode", &ScoreConfig::beta_mode)
      .def_readwrite("beta_fixed", &ScoreConfig::beta_fixed)
      .def_readwrite("beta_max", &ScoreConfig::beta_max)
      .def_readwrite("q_sat", &ScoreConfig::q_sat)
      .def_readwrite("rebuild_threshold", &ScoreConfig::rebuild_threshold);

  m.def("compute_beta", &compute_beta, py::arg("config"), py::arg("queue_len"));
  m.def("compute_score", &compute_score, py::arg("expectation"), py::arg("cvar"), py::arg("beta"));

  // predictor
  py::class_<PredictedDist>(m, "PredictedDist")
      .def_readonly("mu_hat", &PredictedDist::mu_hat)
      .def_readonly("sigma_hat", &PredictedDist::sigma_hat);

  py::class_<NoiseSpec>(m, "NoiseSpec")
      .def(py::init<>())
      .def_readwrite("mu_sd", &NoiseSpec::mu_sd)
      .def_readwrite("log_sigma_sd", &NoiseSpec::log_sigma_sd);

  py::class_<BatcherConfig>(m, "BatcherConfig")
      .def(py::init<>())
      .def_readwrite("timeout_s", &BatcherConfig::timeout_s)
      .def_readwrite("max_batch", &BatcherConfig::max_batch)
      .def_readwrite("latency_base_s", &BatcherConfig::latency_base_s)
      .def_readwrite("latency_per_item_s", &BatcherConfig::latency_per_item_s);

  m.def("oracle_predict", &oracle_predict, py::arg("request"));
  m.def("noisy_predict", &noisy_predict, py::arg("request"), py::arg("noise"), py::arg("seed"));
  m.def("point_predict", &point_predict, py::arg("request"), py::arg("noise"), py::arg("seed"),
        py::arg("mc"));

  py::class_<Submission>(m, "Submission")
      .def(py::init<uint64_t, double>(), py::arg("req_id"), py::arg("submit_s"))
      .def_readonly("req_id", &Submission::req_id)
      .def_readonly("submit_s", &Submission::submit_s);

  py::class_<PredictionReady>(m, "PredictionReady")
      .def_readonly("req_id", &PredictionReady::req_id)
      .def_readonly("ready_s", &PredictionReady::ready_s);

  m.def("batch_schedule", &batch_schedule, py::arg("submissions"), py::arg("config"));

  // simulator
  py::enum_<PredictorKind>(m, "PredictorKind")
      .value("NoPredictor", PredictorKind::None)
      .value("Oracle", PredictorKind::Oracle)
      .value("Noisy", PredictorKind::Noisy);

  py::enum_<ScoreFamily>(m, "ScoreFamily")
      .value("LogT", ScoreFamily::LogT)
      .value("LogNormal", ScoreFamily::LogNormal);

  py::class_<EngineConfig>(m, "EngineConfig")
      .def(py::init<>())
      .def_readwrite("batch_slots", &EngineConfig::batch_slots)
      .def_readwrite("c0", &EngineConfig::c0)
      .def_readwrite("c1", &EngineConfig::c1)
      .def_readwrite("c2", &EngineConfig::c2);

  py::class_<PredictorConfig>(m, "PredictorConfig")
      .def(py::init<>())
      .def_readwrite("kind", &PredictorConfig::kind)
      .def_readwrite("family", &PredictorConfig::family)
      .def_readwrite("noise", &PredictorConfig::noise)
      .def_readwrite("batched", &PredictorConfig::batched)
      .def_readwrite("batcher", &PredictorConfig::batcher)
      .def_readwrite("nu", &PredictorConfig::nu)
      .def_readwrite("mc_samples", &PredictorConfig::mc_samples)
      .def_readwrite("mc_seed", &PredictorConfig::mc_seed);

  py::class_<RequestEvent>(m, "RequestEvent")
      .def_readonly("req_id", &RequestEvent::req_id)
      .def_readonly("arrival_s", &RequestEvent::arrival_s)
      .def_readonly("predict_ready_s", &RequestEvent::predict_ready_s)
      .def_readonly("admit_s", &RequestEvent::admit_s)
      .def_readonly("first_token_s", &RequestEvent::first_token_s)
      .def_readonly("completion_s", &RequestEvent::completion_s)
      .def_readonly("emitted_tokens", &RequestEvent::emitted_tokens);

  py::class_<Metrics>(m, "Metrics")
      .def_readonly("ttft_avg", &Metrics::ttft_avg)
      .def_readonly("ttft_p90", &Metrics::ttft_p90)
      .def_readonly("ptla_avg", &Metrics::ptla_avg)
      .def_readonly("ptla_p90", &Metrics::ptla_p90)
      .def_readonly("time_at_k", &Metrics::time_at_k)
      .def_readonly("throughput_at_w", &Metrics::throughput_at_w);

  py::class_<HeatmapSpec>(m, "HeatmapSpec")
      .def(py::init<>())
      .def_readwrite("time_bins", &HeatmapSpec::time_bins)
      .def_readwrite("len_bins", &HeatmapSpec::len_bins)
      .def_readwrite("time_max", &HeatmapSpec::time_max)
      .def_readwrite("len_max", &HeatmapSpec::len_max);

  py::class_<Heatmap>(m, "Heatmap")
      .def_readonly("spec", &Heatmap::spec)
      .def_readonly("counts", &Heatmap::counts);

  py::class_<SimReport>(m, "SimReport")
      .def_readonly("seed", &SimReport::seed)
      .def_readonly("policy", &SimReport::policy)
      .def_readonly("events", &SimReport::events)
      .def_readonly("metrics", &SimReport::metrics);

  m.def("run_sim", &run_sim, py::arg("workload"), py::arg("policy"), py::arg("score_config"),
        py::arg("engine_config"), py::arg("predictor_config"), py::arg("seed"),
        py::arg("ks") = std::vector<uint64_t>{}, py::arg("ws") = std::vector<double>{});
  m.def("summarize", &summarize, py::arg("events"), py::arg("ks"), py::arg("ws"));
  m.def("heatmap", &heatmap, py::arg("events"), py::arg("spec"));
}
