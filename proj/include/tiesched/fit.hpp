#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace tie {

enum class FitFamily { LogTFixedNu, LogTFreeNu, LogNormal, Exponential };

std::string family_name(FitFamily f);

struct FitResult {
  FitFamily family;
  double mu = 0.0;     // location of log(x) (log-t / log-normal)
  double sigma = 0.0;  // scale of log(x)
  double nu = 0.0;     // degrees of freedom (log-t families)
  double rate = 0.0;   // exponential only
  double log_likelihood = 0.0;
  bool converged = false;
  int iterations = 0;
  bool degenerate = false;  // all-identical samples; sigma pinned at the floor
};

// log-likelihood of log-t data: sum over ln t_nu(z_i) - ln sigma - ln x_i
double logt_loglik(const std::vector<double>& x, double mu, double sigma, double nu);

// analytic (d/dmu, d/dsigma)
std::array<double, 2> logt_loglik_grad(const std::vector<double>& x, double mu, double sigma,
                                       double nu);

// quasi-Newton over (mu, ln sigma); init mu = median(ln x), sigma = 1.4826*MAD
FitResult fit_logt_fixed_nu(const std::vector<double>& x, double nu = 3.5);

std::vector<double> default_nu_grid();  // 1.0 .. 10.0 step 0.5

// profile over the nu grid, keep the best fixed-nu fit
FitResult fit_logt_free_nu(const std::vector<double>& x,
                           const std::vector<double>& nu_grid = default_nu_grid());

FitResult fit_lognormal(const std::vector<double>& x);  // closed form
FitResult fit_exponential(const std::vector<double>& x);

// CDF of the fitted family at x (for goodness-of-fit)
double fit_cdf(const FitResult& fit, double x);

struct KsResult {
  double statistic;
  double p_value;
  int n;
};

// one-sample Kolmogorov-Smirnov against a fully-specified CDF;
// p-value from the asymptotic Kolmogorov series
KsResult ks_test(const std::vector<double>& samples, const std::function<double(double)>& cdf);

struct TailStats {
  double skewness;
  double cv;
  double p90_over_p50;
  double p99_over_p50;
  double top10_share;  // share of total mass held by the largest 10% of samples
};

TailStats tail_stats(const std::vector<double>& samples);

struct TailLawFit {
  double alpha_hat;
  double intercept;
  double r_squared;
  int n_tail_points;
};

// least squares on ln S(n) vs ln n over log-spaced n >= n_min with
// survival count floor 50; needs at least 5 usable points
TailLawFit fit_tail_slope(const std::vector<long long>& lengths, long long n_min);

}  // namespace tie
