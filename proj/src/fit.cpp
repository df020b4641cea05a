#include "tiesched/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "tiesched/dist.hpp"

namespace tie {

namespace {

constexpr double kSigmaFloor = 1e-6;
constexpr double kLogSigmaFloor = -13.815510557964274;  // ln(1e-6)
constexpr int kMaxIterations = 500;

void check_samples(const std::vector<double>& x, size_t min_n, const char* who) {
  if (x.size() < min_n)
    throw std::invalid_argument(std::string(who) + ": need at least " + std::to_string(min_n) +
                                " samples, got " + std::to_string(x.size()));
  for (double v : x)
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::domain_error(std::string(who) + ": samples must be finite and > 0");
}

double median_sorted(const std::vector<double>& v) {
  size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::string family_name(FitFamily f) {
  switch (f) {
    case FitFamily::LogTFixedNu: return "logt";
    case FitFamily::LogTFreeNu: return "logt_free_nu";
    case FitFamily::LogNormal: return "lognormal";
    case FitFamily::Exponential: return "exponential";
  }
  return "?";
}

double logt_loglik(const std::vector<double>& x, double mu, double sigma, double nu) {
  check_samples(x, 1, "logt_loglik");
  if (!(sigma > 0.0) || !(nu > 0.0)) throw std::domain_error("logt_loglik: sigma and nu must be > 0");
  double lognorm = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu)
                 - 0.5 * std::log(nu * 3.14159265358979323846);
  double ll = 0.0;
  for (double v : x) {
    double lx = std::log(v);
    double z = (lx - mu) / sigma;
    ll += lognorm - 0.5 * (nu + 1.0) * std::log1p(z * z / nu) - std::log(sigma) - lx;
  }
  return ll;
}

std::array<double, 2> logt_loglik_grad(const std::vector<double>& x, double mu, double sigma,
                                       double nu) {
  check_samples(x, 1, "logt_loglik_grad");
  if (!(sigma > 0.0) || !(nu > 0.0))
    throw std::domain_error("logt_loglik_grad: sigma and nu must be > 0");
  double gmu = 0.0, gsigma = 0.0;
  for (double v : x) {
    double z = (std::log(v) - mu) / sigma;
    double w = (nu + 1.0) * z / (nu + z * z);
    gmu += w / sigma;
    gsigma += (w * z - 1.0) / sigma;
  }
  return {gmu, gsigma};
}

FitResult fit_logt_fixed_nu(const std::vector<double>& x, double nu) {
  check_samples(x, 3, "fit_logt_fixed_nu");
  if (!(nu > 0.0) || !std::isfinite(nu))
    throw std::domain_error("fit_logt_fixed_nu: nu must be finite and > 0");

  std::vector<double> lx(x.size());
  for (size_t i = 0; i < x.size(); ++i) lx[i] = std::log(x[i]);
  std::sort(lx.begin(), lx.end());
  double mu0 = median_sorted(lx);

  std::vector<double> dev(lx.size());
  for (size_t i = 0; i < lx.size(); ++i) dev[i] = std::fabs(lx[i] - mu0);
  std::sort(dev.begin(), dev.end());
  double sigma0 = 1.4826 * median_sorted(dev);

  FitResult res;
  res.family = FitFamily::LogTFixedNu;
  res.nu = nu;

  if (sigma0 < kSigmaFloor) {
    // all samples (effectively) identical: scale is unidentifiable
    res.mu = mu0;
    res.sigma = kSigmaFloor;
    res.degenerate = true;
    res.converged = true;
    res.log_likelihood = logt_loglik(x, res.mu, res.sigma, nu);
    return res;
  }

  // minimize f(theta) = -loglik at theta = (mu, s = ln sigma); BFGS with
  // Armijo backtracking, s projected onto [ln floor, inf)
  auto fval = [&](double mu, double s) { return -logt_loglik(x, mu, std::exp(s), nu); };
  auto fgrad = [&](double mu, double s) -> std::array<double, 2> {
    double sigma = std::exp(s);
    auto g = logt_loglik_grad(x, mu, sigma, nu);
    return {-g[0], -g[1] * sigma};  // chain rule d/ds = sigma * d/dsigma
  };

  double th[2] = {mu0, std::log(sigma0)};
  double f = fval(th[0], th[1]);
  auto g = fgrad(th[0], th[1]);
  double H[2][2] = {{1.0, 0.0}, {0.0, 1.0}};  // inverse-Hessian approximation

  const double gtol = 1e-8;
  int iter = 0;
  bool converged = false;
  for (; iter < kMaxIterations; ++iter) {
    if (std::max(std::fabs(g[0]), std::fabs(g[1])) < gtol) {
      converged = true;
      break;
    }
    double p[2] = {-(H[0][0] * g[0] + H[0][1] * g[1]), -(H[1][0] * g[0] + H[1][1] * g[1])};
    double descent = p[0] * g[0] + p[1] * g[1];
    if (descent >= 0.0) {  // reset a spoiled approximation
      H[0][0] = H[1][1] = 1.0;
      H[0][1] = H[1][0] = 0.0;
      p[0] = -g[0];
      p[1] = -g[1];
      descent = -(g[0] * g[0] + g[1] * g[1]);
    }
    double step = 1.0;
    double f_new = f;
    double th_new[2] = {th[0], th[1]};
    for (int ls = 0; ls < 60; ++ls) {
      th_new[0] = th[0] + step * p[0];
      th_new[1] = std::max(th[1] + step * p[1], kLogSigmaFloor);
      f_new = fval(th_new[0], th_new[1]);
      if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * descent) break;
      step *= 0.5;
    }
    if (!(f_new < f) && std::max(std::fabs(g[0]), std::fabs(g[1])) < 1e-6) {
      converged = true;  // line search stalled at numerical optimum
      break;
    }
    auto g_new = fgrad(th_new[0], th_new[1]);
    double sdiff[2] = {th_new[0] - th[0], th_new[1] - th[1]};
    double ydiff[2] = {g_new[0] - g[0], g_new[1] - g[1]};
    double sy = sdiff[0] * ydiff[0] + sdiff[1] * ydiff[1];
    if (sy > 1e-12) {
      double rho = 1.0 / sy;
      // H = (I - rho s y') H (I - rho y s') + rho s s'
      double Hy[2] = {H[0][0] * ydiff[0] + H[0][1] * ydiff[1],
                      H[1][0] * ydiff[0] + H[1][1] * ydiff[1]};
      double yHy = ydiff[0] * Hy[0] + ydiff[1] * Hy[1];
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          H[i][j] += rho * ((1.0 + rho * yHy) * sdiff[i] * sdiff[j] - sdiff[i] * Hy[j] -
                            Hy[i] * sdiff[j]);
    }
    th[0] = th_new[0];
    th[1] = th_new[1];
    f = f_new;
    g = g_new;
  }

  res.mu = th[0];
  res.sigma = std::exp(th[1]);
  if (res.sigma <= kSigmaFloor) {
    res.sigma = kSigmaFloor;
    res.degenerate = true;
  }
  res.converged = converged;
  res.iterations = iter;
  res.log_likelihood = logt_loglik(x, res.mu, res.sigma, nu);
  return res;
}

std::vector<double> default_nu_grid() {
  std::vector<double> g;
  for (double v = 1.0; v <= 10.0 + 1e-9; v += 0.5) g.push_back(v);
  return g;
}

FitResult fit_logt_free_nu(const std::vector<double>& x, const std::vector<double>& nu_grid) {
  check_samples(x, 3, "fit_logt_free_nu");
  if (nu_grid.empty()) throw std::invalid_argument("fit_logt_free_nu: empty nu grid");
  FitResult best;
  bool have = false;
  for (double nu : nu_grid) {
    FitResult r = fit_logt_fixed_nu(x, nu);
    if (!have || r.log_likelihood > best.log_likelihood) {
      best = r;
      have = true;
    }
  }
  best.family = FitFamily::LogTFreeNu;
  return best;
}

FitResult fit_lognormal(const std::vector<double>& x) {
  check_samples(x, 2, "fit_lognormal");
  double n = (double)x.size();
  double mean = 0.0;
  for (double v : x) mean += std::log(v);
  mean /= n;
  double var = 0.0;
  for (double v : x) {
    double d = std::log(v) - mean;
    var += d * d;
  }
  var /= n;

  FitResult res;
  res.family = FitFamily::LogNormal;
  res.mu = mean;
  res.sigma = std::sqrt(var);
  res.converged = true;
  if (res.sigma < kSigmaFloor) {
    res.sigma = kSigmaFloor;
    res.degenerate = true;
  }
  double ll = 0.0;
  for (double v : x) {
    double z = (std::log(v) - res.mu) / res.sigma;
    ll += -std::log(res.sigma * v) - 0.5 * std::log(2.0 * 3.14159265358979323846) - 0.5 * z * z;
  }
  res.log_likelihood = ll;
  return res;
}

FitResult fit_exponential(const std::vector<double>& x) {
  check_samples(x, 1, "fit_exponential");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= (double)x.size();

  FitResult res;
  res.family = FitFamily::Exponential;
  res.rate = 1.0 / mean;
  res.converged = true;
  res.log_likelihood = (double)x.size() * std::log(res.rate) - res.rate * mean * (double)x.size();
  return res;
}

double fit_cdf(const FitResult& fit, double x) {
  if (!(x > 0.0)) return 0.0;
  switch (fit.family) {
    case FitFamily::LogTFixedNu:
    case FitFamily::LogTFreeNu:
      return t_cdf((std::log(x) - fit.mu) / fit.sigma, fit.nu);
    case FitFamily::LogNormal:
      return normal_cdf((std::log(x) - fit.mu) / fit.sigma);
    case FitFamily::Exponential:
      return -std::expm1(-fit.rate * x);
  }
  return 0.0;
}

KsResult ks_test(const std::vector<double>& samples, const std::function<double(double)>& cdf) {
  if (samples.size() < 5) throw std::invalid_argument("ks_test: need at least 5 samples");
  std::vector<double> s(samples);
  std::sort(s.begin(), s.end());
  double n = (double)s.size();
  double d = 0.0;
  for (size_t i = 0; i < s.size(); ++i) {
    double f = cdf(s[i]);
    if (!(f >= 0.0 && f <= 1.0))
      throw std::domain_error("ks_test: cdf returned a value outside [0, 1]");
    d = std::max(d, std::max(((double)i + 1.0) / n - f, f - (double)i / n));
  }
  double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double p = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    double term = sign * 2.0 * std::exp(-2.0 * j * j * lambda * lambda);
    p += term;
    if (std::fabs(term) < 1e-12) break;
    sign = -sign;
  }
  p = std::min(1.0, std::max(0.0, p));
  return {d, p, (int)s.size()};
}

TailStats tail_stats(const std::vector<double>& samples) {
  if (samples.size() < 10) throw std::invalid_argument("tail_stats: need at least 10 samples");
  for (double v : samples)
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::domain_error("tail_stats: samples must be finite and > 0");
  std::vector<double> s(samples);
  std::sort(s.begin(), s.end());
  double n = (double)s.size();
  double mean = 0.0, total = 0.0;
  for (double v : s) total += v;
  mean = total / n;
  double m2 = 0.0, m3 = 0.0;
  for (double v : s) {
    double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= n;
  m3 /= n;

  auto rank = [&](double q) {  // nearest-rank percentile
    size_t k = (size_t)std::ceil(q * n);
    k = std::max<size_t>(1, std::min(k, s.size()));
    return s[k - 1];
  };
  double p50 = rank(0.50), p90 = rank(0.90), p99 = rank(0.99);

  size_t k10 = (size_t)std::ceil(0.1 * n);
  double top = 0.0;
  for (size_t i = s.size() - k10; i < s.size(); ++i) top += s[i];

  TailStats st;
  st.skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
  st.cv = mean > 0.0 ? std::sqrt(m2) / mean : 0.0;
  st.p90_over_p50 = p50 > 0.0 ? p90 / p50 : 1.0;
  st.p99_over_p50 = p50 > 0.0 ? p99 / p50 : 1.0;
  st.top10_share = total > 0.0 ? top / total : 0.0;
  return st;
}

TailLawFit fit_tail_slope(const std::vector<long long>& lengths, long long n_min) {
  if (lengths.size() < 10000)
    throw std::invalid_argument("fit_tail_slope: need at least 10^4 lengths");
  if (n_min < 1) throw std::domain_error("fit_tail_slope: n_min must be >= 1");
  std::vector<long long> s(lengths);
  std::sort(s.begin(), s.end());
  double N = (double)s.size();
  long long max_len = s.back();

  // log-spaced survival grid, 16 points per decade, deduplicated
  std::vector<double> ln_n, ln_s;
  const double factor = std::pow(10.0, 1.0 / 16.0);
  long long prev = -1;
  for (double nf = (double)n_min; nf <= (double)max_len; nf *= factor) {
    long long n = (long long)std::llround(nf);
    if (n <= prev) continue;
    prev = n;
    auto it = std::upper_bound(s.begin(), s.end(), n);
    double surv = (double)(s.end() - it) / N;
    if (surv < 50.0 / N) break;  // below the count floor the curve is noise
    ln_n.push_back(std::log((double)n));
    ln_s.push_back(std::log(surv));
  }
  if (ln_n.size() < 5)
    throw std::invalid_argument("fit_tail_slope: insufficient tail (fewer than 5 usable points)");

  double m = (double)ln_n.size();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (size_t i = 0; i < ln_n.size(); ++i) {
    sx += ln_n[i];
    sy += ln_s[i];
    sxx += ln_n[i] * ln_n[i];
    sxy += ln_n[i] * ln_s[i];
    syy += ln_s[i] * ln_s[i];
  }
  double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  double intercept = (sy - slope * sx) / m;
  double ss_res = 0.0, ss_tot = 0.0, ybar = sy / m;
  for (size_t i = 0; i < ln_n.size(); ++i) {
    double fitv = intercept + slope * ln_n[i];
    ss_res += (ln_s[i] - fitv) * (ln_s[i] - fitv);
    ss_tot += (ln_s[i] - ybar) * (ln_s[i] - ybar);
  }

  TailLawFit out;
  out.alpha_hat = -slope;
  out.intercept = intercept;
  out.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  out.n_tail_points = (int)ln_n.size();
  return out;
}

}  // namespace tie
