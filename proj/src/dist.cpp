#include "tiesched/dist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "tiesched/rng.hpp"

namespace tie {

namespace {

constexpr double kSigmaFloor = 1e-9;

bool finite(double v) { return std::isfinite(v); }

// continued fraction for the incomplete beta (modified Lentz)
double incbeta_cf(double a, double b, double x) {
  const double tiny = 1e-300;
  const double eps = 1e-15;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 100000; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0) || !finite(a) || !finite(b))
    throw std::domain_error("regularized_incomplete_beta: a and b must be finite and > 0");
  if (!(x >= 0.0 && x <= 1.0))
    throw std::domain_error("regularized_incomplete_beta: x must lie in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  double logbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  double front = std::exp(a * std::log(x) + b * std::log1p(-x) - logbeta);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * incbeta_cf(a, b, x) / a;
  return 1.0 - front * incbeta_cf(b, a, 1.0 - x) / b;
}

double t_pdf(double y, double nu) {
  if (!finite(y)) throw std::domain_error("t_pdf: y must be finite");
  if (!(nu > 0.0) || !finite(nu)) throw std::domain_error("t_pdf: nu must be finite and > 0");
  double lognorm = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu)
                 - 0.5 * std::log(nu * 3.14159265358979323846);
  return std::exp(lognorm - 0.5 * (nu + 1.0) * std::log1p(y * y / nu));
}

double t_cdf(double y, double nu) {
  if (!(nu > 0.0) || !finite(nu)) throw std::domain_error("t_cdf: nu must be finite and > 0");
  if (std::isnan(y)) throw std::domain_error("t_cdf: y must not be NaN");
  if (y == std::numeric_limits<double>::infinity()) return 1.0;
  if (y == -std::numeric_limits<double>::infinity()) return 0.0;
  double x = nu / (y * y + nu);
  double tail = regularized_incomplete_beta(0.5 * nu, 0.5, x);
  return y >= 0.0 ? 1.0 - 0.5 * tail : 0.5 * tail;
}

double t_quantile(double p, double nu) {
  if (!(nu > 0.0) || !finite(nu)) throw std::domain_error("t_quantile: nu must be finite and > 0");
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("t_quantile: p must lie in (0, 1)");
  if (p == 0.5) return 0.0;
  // bracket, bisect, then Newton polish against the pdf
  double lo = -1.0, hi = 1.0;
  while (t_cdf(lo, nu) > p) lo *= 2.0;
  while (t_cdf(hi, nu) < p) hi *= 2.0;
  double y = 0.0;
  for (int i = 0; i < 200 && hi - lo > 1e-14 * std::max(1.0, std::fabs(lo)); ++i) {
    y = 0.5 * (lo + hi);
    if (t_cdf(y, nu) < p) lo = y; else hi = y;
  }
  y = 0.5 * (lo + hi);
  for (int i = 0; i < 4; ++i) {
    double f = t_cdf(y, nu) - p;
    double d = t_pdf(y, nu);
    if (d <= 0.0) break;
    double step = f / d;
    if (!finite(step)) break;
    y -= step;
  }
  return y;
}

LogTParams::LogTParams(double mu_, double sigma_, double nu_) : mu(mu_), sigma(sigma_), nu(nu_) {
  if (!finite(mu)) throw std::domain_error("LogTParams: mu must be finite");
  if (!(sigma > 0.0) || !finite(sigma)) throw std::domain_error("LogTParams: sigma must be finite and > 0");
  if (!(nu > 0.0) || !finite(nu)) throw std::domain_error("LogTParams: nu must be finite and > 0");
  if (sigma < kSigmaFloor) {
    sigma = kSigmaFloor;
    sigma_clamped = true;
  }
}

CensoredLogT::CensoredLogT(LogTParams d, double x_max_) : dist(d), x_max(x_max_) {
  if (!(x_max > 0.0) || !finite(x_max)) throw std::domain_error("CensoredLogT: x_max must be finite and > 0");
}

McContext::McContext(double nu_, int n_samples, uint64_t seed_) : nu(nu_), seed(seed_) {
  if (!(nu > 0.0) || !finite(nu)) throw std::domain_error("McContext: nu must be finite and > 0");
  if (n_samples <= 0) throw std::domain_error("McContext: n_samples must be > 0");
  Rng rng(seed);
  samples.resize((size_t)n_samples);
  for (auto& s : samples) s = rng.student_t(nu);
  std::sort(samples.begin(), samples.end());
}

double logt_pdf(double x, const LogTParams& p) {
  if (!(x > 0.0) || !finite(x)) throw std::domain_error("logt_pdf: x must be finite and > 0");
  double z = (std::log(x) - p.mu) / p.sigma;
  return t_pdf(z, p.nu) / (p.sigma * x);
}

double logt_cdf(double x, const LogTParams& p) {
  if (!(x > 0.0) || !finite(x)) throw std::domain_error("logt_cdf: x must be finite and > 0");
  return t_cdf((std::log(x) - p.mu) / p.sigma, p.nu);
}

std::vector<double> sample_logt(const LogTParams& p, size_t n, uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = std::exp(p.mu + p.sigma * rng.student_t(p.nu));
  return out;
}

double psi(double y, const LogTParams& p, const McContext& mc) {
  if (p.nu != mc.nu) throw std::invalid_argument("psi: McContext nu does not match distribution nu");
  if (std::isnan(y)) throw std::domain_error("psi: y must not be NaN");
  auto cut = std::upper_bound(mc.samples.begin(), mc.samples.end(), y);
  double sum = 0.0;
  for (auto it = mc.samples.begin(); it != cut; ++it) sum += std::exp(p.mu + p.sigma * *it);
  return sum / (double)mc.samples.size();
}

namespace {

// (Psi(y_max) - Psi(y_alpha) + x_max*(1 - T(y_max))) / (1 - alpha), shared by
// the expectation (alpha = 0, Psi(-inf) = 0) and Case-2 CVaR so the two agree
// bit-for-bit at alpha = 0.
double censored_tail_core(const CensoredLogT& cl, const McContext& mc, double alpha) {
  const LogTParams& p = cl.dist;
  double y_max = (std::log(cl.x_max) - p.mu) / p.sigma;
  double psi_cap = psi(y_max, p, mc);
  double censor_mass = 1.0 - t_cdf(y_max, p.nu);
  double psi_alpha = 0.0;
  if (alpha > 0.0) {
    double y_alpha = t_quantile(alpha, p.nu);
    psi_alpha = psi(y_alpha, p, mc);
  }
  double v = (psi_cap - psi_alpha + cl.x_max * censor_mass) / (1.0 - alpha);
  return std::min(v, cl.x_max);  // MC noise near the censor can overshoot by a hair
}

}  // namespace

double censored_expectation(const CensoredLogT& cl, const McContext& mc) {
  return censored_tail_core(cl, mc, 0.0);
}

double censored_cvar(const CensoredLogT& cl, const McContext& mc, double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw std::domain_error("censored_cvar: alpha must lie in [0, 1)");
  const LogTParams& p = cl.dist;
  double y_max = (std::log(cl.x_max) - p.mu) / p.sigma;
  if (alpha >= t_cdf(y_max, p.nu)) return cl.x_max;  // VaR already at the censoring point
  return censored_tail_core(cl, mc, alpha);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z * 0.7071067811865475244); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile: p must lie in (0, 1)");
  // Acklam's rational approximation, one Newton polish
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                             1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                             6.680131188771972e+01, -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                             -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                             3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1.0 - plow;
  double q, r, z;
  if (p < plow) {
    q = std::sqrt(-2.0 * std::log(p));
    z = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= phigh) {
    q = p - 0.5;
    r = q * q;
    z = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    q = std::sqrt(-2.0 * std::log1p(-p));
    z = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  double e = normal_cdf(z) - p;
  double u = e * std::sqrt(2.0 * 3.14159265358979323846) * std::exp(0.5 * z * z);
  return z - u / (1.0 + 0.5 * z * u);
}

double lognormal_censored_expectation(double mu, double sigma, double x_max) {
  if (!(sigma > 0.0) || !finite(sigma) || !finite(mu))
    throw std::domain_error("lognormal_censored_expectation: bad parameters");
  if (!(x_max > 0.0) || !finite(x_max))
    throw std::domain_error("lognormal_censored_expectation: x_max must be finite and > 0");
  double y_max = (std::log(x_max) - mu) / sigma;
  double body = std::exp(mu + 0.5 * sigma * sigma) * normal_cdf(y_max - sigma);
  double v = body + x_max * (1.0 - normal_cdf(y_max));
  return std::min(v, x_max);
}

double lognormal_censored_cvar(double mu, double sigma, double x_max, double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0))
    throw std::domain_error("lognormal_censored_cvar: alpha must lie in [0, 1)");
  if (!(sigma > 0.0) || !finite(sigma) || !finite(mu))
    throw std::domain_error("lognormal_censored_cvar: bad parameters");
  if (!(x_max > 0.0) || !finite(x_max))
    throw std::domain_error("lognormal_censored_cvar: x_max must be finite and > 0");
  double y_max = (std::log(x_max) - mu) / sigma;
  if (alpha >= normal_cdf(y_max)) return x_max;
  double lo = alpha > 0.0 ? normal_cdf(normal_quantile(alpha) - sigma) : 0.0;
  double body = std::exp(mu + 0.5 * sigma * sigma) * (normal_cdf(y_max - sigma) - lo);
  double v = (body + x_max * (1.0 - normal_cdf(y_max))) / (1.0 - alpha);
  return std::min(v, x_max);
}

}  // namespace tie
