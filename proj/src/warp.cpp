#include "moveconv/warp.hpp"

#include <cmath>
#include <stdexcept>

namespace moveconv {

namespace {

void check_in_domain(const WarpSpec& s, double t) {
  if (t < s.t_start - 1e-12 || t > s.t_end + 1e-12)
    throw std::invalid_argument("WarpSpec: t outside [t_start, t_end]");
}

}  // namespace

WarpSpec WarpSpec::identity(double t_start, double t_end) {
  WarpSpec s;
  s.density = WarpDensity::Uniform;
  s.center = 0.5 * (t_start + t_end);
  s.scale = 1.0;
  s.magnitude = 0.0;
  s.t_start = t_start;
  s.t_end = t_end;
  return s;
}

void WarpSpec::validate() const {
  if (!(t_end > t_start)) throw std::invalid_argument("WarpSpec: empty domain");
  if (!(magnitude >= 0.0)) throw std::invalid_argument("WarpSpec: magnitude must be >= 0");
  if (density == WarpDensity::TruncatedGaussian) {
    if (!(scale > 0.0)) throw std::invalid_argument("WarpSpec: scale must be > 0");
    if (!(center > t_start && center < t_end))
      throw std::invalid_argument("WarpSpec: center must lie inside the domain");
  }
}

double WarpSpec::density_at(double t) const {
  check_in_domain(*this, t);
  if (density == WarpDensity::Uniform) return 1.0 / (t_end - t_start);
  // exp(-(t-c)^2/scale) normalized over the truncation window:
  //   Z = sqrt(pi*scale)/2 * (erf((t_end-c)/s) - erf((t_start-c)/s)), s = sqrt(scale)
  const double s = std::sqrt(scale);
  const double z = 0.5 * std::sqrt(M_PI) * s *
                   (std::erf((t_end - center) / s) - std::erf((t_start - center) / s));
  return std::exp(-(t - center) * (t - center) / scale) / z;
}

double WarpSpec::cumulative_at(double t) const {
  check_in_domain(*this, t);
  if (density == WarpDensity::Uniform) return (t - t_start) / (t_end - t_start);
  const double s = std::sqrt(scale);
  const double lo = std::erf((t_start - center) / s);
  const double hi = std::erf((t_end - center) / s);
  return (std::erf((t - center) / s) - lo) / (hi - lo);
}

double WarpSpec::warp(double t) const {
  check_in_domain(*this, t);
  if (magnitude == 0.0) return (t - t_start) / (t_end - t_start);
  return (magnitude * cumulative_at(t) + t - t_start) / (magnitude + t_end - t_start);
}

double WarpSpec::warp_derivative(double t) const {
  check_in_domain(*this, t);
  return (magnitude * density_at(t) + 1.0) / (magnitude + t_end - t_start);
}

std::vector<WarpSpec> enumerate_warp_candidates(int n_centers,
                                                const std::vector<double>& scales,
                                                const std::vector<double>& magnitudes,
                                                double t_start, double t_end) {
  if (n_centers < 1) throw std::invalid_argument("enumerate_warp_candidates: n_centers < 1");
  if (scales.empty() || magnitudes.empty())
    throw std::invalid_argument("enumerate_warp_candidates: empty scale or magnitude list");
  const double span = t_end - t_start;
  std::vector<WarpSpec> out;
  out.reserve(static_cast<std::size_t>(n_centers) * scales.size() * magnitudes.size());
  for (int i = 1; i <= n_centers; ++i) {
    const double center = t_start + span * i / static_cast<double>(n_centers + 1);
    for (double sc : scales) {
      for (double mag : magnitudes) {
        WarpSpec s;
        s.density = WarpDensity::TruncatedGaussian;
        s.center = center;
        s.scale = sc;
        s.magnitude = mag;
        s.t_start = t_start;
        s.t_end = t_end;
        s.validate();
        out.push_back(s);
      }
    }
  }
  return out;
}

namespace {
std::vector<double> linspace_vec(double lo, double hi, int k) {
  std::vector<double> v(k);
  for (int i = 0; i < k; ++i)
    v[i] = k == 1 ? lo : lo + (hi - lo) * i / static_cast<double>(k - 1);
  return v;
}
}  // namespace

std::vector<double> default_warp_scales() { return linspace_vec(0.01, 0.0625, 10); }
std::vector<double> default_warp_magnitudes() { return linspace_vec(0.6, 0.8, 10); }

}  // namespace moveconv
