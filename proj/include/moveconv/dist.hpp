#pragma once

#include <cmath>

namespace moveconv {

// shape/scale parameterization: p(x) ∝ x^{-shape-1} exp(-scale/x)
struct InvGammaPrior {
  double shape = 1.0;
  double scale = 1.0;
  double logpdf(double x) const;
};

// shape/rate parameterization: p(x) ∝ x^{shape-1} exp(-rate x)
struct GammaPrior {
  double shape = 1.0;
  double rate = 1.0;
  double logpdf(double x) const;
};

double log_normal_pdf(double x, double mean, double var);

}  // namespace moveconv
