#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace moveconv {

using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;
using MatrixX2d = Eigen::Matrix<double, Eigen::Dynamic, 2>;

// Linear-algebra or evaluation failure past the jitter policy; the message
// carries the parameter values that produced it.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Equally spaced integration grid on [t_start, t_end], endpoints included.
struct TimeGrid {
  double t_start = 0.0;
  double t_end = 1.0;
  VectorXd nodes;      // strictly increasing, inside [t_start, t_end]
  double delta = 0.0;  // (nodes[m-1] - nodes[0]) / (m - 1)

  static TimeGrid regular(double t_start, double t_end, int m);

  int size() const { return static_cast<int>(nodes.size()); }
  double span() const { return t_end - t_start; }
  void validate() const;
};

// log(sum(exp(x))) without overflow; -inf entries contribute nothing.
double log_sum_exp(const VectorXd& x);

}  // namespace moveconv
