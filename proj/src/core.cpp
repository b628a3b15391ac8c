#include "moveconv/core.hpp"

#include <cmath>
#include <limits>

namespace moveconv {

TimeGrid TimeGrid::regular(double t_start, double t_end, int m) {
  if (m < 2) throw std::invalid_argument("TimeGrid: need at least 2 nodes");
  if (!(t_end > t_start)) throw std::invalid_argument("TimeGrid: t_end must exceed t_start");
  TimeGrid g;
  g.t_start = t_start;
  g.t_end = t_end;
  g.delta = (t_end - t_start) / static_cast<double>(m - 1);
  g.nodes.resize(m);
  for (int j = 0; j < m; ++j) g.nodes[j] = t_start + g.delta * j;
  g.nodes[m - 1] = t_end;
  return g;
}

void TimeGrid::validate() const {
  const int m = size();
  if (m < 2) throw std::invalid_argument("TimeGrid: need at least 2 nodes");
  if (nodes[0] < t_start || nodes[m - 1] > t_end)
    throw std::invalid_argument("TimeGrid: nodes outside [t_start, t_end]");
  for (int j = 1; j < m; ++j)
    if (!(nodes[j] > nodes[j - 1]))
      throw std::invalid_argument("TimeGrid: nodes must be strictly increasing");
  const double implied = (nodes[m - 1] - nodes[0]) / static_cast<double>(m - 1);
  if (!(delta > 0.0) || std::abs(delta - implied) > 1e-12 * std::max(1.0, implied))
    throw std::invalid_argument("TimeGrid: delta inconsistent with node spacing");
}

double log_sum_exp(const VectorXd& x) {
  if (x.size() == 0) return -std::numeric_limits<double>::infinity();
  const double mx = x.maxCoeff();
  if (!std::isfinite(mx)) return mx;  // all -inf (or a nan propagates)
  double s = 0.0;
  for (int i = 0; i < x.size(); ++i) s += std::exp(x[i] - mx);
  return mx + std::log(s);
}

}  // namespace moveconv
