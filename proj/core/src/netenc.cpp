#include "empcnet/netenc.hpp"

#include <limits>
#include <sstream>

#include "empcnet/serialize.hpp"

namespace empcnet {

Vec LocationNet::hidden(const Vec& x) const {
  return (W1 * x + b1).unaryExpr(&unit_step);
}

Vec LocationNet::forward(const Vec& x) const {
  return (W2 * hidden(x) + b2).unaryExpr(&unit_step);
}

Eigen::Index EncodedNetwork::num_parameters() const {
  Eigen::Index total = location.W1.size() + location.b1.size() + location.W2.size() +
                       location.b2.size();
  for (const auto& s : subnets) total += s.num_parameters();
  return total;
}

EncodedNetwork encode(const ExplicitSolution& solution, const EncodeOptions& options) {
  const int n = solution.n;
  const int m = solution.m;
  const int regions = solution.num_regions();
  const int rows = solution.total_facets();

  const Eigen::Index params = static_cast<Eigen::Index>(rows) * (n + 1) +
                              static_cast<Eigen::Index>(regions) * (rows + 1) +
                              static_cast<Eigen::Index>(regions) * m * (n + 1);
  if (params > options.max_parameters) {
    std::ostringstream os;
    os << "encoded network would need " << params << " parameters (cap "
       << options.max_parameters << ")";
    throw ConfigError(os.str());
  }

  EncodedNetwork net;
  net.domain = solution.domain;
  LocationNet& loc = net.location;
  loc.W1 = Mat::Zero(rows, n);
  loc.b1 = Vec::Zero(rows);
  loc.W2 = Mat::Zero(regions, rows);
  loc.b2 = Vec::Zero(regions);
  int offset = 0;
  for (int i = 0; i < regions; ++i) {
    const CriticalRegion& r = solution.regions[i];
    const int nc = r.num_facets();
    loc.W1.middleRows(offset, nc) = -r.H;
    loc.b1.segment(offset, nc) = r.k;
    loc.W2.block(i, offset, 1, nc).setOnes();
    loc.b2(i) = -static_cast<double>(nc);
    loc.block_sizes.push_back(nc);
    offset += nc;

    PolicySubnet subnet;
    subnet.W = r.F.topRows(m);
    subnet.b = r.g.head(m);
    subnet.index = i + 1;
    net.subnets.push_back(std::move(subnet));
  }
  net.source_hash = solution_digest(solution);
  return net;
}

Vec locate_forward(const EncodedNetwork& net, const Vec& x) {
  return net.location.forward(x);
}

std::optional<Routed> route(const EncodedNetwork& net, const Vec& x) {
  const Vec code = locate_forward(net, x);
  for (Eigen::Index i = 0; i < code.size(); ++i) {
    if (code(i) == 1.0) {
      const auto& subnet = net.subnets[static_cast<std::size_t>(i)];
      return Routed{subnet(x), static_cast<RegionIndex>(i + 1)};
    }
  }
  return std::nullopt;
}

RoutedWithFallback route_with_fallback(const EncodedNetwork& net, const Vec& x) {
  RoutedWithFallback out;
  out.routed = route(net, x);
  if (out.routed || !x.allFinite()) return out;
  out.clipped = true;
  const Vec xc = net.domain.clip(x);
  out.routed = route(net, xc);
  if (out.routed || net.num_regions() == 0) return out;
  out.nearest = true;
  const Vec slack = net.location.W1 * xc + net.location.b1;  // >= 0 inside
  RegionIndex best = 1;
  double best_violation = std::numeric_limits<double>::infinity();
  Eigen::Index offset = 0;
  for (std::size_t i = 0; i < net.location.block_sizes.size(); ++i) {
    const Eigen::Index nc = net.location.block_sizes[i];
    const double violation = nc == 0 ? 0.0 : -slack.segment(offset, nc).minCoeff();
    if (violation < best_violation) {
      best_violation = violation;
      best = static_cast<RegionIndex>(i + 1);
    }
    offset += nc;
  }
  out.routed = Routed{net.subnets[static_cast<std::size_t>(best - 1)](xc), best};
  return out;
}

}  // namespace empcnet
