#pragma once

#include <optional>
#include <string>
#include <vector>

#include "empcnet/mpqp.hpp"
#include "empcnet/pwa.hpp"

namespace empcnet {

// Unit step with step(0) = 1.
inline double unit_step(double z) { return z >= 0.0 ? 1.0 : 0.0; }

// Two hidden layers of unit-step neurons computing the one-hot region code.
//   layer 1: W1 = [-H^1; ...; -H^Np],  b1 = [k^1; ...; k^Np]
//   layer 2: W2 row i = ones over block i,  b2(i) = -n_c^i
// A block's second-layer neuron fires only when all n_c^i of its first-layer
// neurons fire, i.e. when x satisfies every inequality of region i.
struct LocationNet {
  Mat W1;
  Vec b1;
  Mat W2;
  Vec b2;
  std::vector<int> block_sizes;  // n_c^i

  int num_regions() const { return static_cast<int>(W2.rows()); }
  Vec hidden(const Vec& x) const;   // step(W1 x + b1)
  Vec forward(const Vec& x) const;  // step(W2 hidden + b2), entries in {0, 1}
};

// Linear perceptron with identity output: u = W x + b. Holds the first-step
// rows of a region's gain and offset.
struct PolicySubnet {
  Mat W;  // m x n
  Vec b;  // m
  int index = 0;  // 1-based region number

  Vec operator()(const Vec& x) const { return affine_apply(W, b, x); }
  Eigen::Index num_parameters() const { return W.size() + b.size(); }
};

struct EncodedNetwork {
  LocationNet location;
  std::vector<PolicySubnet> subnets;
  DomainBox domain;
  std::string source_hash;

  int num_regions() const { return static_cast<int>(subnets.size()); }
  int num_states() const { return static_cast<int>(location.W1.cols()); }
  int num_inputs() const { return subnets.empty() ? 0 : static_cast<int>(subnets[0].W.rows()); }
  Eigen::Index num_parameters() const;
};

struct EncodeOptions {
  Eigen::Index max_parameters = 50'000'000;
};

// Weight assignment only; no training. Throws ConfigError if the network
// would exceed `max_parameters`.
EncodedNetwork encode(const ExplicitSolution& solution, const EncodeOptions& options = {});

// Location network output, an N_p vector over {0, 1}.
Vec locate_forward(const EncodedNetwork& net, const Vec& x);

struct Routed {
  Vec u;
  RegionIndex index;
};

// Routes x through the subnet of the lowest hot location bit.
std::optional<Routed> route(const EncodedNetwork& net, const Vec& x);

// route() with the fallbacks used during closed-loop runs: clip x onto the
// domain box, and if the clipped point still falls in a gap between regions,
// use the region whose inequalities it violates least. `routed` is empty
// only for non-finite x.
struct RoutedWithFallback {
  std::optional<Routed> routed;
  bool clipped = false;
  bool nearest = false;
};
RoutedWithFallback route_with_fallback(const EncodedNetwork& net, const Vec& x);

}  // namespace empcnet
