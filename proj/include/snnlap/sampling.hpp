#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "snnlap/density.hpp"
#include "snnlap/errors.hpp"
#include "snnlap/manifold.hpp"
#include "snnlap/parallel.hpp"
#include "snnlap/rng.hpp"

namespace snnlap {

/// n points in R^d stored row-major, with sampling provenance when known.
class PointCloud {
 public:
  PointCloud() = default;
  PointCloud(int dim, std::vector<double> coords) : dim_(dim), coords_(std::move(coords)) {
    if (dim_ <= 0 || coords_.size() % static_cast<std::size_t>(dim_) != 0)
      throw InvalidParams("coordinate count is not a multiple of the dimension");
  }

  int dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  std::span<const double> operator[](std::size_t i) const {
    return {coords_.data() + i * dim_, static_cast<std::size_t>(dim_)};
  }
  const std::vector<double>& coords() const { return coords_; }

  template <class M>
  typename M::Point point(std::size_t i) const {
    return point_from_span<M>((*this)[i]);
  }

  std::optional<ModelId> model;
  DensityDescriptor density;
  std::uint64_t seed = 0;

 private:
  int dim_ = 0;
  std::vector<double> coords_;
};

/// I.i.d. draws from p dV by rejection against area-exact uniform proposals.
/// Point i uses its own substream, so the output is independent of worker count.
template <class M>
PointCloud sample_iid(const Density<M>& density, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw InvalidParams("need n >= 1");
  // Mean acceptance of u < p/p_max under uniform proposals is 1/(vol p_max).
  const double acceptance = 1.0 / (M::volume() * density.p_max());
  if (!(acceptance >= 1e-6)) throw RejectionStall("acceptance rate below 1e-6");
  const auto max_attempts = static_cast<std::uint64_t>(std::ceil(1000.0 / acceptance));

  constexpr int d = M::ambient_dim;
  std::vector<double> coords(n * d);
  parallel_for(0, n, [&](std::size_t i) {
    RandomStream rng(seed, StreamPurpose::Sampling, i);
    for (std::uint64_t attempt = 0;; ++attempt) {
      if (attempt == max_attempts) throw RejectionStall("no acceptance within attempt budget");
      const double s = rng.uniform();
      const double t = rng.uniform();
      const double a = rng.uniform();
      const auto x = M::from_unit_square(s, t);
      if (density.is_uniform() || a * density.p_max() < density(x)) {
        for (int c = 0; c < d; ++c) coords[i * d + c] = x[c];
        return;
      }
    }
  });
  PointCloud cloud(d, std::move(coords));
  cloud.model = M::id;
  cloud.density = density.descriptor();
  cloud.seed = seed;
  return cloud;
}

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const double diff = a[c] - b[c];
    s += diff * diff;
  }
  return std::sqrt(s);
}

/// mu_n of the closed Euclidean ball B(x, r).
inline double empirical_ball_mass(const PointCloud& cloud, std::span<const double> x, double r) {
  if (!(r >= 0.0)) throw InvalidParams("radius must be nonnegative");
  if (cloud.size() == 0) return 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i)
    if (euclidean_distance(cloud[i], x) <= r) ++count;
  return static_cast<double>(count) / static_cast<double>(cloud.size());
}

}  // namespace snnlap
