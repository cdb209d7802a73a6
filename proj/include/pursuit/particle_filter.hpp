#pragma once

#include <cstdint>
#include "pursuit/errors.hpp"
#include <vector>

#include "pursuit/grid_map.hpp"
#include "pursuit/rng.hpp"
#include "pursuit/visibility.hpp"

namespace pursuit {

struct Particle {
  Pose pose;
  double weight = 0.0;

  friend bool operator==(const Particle&, const Particle&) = default;
};

struct FilterConfig {
  int n_particles = 1000;
  double rho = 0.8;
  double v_max = 0.4;
  double omega_max = kPi / 2.0;
  double position_jitter_sigma = 0.05;
  double reinit_sigma = 0.2;
  double in_region_factor_when_unseen = 0.05;
  double out_region_factor_when_seen = 0.05;

  void validate() const;
};

enum class WeightUpdate { kNormal, kDiverged };

/// Weighted pose hypotheses for an unseen target plus the generator that drives them. All
/// operations keep the particle count fixed and every pose inside free space.
class ParticleSet {
 public:
  ParticleSet(std::vector<Particle> particles, Rng rng);

  /// Gaussian cloud (sigma = reinit_sigma) around `center` with uniform headings, rejection
  /// sampled into free space, uniform weights. Throws FilterInitError when no free cell lies
  /// within 5 sigma of the centre.
  static ParticleSet initialize_around(const GridMap& map, const Pose& center,
                                       const FilterConfig& config, std::uint64_t seed);

  /// Uniform over free space with uniform headings.
  static ParticleSet initialize_uniform(const GridMap& map, const FilterConfig& config,
                                        std::uint64_t seed);

  /// Redraws the cloud around `center`, continuing this set's generator.
  void reinitialize_around(const GridMap& map, const Pose& center, const FilterConfig& config);

  /// Unicycle motion with per-particle controls V ~ U(0, v_max), w ~ U(-omega_max, omega_max),
  /// rotate then translate, plus Gaussian position jitter. A move landing outside free space
  /// keeps the old position; the heading still changes. Weights are untouched.
  void predict(double dt, const GridMap& map, const FilterConfig& config);

  /// Negative-information reweighting against the pursuer's region, then normalisation. When
  /// every weight underflows the set is redrawn uniformly over free space and kDiverged is
  /// returned.
  WeightUpdate update_weights(const GridMap& map, const VisibilityRegion& region, bool detected,
                              const FilterConfig& config);

  /// 1 / sum(w^2), clamped to [1, N] against rounding. Throws ContractError when the weights
  /// are not normalised.
  double effective_size() const;

  /// Systematic resampling iff effective_size() < rho * N. Returns whether it resampled.
  bool maybe_resample(const FilterConfig& config);

  /// Weighted mean position and circular-mean heading (0 when the heading vector vanishes).
  Pose estimate() const;

  const std::vector<Particle>& particles() const { return particles_; }
  std::size_t size() const { return particles_.size(); }
  double weight_sum() const;
  Rng& rng() { return rng_; }

  friend bool operator==(const ParticleSet& a, const ParticleSet& b) {
    return a.particles_ == b.particles_ && a.rng_ == b.rng_;
  }

 private:
  void normalize();
  void draw_around(const GridMap& map, const Pose& center, const FilterConfig& config);
  void draw_uniform(const GridMap& map, const FilterConfig& config);

  std::vector<Particle> particles_;
  Rng rng_;
};

}  // namespace pursuit
