#include "pursuit/particle_filter.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace pursuit {

namespace {

constexpr int kMaxRejections = 1000;
constexpr double kNormalizationTolerance = 1e-6;

double sample_gaussian(Rng& rng, double sigma) {
  if (sigma <= 0.0) {
    return 0.0;
  }
  return std::normal_distribution<double>(0.0, sigma)(rng);
}

}  // namespace

void FilterConfig::validate() const {
  if (n_particles < 1) throw std::invalid_argument("filter needs at least one particle");
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in [0, 1]");
  if (!(v_max >= 0.0) || !(omega_max >= 0.0) || !(position_jitter_sigma >= 0.0) ||
      !(reinit_sigma >= 0.0)) {
    throw std::invalid_argument("filter rates and sigmas must be non-negative");
  }
  if (!(in_region_factor_when_unseen >= 0.0) || !(out_region_factor_when_seen >= 0.0)) {
    throw std::invalid_argument("reweighting factors must be non-negative");
  }
}

ParticleSet::ParticleSet(std::vector<Particle> particles, Rng rng)
    : particles_(std::move(particles)), rng_(rng) {
  if (particles_.empty()) {
    throw std::invalid_argument("a particle set needs at least one particle");
  }
}

ParticleSet ParticleSet::initialize_around(const GridMap& map, const Pose& center,
                                           const FilterConfig& config, std::uint64_t seed) {
  config.validate();
  ParticleSet set(std::vector<Particle>(static_cast<std::size_t>(config.n_particles)), Rng(seed));
  set.draw_around(map, center, config);
  return set;
}

ParticleSet ParticleSet::initialize_uniform(const GridMap& map, const FilterConfig& config,
                                            std::uint64_t seed) {
  config.validate();
  ParticleSet set(std::vector<Particle>(static_cast<std::size_t>(config.n_particles)), Rng(seed));
  set.draw_uniform(map, config);
  return set;
}

void ParticleSet::reinitialize_around(const GridMap& map, const Pose& center,
                                      const FilterConfig& config) {
  draw_around(map, center, config);
}

void ParticleSet::draw_around(const GridMap& map, const Pose& center, const FilterConfig& config) {
  const double sigma = config.reinit_sigma;
  const double reach = 5.0 * sigma;
  const Point2 c = center.position();

  // Fallback location for the rare particle that keeps landing in obstacles: the free cell
  // closest to the centre within 5 sigma.
  std::optional<Point2> nearest_free;
  if (map.is_free(c)) {
    nearest_free = c;
  } else {
    double best = std::numeric_limits<double>::infinity();
    const double res = map.resolution();
    const int span = static_cast<int>(std::ceil(reach / res)) + 1;
    const auto origin_cell = map.try_world_to_cell(c).value_or(Cell{
        static_cast<int>(std::floor((c.y - map.origin().y) / res)),
        static_cast<int>(std::floor((c.x - map.origin().x) / res))});
    for (int dr = -span; dr <= span; ++dr) {
      for (int dc = -span; dc <= span; ++dc) {
        const Cell cell{origin_cell.row + dr, origin_cell.col + dc};
        if (!map.is_free(cell)) continue;
        const double d = distance(map.cell_to_world(cell), c);
        if (d <= reach && d < best) {
          best = d;
          nearest_free = map.cell_to_world(cell);
        }
      }
    }
  }
  if (!nearest_free) {
    throw FilterInitError("no free cell within 5 sigma of the initialization centre");
  }

  const double weight = 1.0 / static_cast<double>(particles_.size());
  for (auto& p : particles_) {
    Point2 pos = *nearest_free;
    for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
      const Point2 candidate{c.x + sample_gaussian(rng_, sigma), c.y + sample_gaussian(rng_, sigma)};
      if (map.is_free(candidate)) {
        pos = candidate;
        break;
      }
    }
    p.pose = {pos.x, pos.y, normalize_angle(uniform(rng_, -kPi, kPi))};
    p.weight = weight;
  }
}

void ParticleSet::draw_uniform(const GridMap& map, const FilterConfig&) {
  const auto free = map.free_cells();
  if (free.empty()) {
    throw FilterInitError("map has no free space");
  }
  std::uniform_int_distribution<std::size_t> pick(0, free.size() - 1);
  const double res = map.resolution();
  const double weight = 1.0 / static_cast<double>(particles_.size());
  for (auto& p : particles_) {
    const Point2 center = map.cell_to_world(free[pick(rng_)]);
    const double x = center.x + uniform(rng_, -0.5, 0.5) * res;
    const double y = center.y + uniform(rng_, -0.5, 0.5) * res;
    p.pose = {x, y, normalize_angle(uniform(rng_, -kPi, kPi))};
    p.weight = weight;
  }
}

void ParticleSet::predict(double dt, const GridMap& map, const FilterConfig& config) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("predict requires dt > 0");
  }
  for (auto& p : particles_) {
    const double v = uniform(rng_, 0.0, config.v_max);
    const double omega = uniform(rng_, -config.omega_max, config.omega_max);
    const double theta = normalize_angle(p.pose.theta + omega * dt);
    const Point2 next{p.pose.x + v * std::cos(theta) * dt + sample_gaussian(rng_, config.position_jitter_sigma),
                      p.pose.y + v * std::sin(theta) * dt + sample_gaussian(rng_, config.position_jitter_sigma)};
    if (map.is_free(next)) {
      p.pose.x = next.x;
      p.pose.y = next.y;
    }
    p.pose.theta = theta;
  }
}

WeightUpdate ParticleSet::update_weights(const GridMap& map, const VisibilityRegion& region,
                                         bool detected, const FilterConfig& config) {
  for (auto& p : particles_) {
    const bool inside = region.contains(p.pose.position());
    if (detected) {
      if (!inside) p.weight *= config.out_region_factor_when_seen;
    } else {
      if (inside) p.weight *= config.in_region_factor_when_unseen;
    }
  }
  const double total = weight_sum();
  if (!(total > 0.0) || !std::isfinite(total)) {
    draw_uniform(map, config);
    return WeightUpdate::kDiverged;
  }
  normalize();
  return WeightUpdate::kNormal;
}

double ParticleSet::weight_sum() const {
  double total = 0.0;
  for (const auto& p : particles_) {
    total += p.weight;
  }
  return total;
}

void ParticleSet::normalize() {
  const double total = weight_sum();
  for (auto& p : particles_) {
    p.weight /= total;
  }
}

double ParticleSet::effective_size() const {
  if (std::abs(weight_sum() - 1.0) > kNormalizationTolerance) {
    throw ContractError("effective_size requires normalised weights");
  }
  double squares = 0.0;
  for (const auto& p : particles_) {
    squares += p.weight * p.weight;
  }
  const double n = static_cast<double>(particles_.size());
  return std::clamp(1.0 / squares, 1.0, n);
}

bool ParticleSet::maybe_resample(const FilterConfig& config) {
  const std::size_t n = particles_.size();
  if (!(effective_size() < config.rho * static_cast<double>(n))) {
    return false;
  }
  const double step = 1.0 / static_cast<double>(n);
  const double offset = uniform(rng_, 0.0, step);
  std::vector<Particle> resampled;
  resampled.reserve(n);
  double cumulative = particles_[0].weight;
  std::size_t i = 0;
  for (std::size_t m = 0; m < n; ++m) {
    const double u = offset + static_cast<double>(m) * step;
    while (u > cumulative && i + 1 < n) {
      ++i;
      cumulative += particles_[i].weight;
    }
    resampled.push_back({particles_[i].pose, step});
  }
  particles_ = std::move(resampled);
  return true;
}

Pose ParticleSet::estimate() const {
  double x = 0.0;
  double y = 0.0;
  double s = 0.0;
  double c = 0.0;
  for (const auto& p : particles_) {
    x += p.weight * p.pose.x;
    y += p.weight * p.pose.y;
    s += p.weight * std::sin(p.pose.theta);
    c += p.weight * std::cos(p.pose.theta);
  }
  const double heading = std::hypot(s, c) < 1e-12 ? 0.0 : std::atan2(s, c);
  return {x, y, heading};
}

}  // namespace pursuit
