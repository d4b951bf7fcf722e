#pragma once

// The synthesis loop: sample an initial pose, then run Adamax on the relaxed
// objective under MDMM constraint handling while the level-set smoothing
// radius anneals to zero.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "graspd/loss/losses.hpp"

namespace graspd::opt {

struct OptimizerConfig {
  int steps = 7000;
  double lr_pose = 3e-3;
  double lr_forces = 1e-2;
  double c_task = 1e-4;
  double c_limit = 1e-4;
  double damping = 1.0;
  int smoothing_steps = 5000;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  double lr_multiplier = 100.0;  // multiplier ascent rate (not from the paper)

  // Ablation switches.
  bool relaxation = true;
  bool smoothing = true;
  bool leak = true;

  // How many optimization checkpoints get a full displacement evaluation
  // when picking the returned candidate (1 = final pose only).
  int eval_candidates = 2;

  void validate() const {
    if (steps < 0) throw ValidationError("OptimizerConfig: steps must be >= 0");
    if (smoothing_steps <= 0 || (steps > 0 && steps < smoothing_steps))
      throw ValidationError("OptimizerConfig: need steps >= smoothing_steps > 0");
    if (lr_pose <= 0.0 || lr_forces <= 0.0)
      throw ValidationError("OptimizerConfig: learning rates must be positive");
    if (eval_candidates < 1)
      throw ValidationError("OptimizerConfig: eval_candidates must be >= 1");
  }
};

// Damped-ascent Lagrange multiplier, projected to stay nonnegative.
struct MultiplierState {
  double lambda = 0.0;
  double velocity = 0.0;

  void update(double violation, double lr, double damping) {
    velocity = lr * violation - damping * velocity;
    lambda = std::max(0.0, lambda + velocity);
  }
};

// Small deterministic RNG wrapper (splitmix64 core) so seed-derived streams
// are stable across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ^ 0x9e3779b97f4a7c15ULL) {
    next_u64();  // warm up: decorrelates nearby seeds
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }
  // Marsaglia polar would branch unboundedly; Box-Muller is fine here.
  double gaussian() {
    double u1 = std::max(uniform(), 1e-300);
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  std::uint64_t state_;
};

inline Rng job_rng(std::uint64_t seed, std::uint64_t job_index) {
  return Rng(seed * 0x100000001b3ULL + 0x9e3779b97f4a7c15ULL * (job_index + 1));
}

// Joints fully open; approach point uniform on the discretized surface; palm
// normal opposing the surface normal with a uniform roll about the approach
// vector; palm center 10 cm back from the approach point.
hand::HandPose sample_initial_pose(const hand::HandModel& model, const sdf::SdfGrid& grid,
                                   Rng& rng);

// r(step) = init_r * max(0, 1 - step/smoothing_steps).
double smoothing_radius(int step, double init_r, const OptimizerConfig& config);

// init_r = clamp(closest hand-object distance - 1 cm, 0, cap).
double initial_smoothing_radius(const hand::HandModel& model, const hand::HandPose& pose,
                                const sdf::SdfGrid& grid, double cap = 0.10);

// Adamax over a flat parameter vector with per-coordinate learning rates.
class Adamax {
 public:
  Adamax(std::size_t n, double beta1, double beta2, double epsilon)
      : m_(n, 0.0), u_(n, 0.0), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

  // In-place parameter update; `lr` indexed like the parameters.
  void step(std::vector<double>& params, const std::vector<double>& grad,
            const std::vector<double>& lr);

 private:
  std::vector<double> m_, u_;
  double beta1_, beta2_, eps_;
  long t_ = 0;
};

struct SynthesisResult {
  loss::GraspCandidate candidate;
  std::vector<loss::LossReport> trace;  // one report per step
  bool diverged = false;
  std::string warning;
  double displacement_cm = std::numeric_limits<double>::infinity();
  int best_step = -1;
};

SynthesisResult synthesize(const hand::HandModel& model, const sdf::SdfGrid& grid,
                           const sim::ObjectState& object, const sim::ContactParams& params,
                           const loss::LossSettings& loss_settings,
                           const OptimizerConfig& config);

}  // namespace graspd::opt
