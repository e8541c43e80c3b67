#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "bdett/common.hpp"
#include "bdett/degradation.hpp"
#include "bdett/encoding.hpp"
#include "bdett/homeostasis.hpp"
#include "bdett/network.hpp"

namespace bdett {

inline constexpr int kRayCount = 18;     // 180 degree fan, 10 degree steps
inline constexpr double kLidarMin = 0.2; // meters, reporting clamp
inline constexpr double kLidarMax = 6.0;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Circle {
  double x = 0.0, y = 0.0, r = 0.0;
};

struct Segment {
  double x1 = 0.0, y1 = 0.0, x2 = 0.0, y2 = 0.0;
};

// Cylinder shuttling between endpoints a and b at constant speed.
struct DynamicObstacle {
  double ax = 0.0, ay = 0.0;
  double bx = 0.0, by = 0.0;
  double speed = 0.0;  // m/s
  double radius = 0.4;

  // Closed-form triangle-wave position after `time` seconds.
  Point position_at(double time) const;
};

struct World {
  double width = 20.0;
  double height = 20.0;
  std::vector<Circle> circles;
  std::vector<Segment> segments;
  std::vector<DynamicObstacle> dynamic;

  void validate() const;
};

struct RobotPose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // radians, normalized to (-pi, pi]
  double nu = 0.0;       // linear speed, m/s
  double omega = 0.0;    // angular speed, rad/s
};

struct SimParams {
  double dt = 0.1;               // s per control step
  double wheel_base = 0.3;       // m
  double v_max = 0.5;            // m/s per wheel
  double goal_radius = 0.5;      // success when closer than this
  double collision_radius = 0.35;// collision when any surface is closer
  int max_steps = 1000;
};

// Wraps into (-pi, pi].
double wrap_angle(double a);

// 18 ranges, ray k at heading + (-90 + 5 + 10 k) degrees, clamped to the
// sensor interval. Dynamic obstacles are evaluated at `time`.
Vec raycast(const World& world, const RobotPose& pose, double time = 0.0);

// Differential-drive step with exact arc integration.
RobotPose step_kinematics(RobotPose pose, double v_left, double v_right,
                          double dt, double wheel_base);

// Signed clearance to the nearest obstacle surface (walls included).
double obstacle_clearance(const World& world, double x, double y, double time);

// Raw 24-dim state: goal distance, rectified right/left goal direction,
// linear speed, rectified right/left angular speed, 18 ranges.
Vec observe(const World& world, const RobotPose& pose, const Point& goal,
            double time = 0.0);

enum class Outcome { Success, Collision, Overtime };
std::string outcome_name(Outcome o);

struct EpisodeResult {
  Outcome outcome = Outcome::Overtime;
  int steps = 0;
  TrialRecording recording;  // empty for non-spiking policies
};

// A policy maps the raw state to wheel speeds. Spiking policies draw encoding
// noise from the episode stream and tally their firing rates.
using Policy = std::function<std::pair<double, double>(
    const Vec& raw_state, std::mt19937_64& rng, RateRecorder* recorder)>;

struct EpisodeConfig {
  std::vector<DegradationSpec> input_degradations;
  std::uint64_t seed = 0;
};

EpisodeResult run_episode(const World& world, const Policy& policy, Point start,
                          Point goal, const SimParams& params,
                          const EpisodeConfig& episode);

// Deterministic potential-field controller used as the cloning expert.
std::pair<double, double> expert_controller(const Vec& raw_state);
Policy expert_policy();

// Rate-coded feedforward policy: normalize, Poisson-encode, run the network,
// decode the two output counts into wheel speeds.
class SpikingPolicy {
 public:
  SpikingPolicy(NetworkModel model, StateNormalizer normalizer,
                double action_lo = 0.0, double action_hi = 0.5);

  std::pair<double, double> operator()(const Vec& raw_state,
                                       std::mt19937_64& rng,
                                       RateRecorder* recorder) const;
  const NetworkModel& model() const { return model_; }

 private:
  NetworkModel model_;
  StateNormalizer normalizer_;
  double action_lo_;
  double action_hi_;
};

struct TrialRow {
  std::uint64_t trial_id = 0;
  std::uint64_t seed = 0;
  Outcome outcome = Outcome::Overtime;
  int steps = 0;
  double mean_rate = 0.0;
  double std_rate = 0.0;
};

struct CampaignResult {
  double sr = 0.0;   // successful passes / trials
  double otp = 0.0;  // overtime trials / trials
  std::size_t successes = 0;
  std::size_t collisions = 0;
  std::size_t overtimes = 0;
  std::optional<HomeostasisReport> homeostasis;  // over successful trials
  std::vector<TrialRow> rows;
};

// Runs every (start, goal) pair under per-trial seed streams derived from
// root_seed. Homeostasis is aggregated over the successful trials.
CampaignResult campaign(const World& world, const Policy& policy,
                        const std::vector<std::pair<Point, Point>>& trials,
                        const std::vector<DegradationSpec>& input_degradations,
                        const SimParams& params, std::uint64_t root_seed,
                        unsigned jobs = 1);

// Normalizer for the 24-dim state: goal distance by the arena diagonal,
// bearings by pi, speeds by their maxima, rays by the sensor interval.
StateNormalizer avoid_state_normalizer(const World& world,
                                       const SimParams& params);

// Built-in arenas: a spread of static circles, and the same arena with
// wandering cylinders added.
World make_default_world();
World make_dynamic_world();

// Collision-free start/goal pairs at least min_separation apart, found by
// rejection sampling.
std::vector<std::pair<Point, Point>> sample_trials(const World& world,
                                                   std::size_t count,
                                                   std::mt19937_64& rng,
                                                   double min_separation = 5.0,
                                                   double clearance = 1.0);

}  // namespace bdett
