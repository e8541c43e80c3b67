#include "bdett/sim2d.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

#include "bdett/rng.hpp"

namespace bdett {

namespace {

constexpr double kPi = std::numbers::pi;

double dist(double ax, double ay, double bx, double by) {
  return std::hypot(bx - ax, by - ay);
}

// Nearest nonnegative ray parameter hitting the circle, or nullopt.
std::optional<double> ray_circle(double ox, double oy, double dx, double dy,
                                 const Circle& c) {
  const double fx = c.x - ox, fy = c.y - oy;
  const double b = fx * dx + fy * dy;
  const double disc = b * b - (fx * fx + fy * fy - c.r * c.r);
  if (disc < 0.0) return std::nullopt;
  const double root = std::sqrt(disc);
  const double t_near = b - root;
  if (t_near >= 0.0) return t_near;
  const double t_far = b + root;
  if (t_far >= 0.0) return t_far;  // origin inside the circle
  return std::nullopt;
}

std::optional<double> ray_segment(double ox, double oy, double dx, double dy,
                                  const Segment& s) {
  const double sx = s.x2 - s.x1, sy = s.y2 - s.y1;
  const double denom = dx * sy - dy * sx;
  if (std::abs(denom) < 1e-15) return std::nullopt;  // parallel
  const double qx = s.x1 - ox, qy = s.y1 - oy;
  const double t = (qx * sy - qy * sx) / denom;
  const double u = (qx * dy - qy * dx) / denom;
  if (t < 0.0 || u < 0.0 || u > 1.0) return std::nullopt;
  return t;
}

double point_segment_distance(double px, double py, const Segment& s) {
  const double sx = s.x2 - s.x1, sy = s.y2 - s.y1;
  const double len2 = sx * sx + sy * sy;
  double u = 0.0;
  if (len2 > 0.0)
    u = std::clamp(((px - s.x1) * sx + (py - s.y1) * sy) / len2, 0.0, 1.0);
  return dist(px, py, s.x1 + u * sx, s.y1 + u * sy);
}

std::array<Segment, 4> wall_segments(const World& w) {
  return {Segment{0, 0, w.width, 0}, Segment{w.width, 0, w.width, w.height},
          Segment{w.width, w.height, 0, w.height}, Segment{0, w.height, 0, 0}};
}

}  // namespace

Point DynamicObstacle::position_at(double time) const {
  const double len = dist(ax, ay, bx, by);
  if (len == 0.0 || speed == 0.0) return {ax, ay};
  double s = std::fmod(speed * time, 2.0 * len);
  if (s < 0.0) s += 2.0 * len;
  const double d = s <= len ? s : 2.0 * len - s;
  const double u = d / len;
  return {ax + u * (bx - ax), ay + u * (by - ay)};
}

void World::validate() const {
  if (!(width > 0.0 && height > 0.0)) throw ConfigError("world: empty bounds");
  auto inside = [&](double x, double y) {
    return x >= 0.0 && x <= width && y >= 0.0 && y <= height;
  };
  for (const auto& c : circles)
    if (!(c.r > 0.0) || !inside(c.x, c.y))
      throw ConfigError("world: circle outside bounds or non-positive radius");
  for (const auto& s : segments)
    if (!inside(s.x1, s.y1) || !inside(s.x2, s.y2))
      throw ConfigError("world: segment endpoint outside bounds");
  for (const auto& d : dynamic) {
    if (!(d.speed >= 0.0)) throw ConfigError("world: negative obstacle speed");
    if (!(d.radius > 0.0) || !inside(d.ax, d.ay) || !inside(d.bx, d.by))
      throw ConfigError("world: dynamic obstacle outside bounds");
  }
}

double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a <= 0.0) a += 2.0 * kPi;
  return a - kPi;
}

Vec raycast(const World& world, const RobotPose& pose, double time) {
  Vec ranges(kRayCount);
  const auto walls = wall_segments(world);
  for (int k = 0; k < kRayCount; ++k) {
    const double ang =
        pose.heading + (-90.0 + 5.0 + 10.0 * k) * kPi / 180.0;
    const double dx = std::cos(ang), dy = std::sin(ang);
    double best = std::numeric_limits<double>::infinity();
    auto consider = [&](std::optional<double> t) {
      if (t && *t < best) best = *t;
    };
    for (const auto& c : world.circles)
      consider(ray_circle(pose.x, pose.y, dx, dy, c));
    for (const auto& d : world.dynamic) {
      const Point p = d.position_at(time);
      consider(ray_circle(pose.x, pose.y, dx, dy, Circle{p.x, p.y, d.radius}));
    }
    for (const auto& s : world.segments)
      consider(ray_segment(pose.x, pose.y, dx, dy, s));
    for (const auto& s : walls) consider(ray_segment(pose.x, pose.y, dx, dy, s));
    ranges[k] = std::clamp(best, kLidarMin, kLidarMax);
  }
  return ranges;
}

RobotPose step_kinematics(RobotPose pose, double v_left, double v_right,
                          double dt, double wheel_base) {
  if (!(dt > 0.0) || !(wheel_base > 0.0))
    throw DomainError("step_kinematics: dt and wheel_base must be > 0");
  const double nu = 0.5 * (v_left + v_right);
  const double omega = (v_right - v_left) / wheel_base;
  if (std::abs(omega) < 1e-9) {
    pose.x += nu * dt * std::cos(pose.heading);
    pose.y += nu * dt * std::sin(pose.heading);
  } else {
    const double radius = nu / omega;
    pose.x += radius * (std::sin(pose.heading + omega * dt) - std::sin(pose.heading));
    pose.y -= radius * (std::cos(pose.heading + omega * dt) - std::cos(pose.heading));
  }
  pose.heading = wrap_angle(pose.heading + omega * dt);
  pose.nu = nu;
  pose.omega = omega;
  return pose;
}

double obstacle_clearance(const World& world, double x, double y, double time) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : world.circles)
    best = std::min(best, dist(x, y, c.x, c.y) - c.r);
  for (const auto& d : world.dynamic) {
    const Point p = d.position_at(time);
    best = std::min(best, dist(x, y, p.x, p.y) - d.radius);
  }
  for (const auto& s : world.segments)
    best = std::min(best, point_segment_distance(x, y, s));
  best = std::min({best, x, world.width - x, y, world.height - y});
  return best;
}

Vec observe(const World& world, const RobotPose& pose, const Point& goal,
            double time) {
  Vec state;
  state.reserve(kStateDims);
  state.push_back(dist(pose.x, pose.y, goal.x, goal.y));
  const double bearing =
      wrap_angle(std::atan2(goal.y - pose.y, goal.x - pose.x) - pose.heading);
  state.push_back(std::max(0.0, -bearing));  // goal to the right
  state.push_back(std::max(0.0, bearing));   // goal to the left
  state.push_back(pose.nu);
  state.push_back(std::max(0.0, -pose.omega));
  state.push_back(std::max(0.0, pose.omega));
  const Vec ranges = raycast(world, pose, time);
  state.insert(state.end(), ranges.begin(), ranges.end());
  return state;
}

std::string outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Success: return "success";
    case Outcome::Collision: return "collision";
    case Outcome::Overtime: return "overtime";
  }
  return "unknown";
}

EpisodeResult run_episode(const World& world, const Policy& policy, Point start,
                          Point goal, const SimParams& params,
                          const EpisodeConfig& episode) {
  world.validate();
  auto in_bounds = [&](const Point& p) {
    return p.x >= 0.0 && p.x <= world.width && p.y >= 0.0 && p.y <= world.height;
  };
  if (!in_bounds(start) || !in_bounds(goal))
    throw DomainError("run_episode: start or goal outside the world");
  if (obstacle_clearance(world, start.x, start.y, 0.0) < params.collision_radius)
    throw DomainError("run_episode: start is in collision");

  for (const auto& spec : episode.input_degradations)
    if (!spec.affects_inputs())
      throw DomainError("run_episode: " + spec.label() +
                        " is not an input degradation");

  std::mt19937_64 rng = make_stream(episode.seed, 0);

  RobotPose pose;
  pose.x = start.x;
  pose.y = start.y;
  pose.heading = wrap_angle(std::atan2(goal.y - pose.y, goal.x - pose.x));

  EpisodeResult result;
  RateRecorder recorder;
  for (int step = 0;; ++step) {
    const double time = step * params.dt;
    if (dist(pose.x, pose.y, goal.x, goal.y) < params.goal_radius) {
      result.outcome = Outcome::Success;
      result.steps = step;
      break;
    }
    if (obstacle_clearance(world, pose.x, pose.y, time) < params.collision_radius) {
      result.outcome = Outcome::Collision;
      result.steps = step;
      break;
    }
    if (step == params.max_steps) {
      result.outcome = Outcome::Overtime;
      result.steps = step;
      break;
    }

    Vec raw = observe(world, pose, goal, time);
    for (const auto& spec : episode.input_degradations)
      raw = apply_input_degradation(std::move(raw), spec, rng);

    auto [vl, vr] = policy(raw, rng, &recorder);
    vl = std::clamp(vl, 0.0, params.v_max);
    vr = std::clamp(vr, 0.0, params.v_max);
    pose = step_kinematics(pose, vl, vr, params.dt, params.wheel_base);
  }

  result.recording.counts = std::move(recorder.counts);
  result.recording.timesteps = recorder.timesteps;
  return result;
}

std::pair<double, double> expert_controller(const Vec& raw_state) {
  check_shape(raw_state.size() == kStateDims, "expert_controller: bad state");
  const double bearing = raw_state[2] - raw_state[1];  // left minus right

  double repulse_turn = 0.0;  // positive turns left
  double front_min = kLidarMax;
  for (int k = 0; k < kRayCount; ++k) {
    const double range = raw_state[kLidarOffset + static_cast<std::size_t>(k)];
    const double offset_deg = -90.0 + 5.0 + 10.0 * k;
    if (std::abs(offset_deg) <= 35.0) front_min = std::min(front_min, range);
    if (range < 1.0) {
      const double push = 1.0 - range;
      // An obstacle on one side pushes the robot toward the other.
      repulse_turn += push * -std::sin(offset_deg * kPi / 180.0);
    }
  }

  const double turn = 1.5 * bearing + 3.5 * repulse_turn;
  // Slow down for obstacles dead ahead and for the final goal approach.
  const double obstacle_factor = std::clamp((front_min - 0.35) / 0.65, 0.3, 1.0);
  const double goal_factor = std::clamp(raw_state[0] / 1.5, 0.3, 1.0);
  const double speed = 0.5 * std::min(obstacle_factor, goal_factor);
  const double vl = speed * std::clamp(1.0 - 2.0 * turn, 0.0, 1.0);
  const double vr = speed * std::clamp(1.0 + 2.0 * turn, 0.0, 1.0);
  return {vl, vr};
}

Policy expert_policy() {
  return [](const Vec& raw, std::mt19937_64&, RateRecorder*) {
    return expert_controller(raw);
  };
}

SpikingPolicy::SpikingPolicy(NetworkModel model, StateNormalizer normalizer,
                             double action_lo, double action_hi)
    : model_(std::move(model)),
      normalizer_(std::move(normalizer)),
      action_lo_(action_lo),
      action_hi_(action_hi) {
  model_.validate();
  normalizer_.validate();
  check_shape(normalizer_.dims() == model_.layer_sizes.front(),
              "SpikingPolicy: normalizer dims != input layer size");
}

std::pair<double, double> SpikingPolicy::operator()(const Vec& raw_state,
                                                    std::mt19937_64& rng,
                                                    RateRecorder* recorder) const {
  const Vec unit = normalize_state(raw_state, normalizer_);
  const auto trains = poisson_encode_state(unit, model_.timesteps, rng);
  const std::vector<int> counts = forward(model_, trains, recorder);
  const Vec action = rate_decode(counts, model_.timesteps, action_lo_, action_hi_);
  check_shape(action.size() == 2, "SpikingPolicy: output layer must have 2 neurons");
  return {action[0], action[1]};
}

CampaignResult campaign(const World& world, const Policy& policy,
                        const std::vector<std::pair<Point, Point>>& trials,
                        const std::vector<DegradationSpec>& input_degradations,
                        const SimParams& params, std::uint64_t root_seed,
                        unsigned jobs) {
  if (trials.empty()) throw DomainError("campaign: empty trial list");

  struct Slot {
    EpisodeResult episode;
    std::uint64_t seed = 0;
  };
  std::vector<Slot> slots(trials.size());

  auto run_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      EpisodeConfig episode;
      episode.input_degradations = input_degradations;
      episode.seed = splitmix64(root_seed ^ i);
      slots[i].seed = episode.seed;
      slots[i].episode = run_episode(world, policy, trials[i].first,
                                     trials[i].second, params, episode);
    }
  };

  if (jobs <= 1 || trials.size() < 2) {
    run_range(0, trials.size());
  } else {
    const unsigned n_threads = std::min<unsigned>(jobs, trials.size());
    std::vector<std::thread> pool;
    const std::size_t chunk = (trials.size() + n_threads - 1) / n_threads;
    for (unsigned w = 0; w < n_threads; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(trials.size(), begin + chunk);
      if (begin < end) pool.emplace_back(run_range, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  CampaignResult result;
  std::vector<TrialRecording> successes;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const auto& ep = slots[i].episode;
    TrialRow row;
    row.trial_id = i;
    row.seed = slots[i].seed;
    row.outcome = ep.outcome;
    row.steps = ep.steps;
    if (ep.recording.timesteps > 0) {
      const Vec rates = trial_rates(ep.recording);
      double m = 0.0;
      for (double r : rates) m += r;
      m /= static_cast<double>(rates.size());
      double s = 0.0;
      for (double r : rates) s += (r - m) * (r - m);
      row.mean_rate = m;
      row.std_rate = std::sqrt(s / static_cast<double>(rates.size()));
    }
    switch (ep.outcome) {
      case Outcome::Success:
        ++result.successes;
        if (ep.recording.timesteps > 0) {
          TrialRecording rec = ep.recording;
          rec.trial_id = i;
          successes.push_back(std::move(rec));
        }
        break;
      case Outcome::Collision: ++result.collisions; break;
      case Outcome::Overtime: ++result.overtimes; break;
    }
    result.rows.push_back(row);
  }
  const double n = static_cast<double>(trials.size());
  result.sr = static_cast<double>(result.successes) / n;
  result.otp = static_cast<double>(result.overtimes) / n;
  if (!successes.empty())
    result.homeostasis = homeostasis_metrics(successes);
  return result;
}

StateNormalizer avoid_state_normalizer(const World& world,
                                       const SimParams& params) {
  StateNormalizer norm;
  const double diag = std::hypot(world.width, world.height);
  const double omega_max = 2.0 * params.v_max / params.wheel_base;
  norm.bounds.push_back({0.0, diag});
  // Bearings beyond 90 degrees saturate; the rectified split already tells
  // the side, and the tighter range keeps small errors visible at low T.
  norm.bounds.push_back({0.0, kPi / 2.0});
  norm.bounds.push_back({0.0, kPi / 2.0});
  norm.bounds.push_back({0.0, params.v_max});
  norm.bounds.push_back({0.0, omega_max});
  norm.bounds.push_back({0.0, omega_max});
  for (int k = 0; k < kRayCount; ++k)
    norm.bounds.push_back({kLidarMin, kLidarMax});
  return norm;
}

World make_default_world() {
  World w;
  w.circles = {
      {5.0, 5.0, 0.8},   {14.0, 6.0, 0.9}, {10.0, 10.0, 1.0},
      {6.0, 14.0, 0.9},  {15.0, 15.0, 0.8}, {10.0, 3.0, 0.7},
      {3.0, 10.0, 0.7},  {17.0, 10.0, 0.7}, {10.0, 17.0, 0.7},
  };
  return w;
}

World make_dynamic_world() {
  World w = make_default_world();
  w.dynamic = {
      {2.0, 2.5, 6.0, 2.5, 0.30, 0.4},   {12.0, 2.5, 16.0, 2.5, 0.25, 0.4},
      {2.5, 7.0, 2.5, 12.0, 0.30, 0.4},  {7.5, 7.0, 7.5, 12.0, 0.25, 0.4},
      {12.5, 8.0, 12.5, 12.0, 0.30, 0.4},{17.5, 6.0, 17.5, 12.0, 0.25, 0.4},
      {4.0, 17.5, 8.0, 17.5, 0.30, 0.4}, {12.0, 17.5, 16.0, 17.5, 0.25, 0.4},
      {7.0, 4.5, 11.0, 4.5, 0.25, 0.4},  {8.0, 14.5, 12.0, 14.5, 0.30, 0.4},
      {14.0, 12.5, 17.0, 12.5, 0.25, 0.4},
  };
  return w;
}

std::vector<std::pair<Point, Point>> sample_trials(const World& world,
                                                   std::size_t count,
                                                   std::mt19937_64& rng,
                                                   double min_separation,
                                                   double clearance) {
  std::uniform_real_distribution<double> ux(1.0, world.width - 1.0);
  std::uniform_real_distribution<double> uy(1.0, world.height - 1.0);
  auto free_point = [&]() {
    for (int attempt = 0; attempt < 10000; ++attempt) {
      Point p{ux(rng), uy(rng)};
      if (obstacle_clearance(world, p.x, p.y, 0.0) >= clearance) return p;
    }
    throw DomainError("sample_trials: world too crowded for the clearance");
  };
  std::vector<std::pair<Point, Point>> trials;
  trials.reserve(count);
  while (trials.size() < count) {
    const Point a = free_point();
    const Point b = free_point();
    if (dist(a.x, a.y, b.x, b.y) < min_separation) continue;
    trials.emplace_back(a, b);
  }
  return trials;
}

}  // namespace bdett
