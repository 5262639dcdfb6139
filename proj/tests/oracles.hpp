#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance binary. Nothing here calls into the code under test except to
// read parameters and network weights.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "hwy/driver_models.hpp"
#include "hwy/highway_env.hpp"
#include "hwy/mlp.hpp"

namespace oracle {

inline double idm(double v, double vd, double gap, double dv,
                  const hwy::IdmParams& p) {
  const double s_star = p.d0 + v * p.time_headway +
                        v * dv / (2.0 * std::sqrt(p.b * p.a_max));
  const double raw =
      p.a_max * (1.0 - std::pow(v / vd, p.delta) - (s_star / gap) * (s_star / gap));
  return raw < p.a_min ? p.a_min : raw;
}

inline double idm_unclamped(double v, double vd, double gap, double dv,
                            const hwy::IdmParams& p) {
  const double s_star = p.d0 + v * p.time_headway +
                        v * dv / (2.0 * std::sqrt(p.b * p.a_max));
  return p.a_max *
         (1.0 - std::pow(v / vd, p.delta) - (s_star / gap) * (s_star / gap));
}

struct Car {
  double x = 0.0;
  int lane = 0;
  double v = 0.0;
  double vd = 0.0;
};

// Nearest car ahead of / behind x in a lane, skipping `self`. Equal x counts
// as ahead when the other index is larger.
inline std::optional<std::size_t> nearest(const std::vector<Car>& cars,
                                          std::size_t self, int lane,
                                          bool ahead) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < cars.size(); ++i) {
    if (i == self || cars[i].lane != lane) continue;
    const double dx = cars[i].x - cars[self].x;
    const bool is_ahead = dx > 0 || (dx == 0 && i > self);
    if (is_ahead != ahead) continue;
    if (!best || std::abs(dx) < std::abs(cars[*best].x - cars[self].x)) best = i;
  }
  return best;
}

// IDM of car `who` following car `lead` (or the empty road).
inline double follow(const std::vector<Car>& cars, std::size_t who,
                     std::optional<std::size_t> lead, const hwy::IdmParams& p,
                     double x_override = std::numeric_limits<double>::quiet_NaN()) {
  const double x = std::isnan(x_override) ? cars[who].x : x_override;
  if (!lead) return idm(cars[who].v, cars[who].vd, p.d_max_empty, 0.0, p);
  const double gap = std::max(cars[*lead].x - x - hwy::kVehicleLength, 0.1);
  return idm(cars[who].v, cars[who].vd, gap, cars[who].v - cars[*lead].v, p);
}

// Enumerates both neighbour lanes of car e and evaluates the safety and
// incentive criteria directly from positions.
inline hwy::LaneDecision mobil(const std::vector<Car>& cars, std::size_t e,
                               int n_lanes, const hwy::IdmParams& idm_p,
                               const hwy::MobilParams& m) {
  const int lane = cars[e].lane;
  const auto cur_lead = nearest(cars, e, lane, true);
  const auto cur_follow = nearest(cars, e, lane, false);
  const double a_e = follow(cars, e, cur_lead, idm_p);

  auto gain = [&](int target) -> std::optional<double> {
    const auto lead = nearest(cars, e, target, true);
    const auto fol = nearest(cars, e, target, false);
    const double L = hwy::kVehicleLength;
    if (lead && cars[*lead].x - cars[e].x - L <= 0) return std::nullopt;
    if (fol && cars[e].x - cars[*fol].x - L <= 0) return std::nullopt;

    const double a_e_new = follow(cars, e, lead, idm_p);
    if (!(a_e_new > -m.b_safe)) return std::nullopt;

    double g_n = 0.0;
    if (fol) {
      const std::size_t n = *fol;
      const double gap = cars[e].x - cars[n].x - L;
      const double a_n_new =
          idm(cars[n].v, cars[n].vd, gap, cars[n].v - cars[e].v, idm_p);
      if (!(a_n_new > -m.b_safe)) return std::nullopt;
      double a_n = idm(cars[n].v, cars[n].vd, idm_p.d_max_empty, 0.0, idm_p);
      if (lead) {
        a_n = idm(cars[n].v, cars[n].vd, cars[*lead].x - cars[n].x - L,
                  cars[n].v - cars[*lead].v, idm_p);
      }
      g_n = a_n_new - a_n;
    }
    double g_o = 0.0;
    if (cur_follow) {
      const std::size_t o = *cur_follow;
      const double a_o = follow(cars, o, e, idm_p);
      const double a_o_new = follow(cars, o, cur_lead, idm_p);
      g_o = a_o_new - a_o;
    }
    return (a_e_new - a_e) + m.politeness_side * g_n + m.politeness_rear * g_o;
  };

  std::optional<double> left;
  std::optional<double> right;
  if (lane + 1 < n_lanes) left = gain(lane + 1);
  if (lane > 0) right = gain(lane - 1);
  const bool left_ok = left && *left > m.a_threshold;
  const bool right_ok = right && *right > m.a_threshold;
  if (left_ok && (!right_ok || *left >= *right)) return hwy::LaneDecision::ChangeLeft;
  if (right_ok) return hwy::LaneDecision::ChangeRight;
  return hwy::LaneDecision::KeepLane;
}

// Random traffic snapshot on a 3-lane road, 9 cars within 200 m.
inline std::vector<Car> random_traffic(std::mt19937_64& rng, int n = 9,
                                       int n_lanes = 3) {
  std::uniform_real_distribution<double> x(0.0, 200.0);
  std::uniform_int_distribution<int> lane(0, n_lanes - 1);
  std::uniform_real_distribution<double> v(0.0, 30.0);
  std::uniform_real_distribution<double> vd(18.0, 26.0);
  std::vector<Car> cars(static_cast<std::size_t>(n));
  for (auto& c : cars) c = Car{x(rng), lane(rng), v(rng), vd(rng)};
  return cars;
}

inline std::vector<hwy::Vehicle> to_vehicles(const std::vector<Car>& cars) {
  std::vector<hwy::Vehicle> out;
  for (const auto& c : cars) {
    hwy::Vehicle v;
    v.state.x = c.x;
    v.state.y = hwy::lane_center(c.lane);
    v.state.v = c.v;
    v.state.lane_id = c.lane;
    v.desired_speed = c.vd;
    v.steering.target_lane = c.lane;
    out.push_back(v);
  }
  return out;
}

// Largest relative difference between analytic and central-difference
// gradients of the TD loss, over every parameter.
inline double gradient_check(hwy::Mlp net, const Eigen::MatrixXd& inputs,
                             const std::vector<int>& actions,
                             const std::vector<double>& targets,
                             double h = 1e-6) {
  hwy::MlpGradients grads;
  net.td_loss(inputs, actions, targets, &grads);
  double worst = 0.0;
  auto check = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + h;
    const double up = net.td_loss(inputs, actions, targets);
    param = saved - h;
    const double down = net.td_loss(inputs, actions, targets);
    param = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-3});
    worst = std::max(worst, std::abs(numeric - analytic) / scale);
  };
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    auto& layer = net.layers()[l];
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        check(layer.weights(r, c), grads[l].weights(r, c));
      }
      check(layer.bias(r), grads[l].bias(r));
    }
  }
  return worst;
}

// Explicit-loop forward pass.
inline std::vector<double> forward(const hwy::Mlp& net,
                                   const std::vector<double>& input) {
  std::vector<double> a = input;
  const auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& w = layers[l].weights;
    std::vector<double> z(static_cast<std::size_t>(w.rows()));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      double s = layers[l].bias(r);
      for (Eigen::Index c = 0; c < w.cols(); ++c) s += w(r, c) * a[c];
      z[r] = l + 1 < layers.size() ? std::tanh(s) : s;
    }
    a = std::move(z);
  }
  return a;
}

}  // namespace oracle
