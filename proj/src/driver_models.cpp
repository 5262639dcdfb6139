#include "hwy/driver_models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hwy {

namespace {

void require(bool ok, const char* message) {
  if (!ok) throw std::invalid_argument(message);
}

}  // namespace

void IdmParams::validate() const {
  require(a_max > 0, "a_max must be > 0");
  require(a_min < 0, "a_min must be < 0");
  require(delta > 0, "delta must be > 0");
  require(d0 > 0, "d0 must be > 0");
  require(time_headway > 0, "time_headway must be > 0");
  require(b > 0, "b must be > 0");
  require(d_max_empty > 0, "d_max_empty must be > 0");
}

void MobilParams::validate() const {
  require(b_safe > 0, "b_safe must be > 0");
  require(politeness_side >= 0, "politeness_side must be >= 0");
  require(politeness_rear >= 0, "politeness_rear must be >= 0");
  require(a_threshold > 0, "a_threshold must be > 0");
}

double idm_accel(double v, double v_desired, double gap, double dv,
                 const IdmParams& p) {
  if (!(gap > 0)) throw std::invalid_argument("idm_accel: gap must be > 0");
  const double desired_gap =
      p.d0 + v * p.time_headway + v * dv / (2.0 * std::sqrt(p.b * p.a_max));
  const double ratio = desired_gap / gap;
  const double a = p.a_max * (1.0 - std::pow(v / v_desired, p.delta) -
                              ratio * ratio);
  return std::max(a, p.a_min);
}

NeighborView neighbor_view(std::span<const VehicleState> states,
                           std::size_t subject, int lane) {
  if (subject >= states.size()) {
    throw std::out_of_range("neighbor_view: subject index");
  }
  const VehicleState& me = states[subject];
  NeighborView view;
  double best_ahead = 0.0;
  double best_behind = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (i == subject || states[i].lane_id != lane) continue;
    const double dx = states[i].x - me.x;
    const bool ahead = dx > 0 || (dx == 0 && i > subject);
    if (ahead) {
      if (!view.lead || dx < best_ahead) {
        best_ahead = dx;
        view.lead = Neighbor{i, dx - kVehicleLength, states[i].v};
      }
    } else {
      if (!view.follower || -dx < best_behind) {
        best_behind = -dx;
        view.follower = Neighbor{i, -dx - kVehicleLength, states[i].v};
      }
    }
  }
  return view;
}

std::string_view to_string(LaneDecision d) {
  switch (d) {
    case LaneDecision::KeepLane: return "keep";
    case LaneDecision::ChangeLeft: return "left";
    case LaneDecision::ChangeRight: return "right";
  }
  return "?";
}

namespace {

// IDM response of a vehicle to an optional lead at the given gap.
double response(double v, double v_desired, const MobilVehicle* lead,
                double gap, const IdmParams& idm) {
  if (!lead) return idm_free_road(v, v_desired, idm);
  return idm_accel(v, v_desired, std::max(gap, kMinEvalGap), v - lead->v, idm);
}

}  // namespace

LaneChangeAssessment assess_lane_change(double v, double v_desired,
                                        const LaneSituation& current,
                                        const LaneSituation& target,
                                        const IdmParams& idm,
                                        const MobilParams& mobil) {
  LaneChangeAssessment out;
  if ((target.lead && target.lead->gap <= 0) ||
      (target.follower && target.follower->gap <= 0)) {
    out.safe = false;
    out.new_follower_accel = idm.a_min;
    return out;
  }

  const MobilVehicle* cur_lead = current.lead ? &*current.lead : nullptr;
  const MobilVehicle* tgt_lead = target.lead ? &*target.lead : nullptr;

  const double a_e = response(v, v_desired, cur_lead,
                              cur_lead ? cur_lead->gap : 0.0, idm);
  const double a_e_new = response(v, v_desired, tgt_lead,
                                  tgt_lead ? tgt_lead->gap : 0.0, idm);
  out.own_accel = a_e_new;
  if (!(a_e_new > -mobil.b_safe)) {
    out.safe = false;
    return out;
  }

  double gain_new = 0.0;
  if (target.follower) {
    const MobilVehicle& n = *target.follower;
    const MobilVehicle ego_as_lead{0.0, v, v_desired};
    const double a_n_new = response(n.v, n.v_desired, &ego_as_lead, n.gap, idm);
    const double a_n = response(
        n.v, n.v_desired, tgt_lead,
        tgt_lead ? n.gap + kVehicleLength + tgt_lead->gap : 0.0, idm);
    out.new_follower_accel = a_n_new;
    if (!(a_n_new > -mobil.b_safe)) {
      out.safe = false;
      return out;
    }
    gain_new = a_n_new - a_n;
  } else {
    out.new_follower_accel = 0.0;
  }

  double gain_old = 0.0;
  if (current.follower) {
    const MobilVehicle& o = *current.follower;
    const MobilVehicle ego_as_lead{0.0, v, v_desired};
    const double a_o = response(o.v, o.v_desired, &ego_as_lead, o.gap, idm);
    const double a_o_new = response(
        o.v, o.v_desired, cur_lead,
        cur_lead ? o.gap + kVehicleLength + cur_lead->gap : 0.0, idm);
    gain_old = a_o_new - a_o;
  }

  out.safe = true;
  out.incentive = (a_e_new - a_e) + mobil.politeness_side * gain_new +
                  mobil.politeness_rear * gain_old;
  return out;
}

LaneDecision mobil_decide(const MobilInput& input, const IdmParams& idm,
                          const MobilParams& mobil) {
  std::optional<double> left_gain;
  std::optional<double> right_gain;
  if (input.left) {
    const auto a = assess_lane_change(input.v, input.v_desired, input.current,
                                      *input.left, idm, mobil);
    if (a.safe && a.incentive > mobil.a_threshold) left_gain = a.incentive;
  }
  if (input.right) {
    const auto a = assess_lane_change(input.v, input.v_desired, input.current,
                                      *input.right, idm, mobil);
    if (a.safe && a.incentive > mobil.a_threshold) right_gain = a.incentive;
  }
  if (left_gain && (!right_gain || *left_gain >= *right_gain)) {
    return LaneDecision::ChangeLeft;
  }
  if (right_gain) return LaneDecision::ChangeRight;
  return LaneDecision::KeepLane;
}

}  // namespace hwy
