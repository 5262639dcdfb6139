#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

#include "hwy/dynamics.hpp"

namespace hwy {

struct IdmParams {
  double a_max = 0.7;
  double a_min = -20.0;
  double delta = 4.0;
  double d0 = 2.0;
  double time_headway = 1.6;
  double b = 1.7;
  double d_max_empty = 10000.0;

  void validate() const;
};

struct MobilParams {
  double b_safe = 4.0;  // magnitude of the largest tolerated deceleration
  double politeness_side = 1.0;
  double politeness_rear = 0.5;
  double a_threshold = 0.1;

  void validate() const;
};

/// IDM acceleration with the lower clamp at a_min. gap is the bumper gap to
/// the lead, dv is own speed minus lead speed. For an empty lane pass
/// gap = d_max_empty and dv = 0.
///
/// Throws std::invalid_argument when gap <= 0: a non-positive gap means a
/// collision should already have been caught by the caller.
double idm_accel(double v, double v_desired, double gap, double dv,
                 const IdmParams& params);

inline double idm_free_road(double v, double v_desired,
                            const IdmParams& params) {
  return idm_accel(v, v_desired, params.d_max_empty, 0.0, params);
}

struct Neighbor {
  std::size_t index = 0;
  double gap = 0.0;    // center distance minus one vehicle length
  double speed = 0.0;
};

/// Nearest lead and follower of one vehicle within one lane.
struct NeighborView {
  std::optional<Neighbor> lead;
  std::optional<Neighbor> follower;
};

/// Lane-scoped nearest-neighbour search. Vehicles are attributed to the lane
/// in their lane_id (nearest lane center). Exact ties in x are broken by
/// index: a lower index counts as behind.
NeighborView neighbor_view(std::span<const VehicleState> states,
                           std::size_t subject, int lane);

enum class LaneDecision { KeepLane = 0, ChangeLeft = 1, ChangeRight = 2 };

std::string_view to_string(LaneDecision d);

/// A vehicle as seen by the deciding vehicle: bumper gap and speed, plus the
/// desired speed needed to evaluate its IDM response.
struct MobilVehicle {
  double gap = 0.0;
  double v = 0.0;
  double v_desired = 0.0;
};

struct LaneSituation {
  std::optional<MobilVehicle> lead;
  std::optional<MobilVehicle> follower;
};

struct MobilInput {
  double v = 0.0;
  double v_desired = 0.0;
  LaneSituation current;
  std::optional<LaneSituation> left;   // absent when there is no lane
  std::optional<LaneSituation> right;
};

struct LaneChangeAssessment {
  bool safe = false;
  double incentive = 0.0;
  double new_follower_accel = 0.0;  // the follower's IDM response after the change
  double own_accel = 0.0;           // the changer's IDM response in the target lane
};

/// Evaluates one candidate lane: the safety criterion and the
/// politeness-weighted incentive. Safety requires that neither the new
/// follower nor the changing vehicle itself would brake harder than b_safe,
/// and that no gap in the target lane is non-positive. Relations inside the
/// current lane use gaps floored at kMinEvalGap.
LaneChangeAssessment assess_lane_change(double v, double v_desired,
                                        const LaneSituation& current,
                                        const LaneSituation& target,
                                        const IdmParams& idm,
                                        const MobilParams& mobil);

inline constexpr double kMinEvalGap = 0.1;

/// MOBIL decision: among safe candidates whose incentive exceeds a_threshold
/// pick the larger incentive, exact ties going left.
LaneDecision mobil_decide(const MobilInput& input, const IdmParams& idm,
                          const MobilParams& mobil);

}  // namespace hwy
