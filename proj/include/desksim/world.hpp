#pragma once

#include <algorithm>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "desksim/geometry.hpp"
#include "desksim/plan.hpp"
#include "desksim/rng.hpp"
#include "desksim/types.hpp"

namespace desksim {

// Unrecoverable execution faults (planner or scheduler bugs, not injected
// failures). The episode loop aborts on these.
struct ExecutionError : std::runtime_error {
    ExecutionError(std::string code_, const std::string& what)
        : std::runtime_error(what), code(std::move(code_)) {}
    std::string code;
};

struct WorldState {
    TableSpec table;
    std::vector<SceneObject> objects;
    std::vector<DebrisParticle> debris;
    std::vector<ArmState> arms;  // one or two, index 0 = left
    double clock = 0.0;

    KinematicsParams kinematics;
    Thresholds thresholds;
    FailureInjectionConfig injection;
    Rng rng;  // world event stream (slips, force events, noise)

    std::set<std::string> freshly_inspected;

    SceneObject* find_object(const std::string& id) {
        for (auto& o : objects)
            if (o.id == id) return &o;
        return nullptr;
    }
    const SceneObject* find_object(const std::string& id) const {
        for (const auto& o : objects)
            if (o.id == id) return &o;
        return nullptr;
    }
    ArmState& arm(ArmId id) {
        for (auto& a : arms)
            if (a.arm == id) return a;
        throw ExecutionError("arm_missing", "arm not present in this world");
    }
    const ArmState& arm(ArmId id) const {
        for (const auto& a : arms)
            if (a.arm == id) return a;
        throw ExecutionError("arm_missing", "arm not present in this world");
    }
    bool has_arm(ArmId id) const {
        for (const auto& a : arms)
            if (a.arm == id) return true;
        return false;
    }
};

// How the executor runs one step: a single arm, both arms concurrently, or
// one arm doing both halves back to back (single-arm rewrite of arm="both").
enum class ExecMode { single, dual, sequential_both };

struct ArmAssignment {
    ExecMode mode = ExecMode::single;
    ArmId primary = ArmId::left;

    bool uses(ArmId a) const {
        return mode == ExecMode::dual ? true : primary == a;
    }
};

namespace motion {

struct ArmLeg {
    ArmId arm = ArmId::left;
    Vec2 start;
    Vec2 end;
};

// Per-step motion summary shared by the scheduler and the executor, so both
// derive identical durations and end poses.
struct Profile {
    double duration = 0.0;
    std::vector<ArmLeg> legs;

    Vec2 end_of(ArmId a, const Vec2& fallback) const {
        Vec2 e = fallback;
        for (const auto& l : legs)
            if (l.arm == a) e = l.end;
        return e;
    }
};

inline Vec2 perp(const Vec2& v) { return {-v.y, v.x}; }

struct Strip {
    Vec2 center;       // strip center
    Vec2 dir;          // sweep direction, unit
    double half_width; // perpendicular half extent actually covered
    double half_len;   // along-direction half extent

    Vec2 start() const { return center - dir * half_len; }
    Vec2 end() const { return center + dir * half_len; }
    double far_along(const Vec2& origin) const { return (end() - origin).dot(dir); }

    bool covers(const Vec2& p) const {
        Vec2 rel = p - center;
        double along = rel.dot(dir);
        double across = rel.dot(perp(dir));
        return std::abs(across) <= half_width + 1e-12 && std::abs(along) <= half_len + 1e-12;
    }
};

// Region extents measured along the sweep direction and its perpendicular.
inline void region_extents(const Rect& region, const Vec2& dir, double& along, double& across) {
    Vec2 c = region.center();
    double hx = region.width() * 0.5, hy = region.height() * 0.5;
    Vec2 p = perp(dir);
    along = std::abs(dir.x) * hx + std::abs(dir.y) * hy;
    across = std::abs(p.x) * hx + std::abs(p.y) * hy;
    (void)c;
}

// The wiper covers a strip of width wipe_width centered on the lane
// centerline. "both" splits the region into two side-by-side lanes.
inline std::vector<Strip> wipe_strips(const Rect& region, const Vec2& dir, double wipe_width,
                                      bool two_lanes) {
    double half_along = 0.0, half_across = 0.0;
    region_extents(region, dir, half_along, half_across);
    Vec2 c = region.center();
    std::vector<Strip> strips;
    if (!two_lanes) {
        strips.push_back({c, dir, std::min(wipe_width * 0.5, half_across), half_along});
    } else {
        double lane_half = half_across * 0.5;
        Vec2 offset = perp(dir) * lane_half;
        strips.push_back({c - offset, dir, std::min(wipe_width * 0.5, lane_half), half_along});
        strips.push_back({c + offset, dir, std::min(wipe_width * 0.5, lane_half), half_along});
    }
    return strips;
}

inline std::pair<Rect, Rect> split_region(const Rect& region) {
    if (region.width() >= region.height()) {
        double mid = (region.lo.x + region.hi.x) * 0.5;
        return {Rect{region.lo, {mid, region.hi.y}}, Rect{{mid, region.lo.y}, region.hi}};
    }
    double mid = (region.lo.y + region.hi.y) * 0.5;
    return {Rect{region.lo, {region.hi.x, mid}}, Rect{{region.lo.x, mid}, region.hi}};
}

inline double diag(const Rect& r) {
    return std::sqrt(r.width() * r.width() + r.height() * r.height());
}

}  // namespace motion

inline Vec2 unit_or_x(const Vec2& v) {
    double n = v.norm();
    if (n <= 1e-12) return {1.0, 0.0};
    return {v.x / n, v.y / n};
}

// Computes duration and per-arm motion legs for a step without touching the
// world. start_left/start_right are the arm EE positions the step begins
// from; the scheduler feeds projected poses, the executor feeds actual ones.
inline motion::Profile motion_profile(const WorldState& world, const PlanStep& step,
                                      const ArmAssignment& assignment, const Vec2& start_left,
                                      const Vec2& start_right) {
    const auto& kin = world.kinematics;
    const double v = kin.arm_speed;
    const double approach = world.table.height_offset / v;
    auto start_of = [&](ArmId a) { return a == ArmId::left ? start_left : start_right; };

    motion::Profile prof;
    switch (step.primitive) {
        case Primitive::pick: {
            const SceneObject* obj = world.find_object(step.targets.at(0));
            if (!obj) throw ExecutionError("target_missing", "pick target " + step.targets[0]);
            Vec2 s = start_of(assignment.primary);
            Vec2 e = obj->pose.position();
            prof.duration = distance(s, e) / v + kin.grasp_overhead + approach;
            prof.legs.push_back({assignment.primary, s, e});
            break;
        }
        case Primitive::place: {
            Vec2 s = start_of(assignment.primary);
            Vec2 e = step.target_pose->position();
            prof.duration = distance(s, e) / v + kin.grasp_overhead + approach;
            prof.legs.push_back({assignment.primary, s, e});
            break;
        }
        case Primitive::wipe: {
            const Rect region = *step.region;
            const Vec2 dir = unit_or_x(*step.direction);
            if (assignment.mode == ExecMode::dual) {
                auto strips = motion::wipe_strips(region, dir, kin.wipe_width, true);
                double d = 0.0;
                for (size_t i = 0; i < strips.size(); ++i) {
                    ArmId a = i == 0 ? ArmId::left : ArmId::right;
                    Vec2 s = start_of(a);
                    double leg = distance(s, strips[i].start()) / v +
                                 2.0 * strips[i].half_len / v + approach;
                    d = std::max(d, leg);
                    prof.legs.push_back({a, s, strips[i].end()});
                }
                prof.duration = d;
            } else if (assignment.mode == ExecMode::sequential_both) {
                auto strips = motion::wipe_strips(region, dir, kin.wipe_width, true);
                Vec2 pos = start_of(assignment.primary);
                double d = 0.0;
                for (const auto& st : strips) {
                    d += distance(pos, st.start()) / v + 2.0 * st.half_len / v + approach;
                    pos = st.end();
                }
                prof.duration = d;
                prof.legs.push_back({assignment.primary, start_of(assignment.primary), pos});
            } else {
                auto strips = motion::wipe_strips(region, dir, kin.wipe_width, false);
                Vec2 s = start_of(assignment.primary);
                prof.duration =
                    distance(s, strips[0].start()) / v + 2.0 * strips[0].half_len / v + approach;
                prof.legs.push_back({assignment.primary, s, strips[0].end()});
            }
            break;
        }
        case Primitive::consolidate: {
            const Rect region = *step.region;
            Vec2 gather = step.gather_point->position();
            if (assignment.mode == ExecMode::dual) {
                auto [h1, h2] = motion::split_region(region);
                double d1 = distance(start_of(ArmId::left), h1.center()) / v +
                            2.0 * motion::diag(h1) / v + approach;
                double d2 = distance(start_of(ArmId::right), h2.center()) / v +
                            2.0 * motion::diag(h2) / v + approach;
                prof.duration = std::max(d1, d2);
                prof.legs.push_back({ArmId::left, start_of(ArmId::left), gather});
                prof.legs.push_back({ArmId::right, start_of(ArmId::right), gather});
            } else if (assignment.mode == ExecMode::sequential_both) {
                auto [h1, h2] = motion::split_region(region);
                Vec2 pos = start_of(assignment.primary);
                double d = distance(pos, h1.center()) / v + 2.0 * motion::diag(h1) / v + approach;
                d += distance(h1.center(), h2.center()) / v + 2.0 * motion::diag(h2) / v + approach;
                prof.duration = d;
                prof.legs.push_back({assignment.primary, start_of(assignment.primary), gather});
            } else {
                Vec2 s = start_of(assignment.primary);
                prof.duration =
                    distance(s, region.center()) / v + 2.0 * motion::diag(region) / v + approach;
                prof.legs.push_back({assignment.primary, s, gather});
            }
            break;
        }
        case Primitive::inspect: {
            Vec2 s = start_of(assignment.primary);
            prof.duration = kin.t_inspect + approach;
            prof.legs.push_back({assignment.primary, s, s});
            break;
        }
    }
    return prof;
}

// Maps a raw step outcome to the planner-visible failure taxonomy: force
// feedback, pose error, or timeout. grasp slips surface through one of the
// first two channels depending on how far the object moved.
inline std::optional<FailureKind> detect_failure(const StepOutcome& outcome, const PlanStep& step,
                                                 const Thresholds& thresholds) {
    double threshold = step.force_threshold.value_or(thresholds.default_force_threshold);
    if (outcome.injected_force && *outcome.injected_force > threshold)
        return FailureKind::force_exceeded;
    if (step.verify && outcome.measured_pose_error > thresholds.eps_pose)
        return FailureKind::pose_error;
    if (outcome.duration > thresholds.primitive_timeout) return FailureKind::timeout;
    if (outcome.slip_displacement) {
        return *outcome.slip_displacement > thresholds.eps_pose ? FailureKind::pose_error
                                                                : FailureKind::force_exceeded;
    }
    return std::nullopt;
}

namespace detail {

// Draw order per step is part of the determinism contract (the Monte-Carlo
// test oracles replay it): force event first, then the primitive's own noise.
inline std::optional<double> draw_force_event(WorldState& world, const PlanStep& step) {
    if (step.primitive == Primitive::inspect) return std::nullopt;  // contactless
    bool fired = world.rng.bernoulli(world.injection.p_force_exceed);
    if (!fired) return std::nullopt;
    return world.rng.uniform(5.0, 30.0);
}

inline bool force_exceeded(const WorldState& world, const PlanStep& step, double magnitude) {
    double threshold =
        step.force_threshold.value_or(world.thresholds.default_force_threshold);
    return magnitude > threshold;
}

inline void finalize(StepOutcome& outcome, const PlanStep& step, const Thresholds& thresholds) {
    outcome.failure_kind = detect_failure(outcome, step, thresholds);
    if (!outcome.failure_kind)
        outcome.status = StepStatus::success;
    else if (*outcome.failure_kind == FailureKind::timeout)
        outcome.status = StepStatus::timeout;
    else
        outcome.status = StepStatus::failure;
}

}  // namespace detail

// Executes one validated plan step against the world: moves the assigned
// arm(s), applies the primitive's physical effect with injected failures, and
// advances the episode clock by the step duration.
inline StepOutcome execute_primitive(WorldState& world, const PlanStep& step,
                                     const ArmAssignment& assignment) {
    for (const auto& a : world.arms) {
        if (assignment.uses(a.arm) && a.busy_until > world.clock + 1e-9)
            throw ExecutionError("arm_busy", "arm scheduled while busy");
    }
    for (const auto& t : step.targets) {
        const SceneObject* obj = world.find_object(t);
        if (!obj) throw ExecutionError("target_missing", "unknown object " + t);
        if (obj->held_by && !assignment.uses(*obj->held_by))
            throw ExecutionError("target_held", "object " + t + " held by the other arm");
    }

    motion::Profile prof = motion_profile(world, step, assignment,
                                          world.arm(ArmId::left).ee_pose.position(),
                                          world.arms.size() > 1
                                              ? world.arm(ArmId::right).ee_pose.position()
                                              : world.arm(ArmId::left).ee_pose.position());
    StepOutcome outcome;
    outcome.step_id = step.id;
    outcome.duration = prof.duration;

    const Rect apron = world.table.apron_bounds();
    auto move_arms_to_leg_ends = [&] {
        for (const auto& leg : prof.legs) {
            if (!world.has_arm(leg.arm)) continue;
            auto& a = world.arm(leg.arm);
            a.ee_pose = make_pose(leg.end.x, leg.end.y, a.ee_pose.theta);
        }
    };

    switch (step.primitive) {
        case Primitive::pick: {
            SceneObject& obj = *world.find_object(step.targets[0]);
            ArmState& arm = world.arm(assignment.primary);
            if (arm.holding) throw ExecutionError("gripper_occupied", "pick with occupied gripper");
            auto force = detail::draw_force_event(world, step);
            bool slip = false;
            if (force && detail::force_exceeded(world, step, *force)) {
                outcome.injected_force = force;  // grasp aborted, object undisturbed
            } else {
                double p_slip = obj.category == ObjectCategory::fragile
                                    ? world.injection.p_slip_fragile
                                    : world.injection.p_slip_rigid;
                slip = world.rng.bernoulli(p_slip);
                if (slip) {
                    double angle = world.rng.uniform(0.0, 2.0 * kPi);
                    double radius = world.rng.uniform(0.0, 0.03);
                    Vec2 displaced{obj.pose.x + std::cos(angle) * radius,
                                   obj.pose.y + std::sin(angle) * radius};
                    displaced = clamp_to(displaced, apron);
                    double moved = distance(displaced, obj.pose.position());
                    obj.pose = make_pose(displaced.x, displaced.y, obj.pose.theta);
                    outcome.slip_displacement = moved;
                    outcome.measured_pose_error = moved;
                }
            }
            move_arms_to_leg_ends();
            if (!outcome.injected_force && !slip) {
                obj.held_by = assignment.primary;
                arm.holding = obj.id;
            }
            break;
        }
        case Primitive::place: {
            SceneObject& obj = *world.find_object(step.targets[0]);
            ArmState& arm = world.arm(assignment.primary);
            if (!arm.holding || *arm.holding != obj.id)
                throw ExecutionError("place_without_hold",
                                     "place of " + obj.id + " by an arm not holding it");
            Vec2 start = arm.ee_pose.position();
            Vec2 target = step.target_pose->position();
            auto force = detail::draw_force_event(world, step);
            Vec2 final_pos;
            if (force && detail::force_exceeded(world, step, *force)) {
                // Contact spike mid-transfer: motion aborts and the object is
                // released part way to the target.
                outcome.injected_force = force;
                double frac = world.rng.uniform(0.3, 0.8);
                final_pos = start + (target - start) * frac;
                if (obj.category == ObjectCategory::fragile) obj.damaged = true;
            } else {
                double nx = world.rng.normal(0.0, world.injection.place_noise_sigma);
                double ny = world.rng.normal(0.0, world.injection.place_noise_sigma);
                final_pos = {target.x + nx, target.y + ny};
            }
            final_pos = clamp_to(final_pos, apron);
            obj.pose = make_pose(final_pos.x, final_pos.y, step.target_pose->theta);
            obj.held_by.reset();
            arm.holding.reset();
            outcome.measured_pose_error = distance(final_pos, target);
            move_arms_to_leg_ends();
            break;
        }
        case Primitive::wipe: {
            auto force = detail::draw_force_event(world, step);
            if (force && detail::force_exceeded(world, step, *force)) {
                outcome.injected_force = force;
                move_arms_to_leg_ends();
                break;
            }
            const Vec2 dir = unit_or_x(*step.direction);
            auto strips = motion::wipe_strips(*step.region, dir, world.kinematics.wipe_width,
                                              assignment.mode != ExecMode::single);
            const Vec2 origin = step.region->center();
            double max_residual_gap = 0.0;
            for (auto& p : world.debris) {
                if (!step.region->contains(p.pose.position())) continue;
                const motion::Strip* covering = nullptr;
                for (const auto& st : strips)
                    if (st.covers(p.pose.position())) covering = &st;
                if (!covering) continue;
                bool stays = world.rng.bernoulli(world.injection.wipe_residual_p);
                if (stays) {
                    double along = (p.pose.position() - origin).dot(dir);
                    max_residual_gap =
                        std::max(max_residual_gap, covering->far_along(origin) - along);
                    continue;
                }
                double along = (p.pose.position() - origin).dot(dir);
                double shift = covering->far_along(origin) - along;
                Vec2 moved = p.pose.position() + dir * shift;
                p.pose = make_pose(moved.x, moved.y, p.pose.theta);
            }
            outcome.measured_pose_error = max_residual_gap;
            move_arms_to_leg_ends();
            break;
        }
        case Primitive::consolidate: {
            auto force = detail::draw_force_event(world, step);
            if (force && detail::force_exceeded(world, step, *force)) {
                outcome.injected_force = force;
                move_arms_to_leg_ends();
                break;
            }
            // Sequential radial packing in particle-id order: each particle
            // is gathered to the tightest free spot around the gather point
            // (first non-overlapping radius over a fan of deterministic
            // spokes), forming a compact deterministic pile.
            Vec2 gather = step.gather_point->position();
            std::vector<DebrisParticle*> targets;
            for (auto& p : world.debris)
                if (step.region->contains(p.pose.position())) targets.push_back(&p);
            std::sort(targets.begin(), targets.end(),
                      [](const DebrisParticle* a, const DebrisParticle* b) { return a->id < b->id; });
            constexpr double kGoldenAngle = 2.39996322972865332;
            constexpr int kSpokes = 16;
            std::vector<const DebrisParticle*> placed;
            int order = 0;
            for (auto* p : targets) {
                Vec2 best = gather;
                double best_r = std::numeric_limits<double>::max();
                for (int j = 0; j < kSpokes; ++j) {
                    double angle = kGoldenAngle * (order * kSpokes + j + 1);
                    Vec2 u{std::cos(angle), std::sin(angle)};
                    // First feasible radius along this spoke: sweep past the
                    // forbidden interval of every placed particle.
                    double r = 0.0;
                    bool advanced = true;
                    while (advanced) {
                        advanced = false;
                        for (const auto* q : placed) {
                            double contact = (p->diameter + q->diameter) * 0.5;
                            Vec2 w = q->pose.position() - gather;
                            double proj = w.dot(u);
                            double off2 = w.dot(w) - proj * proj;
                            double s2 = contact * contact - off2;
                            if (s2 <= 0.0) continue;
                            double s = std::sqrt(s2);
                            if (r > proj - s + 1e-12 && r < proj + s - 1e-12) {
                                r = proj + s;
                                advanced = true;
                            }
                        }
                    }
                    if (r < best_r) {
                        best_r = r;
                        best = gather + u * r;
                    }
                }
                if (placed.empty()) best = gather;
                p->pose = make_pose(best.x, best.y, p->pose.theta);
                placed.push_back(p);
                ++order;
            }
            move_arms_to_leg_ends();
            break;
        }
        case Primitive::inspect: {
            for (const auto& t : step.targets) world.freshly_inspected.insert(t);
            if (step.region) {
                for (const auto& o : world.objects)
                    if (step.region->contains(o.pose.position()))
                        world.freshly_inspected.insert(o.id);
            }
            move_arms_to_leg_ends();
            break;
        }
    }

    world.clock += outcome.duration;
    for (auto& a : world.arms)
        if (assignment.uses(a.arm)) a.busy_until = world.clock;
    detail::finalize(outcome, step, world.thresholds);
    return outcome;
}

// Episode success per the three task objectives: valuables in the tray, the
// debris fraction collected, nothing fragile damaged or off the table.
inline SuccessVerdict evaluate_success(const WorldState& world, double debris_threshold) {
    SuccessVerdict v;
    v.valuables_in_tray = true;
    for (const auto& o : world.objects) {
        if (!world.table.tray_zone.contains(o.pose.position())) v.valuables_in_tray = false;
    }
    if (world.debris.empty()) {
        v.debris_fraction = 1.0;
    } else {
        int in_zone = 0;
        for (const auto& p : world.debris)
            if (world.table.collection_zone.contains(p.pose.position())) ++in_zone;
        v.debris_fraction = static_cast<double>(in_zone) / static_cast<double>(world.debris.size());
    }
    v.debris_collected = v.debris_fraction >= debris_threshold - 1e-12;
    v.nothing_damaged = true;
    for (const auto& o : world.objects) {
        if (o.damaged) v.nothing_damaged = false;
        if (o.category == ObjectCategory::fragile && !o.held_by &&
            !world.table.bounds().contains(o.pose.position()))
            v.nothing_damaged = false;
    }
    return v;
}

}  // namespace desksim
