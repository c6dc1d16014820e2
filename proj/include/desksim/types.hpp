#pragma once

#include <optional>
#include <string>
#include <vector>

#include "desksim/geometry.hpp"

namespace desksim {

enum class ArmId { left, right };

inline const char* to_string(ArmId a) { return a == ArmId::left ? "left" : "right"; }

enum class ObjectCategory { rigid, fragile, debris_cluster };

inline const char* to_string(ObjectCategory c) {
    switch (c) {
        case ObjectCategory::rigid: return "rigid";
        case ObjectCategory::fragile: return "fragile";
        default: return "debris-cluster";
    }
}

struct TableSpec {
    double width = 0.9;
    double depth = 0.6;
    double height_offset = 0.0;  // per-scenario desk height; adds approach time per primitive
    Rect tray_zone{{0.03, 0.36}, {0.28, 0.57}};
    Rect collection_zone{{0.67, 0.03}, {0.87, 0.23}};

    Rect bounds() const { return {{0.0, 0.0}, {width, depth}}; }
    // Displaced objects are clamped into the table plus this apron.
    static constexpr double kApron = 0.05;
    Rect apron_bounds() const { return bounds().inflated(kApron); }
};

struct SceneObject {
    std::string id;     // unique within a world, e.g. "r03", "f01"
    std::string label;  // open-vocabulary noun
    ObjectCategory category = ObjectCategory::rigid;
    Pose2D pose;
    Vec2 extent;  // footprint width x depth, both > 0
    bool damaged = false;
    std::optional<ArmId> held_by;

    Rect footprint() const { return rect_from_center(pose.position(), extent.x, extent.y); }
};

enum class DebrisSizeClass { crumb, shred };

inline const char* to_string(DebrisSizeClass c) {
    return c == DebrisSizeClass::crumb ? "crumb" : "shred";
}

struct DebrisParticle {
    int id = 0;
    Pose2D pose;
    DebrisSizeClass size_class = DebrisSizeClass::crumb;
    double diameter = 0.002;  // crumbs 1-3 mm, shreds 15-20 mm
};

struct ArmState {
    ArmId arm = ArmId::left;
    Pose2D ee_pose;
    Pose2D home_pose;
    std::optional<std::string> holding;
    double busy_until = 0.0;
};

enum class StepStatus { success, failure, timeout };

inline const char* to_string(StepStatus s) {
    switch (s) {
        case StepStatus::success: return "success";
        case StepStatus::failure: return "failure";
        default: return "timeout";
    }
}

// Planner-visible failure taxonomy. grasp_slip is internal to the world: the
// detection rule maps it to force_exceeded or pose_error before it reaches
// the planner.
enum class FailureKind { force_exceeded, pose_error, timeout, grasp_slip };

inline const char* to_string(FailureKind k) {
    switch (k) {
        case FailureKind::force_exceeded: return "force_exceeded";
        case FailureKind::pose_error: return "pose_error";
        case FailureKind::timeout: return "timeout";
        default: return "grasp_slip";
    }
}

struct StepOutcome {
    int step_id = 0;
    StepStatus status = StepStatus::success;
    std::optional<FailureKind> failure_kind;
    double measured_pose_error = 0.0;
    double duration = 0.0;

    // Raw event channels feeding detect_failure.
    std::optional<double> injected_force;   // contact force magnitude, newtons
    std::optional<double> slip_displacement;
};

struct FailureInjectionConfig {
    double p_slip_rigid = 0.0;
    double p_slip_fragile = 0.0;
    double p_force_exceed = 0.0;
    double place_noise_sigma = 0.0;  // meters
    double wipe_residual_p = 0.0;
    std::uint64_t rng_stream = 0;  // seed-derived stream tag
};

// Benchmark profile from the default calibration; see docs/benchmark.md.
inline FailureInjectionConfig benchmark_injection() {
    FailureInjectionConfig c;
    c.p_slip_rigid = 0.08;
    c.p_slip_fragile = 0.15;
    c.p_force_exceed = 0.03;
    c.place_noise_sigma = 0.008;
    c.wipe_residual_p = 0.02;
    return c;
}

struct Thresholds {
    double eps_pose = 0.02;             // pose verification tolerance, meters
    double primitive_timeout = 20.0;    // seconds
    double default_force_threshold = 10.0;  // newtons, used when a step gives none
};

struct KinematicsParams {
    double arm_speed = 0.25;      // m/s, straight-line EE travel
    double grasp_overhead = 1.0;  // seconds per grasp/release
    double t_inspect = 0.5;       // seconds
    double wipe_width = 0.08;     // strip width per arm, meters
};

struct SuccessVerdict {
    bool valuables_in_tray = false;
    bool debris_collected = false;
    bool nothing_damaged = false;
    double debris_fraction = 0.0;

    bool overall() const { return valuables_in_tray && debris_collected && nothing_damaged; }
};

}  // namespace desksim
