#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "desksim/geometry.hpp"
#include "desksim/plan.hpp"
#include "desksim/types.hpp"
#include "desksim/world.hpp"

namespace desksim {

inline constexpr double kReservationRadius = 0.10;

// Discretized table plane holding static obstacle flags (tall rigid objects).
// Arm-arm avoidance is handled by reservations, not by the grid; the grid
// also backs the rasterization oracle in the test suite.
struct OccupancyGrid {
    double cell_size = 0.01;
    int nx = 0;
    int ny = 0;
    std::vector<std::uint8_t> occupied;

    static OccupancyGrid for_table(const TableSpec& table, double cell_size = 0.01) {
        OccupancyGrid g;
        g.cell_size = cell_size;
        g.nx = static_cast<int>(std::ceil(table.width / cell_size));
        g.ny = static_cast<int>(std::ceil(table.depth / cell_size));
        g.occupied.assign(static_cast<std::size_t>(g.nx) * g.ny, 0);
        return g;
    }

    Vec2 cell_center(int ix, int iy) const {
        return {(ix + 0.5) * cell_size, (iy + 0.5) * cell_size};
    }
    bool in_bounds(int ix, int iy) const { return ix >= 0 && ix < nx && iy >= 0 && iy < ny; }
    std::uint8_t& at(int ix, int iy) { return occupied[static_cast<std::size_t>(iy) * nx + ix]; }
    std::uint8_t at(int ix, int iy) const {
        return occupied[static_cast<std::size_t>(iy) * nx + ix];
    }

    void mark_footprint(const Rect& r) {
        int x0 = std::max(0, static_cast<int>(std::floor(r.lo.x / cell_size)));
        int y0 = std::max(0, static_cast<int>(std::floor(r.lo.y / cell_size)));
        int x1 = std::min(nx - 1, static_cast<int>(std::floor(r.hi.x / cell_size)));
        int y1 = std::min(ny - 1, static_cast<int>(std::floor(r.hi.y / cell_size)));
        for (int iy = y0; iy <= y1; ++iy)
            for (int ix = x0; ix <= x1; ++ix)
                if (r.contains(cell_center(ix, iy))) at(ix, iy) = 1;
    }

    // Cells whose center lies inside the corridor (core inflated by radius).
    std::vector<std::pair<int, int>> rasterize(const Corridor& c) const {
        std::vector<std::pair<int, int>> cells;
        Rect b = corridor_bounds(c);
        int x0 = std::max(0, static_cast<int>(std::floor(b.lo.x / cell_size)));
        int y0 = std::max(0, static_cast<int>(std::floor(b.lo.y / cell_size)));
        int x1 = std::min(nx - 1, static_cast<int>(std::floor(b.hi.x / cell_size)));
        int y1 = std::min(ny - 1, static_cast<int>(std::floor(b.hi.y / cell_size)));
        for (int iy = y0; iy <= y1; ++iy)
            for (int ix = x0; ix <= x1; ++ix)
                if (corridor_point_distance(c, cell_center(ix, iy)) <= c.radius)
                    cells.emplace_back(ix, iy);
        return cells;
    }

    bool corridor_blocked(const Corridor& c) const {
        for (auto [ix, iy] : rasterize(c))
            if (at(ix, iy)) return true;
        return false;
    }
};

// Labels treated as tall enough to be static obstacles on the grid.
inline bool label_is_tall(const std::string& label) {
    static const std::vector<std::string> table = {"mug", "cup", "bottle", "stapler"};
    return std::find(table.begin(), table.end(), label) != table.end();
}

inline OccupancyGrid occupancy_from_world(const WorldState& world, double cell_size = 0.01) {
    OccupancyGrid g = OccupancyGrid::for_table(world.table, cell_size);
    for (const auto& o : world.objects)
        if (!o.held_by && label_is_tall(o.label)) g.mark_footprint(o.footprint());
    return g;
}

// Space-time claim made by one arm's step.
struct Reservation {
    ArmId arm = ArmId::left;
    int step_id = 0;
    Corridor corridor;
    double t_start = 0.0;
    double t_end = 0.0;
};

inline bool reservations_conflict(const Reservation& a, const Reservation& b) {
    if (a.arm == b.arm) return false;
    bool time_overlap = a.t_start < b.t_end && b.t_start < a.t_end;
    return time_overlap && corridors_intersect(a.corridor, b.corridor);
}

struct ScheduledStep {
    int step_id = 0;
    ArmAssignment assignment;
    double t_start = 0.0;
    double t_end = 0.0;
    std::vector<Reservation> reservations;
};

struct Timeline {
    std::vector<ScheduledStep> scheduled;  // plan order
    double makespan = 0.0;

    const ScheduledStep* find(int step_id) const {
        for (const auto& s : scheduled)
            if (s.step_id == step_id) return &s;
        return nullptr;
    }
};

namespace detail {

struct ArmProjection {
    Vec2 pos;
    double available = 0.0;
};

inline Vec2 step_waypoint(const WorldState& world, const PlanStep& step, const Vec2& fallback) {
    switch (step.primitive) {
        case Primitive::pick: {
            const SceneObject* o = world.find_object(step.targets.at(0));
            return o ? o->pose.position() : fallback;
        }
        case Primitive::place:
            return step.target_pose->position();
        case Primitive::wipe:
        case Primitive::consolidate:
            return step.region->center();
        case Primitive::inspect:
            return fallback;
    }
    return fallback;
}

}  // namespace detail

// Resolves each step's arm hint against the arms actually present:
// left/right are honored verbatim, "any" goes to the arm whose projected end
// pose is nearest the step's first waypoint (ties to left), and "both" is
// rewritten to sequential single-arm halves when only one arm exists. A place
// is always routed to the arm projected to hold its target.
inline std::vector<ArmAssignment> assign_arms(const Plan& plan, const WorldState& world) {
    const bool dual = world.arms.size() >= 2;
    const ArmId present = world.arms.front().arm;
    std::map<ArmId, detail::ArmProjection> proj;
    for (const auto& a : world.arms) proj[a.arm] = {a.ee_pose.position(), 0.0};
    std::map<std::string, ArmId> projected_holder;

    std::vector<ArmAssignment> out;
    for (const auto& step : plan.steps) {
        ArmAssignment asg;
        switch (step.arm) {
            case ArmHint::left:
                asg = {ExecMode::single, dual || present == ArmId::left ? ArmId::left : present};
                break;
            case ArmHint::right:
                asg = {ExecMode::single, dual ? ArmId::right : present};
                break;
            case ArmHint::both:
                asg = dual ? ArmAssignment{ExecMode::dual, ArmId::left}
                           : ArmAssignment{ExecMode::sequential_both, present};
                break;
            case ArmHint::any: {
                ArmId chosen = present;
                if (step.primitive == Primitive::place && !step.targets.empty() &&
                    projected_holder.count(step.targets.front())) {
                    chosen = projected_holder.at(step.targets.front());
                } else if (dual) {
                    Vec2 wp = detail::step_waypoint(world, step, proj[ArmId::left].pos);
                    double dl = distance(proj[ArmId::left].pos, wp);
                    double dr = distance(proj[ArmId::right].pos, wp);
                    chosen = dr < dl ? ArmId::right : ArmId::left;  // tie-break left
                }
                asg = {ExecMode::single, chosen};
                break;
            }
        }
        if (step.primitive == Primitive::pick && !step.targets.empty())
            projected_holder[step.targets.front()] = asg.primary;
        if (step.primitive == Primitive::place && !step.targets.empty())
            projected_holder.erase(step.targets.front());

        motion::Profile prof = motion_profile(world, step, asg, proj[ArmId::left].pos,
                                              dual ? proj[ArmId::right].pos
                                                   : proj[ArmId::left].pos);
        for (const auto& leg : prof.legs)
            if (proj.count(leg.arm)) proj[leg.arm].pos = leg.end;
        out.push_back(asg);
    }
    return out;
}

// Swept corridor(s) claimed by a step: a capsule around the EE segment for
// pick/place/inspect, the full region inflated by the reservation radius for
// wipe/consolidate.
inline std::vector<Corridor> corridors_of(const WorldState& world, const PlanStep& step,
                                          const ArmAssignment& assignment, const Vec2& start_left,
                                          const Vec2& start_right) {
    std::vector<Corridor> out;
    if (step.primitive == Primitive::wipe || step.primitive == Primitive::consolidate) {
        out.push_back(region_corridor(*step.region, kReservationRadius));
        if (assignment.mode == ExecMode::dual)
            out.push_back(region_corridor(*step.region, kReservationRadius));
        return out;
    }
    motion::Profile prof = motion_profile(world, step, assignment, start_left, start_right);
    for (const auto& leg : prof.legs)
        out.push_back(segment_corridor(leg.start, leg.end, kReservationRadius));
    return out;
}

// Greedy list scheduling in step-id order. A step starts at the earliest time
// past its dependencies and its arm's previous step such that its reservation
// conflicts with no earlier-accepted reservation of the other arm; conflicts
// delay the later-indexed step.
inline Timeline build_timeline(const Plan& plan, const std::vector<ArmAssignment>& assignments,
                               const WorldState& world, double t0 = 0.0) {
    Timeline tl;
    const bool dual = world.arms.size() >= 2;
    std::map<ArmId, detail::ArmProjection> proj;
    for (const auto& a : world.arms) proj[a.arm] = {a.ee_pose.position(), t0};
    std::map<int, double> end_of_step;
    std::vector<Reservation> accepted;

    for (std::size_t i = 0; i < plan.steps.size(); ++i) {
        const PlanStep& step = plan.steps[i];
        const ArmAssignment& asg = assignments.at(i);
        std::vector<ArmId> used;
        if (asg.mode == ExecMode::dual) {
            used = {ArmId::left, ArmId::right};
        } else {
            used = {asg.primary};
        }

        double t = t0;
        for (int dep : step.depends_on)
            if (end_of_step.count(dep)) t = std::max(t, end_of_step[dep]);
        for (ArmId a : used) t = std::max(t, proj[a].available);

        motion::Profile prof = motion_profile(world, step, asg, proj[ArmId::left].pos,
                                              dual ? proj[ArmId::right].pos
                                                   : proj[ArmId::left].pos);
        auto cors = corridors_of(world, step, asg, proj[ArmId::left].pos,
                                 dual ? proj[ArmId::right].pos : proj[ArmId::left].pos);

        bool moved = true;
        while (moved) {
            moved = false;
            for (const auto& r : accepted) {
                bool other_arm = true;
                for (ArmId a : used)
                    if (r.arm == a) other_arm = false;
                if (!other_arm) continue;
                bool time_overlap = t < r.t_end && r.t_start < t + prof.duration;
                if (!time_overlap) continue;
                bool space_overlap = false;
                for (const auto& c : cors)
                    if (corridors_intersect(c, r.corridor)) space_overlap = true;
                if (space_overlap) {
                    t = r.t_end;
                    moved = true;
                }
            }
        }

        ScheduledStep ss;
        ss.step_id = step.id;
        ss.assignment = asg;
        ss.t_start = t;
        ss.t_end = t + prof.duration;
        for (std::size_t k = 0; k < used.size(); ++k) {
            Reservation r;
            r.arm = used[k];
            r.step_id = step.id;
            r.corridor = cors.size() > k ? cors[k] : cors.front();
            r.t_start = t;
            r.t_end = ss.t_end;
            ss.reservations.push_back(r);
            accepted.push_back(r);
        }
        end_of_step[step.id] = ss.t_end;
        for (ArmId a : used) proj[a].available = ss.t_end;
        for (const auto& leg : prof.legs)
            if (proj.count(leg.arm)) proj[leg.arm].pos = leg.end;
        tl.makespan = std::max(tl.makespan, ss.t_end);
        tl.scheduled.push_back(std::move(ss));
    }
    return tl;
}

}  // namespace desksim
