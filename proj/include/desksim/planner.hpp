#pragma once

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "desksim/goals.hpp"
#include "desksim/plan.hpp"
#include "desksim/scenegraph.hpp"
#include "desksim/types.hpp"

namespace desksim {

inline constexpr double kPlanningLatency = 0.25;  // seconds charged per planning cycle

struct PlannerConfig {
    int retry_cap = 2;                  // retries per object/region before abandoning
    double relax_force_factor = 1.5;    // force threshold multiplier on retry
    double base_force_threshold = 10.0;
    double eps_pose = 0.02;
};

struct FailureRecord {
    FailureKind kind = FailureKind::force_exceeded;
    int step_id = 0;
    Primitive primitive = Primitive::pick;
    std::vector<std::string> targets;
    std::optional<Rect> region;
    std::optional<Vec2> direction;
    double measured_pose_error = 0.0;
    double duration = 0.0;
};

struct MemoryEntry {
    int cycle = 0;
    Plan plan;
    std::vector<StepOutcome> outcomes;  // executed prefix of plan
    std::optional<FailureRecord> failure;
    std::string scene_digest;  // canonical scene text at plan time
};

// Rolling FIFO of the five most recent planning cycles.
class MemoryBuffer {
   public:
    static constexpr std::size_t kCapacity = 5;

    void push(MemoryEntry entry) {
        entries_.push_back(std::move(entry));
        while (entries_.size() > kCapacity) entries_.pop_front();
    }
    const std::deque<MemoryEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

   private:
    std::deque<MemoryEntry> entries_;
};

struct ReflectionContext {
    SceneGraph scene;
    std::string scene_text;
    MemoryBuffer memory;
    FailureRecord failure;  // reflection is failure-triggered
    GoalSummary remaining;
    std::string task_spec;
    std::vector<std::pair<ArmId, std::string>> held;  // objects still in a gripper
};

// ---------------------------------------------------------------------------
// Task geometry shared by plan generation and replanning: where valuables go
// in the tray, where debris is staged, and which wipe lanes feed the
// collection zone.

namespace taskgeom {

inline Vec2 tray_slot(const TableSpec& table, int slot) {
    const Rect& tray = table.tray_zone;
    const double inset = 0.04;
    const int cols = 5, rows = 4;
    int index = slot % (cols * rows);
    int col = index % cols;
    int row = index / cols;
    double x = tray.lo.x + inset + (tray.width() - 2 * inset) * col / (cols - 1);
    double y = tray.lo.y + inset + (tray.height() - 2 * inset) * row / (rows - 1);
    return {x, y};
}

// Stable slot index per object id: fragile ids f01..f05 take the first row,
// rigid ids r01..r15 follow. Unknown id shapes hash onto the grid.
inline int slot_index(const std::string& id) {
    if (id.size() >= 2 && (id[0] == 'f' || id[0] == 'r')) {
        int n = 0;
        bool numeric = true;
        for (std::size_t i = 1; i < id.size(); ++i) {
            if (id[i] < '0' || id[i] > '9') {
                numeric = false;
                break;
            }
            n = n * 10 + (id[i] - '0');
        }
        if (numeric && n >= 1) return id[0] == 'f' ? n - 1 : 4 + n;
    }
    std::size_t h = std::hash<std::string>{}(id);
    return static_cast<int>(h % 20);
}

inline Vec2 staging_point(const TableSpec& table) {
    return {table.collection_zone.lo.x - 0.07, table.collection_zone.center().y};
}

// Two sweep lanes covering the staging pile, terminating inside the
// collection zone so pushed debris lands in it.
inline std::vector<Rect> wipe_lanes(const TableSpec& table) {
    const Rect& zone = table.collection_zone;
    Vec2 staging = staging_point(table);
    double x0 = staging.x - 0.10;
    double x1 = zone.lo.x + 0.18;  // far edge, inside the zone
    double mid = zone.center().y;
    return {Rect{{x0, zone.lo.y}, {x1, mid}}, Rect{{x0, mid}, {x1, zone.hi.y}}};
}

inline Vec2 wipe_direction(const TableSpec&) { return {1.0, 0.0}; }

inline std::string region_key(const Rect& r) {
    char buf[80];
    std::snprintf(buf, sizeof(buf), "%.3f,%.3f,%.3f,%.3f", r.lo.x, r.lo.y, r.hi.x, r.hi.y);
    return buf;
}

}  // namespace taskgeom

// ---------------------------------------------------------------------------
// Deterministic scripted planner: the stand-in oracle for a live VLM. One
// instance per episode; retry counters persist across reflections.

class ScriptedPlanner {
   public:
    explicit ScriptedPlanner(PlannerConfig config = {}) : config_(config) {}

    // Initial full-task plan. Priority: inspect fragiles, relocate fragiles,
    // relocate rigids (nearest-to-tray first, ties by id), consolidate
    // debris, sweep lanes into the collection zone.
    Plan generate(const SceneGraph& scene, int cycle = 0) const {
        PlanBuilder b(cycle);
        auto valuables = pending_valuables(scene, {});
        std::vector<std::string> fragiles;
        for (const auto& o : scene.objects)
            if (o.category == ObjectCategory::fragile &&
                !scene.table.tray_zone.contains(o.observed_pose.position()))
                fragiles.push_back(o.id);
        if (!fragiles.empty()) b.inspect(fragiles);
        for (const auto& id : valuables) b.relocate(scene, id, std::nullopt);
        append_debris_steps(scene, b, {});
        return b.take();
    }

    // Failure-triggered replanning: applies the revision ladder for the
    // triggering failure, then re-covers every remaining goal. Objects and
    // regions that exhausted their retry budget are abandoned.
    Plan reflect(const ReflectionContext& ctx, int cycle) {
        PlanBuilder b(cycle);
        std::set<std::string> handled;

        // Anything still in a gripper goes to its slot first.
        for (const auto& [arm, id] : ctx.held) {
            b.place(id, taskgeom::tray_slot(ctx.scene.table, taskgeom::slot_index(id)),
                    arm == ArmId::left ? ArmHint::left : ArmHint::right, std::nullopt);
            handled.insert(id);
        }

        apply_ladder(ctx, b, handled);

        for (const auto& id : pending_valuables(ctx.scene, handled)) {
            if (abandoned_.count(id)) continue;
            b.relocate(ctx.scene, id, std::nullopt);
        }
        append_debris_steps(ctx.scene, b, handled);
        return b.take();
    }

    const std::set<std::string>& abandoned() const { return abandoned_; }

   private:
    struct PlanBuilder {
        explicit PlanBuilder(int cycle) {
            plan.plan_id = "cycle" + std::to_string(cycle);
            plan.created_at = cycle;
        }

        int next_id() { return static_cast<int>(plan.steps.size()) + 1; }

        int inspect(std::vector<std::string> targets) {
            PlanStep s;
            s.id = next_id();
            s.primitive = Primitive::inspect;
            s.arm = ArmHint::any;
            s.targets = std::move(targets);
            plan.steps.push_back(std::move(s));
            return plan.steps.back().id;
        }
        int pick(const std::string& id, std::optional<double> force_threshold,
                 std::vector<int> deps = {}) {
            PlanStep s;
            s.id = next_id();
            s.primitive = Primitive::pick;
            s.arm = ArmHint::any;
            s.targets = {id};
            s.force_threshold = force_threshold;
            s.verify = true;
            s.depends_on = std::move(deps);
            plan.steps.push_back(std::move(s));
            return plan.steps.back().id;
        }
        int place(const std::string& id, Vec2 slot, ArmHint arm, std::optional<int> dep) {
            PlanStep s;
            s.id = next_id();
            s.primitive = Primitive::place;
            s.arm = arm;
            s.targets = {id};
            s.target_pose = Pose2D{round4(slot.x), round4(slot.y), 0.0};
            s.verify = true;
            if (dep) s.depends_on = {*dep};
            plan.steps.push_back(std::move(s));
            return plan.steps.back().id;
        }
        int consolidate(const Rect& region, Vec2 gather, std::vector<int> deps = {}) {
            PlanStep s;
            s.id = next_id();
            s.primitive = Primitive::consolidate;
            s.arm = ArmHint::both;
            s.region = round_rect(region);
            s.gather_point = Pose2D{round4(gather.x), round4(gather.y), 0.0};
            s.depends_on = std::move(deps);
            plan.steps.push_back(std::move(s));
            return plan.steps.back().id;
        }
        int wipe(const Rect& region, Vec2 dir, std::vector<int> deps) {
            PlanStep s;
            s.id = next_id();
            s.primitive = Primitive::wipe;
            s.arm = ArmHint::both;
            s.region = round_rect(region);
            s.direction = Vec2{round4(dir.x), round4(dir.y)};
            s.verify = true;
            s.depends_on = std::move(deps);
            plan.steps.push_back(std::move(s));
            return plan.steps.back().id;
        }
        void relocate_pair(const std::string& id, Vec2 slot,
                           std::optional<double> force_threshold) {
            int p = pick(id, force_threshold);
            place(id, slot, ArmHint::any, p);
        }
        static Rect round_rect(const Rect& r) {
            return {{round4(r.lo.x), round4(r.lo.y)}, {round4(r.hi.x), round4(r.hi.y)}};
        }

        Plan take() { return std::move(plan); }
        Plan plan;
    };

    // Valuables outside the tray, fragile before rigid, nearest to the tray
    // center first, ties by smaller id.
    static std::vector<std::string> pending_valuables(const SceneGraph& scene,
                                                      const std::set<std::string>& skip) {
        Vec2 tray_center = scene.table.tray_zone.center();
        std::vector<const ObservedObject*> out;
        for (const auto& o : scene.objects) {
            if (skip.count(o.id)) continue;
            if (scene.table.tray_zone.contains(o.observed_pose.position())) continue;
            out.push_back(&o);
        }
        std::sort(out.begin(), out.end(), [&](const ObservedObject* a, const ObservedObject* b) {
            bool fa = a->category == ObjectCategory::fragile;
            bool fb = b->category == ObjectCategory::fragile;
            if (fa != fb) return fa;
            double da = distance(a->observed_pose.position(), tray_center);
            double db = distance(b->observed_pose.position(), tray_center);
            if (da != db) return da < db;
            return a->id < b->id;
        });
        std::vector<std::string> ids;
        for (const auto* o : out) ids.push_back(o->id);
        return ids;
    }

    void append_debris_steps(const SceneGraph& scene, PlanBuilder& b,
                             const std::set<std::string>& /*handled*/) const {
        std::vector<const DebrisCluster*> uncollected;
        for (const auto& c : scene.debris_clusters)
            if (!scene.table.collection_zone.contains(c.centroid)) uncollected.push_back(&c);
        if (uncollected.empty()) return;

        Vec2 staging = taskgeom::staging_point(scene.table);
        Rect region{{staging.x - 0.08, staging.y - 0.08}, {staging.x + 0.08, staging.y + 0.08}};
        for (const auto* c : uncollected) {
            double m = c->radius + 0.05;  // cluster extent plus observation margin
            region.lo.x = std::min(region.lo.x, c->centroid.x - m);
            region.lo.y = std::min(region.lo.y, c->centroid.y - m);
            region.hi.x = std::max(region.hi.x, c->centroid.x + m);
            region.hi.y = std::max(region.hi.y, c->centroid.y + m);
        }
        region = rect_intersection(region, scene.table.bounds());
        int cid = b.consolidate(region, staging);
        int prev = cid;
        for (const auto& lane : taskgeom::wipe_lanes(scene.table)) {
            std::string key = taskgeom::region_key(lane);
            if (abandoned_regions_.count(key)) continue;
            prev = b.wipe(lane, taskgeom::wipe_direction(scene.table), {prev});
        }
    }

    bool goal_satisfied(const SceneGraph& scene, const std::string& id) const {
        for (const auto& o : scene.objects)
            if (o.id == id) return scene.table.tray_zone.contains(o.observed_pose.position());
        return false;
    }

    // The revision ladder: grasp/force failures re-inspect then retry with a
    // relaxed force limit (capped retries, then abandonment); pose errors on
    // placement re-inspect and re-place; residual-debris wipe failures
    // re-sweep the lane; timeouts split the region in two.
    void apply_ladder(const ReflectionContext& ctx, PlanBuilder& b,
                      std::set<std::string>& handled) {
        const FailureRecord& f = ctx.failure;
        switch (f.primitive) {
            case Primitive::pick:
            case Primitive::place: {
                if (f.targets.empty()) return;
                const std::string& id = f.targets.front();
                handled.insert(id);
                if (abandoned_.count(id)) return;
                if (goal_satisfied(ctx.scene, id)) return;
                bool still_held = false;
                for (const auto& [arm, held_id] : ctx.held) still_held |= held_id == id;
                if (still_held) return;  // already re-placed above
                int attempts = retries_[id];
                if (attempts >= config_.retry_cap) {
                    abandoned_.insert(id);
                    return;
                }
                retries_[id] = attempts + 1;
                int ins = b.inspect({id});
                double threshold = config_.base_force_threshold;
                if (f.kind == FailureKind::force_exceeded)
                    threshold *= std::pow(config_.relax_force_factor, attempts + 1);
                int p = b.pick(id, round4(threshold), {ins});
                b.place(id, taskgeom::tray_slot(ctx.scene.table, taskgeom::slot_index(id)),
                        ArmHint::any, p);
                break;
            }
            case Primitive::wipe: {
                if (!f.region) return;
                std::string key = taskgeom::region_key(*f.region);
                if (abandoned_regions_.count(key)) return;
                if (f.kind == FailureKind::timeout) {
                    auto [h1, h2] = motion::split_region(*f.region);
                    Vec2 dir = f.direction.value_or(taskgeom::wipe_direction(ctx.scene.table));
                    int w1 = b.wipe(h1, dir, {});
                    b.wipe(h2, dir, {w1});
                    return;
                }
                int attempts = retries_[key];
                if (attempts >= config_.retry_cap) {
                    abandoned_regions_.insert(key);
                    return;
                }
                retries_[key] = attempts + 1;
                b.wipe(*f.region, f.direction.value_or(taskgeom::wipe_direction(ctx.scene.table)),
                       {});
                break;
            }
            case Primitive::consolidate: {
                if (!f.region) return;
                std::string key = taskgeom::region_key(*f.region);
                if (f.kind == FailureKind::timeout) {
                    auto [h1, h2] = motion::split_region(*f.region);
                    Vec2 gather = taskgeom::staging_point(ctx.scene.table);
                    int c1 = b.consolidate(h1, gather);
                    b.consolidate(h2, gather, {c1});
                    return;
                }
                int attempts = retries_[key];
                if (attempts >= config_.retry_cap) {
                    abandoned_regions_.insert(key);
                    return;
                }
                retries_[key] = attempts + 1;
                b.consolidate(*f.region, taskgeom::staging_point(ctx.scene.table));
                break;
            }
            case Primitive::inspect:
                break;  // inspect does not fail physically
        }
    }

    PlannerConfig config_;
    std::map<std::string, int> retries_;
    std::set<std::string> abandoned_;
    std::set<std::string> abandoned_regions_;
};

// ---------------------------------------------------------------------------
// Prompt construction (shared by the HTTP adapter and golden tests).

namespace detail {

inline std::string fmt_outcome_line(const StepOutcome& oc) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "step %d %s%s%s err=%.4f dur=%.3f", oc.step_id,
                  to_string(oc.status), oc.failure_kind ? " kind=" : "",
                  oc.failure_kind ? to_string(*oc.failure_kind) : "", oc.measured_pose_error,
                  oc.duration);
    return buf;
}

}  // namespace detail

inline std::string render_goals(const GoalSummary& g) {
    std::string out;
    out += "valuables not in tray:";
    for (const auto& id : g.valuables_not_in_tray) out += " " + id;
    out += "\nuncollected debris clusters:";
    for (const auto& c : g.uncollected_clusters) {
        out += std::string(" ") + to_string(c.size_class) + "x" + std::to_string(c.count) + "@(" +
               detail::fmt3(c.centroid.x) + "," + detail::fmt3(c.centroid.y) + ")";
    }
    out += "\nfailed steps unresolved:";
    for (int id : g.failed_steps_unresolved) out += " " + std::to_string(id);
    out += "\n";
    return out;
}

inline constexpr const char* kPlanSchemaPromptText = R"(Respond with a single JSON object, schema v1:
{
  "schema_version": "v1",
  "plan_id": string,
  "created_at": integer cycle index,
  "steps": [
    {
      "id": integer, strictly increasing from 1,
      "primitive": "pick" | "place" | "consolidate" | "wipe" | "inspect",
      "arm": "left" | "right" | "any" | "both",   // "both" only for consolidate/wipe
      "targets": [object ids],    // pick/place: exactly one; wipe/consolidate: empty
      "target_pose": {"x": m, "y": m, "theta": rad},   // place only
      "region": {"x_min": m, "y_min": m, "x_max": m, "y_max": m},  // wipe/consolidate/inspect
      "direction": {"dx": unit, "dy": unit},           // wipe only
      "gather_point": {"x": m, "y": m, "theta": rad},  // consolidate only
      "force_threshold": newtons,                      // optional, > 0
      "verify": boolean,
      "depends_on": [earlier step ids]
    }
  ]
}
Numbers use at most 4 decimals. Units: meters, radians, newtons, seconds.
)";

// Deterministic structured prompt: TASK, CURRENT SCENE, HISTORY (oldest
// first), FAILURE, REMAINING GOALS, OUTPUT SCHEMA. The initial-planning
// variant omits the FAILURE section.
inline std::string build_prompt(const std::string& task_spec, const std::string& scene_text,
                                const MemoryBuffer& memory,
                                const std::optional<FailureRecord>& failure,
                                const GoalSummary& remaining) {
    std::string p;
    p += "TASK\n" + task_spec + "\n\n";
    p += "CURRENT SCENE\n" + scene_text + "\n";
    p += "HISTORY\n";
    for (const auto& e : memory.entries()) {
        p += "[cycle " + std::to_string(e.cycle) + "]\n";
        p += "plan:\n" + serialize_plan(e.plan);
        p += "outcomes:\n";
        for (const auto& oc : e.outcomes) p += "  " + detail::fmt_outcome_line(oc) + "\n";
        if (e.failure) {
            p += "failure: " + std::string(to_string(e.failure->kind)) + " at step " +
                 std::to_string(e.failure->step_id) + "\n";
        }
        p += "scene at plan time:\n" + e.scene_digest;
    }
    p += "\n";
    if (failure) {
        char buf[200];
        std::snprintf(buf, sizeof(buf), "kind=%s step=%d primitive=%s err=%.4f dur=%.3f",
                      to_string(failure->kind), failure->step_id, to_string(failure->primitive),
                      failure->measured_pose_error, failure->duration);
        p += "FAILURE\n" + std::string(buf);
        if (!failure->targets.empty()) {
            p += " targets=";
            for (std::size_t i = 0; i < failure->targets.size(); ++i)
                p += (i ? "," : "") + failure->targets[i];
        }
        p += "\n\n";
    }
    p += "REMAINING GOALS\n" + render_goals(remaining) + "\n";
    p += "OUTPUT SCHEMA\n" + std::string(kPlanSchemaPromptText);
    return p;
}

inline std::string build_prompt(const ReflectionContext& ctx) {
    return build_prompt(ctx.task_spec, ctx.scene_text, ctx.memory, ctx.failure, ctx.remaining);
}

}  // namespace desksim
