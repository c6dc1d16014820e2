#pragma once

#include <string>
#include <vector>

#include "desksim/plan.hpp"
#include "desksim/scenegraph.hpp"
#include "desksim/types.hpp"

namespace desksim {

// The unmet-goal set fed back into replanning: what still has to be moved,
// what still has to be swept, and which failed steps were never re-achieved.
struct GoalSummary {
    std::vector<std::string> valuables_not_in_tray;   // object ids, ascending
    std::vector<DebrisCluster> uncollected_clusters;  // clusters with members outside the zone
    std::vector<int> failed_steps_unresolved;         // step ids, ascending

    bool empty() const {
        return valuables_not_in_tray.empty() && uncollected_clusters.empty() &&
               failed_steps_unresolved.empty();
    }
};

inline bool step_goal_satisfied(const PlanStep& step, const SceneGraph& scene,
                                double eps_pose) {
    switch (step.primitive) {
        case Primitive::pick: {
            for (const auto& o : scene.objects)
                if (o.id == step.targets.at(0))
                    return scene.table.tray_zone.contains(o.observed_pose.position());
            return false;  // not visible (held or gone)
        }
        case Primitive::place: {
            for (const auto& o : scene.objects)
                if (o.id == step.targets.at(0))
                    return distance(o.observed_pose.position(), step.target_pose->position()) <=
                           eps_pose;
            return false;
        }
        case Primitive::wipe:
        case Primitive::consolidate: {
            // Re-achieved when the step's region holds no stray debris.
            for (const auto& c : scene.debris_clusters) {
                if (step.region->contains(c.centroid) &&
                    !scene.table.collection_zone.contains(c.centroid))
                    return false;
            }
            return true;
        }
        case Primitive::inspect:
            return true;
    }
    return true;
}

inline GoalSummary remaining_goals(const Plan& plan, const std::vector<StepOutcome>& outcomes,
                                   const SceneGraph& scene, double eps_pose = 0.02) {
    GoalSummary g;
    for (const auto& o : scene.objects) {
        if (!scene.table.tray_zone.contains(o.observed_pose.position()))
            g.valuables_not_in_tray.push_back(o.id);
    }
    for (const auto& c : scene.debris_clusters) {
        bool all_in = true;
        if (!scene.table.collection_zone.contains(c.centroid)) all_in = false;
        if (!all_in) g.uncollected_clusters.push_back(c);
    }
    for (const auto& oc : outcomes) {
        if (oc.status == StepStatus::success) continue;
        const PlanStep* step = find_step(plan, oc.step_id);
        if (!step) continue;
        if (!step_goal_satisfied(*step, scene, eps_pose))
            g.failed_steps_unresolved.push_back(oc.step_id);
    }
    return g;
}

}  // namespace desksim
