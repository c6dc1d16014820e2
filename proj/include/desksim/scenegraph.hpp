#pragma once

#include <algorithm>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "desksim/rng.hpp"
#include "desksim/types.hpp"
#include "desksim/world.hpp"

namespace desksim {

struct ObservationNoiseConfig {
    double sigma_pos = 0.005;      // per-axis Gaussian position noise, meters
    double sigma_dim_rel = 0.05;   // relative footprint-dimension noise
    double max_dim_error = 0.20;   // observed dims stay within +-20% of truth
};

struct ObservedObject {
    std::string id;
    std::string label;
    ObjectCategory category = ObjectCategory::rigid;
    Pose2D observed_pose;
    Vec2 extent;        // observed footprint dimensions
    Rect bounding_box;  // observed footprint in the table frame
};

enum class RelationKind { containment, support, proximity };

inline const char* to_string(RelationKind k) {
    switch (k) {
        case RelationKind::containment: return "containment";
        case RelationKind::support: return "support";
        default: return "proximity";
    }
}

struct Relation {
    RelationKind kind = RelationKind::proximity;
    std::string subject;
    std::string object;

    bool operator==(const Relation&) const = default;
};

struct DebrisCluster {
    DebrisSizeClass size_class = DebrisSizeClass::crumb;
    Vec2 centroid;
    int count = 0;
    double radius = 0.0;        // max member distance to centroid
    std::vector<int> members;   // particle ids, ascending
};

struct SceneGraph {
    TableSpec table;
    std::vector<ObservedObject> objects;  // sorted by id
    std::vector<DebrisCluster> debris_clusters;
    std::vector<Relation> relations;
    double timestamp = 0.0;
};

struct RelationThresholds {
    double d_near = 0.05;          // proximity center distance
    double support_overlap = 0.5;  // fraction of the subject's area
    double linkage_radius = 0.04;  // debris single-linkage radius
};

// Label capability table for relation derivation. Open-vocabulary labels not
// listed here default to no capability.
inline bool label_can_contain(const std::string& label) {
    static const std::vector<std::string> table = {"mug", "cup", "bowl", "box",
                                                   "tray", "bin", "basket"};
    return std::find(table.begin(), table.end(), label) != table.end();
}

inline bool label_is_surface(const std::string& label) {
    static const std::vector<std::string> table = {"book", "notebook", "plate",
                                                   "mousepad", "mat", "tray"};
    return std::find(table.begin(), table.end(), label) != table.end();
}

struct Observation {
    std::vector<ObservedObject> objects;      // sorted by id
    std::vector<DebrisParticle> particles;    // observed poses, id order
};

// Ground-truth observation with configurable noise. Objects marked freshly
// inspected are reported exactly; the mark is consumed. Held objects do not
// appear. Draw order: per object (id order) x, y, dims; then per particle.
inline Observation observe(WorldState& world, const ObservationNoiseConfig& noise, Rng rng) {
    Observation obs;
    std::vector<const SceneObject*> visible;
    for (const auto& o : world.objects)
        if (!o.held_by) visible.push_back(&o);
    std::sort(visible.begin(), visible.end(),
              [](const SceneObject* a, const SceneObject* b) { return a->id < b->id; });

    for (const auto* o : visible) {
        double nx = rng.normal(0.0, noise.sigma_pos);
        double ny = rng.normal(0.0, noise.sigma_pos);
        double dim_rel = clamp(rng.normal(0.0, noise.sigma_dim_rel), -noise.max_dim_error,
                               noise.max_dim_error);
        bool exact = world.freshly_inspected.count(o->id) > 0;
        ObservedObject ob;
        ob.id = o->id;
        ob.label = o->label;
        ob.category = o->category;
        if (exact) {
            ob.observed_pose = o->pose;
            ob.extent = o->extent;
        } else {
            ob.observed_pose = make_pose(o->pose.x + nx, o->pose.y + ny, o->pose.theta);
            ob.extent = {o->extent.x * (1.0 + dim_rel), o->extent.y * (1.0 + dim_rel)};
        }
        ob.bounding_box =
            rect_from_center(ob.observed_pose.position(), ob.extent.x, ob.extent.y);
        obs.objects.push_back(std::move(ob));
    }
    for (const auto& p : world.debris) {
        double nx = rng.normal(0.0, noise.sigma_pos);
        double ny = rng.normal(0.0, noise.sigma_pos);
        DebrisParticle q = p;
        q.pose = make_pose(p.pose.x + nx, p.pose.y + ny, p.pose.theta);
        obs.particles.push_back(q);
    }
    world.freshly_inspected.clear();
    return obs;
}

// Single-linkage connected components per size class; components ordered by
// smallest member id.
inline std::vector<DebrisCluster> cluster_debris(const std::vector<DebrisParticle>& particles,
                                                 double linkage_radius) {
    std::vector<DebrisParticle> sorted = particles;
    std::sort(sorted.begin(), sorted.end(),
              [](const DebrisParticle& a, const DebrisParticle& b) { return a.id < b.id; });

    const size_t n = sorted.size();
    std::vector<size_t> parent(n);
    std::iota(parent.begin(), parent.end(), size_t{0});
    std::function<size_t(size_t)> find = [&](size_t i) {
        while (parent[i] != i) {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        return i;
    };
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i + 1; j < n; ++j) {
            if (sorted[i].size_class != sorted[j].size_class) continue;
            if (distance(sorted[i].pose.position(), sorted[j].pose.position()) <=
                linkage_radius) {
                parent[find(i)] = find(j);
            }
        }
    }
    std::map<size_t, DebrisCluster> groups;  // keyed by root, then re-keyed by smallest id
    for (size_t i = 0; i < n; ++i) {
        auto& g = groups[find(i)];
        g.size_class = sorted[i].size_class;
        g.members.push_back(sorted[i].id);
        g.centroid = g.centroid + sorted[i].pose.position();
        g.count += 1;
    }
    std::vector<DebrisCluster> clusters;
    for (auto& [root, g] : groups) {
        g.centroid = g.centroid * (1.0 / g.count);
        for (size_t i = 0; i < n; ++i) {
            if (find(i) == root)
                g.radius = std::max(g.radius, distance(sorted[i].pose.position(), g.centroid));
        }
        clusters.push_back(std::move(g));
    }
    std::sort(clusters.begin(), clusters.end(), [](const DebrisCluster& a, const DebrisCluster& b) {
        return a.members.front() < b.members.front();
    });
    return clusters;
}

// Footprint-geometry relations with containment > support > proximity
// priority. Containment and support are directed; proximity is stored once
// with subject.id < object.id.
inline std::vector<Relation> derive_relations(const std::vector<ObservedObject>& objects,
                                              const RelationThresholds& thresholds) {
    std::vector<const ObservedObject*> objs;
    for (const auto& o : objects) objs.push_back(&o);
    std::sort(objs.begin(), objs.end(),
              [](const ObservedObject* a, const ObservedObject* b) { return a->id < b->id; });

    std::vector<Relation> rels;
    auto directed = [&](const ObservedObject& a, const ObservedObject& b) -> bool {
        // returns true when a containment/support relation consumed the pair direction
        if (a.bounding_box.area() > 0.0 && b.bounding_box.contains_strictly(a.bounding_box) &&
            label_can_contain(b.label)) {
            rels.push_back({RelationKind::containment, a.id, b.id});
            return true;
        }
        if (label_is_surface(b.label) && a.bounding_box.area() > 0.0 &&
            overlap_area(a.bounding_box, b.bounding_box) >=
                thresholds.support_overlap * a.bounding_box.area()) {
            rels.push_back({RelationKind::support, a.id, b.id});
            return true;
        }
        return false;
    };
    for (size_t i = 0; i < objs.size(); ++i) {
        for (size_t j = i + 1; j < objs.size(); ++j) {
            const auto& a = *objs[i];
            const auto& b = *objs[j];
            bool ab = directed(a, b);
            bool ba = directed(b, a);
            if (!ab && !ba &&
                distance(a.observed_pose.position(), b.observed_pose.position()) <
                    thresholds.d_near) {
                rels.push_back({RelationKind::proximity, a.id, b.id});
            }
        }
    }
    std::sort(rels.begin(), rels.end(), [](const Relation& a, const Relation& b) {
        std::string ka = to_string(a.kind), kb = to_string(b.kind);
        if (ka != kb) return ka < kb;
        if (a.subject != b.subject) return a.subject < b.subject;
        return a.object < b.object;
    });
    return rels;
}

inline SceneGraph build_scene_graph(const Observation& obs, const TableSpec& table,
                                    const RelationThresholds& thresholds, double timestamp) {
    SceneGraph g;
    g.table = table;
    g.objects = obs.objects;
    std::sort(g.objects.begin(), g.objects.end(),
              [](const ObservedObject& a, const ObservedObject& b) { return a.id < b.id; });
    g.debris_clusters = cluster_debris(obs.particles, thresholds.linkage_radius);
    g.relations = derive_relations(g.objects, thresholds);
    g.timestamp = timestamp;
    return g;
}

namespace detail {

inline std::string fmt3(double v) {
    char buf[32];
    if (v == 0.0) v = 0.0;  // normalize -0
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

}  // namespace detail

// Canonical line-oriented scene text: header, objects in id order, clusters,
// relations in lexicographic order. Coordinates fixed to 3 decimals; stable
// under input permutations and injective over distinct graphs at that
// precision. This format is the planner-facing contract and is golden-tested.
inline std::string serialize_scene(const SceneGraph& g) {
    using detail::fmt3;
    std::string out;
    out += "table " + fmt3(g.table.width) + "x" + fmt3(g.table.depth) + " height " +
           fmt3(g.table.height_offset) + " tray [" + fmt3(g.table.tray_zone.lo.x) + "," +
           fmt3(g.table.tray_zone.lo.y) + "," + fmt3(g.table.tray_zone.hi.x) + "," +
           fmt3(g.table.tray_zone.hi.y) + "] collection [" + fmt3(g.table.collection_zone.lo.x) +
           "," + fmt3(g.table.collection_zone.lo.y) + "," + fmt3(g.table.collection_zone.hi.x) +
           "," + fmt3(g.table.collection_zone.hi.y) + "] t=" + fmt3(g.timestamp) + "\n";
    std::vector<ObservedObject> objs = g.objects;
    std::sort(objs.begin(), objs.end(),
              [](const ObservedObject& a, const ObservedObject& b) { return a.id < b.id; });
    for (const auto& o : objs) {
        out += o.id + ": " + o.label + " [" + to_string(o.category) + "] at (" +
               fmt3(o.observed_pose.x) + "," + fmt3(o.observed_pose.y) + "," +
               fmt3(o.observed_pose.theta) + ") size " + fmt3(o.extent.x) + "x" +
               fmt3(o.extent.y) + "\n";
    }
    for (size_t i = 0; i < g.debris_clusters.size(); ++i) {
        const auto& c = g.debris_clusters[i];
        out += "cluster " + std::to_string(i) + ": " + to_string(c.size_class) + " x" +
               std::to_string(c.count) + " at (" + fmt3(c.centroid.x) + "," + fmt3(c.centroid.y) +
               ") r=" + fmt3(c.radius) + "\n";
    }
    std::vector<Relation> rels = g.relations;
    std::sort(rels.begin(), rels.end(), [](const Relation& a, const Relation& b) {
        std::string ka = to_string(a.kind), kb = to_string(b.kind);
        if (ka != kb) return ka < kb;
        if (a.subject != b.subject) return a.subject < b.subject;
        return a.object < b.object;
    });
    for (const auto& r : rels)
        out += std::string("rel: ") + to_string(r.kind) + " " + r.subject + " " + r.object + "\n";
    return out;
}

}  // namespace desksim
