#pragma once

#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "desksim/geometry.hpp"
#include "desksim/types.hpp"

namespace desksim {

inline constexpr const char* kPlanSchemaVersion = "v1";

enum class Primitive { pick, place, consolidate, wipe, inspect };

inline const char* to_string(Primitive p) {
    switch (p) {
        case Primitive::pick: return "pick";
        case Primitive::place: return "place";
        case Primitive::consolidate: return "consolidate";
        case Primitive::wipe: return "wipe";
        default: return "inspect";
    }
}

enum class ArmHint { left, right, any, both };

inline const char* to_string(ArmHint a) {
    switch (a) {
        case ArmHint::left: return "left";
        case ArmHint::right: return "right";
        case ArmHint::any: return "any";
        default: return "both";
    }
}

// One parameterized primitive. Which optional parameters are required is
// primitive-dependent; parse_plan enforces the full rule set and the schema
// reference lives in docs/plan_schema_v1.md.
struct PlanStep {
    int id = 0;
    Primitive primitive = Primitive::pick;
    ArmHint arm = ArmHint::any;
    std::vector<std::string> targets;
    std::optional<Pose2D> target_pose;
    std::optional<Rect> region;
    std::optional<Vec2> direction;  // near-unit; used normalized
    std::optional<Pose2D> gather_point;
    std::optional<double> force_threshold;  // newtons
    bool verify = false;
    std::vector<int> depends_on;  // forward-only: all ids < this step's id

    bool operator==(const PlanStep&) const = default;
};

struct Plan {
    std::string plan_id;
    std::vector<PlanStep> steps;
    int created_at = 0;  // replanning cycle index

    bool operator==(const Plan&) const = default;
};

struct Violation {
    int step_id = -1;  // -1 for plan-level violations
    std::string path;
    std::string rule;
    std::string detail;
};

struct ParseResult {
    std::optional<Plan> plan;
    std::vector<Violation> violations;

    bool ok() const { return plan.has_value(); }
};

// Canonical numeric precision of the wire format: 4 decimals.
inline double round4(double v) {
    double r = std::round(v * 1e4) / 1e4;
    return r == 0.0 ? 0.0 : r;  // normalize -0
}

namespace detail {

inline const std::set<std::string> kPlanKeys = {"schema_version", "plan_id", "created_at", "steps"};
inline const std::set<std::string> kStepKeys = {
    "id",        "primitive",    "arm",             "targets", "target_pose", "region",
    "direction", "gather_point", "force_threshold", "verify",  "depends_on",  "comment"};

}  // namespace detail

inline ParseResult parse_plan(const std::string& text);
inline std::string serialize_plan(const Plan& plan);

namespace detail {

class PlanValidator {
   public:
    explicit PlanValidator(const nlohmann::json& doc) : doc_(doc) {}

    ParseResult run() {
        if (!doc_.is_object()) {
            fail(-1, "$", "bad_type", "top-level value must be an object");
            return finish();
        }
        for (auto& [key, _] : doc_.items()) {
            if (!kPlanKeys.count(key)) fail(-1, key, "unknown_field", "unknown plan field");
        }
        if (doc_.contains("schema_version")) {
            if (!expect_string(-1, "schema_version")) {
            } else if (doc_["schema_version"].get<std::string>() != kPlanSchemaVersion) {
                fail(-1, "schema_version", "bad_schema_version", "expected \"v1\"");
            }
        }
        if (!doc_.contains("plan_id")) {
            fail(-1, "plan_id", "missing_field", "plan_id is required");
        } else {
            expect_string(-1, "plan_id");
        }
        if (doc_.contains("created_at")) {
            if (!doc_["created_at"].is_number_integer()) {
                fail(-1, "created_at", "bad_type", "created_at must be an integer");
            } else if (doc_["created_at"].get<int>() < 0) {
                fail(-1, "created_at", "created_at_negative", "cycle index must be >= 0");
            } else {
                plan_.created_at = doc_["created_at"].get<int>();
            }
        }
        if (plan_ok()) plan_.plan_id = doc_["plan_id"].get<std::string>();

        if (!doc_.contains("steps")) {
            fail(-1, "steps", "missing_field", "steps is required");
        } else if (!doc_["steps"].is_array()) {
            fail(-1, "steps", "bad_type", "steps must be an array");
        } else {
            int index = 0;
            int prev_id = 0;
            for (const auto& js : doc_["steps"]) {
                parse_step(js, index, prev_id);
                ++index;
            }
        }
        return finish();
    }

   private:
    bool plan_ok() const { return violations_.empty(); }

    void fail(int step_id, const std::string& path, const char* rule, const std::string& detail) {
        violations_.push_back({step_id, path, rule, detail});
    }

    bool expect_string(int step_id, const char* key) {
        if (!doc_[key].is_string()) {
            fail(step_id, key, "bad_type", std::string(key) + " must be a string");
            return false;
        }
        return true;
    }

    std::string path(int index, const std::string& field) const {
        return "steps[" + std::to_string(index) + "]." + field;
    }

    bool finite_number(const nlohmann::json& v, double& out) {
        if (!v.is_number()) return false;
        out = v.get<double>();
        return std::isfinite(out);
    }

    std::optional<double> read_number(const nlohmann::json& js, int index, int sid,
                                      const std::string& field) {
        double v = 0.0;
        if (!js.is_number()) {
            fail(sid, path(index, field), "bad_type", field + " must be a number");
            return std::nullopt;
        }
        if (!finite_number(js, v)) {
            fail(sid, path(index, field), "malformed_number", field + " is not finite");
            return std::nullopt;
        }
        return round4(v);
    }

    std::optional<Pose2D> read_pose(const nlohmann::json& js, int index, int sid,
                                    const std::string& field) {
        if (!js.is_object()) {
            fail(sid, path(index, field), "bad_type", field + " must be an object {x,y,theta}");
            return std::nullopt;
        }
        for (auto& [key, _] : js.items()) {
            if (key != "x" && key != "y" && key != "theta")
                fail(sid, path(index, field + "." + key), "unknown_field", "unknown pose field");
        }
        if (!js.contains("x") || !js.contains("y")) {
            fail(sid, path(index, field), "missing_field", field + " requires x and y");
            return std::nullopt;
        }
        auto x = read_number(js["x"], index, sid, field + ".x");
        auto y = read_number(js["y"], index, sid, field + ".y");
        double theta = 0.0;
        if (js.contains("theta")) {
            auto t = read_number(js["theta"], index, sid, field + ".theta");
            if (!t) return std::nullopt;
            theta = *t;
        }
        if (!x || !y) return std::nullopt;
        return Pose2D{*x, *y, round4(normalize_angle(theta))};
    }

    std::optional<Rect> read_region(const nlohmann::json& js, int index, int sid) {
        if (!js.is_object()) {
            fail(sid, path(index, "region"), "bad_type",
                 "region must be an object {x_min,y_min,x_max,y_max}");
            return std::nullopt;
        }
        for (auto& [key, _] : js.items()) {
            if (key != "x_min" && key != "y_min" && key != "x_max" && key != "y_max")
                fail(sid, path(index, "region." + key), "unknown_field", "unknown region field");
        }
        for (const char* k : {"x_min", "y_min", "x_max", "y_max"}) {
            if (!js.contains(k)) {
                fail(sid, path(index, "region"), "missing_field",
                     std::string("region requires ") + k);
                return std::nullopt;
            }
        }
        auto x0 = read_number(js["x_min"], index, sid, "region.x_min");
        auto y0 = read_number(js["y_min"], index, sid, "region.y_min");
        auto x1 = read_number(js["x_max"], index, sid, "region.x_max");
        auto y1 = read_number(js["y_max"], index, sid, "region.y_max");
        if (!x0 || !y0 || !x1 || !y1) return std::nullopt;
        Rect r{{*x0, *y0}, {*x1, *y1}};
        if (!r.valid() || r.width() <= 0.0 || r.height() <= 0.0) {
            fail(sid, path(index, "region"), "bad_region", "region must satisfy min < max");
            return std::nullopt;
        }
        return r;
    }

    void parse_step(const nlohmann::json& js, int index, int& prev_id) {
        PlanStep step;
        int sid = -1;
        if (!js.is_object()) {
            fail(-1, "steps[" + std::to_string(index) + "]", "bad_type", "step must be an object");
            return;
        }
        for (auto& [key, _] : js.items()) {
            if (!kStepKeys.count(key))
                fail(sid, path(index, key), "unknown_field", "unknown step field");
        }
        if (!js.contains("id") || !js["id"].is_number_integer()) {
            fail(-1, path(index, "id"), js.contains("id") ? "bad_type" : "missing_field",
                 "step id must be an integer");
            return;
        }
        sid = js["id"].get<int>();
        step.id = sid;
        if (sid <= 0) fail(sid, path(index, "id"), "id_not_positive", "step ids start at 1");
        if (sid <= prev_id)
            fail(sid, path(index, "id"), "step_ids_not_increasing",
                 "step ids must be strictly increasing");
        prev_id = std::max(prev_id, sid);

        if (!js.contains("primitive")) {
            fail(sid, path(index, "primitive"), "missing_field", "primitive is required");
            return;
        }
        if (!js["primitive"].is_string()) {
            fail(sid, path(index, "primitive"), "bad_type", "primitive must be a string");
            return;
        }
        const std::string prim = js["primitive"].get<std::string>();
        if (prim == "pick") step.primitive = Primitive::pick;
        else if (prim == "place") step.primitive = Primitive::place;
        else if (prim == "consolidate") step.primitive = Primitive::consolidate;
        else if (prim == "wipe") step.primitive = Primitive::wipe;
        else if (prim == "inspect") step.primitive = Primitive::inspect;
        else {
            fail(sid, path(index, "primitive"), "unknown_primitive", "unknown primitive " + prim);
            return;
        }

        if (js.contains("arm")) {
            if (!js["arm"].is_string()) {
                fail(sid, path(index, "arm"), "bad_type", "arm must be a string");
            } else {
                const std::string arm = js["arm"].get<std::string>();
                if (arm == "left") step.arm = ArmHint::left;
                else if (arm == "right") step.arm = ArmHint::right;
                else if (arm == "any") step.arm = ArmHint::any;
                else if (arm == "both") step.arm = ArmHint::both;
                else fail(sid, path(index, "arm"), "unknown_arm", "unknown arm " + arm);
            }
        }
        if (step.arm == ArmHint::both && step.primitive != Primitive::consolidate &&
            step.primitive != Primitive::wipe) {
            fail(sid, path(index, "arm"), "arm_both_illegal",
                 "arm \"both\" is only legal for consolidate and wipe");
        }

        if (js.contains("targets")) {
            if (!js["targets"].is_array()) {
                fail(sid, path(index, "targets"), "bad_type", "targets must be an array");
            } else {
                for (const auto& t : js["targets"]) {
                    if (!t.is_string()) {
                        fail(sid, path(index, "targets"), "bad_type",
                             "targets must contain strings");
                        break;
                    }
                    step.targets.push_back(t.get<std::string>());
                }
            }
        }
        if (js.contains("verify")) {
            if (!js["verify"].is_boolean())
                fail(sid, path(index, "verify"), "bad_type", "verify must be a boolean");
            else
                step.verify = js["verify"].get<bool>();
        }
        if (js.contains("depends_on")) {
            if (!js["depends_on"].is_array()) {
                fail(sid, path(index, "depends_on"), "bad_type", "depends_on must be an array");
            } else {
                for (const auto& d : js["depends_on"]) {
                    if (!d.is_number_integer()) {
                        fail(sid, path(index, "depends_on"), "bad_type",
                             "depends_on must contain integers");
                        break;
                    }
                    step.depends_on.push_back(d.get<int>());
                }
            }
        }
        if (js.contains("target_pose"))
            step.target_pose = read_pose(js["target_pose"], index, sid, "target_pose");
        if (js.contains("region")) step.region = read_region(js["region"], index, sid);
        if (js.contains("gather_point"))
            step.gather_point = read_pose(js["gather_point"], index, sid, "gather_point");
        if (js.contains("direction")) {
            const auto& d = js["direction"];
            if (!d.is_object() || !d.contains("dx") || !d.contains("dy")) {
                fail(sid, path(index, "direction"), d.is_object() ? "missing_field" : "bad_type",
                     "direction must be an object {dx,dy}");
            } else {
                for (auto& [key, _] : d.items()) {
                    if (key != "dx" && key != "dy")
                        fail(sid, path(index, "direction." + key), "unknown_field",
                             "unknown direction field");
                }
                auto dx = read_number(d["dx"], index, sid, "direction.dx");
                auto dy = read_number(d["dy"], index, sid, "direction.dy");
                if (dx && dy) {
                    Vec2 v{*dx, *dy};
                    if (std::abs(v.norm() - 1.0) > 0.02) {
                        fail(sid, path(index, "direction"), "direction_not_unit",
                             "direction must be a unit vector");
                    } else {
                        step.direction = v;
                    }
                }
            }
        }
        if (js.contains("force_threshold")) {
            auto f = read_number(js["force_threshold"], index, sid, "force_threshold");
            if (f) {
                if (*f <= 0.0)
                    fail(sid, path(index, "force_threshold"), "force_threshold_not_positive",
                         "force_threshold must be > 0");
                else
                    step.force_threshold = *f;
            }
        }

        check_primitive_rules(js, step, index, sid);
        check_dependencies(step, index, sid);
        steps_.push_back(std::move(step));
    }

    void require_absent(const nlohmann::json& js, int index, int sid, const char* field) {
        if (js.contains(field))
            fail(sid, path(index, field), "irrelevant_field",
                 std::string(field) + " is not a parameter of this primitive");
    }

    void check_primitive_rules(const nlohmann::json& js, const PlanStep& s, int index, int sid) {
        switch (s.primitive) {
            case Primitive::pick:
                if (s.targets.size() != 1)
                    fail(sid, path(index, "targets"), "pick_target_count",
                         "pick requires exactly one target");
                require_absent(js, index, sid, "target_pose");
                require_absent(js, index, sid, "region");
                require_absent(js, index, sid, "direction");
                require_absent(js, index, sid, "gather_point");
                break;
            case Primitive::place:
                if (s.targets.size() != 1)
                    fail(sid, path(index, "targets"), "place_target_count",
                         "place requires exactly one target");
                if (!s.target_pose && !js.contains("target_pose"))
                    fail(sid, path(index, "target_pose"), "place_missing_target_pose",
                         "place requires target_pose");
                require_absent(js, index, sid, "region");
                require_absent(js, index, sid, "direction");
                require_absent(js, index, sid, "gather_point");
                break;
            case Primitive::wipe:
                if (!s.targets.empty())
                    fail(sid, path(index, "targets"), "wipe_targets_not_empty",
                         "wipe acts on a region, not on targets");
                if (!s.region && !js.contains("region"))
                    fail(sid, path(index, "region"), "wipe_missing_region",
                         "wipe requires region");
                if (!s.direction && !js.contains("direction"))
                    fail(sid, path(index, "direction"), "wipe_missing_direction",
                         "wipe requires direction");
                require_absent(js, index, sid, "target_pose");
                require_absent(js, index, sid, "gather_point");
                break;
            case Primitive::consolidate:
                if (!s.targets.empty())
                    fail(sid, path(index, "targets"), "consolidate_targets_not_empty",
                         "consolidate acts on a region, not on targets");
                if (!s.region && !js.contains("region"))
                    fail(sid, path(index, "region"), "consolidate_missing_region",
                         "consolidate requires region");
                if (!s.gather_point && !js.contains("gather_point"))
                    fail(sid, path(index, "gather_point"), "consolidate_missing_gather_point",
                         "consolidate requires gather_point");
                require_absent(js, index, sid, "target_pose");
                require_absent(js, index, sid, "direction");
                break;
            case Primitive::inspect:
                if (s.targets.empty() && !s.region && !js.contains("region"))
                    fail(sid, path(index, "targets"), "inspect_missing_target_and_region",
                         "inspect requires targets or a region");
                require_absent(js, index, sid, "target_pose");
                require_absent(js, index, sid, "direction");
                require_absent(js, index, sid, "gather_point");
                require_absent(js, index, sid, "force_threshold");
                break;
        }
    }

    void check_dependencies(const PlanStep& s, int index, int sid) {
        for (int d : s.depends_on) {
            bool exists = false;
            for (const auto& prev : steps_)
                if (prev.id == d) exists = true;
            if (d >= s.id || !exists)
                fail(sid, path(index, "depends_on"), "bad_dependency",
                     "dependencies must reference earlier step ids");
        }
    }

    ParseResult finish() {
        ParseResult r;
        r.violations = std::move(violations_);
        if (r.violations.empty()) {
            plan_.steps = std::move(steps_);
            r.plan = std::move(plan_);
        }
        return r;
    }

    const nlohmann::json& doc_;
    Plan plan_;
    std::vector<PlanStep> steps_;
    std::vector<Violation> violations_;
};

}  // namespace detail

// Parses and fully validates a plan document. Returns either a validated Plan
// or the complete violation list; never a partial plan.
inline ParseResult parse_plan(const std::string& text) {
    nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded()) {
        ParseResult r;
        r.violations.push_back({-1, "$", "malformed_json", "document is not valid JSON"});
        return r;
    }
    return detail::PlanValidator(doc).run();
}

namespace detail {

inline nlohmann::json pose_to_json(const Pose2D& p) {
    return {{"x", round4(p.x)}, {"y", round4(p.y)}, {"theta", round4(p.theta)}};
}

}  // namespace detail

// Canonical serialization: alphabetical keys, 4-decimal numbers, defaults
// written explicitly. parse_plan(serialize_plan(p)) == p for valid plans.
inline std::string serialize_plan(const Plan& plan) {
    nlohmann::json doc;
    doc["schema_version"] = kPlanSchemaVersion;
    doc["plan_id"] = plan.plan_id;
    doc["created_at"] = plan.created_at;
    doc["steps"] = nlohmann::json::array();
    for (const auto& s : plan.steps) {
        nlohmann::json js;
        js["id"] = s.id;
        js["primitive"] = to_string(s.primitive);
        js["arm"] = to_string(s.arm);
        js["targets"] = s.targets;
        js["verify"] = s.verify;
        js["depends_on"] = s.depends_on;
        if (s.target_pose) js["target_pose"] = detail::pose_to_json(*s.target_pose);
        if (s.region)
            js["region"] = {{"x_min", round4(s.region->lo.x)},
                            {"y_min", round4(s.region->lo.y)},
                            {"x_max", round4(s.region->hi.x)},
                            {"y_max", round4(s.region->hi.y)}};
        if (s.direction) js["direction"] = {{"dx", round4(s.direction->x)}, {"dy", round4(s.direction->y)}};
        if (s.gather_point) js["gather_point"] = detail::pose_to_json(*s.gather_point);
        if (s.force_threshold) js["force_threshold"] = round4(*s.force_threshold);
        doc["steps"].push_back(std::move(js));
    }
    return doc.dump(2) + "\n";
}

inline const PlanStep* find_step(const Plan& plan, int id) {
    for (const auto& s : plan.steps)
        if (s.id == id) return &s;
    return nullptr;
}

}  // namespace desksim
