#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "ovg/core.hpp"
#include "ovg/features.hpp"
#include "ovg/geom.hpp"
#include "ovg/matrix.hpp"

namespace ovg {

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

enum class Shape { box, sphere, cylinder };
enum class Relation { left_of, right_of, behind, in_front_of };

inline const std::vector<std::string>& color_names() {
    static const std::vector<std::string> v = {"red",    "green", "blue",  "yellow", "orange",
                                               "purple", "white", "black", "brown"};
    return v;
}

inline const std::vector<std::string>& shape_words() {
    static const std::vector<std::string> v = {"cubic", "round", "cylindrical"};
    return v;
}

inline const std::string& shape_word(Shape s) { return shape_words()[static_cast<int>(s)]; }

inline const std::vector<std::string>& relation_phrases() {
    static const std::vector<std::string> v = {"to the left of", "to the right of", "behind",
                                               "in front of"};
    return v;
}

inline const std::string& relation_phrase(Relation r) { return relation_phrases()[static_cast<int>(r)]; }

/// Instruction templates the annotation grammar prefixes descriptions with.
inline const std::vector<std::string>& annotation_templates() {
    static const std::vector<std::string> v = {"grasp",    "pick up", "please grasp",
                                               "please pick up", "give me", "hand me",
                                               "fetch",    "take",    "bring me", "get"};
    return v;
}

inline const std::vector<std::string>& base_class_names() {
    static const std::vector<std::string> v = {
        "apple",          "orange",        "pear",           "banana",        "peach",
        "lemon",          "strawberry",    "grape_bunch",    "tomato",        "potato",
        "carrot",         "cucumber",      "onion",          "corn_cob",      "mug",
        "paper_cup",      "teacup",        "glass_tumbler",  "water_bottle",  "soda_can",
        "juice_box",      "milk_carton",   "thermos",        "bowl",          "plate",
        "saucer",         "fork",          "spoon",          "knife",         "spatula",
        "chopsticks",     "tea_caddy",     "salt_shaker",    "sugar_jar",     "toothpaste_box",
        "soap_bar",       "shampoo_bottle","lotion_bottle",  "tissue_box",    "towel_roll",
        "hairbrush",      "toothbrush",    "notebook",       "paperback_book","pencil",
        "ballpoint_pen",  "marker",        "crayon_box",     "eraser",        "stapler",
        "tape_dispenser", "glue_stick",    "scissors",       "ruler",         "clipboard",
        "computer_mouse", "keyboard",      "webcam",         "headphones",    "phone_stand",
        "alarm_clock",    "flashlight",    "remote_control", "calculator",    "coaster",
        "candle_jar",     "flower_pot",    "storage_basket"};
    return v;
}

inline const std::vector<std::string>& novel_class_names() {
    static const std::vector<std::string> v = {
        "dragon_figurine", "power_drill",   "battery",        "racquetball",   "rubiks_cube",
        "toy_robot",       "dinosaur_figure","chess_piece",   "domino_box",    "yo_yo",
        "harmonica",       "maraca",        "whistle",        "padlock",       "wrench",
        "screwdriver",     "hammer",        "pliers",         "measuring_tape","spirit_level",
        "chisel",          "allen_key",     "socket_wrench",  "paint_roller",  "putty_knife",
        "sanding_block",   "c_clamp",       "oil_can",        "funnel",        "spray_bottle",
        "duct_tape",       "extension_cord","light_bulb",     "speaker",       "microphone",
        "game_controller", "circuit_board", "heat_sink",      "usb_hub",       "router",
        "hard_drive",      "camera_lens",   "tripod_head",    "binoculars",    "magnifier",
        "compass",         "protractor",    "abacus",         "hourglass"};
    return v;
}

// ---------------------------------------------------------------------------
// Scene types
// ---------------------------------------------------------------------------

struct ObjectAttributes {
    std::string class_name;
    int color = 0;  // index into color_names()
    Shape shape = Shape::box;

    bool operator==(const ObjectAttributes& o) const {
        return class_name == o.class_name && color == o.color && shape == o.shape;
    }
};

/// One tabletop object. size_m is the characteristic extent: cube edge,
/// sphere diameter, or cylinder diameter-and-height.
struct SceneObject {
    std::string class_name;
    int color = 0;
    Shape shape = Shape::box;
    double size_m = 0.05;
    int grid_row = 0;
    int grid_col = 0;
    Vec3 world_pos{0, 0, 0};  // body center in camera frame
    bool is_novel = false;

    ObjectAttributes attributes() const { return {class_name, color, shape}; }

    void validate() const {
        if (size_m < 0.02 || size_m > 0.12) throw ParamError("object size must be in [0.02, 0.12] m");
    }
};

struct SceneDescription {
    std::vector<SceneObject> objects;
    int target_index = 0;
    int relative_index = -1;  // -1 when no relative-object clause
    std::string description;
    GridGeometry grid;
    Camera camera;
    std::uint64_t seed = 0;

    // bookkeeping for suites and reports
    std::string id;
    std::string split;  // "base" | "novel"
    std::string tag;    // "single" | "multi" | ""

    const SceneObject& target() const { return objects.at(target_index); }

    /// Ground-truth pixel box of the target: its grid cell's box with the
    /// projected object footprint as side.
    Box target_box() const {
        const SceneObject& t = target();
        return grid.cell_box(t.grid_row, t.grid_col, camera.footprint_px(t.size_m));
    }
};

/// Base/novel class partition. Scenes generated under one split never draw
/// their target from the other.
struct SplitSpec {
    std::vector<std::string> base_classes = base_class_names();
    std::vector<std::string> novel_classes = novel_class_names();

    void validate() const {
        if (base_classes.empty() || novel_classes.empty())
            throw ConfigError("split spec: both class sets must be nonempty");
        std::unordered_set<std::string> base(base_classes.begin(), base_classes.end());
        for (const auto& c : novel_classes)
            if (base.count(c)) throw ConfigError("split spec: class in both splits: " + c);
    }
};

// ---------------------------------------------------------------------------
// Attribute embeddings
//
// Deterministic hash of the attribute tuple seeds a gaussian draw, giving
// every (class, color, shape) its own unit vector. The text side reuses the
// same embedding function, which is the oracle property the whole synthetic
// grounding world rests on.
// ---------------------------------------------------------------------------

inline std::vector<double> hashed_unit_embedding(const std::string& key, std::size_t dim) {
    Rng rng(fnv1a64(key));
    std::vector<double> v(dim);
    double sq = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        v[i] = rng.normal();
        sq += v[i] * v[i];
    }
    const double n = std::sqrt(sq);
    for (double& x : v) x /= n;
    return v;
}

inline std::vector<double> attribute_embedding(const ObjectAttributes& a, std::size_t dim) {
    return hashed_unit_embedding("attr|" + a.class_name + "|" + color_names()[a.color] + "|" +
                                     shape_word(a.shape),
                                 dim);
}

inline std::vector<double> relation_embedding(Relation r, std::size_t dim) {
    return hashed_unit_embedding("rel|" + relation_phrase(r), dim);
}

inline std::vector<double> template_embedding(int template_id, std::size_t dim) {
    return hashed_unit_embedding("tmpl|" + std::to_string(template_id), dim);
}

// ---------------------------------------------------------------------------
// Annotation grammar: <template> + <target> + <position> + <relative>
// ---------------------------------------------------------------------------

struct ParsedAnnotation {
    int template_id = 0;
    ObjectAttributes target;
    std::optional<Relation> relation;
    std::optional<ObjectAttributes> relative;
};

namespace detail {

inline std::string object_phrase(const ObjectAttributes& a) {
    return "the " + color_names()[a.color] + " " + shape_word(a.shape) + " " + a.class_name;
}

inline bool relation_holds(Relation r, const SceneObject& subject, const SceneObject& reference) {
    switch (r) {
        case Relation::left_of: return subject.grid_col < reference.grid_col;
        case Relation::right_of: return subject.grid_col > reference.grid_col;
        case Relation::behind: return subject.grid_row < reference.grid_row;
        case Relation::in_front_of: return subject.grid_row > reference.grid_row;
    }
    return false;
}

/// Relations that are true of (target, reference) and, when a twin is
/// present, false of (twin, reference) - i.e. the ones that disambiguate.
inline std::vector<Relation> usable_relations(const SceneDescription& scene, int twin_index) {
    std::vector<Relation> out;
    const SceneObject& target = scene.objects[scene.target_index];
    const SceneObject& ref = scene.objects[scene.relative_index];
    for (Relation r : {Relation::left_of, Relation::right_of, Relation::behind, Relation::in_front_of}) {
        if (!relation_holds(r, target, ref)) continue;
        if (twin_index >= 0 && relation_holds(r, scene.objects[twin_index], ref)) continue;
        out.push_back(r);
    }
    return out;
}

inline int find_twin(const SceneDescription& scene) {
    const SceneObject& t = scene.objects[scene.target_index];
    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
        if (static_cast<int>(i) == scene.target_index) continue;
        if (scene.objects[i].attributes() == t.attributes()) return static_cast<int>(i);
    }
    return -1;
}

inline std::vector<std::string> split_words(const std::string& s) {
    std::vector<std::string> words;
    std::istringstream in(s);
    std::string w;
    while (in >> w) words.push_back(w);
    return words;
}

inline std::size_t word_count(const std::string& s) { return split_words(s).size(); }

}  // namespace detail

inline std::string render_annotation(const ParsedAnnotation& parsed) {
    std::string out = annotation_templates().at(parsed.template_id) + " " +
                      detail::object_phrase(parsed.target);
    if (parsed.relation) {
        if (!parsed.relative) throw AnnotationAmbiguousError("relation clause without relative object");
        out += " " + relation_phrase(*parsed.relation) + " " + detail::object_phrase(*parsed.relative);
    }
    return out;
}

/// Deterministic description of the scene's target. A scene whose target has
/// an identical twin must carry a relative object, otherwise no description
/// can single the target out.
inline std::string annotate(const SceneDescription& scene) {
    const int twin = detail::find_twin(scene);
    if (twin >= 0 && scene.relative_index < 0)
        throw AnnotationAmbiguousError("target has an identical twin but no relative object is set");

    Rng rng(mix_seed(scene.seed, 0x616e6e6fu));  // "anno"
    ParsedAnnotation parsed;
    parsed.template_id = static_cast<int>(rng.below(annotation_templates().size()));
    parsed.target = scene.objects[scene.target_index].attributes();

    if (scene.relative_index >= 0) {
        const std::vector<Relation> usable = detail::usable_relations(scene, twin);
        if (usable.empty())
            throw AnnotationAmbiguousError("relative object cannot disambiguate the target");
        parsed.relation = usable[rng.below(usable.size())];
        parsed.relative = scene.objects[scene.relative_index].attributes();
    }
    return render_annotation(parsed);
}

/// Inverse of the grammar. Recovers the four slots or reports which slot is
/// malformed. render_annotation(parse_annotation(s)) == s for any s that
/// annotate can produce.
inline ParsedAnnotation parse_annotation(const std::string& description) {
    const std::vector<std::string> words = detail::split_words(description);
    if (words.empty()) throw ParseError("template", "empty description");

    static const std::unordered_set<std::string> class_set = [] {
        std::unordered_set<std::string> s;
        for (const auto& c : base_class_names()) s.insert(c);
        for (const auto& c : novel_class_names()) s.insert(c);
        return s;
    }();

    std::size_t pos = 0;
    auto try_match_phrase = [&](const std::string& phrase) -> bool {
        const std::vector<std::string> pw = detail::split_words(phrase);
        if (pos + pw.size() > words.size()) return false;
        for (std::size_t i = 0; i < pw.size(); ++i)
            if (words[pos + i] != pw[i]) return false;
        pos += pw.size();
        return true;
    };

    ParsedAnnotation parsed;

    // template: longest match wins so "please pick up" beats "pick up"
    {
        int best = -1;
        std::size_t best_len = 0;
        for (std::size_t t = 0; t < annotation_templates().size(); ++t) {
            const std::size_t len = detail::word_count(annotation_templates()[t]);
            const std::size_t save = pos;
            if (try_match_phrase(annotation_templates()[t]) && len > best_len) {
                best = static_cast<int>(t);
                best_len = len;
            }
            pos = save;
        }
        if (best < 0) throw ParseError("template", "no instruction template matches");
        parsed.template_id = best;
        pos = best_len;
    }

    auto parse_object = [&](const char* slot) -> ObjectAttributes {
        if (pos >= words.size() || words[pos] != "the")
            throw ParseError(slot, "expected 'the'");
        ++pos;
        if (pos >= words.size()) throw ParseError(slot, "missing color");
        const auto& colors = color_names();
        const auto cit = std::find(colors.begin(), colors.end(), words[pos]);
        if (cit == colors.end()) throw ParseError(slot, "unknown color '" + words[pos] + "'");
        ObjectAttributes a;
        a.color = static_cast<int>(cit - colors.begin());
        ++pos;
        if (pos >= words.size()) throw ParseError(slot, "missing shape word");
        const auto& shapes = shape_words();
        const auto sit = std::find(shapes.begin(), shapes.end(), words[pos]);
        if (sit == shapes.end()) throw ParseError(slot, "unknown shape '" + words[pos] + "'");
        a.shape = static_cast<Shape>(sit - shapes.begin());
        ++pos;
        if (pos >= words.size()) throw ParseError(slot, "missing class name");
        if (!class_set.count(words[pos])) throw ParseError(slot, "unknown class '" + words[pos] + "'");
        a.class_name = words[pos];
        ++pos;
        return a;
    };

    parsed.target = parse_object("target");

    if (pos < words.size()) {
        int rel = -1;
        // longest phrase first
        const std::vector<int> order = {0, 1, 3, 2};  // left(4) right(4) front(3) behind(1)
        for (int r : order) {
            std::size_t save = pos;
            if (try_match_phrase(relation_phrases()[r])) {
                rel = r;
                break;
            }
            pos = save;
        }
        if (rel < 0) throw ParseError("position", "unknown relation at '" + words[pos] + "'");
        parsed.relation = static_cast<Relation>(rel);
        parsed.relative = parse_object("relative");
    }
    if (pos != words.size()) throw ParseError("relative", "trailing words after description");
    return parsed;
}

/// Maps a parsed description back to the object index it refers to. For an
/// identical pair this is exactly where the relation clause earns its keep.
inline int resolve_target(const SceneDescription& scene, const ParsedAnnotation& parsed) {
    std::vector<int> candidates;
    for (std::size_t i = 0; i < scene.objects.size(); ++i)
        if (scene.objects[i].attributes() == parsed.target) candidates.push_back(static_cast<int>(i));
    if (candidates.empty()) throw AnnotationAmbiguousError("description matches no object");
    if (candidates.size() == 1) return candidates[0];

    if (!parsed.relation || !parsed.relative)
        throw AnnotationAmbiguousError("multiple matches and no relation clause");
    int ref = -1;
    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
        if (scene.objects[i].attributes() == *parsed.relative) {
            if (ref >= 0) throw AnnotationAmbiguousError("relative object is itself ambiguous");
            ref = static_cast<int>(i);
        }
    }
    if (ref < 0) throw AnnotationAmbiguousError("relative object not found in scene");

    int resolved = -1;
    for (int c : candidates) {
        if (detail::relation_holds(*parsed.relation, scene.objects[c], scene.objects[ref])) {
            if (resolved >= 0) throw AnnotationAmbiguousError("relation satisfied by several candidates");
            resolved = c;
        }
    }
    if (resolved < 0) throw AnnotationAmbiguousError("relation satisfied by no candidate");
    return resolved;
}

// ---------------------------------------------------------------------------
// Scene generation
// ---------------------------------------------------------------------------

struct SceneGenOptions {
    int n_objects = 8;
    bool identical_pair = false;
    double min_size_m = 0.03;
    double max_size_m = 0.07;
    // clause emission for scenes that do not need one to disambiguate
    double relation_clause_prob = 0.0;
    std::vector<Shape> shapes = {Shape::box, Shape::sphere, Shape::cylinder};
    std::optional<double> fixed_size_m;
    std::optional<std::string> force_target_class;  // for per-object task suites
};

namespace detail {

inline bool cell_fits(const GridGeometry& g, int r, int c, double side_px) {
    const double half = side_px / 2.0;
    return g.cell_center_x(c) - half >= 0.0 && g.cell_center_x(c) + half <= g.image_w &&
           g.cell_center_y(r) - half >= 0.0 && g.cell_center_y(r) + half <= g.image_h;
}

inline Vec3 object_center(const GridGeometry& g, const Camera& cam, int r, int c, double size_m) {
    const double x = (g.cell_center_x(c) - cam.cx) * cam.height_m / cam.fx;
    const double y = (g.cell_center_y(r) - cam.cy) * cam.height_m / cam.fy;
    return {x, y, cam.height_m - size_m / 2.0};
}

// One construction attempt; returns false when the identical pair cannot be
// disambiguated by any (relative, relation) choice under this draw.
inline bool try_build_scene(Rng& rng, const SplitSpec& spec, const std::string& split,
                            const SceneGenOptions& opts, const GridGeometry& grid,
                            const Camera& camera, SceneDescription& out) {
    const std::vector<std::string>& target_pool =
        split == "novel" ? spec.novel_classes : spec.base_classes;

    std::vector<std::string> all_classes = spec.base_classes;
    all_classes.insert(all_classes.end(), spec.novel_classes.begin(), spec.novel_classes.end());

    std::unordered_set<std::string> novel_set(spec.novel_classes.begin(), spec.novel_classes.end());

    const int n = opts.n_objects;
    std::vector<std::string> classes;
    if (opts.force_target_class) {
        if (std::find(all_classes.begin(), all_classes.end(), *opts.force_target_class) ==
            all_classes.end())
            throw ConfigError("unknown target class: " + *opts.force_target_class);
        classes.push_back(*opts.force_target_class);
    } else {
        classes.push_back(target_pool[rng.below(target_pool.size())]);
    }
    std::unordered_set<std::string> used = {classes[0]};
    while (static_cast<int>(classes.size()) < n) {
        const std::string& c = all_classes[rng.below(all_classes.size())];
        if (used.insert(c).second) classes.push_back(c);
    }

    out.objects.clear();
    std::unordered_set<int> taken_cells;
    for (int i = 0; i < n; ++i) {
        SceneObject obj;
        obj.class_name = classes[i];
        obj.is_novel = novel_set.count(obj.class_name) > 0;
        obj.color = static_cast<int>(rng.below(color_names().size()));
        obj.shape = opts.shapes[rng.below(opts.shapes.size())];
        obj.size_m = opts.fixed_size_m ? *opts.fixed_size_m
                                       : rng.uniform(opts.min_size_m, opts.max_size_m);
        obj.validate();

        const double side = camera.footprint_px(obj.size_m);
        std::vector<int> free_cells;
        for (int r = 0; r < grid.grid_rows; ++r)
            for (int c = 0; c < grid.grid_cols; ++c)
                if (!taken_cells.count(grid.cell_index(r, c)) && cell_fits(grid, r, c, side))
                    free_cells.push_back(grid.cell_index(r, c));
        if (free_cells.empty()) throw ConfigError("scene generation: no free grid cell fits object");

        const int cell = free_cells[rng.below(free_cells.size())];
        taken_cells.insert(cell);
        obj.grid_row = cell / grid.grid_cols;
        obj.grid_col = cell % grid.grid_cols;
        obj.world_pos = object_center(grid, camera, obj.grid_row, obj.grid_col, obj.size_m);
        out.objects.push_back(std::move(obj));
    }

    // the target is the object drawn from the split's class pool
    out.target_index = 0;
    out.relative_index = -1;

    if (opts.identical_pair) {
        if (n < 3) throw ConfigError("identical pair scenes need at least 3 objects");
        // overwrite one non-target object with the target's twin
        int twin = out.target_index;
        while (twin == out.target_index) twin = static_cast<int>(rng.below(out.objects.size()));
        const SceneObject& t = out.objects[out.target_index];
        SceneObject& w = out.objects[twin];
        w.class_name = t.class_name;
        w.is_novel = t.is_novel;
        w.color = t.color;
        w.shape = t.shape;
        w.size_m = t.size_m;
        w.world_pos = object_center(grid, camera, w.grid_row, w.grid_col, w.size_m);
        if (!cell_fits(grid, w.grid_row, w.grid_col, camera.footprint_px(w.size_m))) return false;

        // find a reference object and relation that separate target from twin
        std::vector<std::pair<int, int>> choices;  // (relative index, relation)
        for (std::size_t i = 0; i < out.objects.size(); ++i) {
            if (static_cast<int>(i) == out.target_index || static_cast<int>(i) == twin) continue;
            out.relative_index = static_cast<int>(i);
            for (Relation r : usable_relations(out, twin))
                choices.emplace_back(static_cast<int>(i), static_cast<int>(r));
        }
        out.relative_index = -1;
        if (choices.empty()) return false;
        out.relative_index = choices[rng.below(choices.size())].first;
    } else if (n > 1 && rng.coin(opts.relation_clause_prob)) {
        int ref = out.target_index;
        while (ref == out.target_index) ref = static_cast<int>(rng.below(out.objects.size()));
        out.relative_index = ref;
        if (usable_relations(out, -1).empty()) out.relative_index = -1;
    }

    // shuffle object order so indices carry no information
    std::vector<int> perm(out.objects.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
    for (std::size_t i = perm.size(); i > 1; --i)
        std::swap(perm[i - 1], perm[rng.below(i)]);
    std::vector<SceneObject> shuffled(out.objects.size());
    std::vector<int> new_index(out.objects.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        shuffled[i] = std::move(out.objects[perm[i]]);
        new_index[perm[i]] = static_cast<int>(i);
    }
    out.objects = std::move(shuffled);
    out.target_index = new_index[out.target_index];
    if (out.relative_index >= 0) out.relative_index = new_index[out.relative_index];
    return true;
}

}  // namespace detail

/// Deterministic scene construction. Identical-pair scenes are re-drawn (still
/// seed-deterministically) until some relation clause can tell the twins
/// apart, so every generated description is resolvable.
inline SceneDescription generate_scene(std::uint64_t seed, const SplitSpec& spec,
                                       const std::string& split, const SceneGenOptions& opts,
                                       const GridGeometry& grid = GridGeometry{},
                                       const Camera& camera = Camera{}) {
    spec.validate();
    camera.validate();
    if (opts.n_objects < 1) throw ConfigError("scene generation: need at least one object");
    if (opts.n_objects > grid.cell_count())
        throw ConfigError("scene generation: more objects than grid cells");
    if (split != "base" && split != "novel") throw ConfigError("split must be 'base' or 'novel'");

    SceneDescription scene;
    scene.grid = grid;
    scene.camera = camera;
    scene.seed = seed;
    scene.split = split;

    Rng rng(mix_seed(seed, 0x7363656eu));  // "scen"
    for (int attempt = 0; attempt < 64; ++attempt) {
        if (detail::try_build_scene(rng, spec, split, opts, grid, camera, scene)) {
            scene.description = annotate(scene);
            return scene;
        }
    }
    throw ConfigError("scene generation: could not build a disambiguable scene");
}

// ---------------------------------------------------------------------------
// Synthetic sensor stand-ins
// ---------------------------------------------------------------------------

/// Grid feature map: object cells carry their attribute embedding, every cell
/// gets isotropic gaussian noise on top. Footprint hints come from the
/// projected object size; empty cells fall back to a default window.
inline FeatureMap render_features(const SceneDescription& scene, double noise_sigma,
                                  std::uint64_t seed, std::size_t dim = 32,
                                  double default_window_m = 0.05) {
    if (noise_sigma < 0.0) throw ParamError("render_features: noise_sigma must be >= 0");
    FeatureMap fm;
    fm.grid = scene.grid;
    const std::size_t cells = static_cast<std::size_t>(scene.grid.cell_count());
    fm.features = Matrix(cells, dim);
    fm.footprint_px.assign(cells, scene.camera.footprint_px(default_window_m));

    for (const SceneObject& obj : scene.objects) {
        const std::size_t cell = static_cast<std::size_t>(scene.grid.cell_index(obj.grid_row, obj.grid_col));
        const std::vector<double> emb = attribute_embedding(obj.attributes(), dim);
        std::copy(emb.begin(), emb.end(), fm.features.row(cell));
        fm.footprint_px[cell] = scene.camera.footprint_px(obj.size_m);
    }

    if (noise_sigma > 0.0) {
        Rng rng(mix_seed(seed, 0x666561u));  // "fea"
        for (double& v : fm.features.data) v += noise_sigma * rng.normal();
    }
    return fm;
}

/// One token per populated grammar slot: template, target attributes, and,
/// when present, relation and relative-object attributes. The target token is
/// the very embedding render_features planted at the target's cell.
inline TextSequence embed_text(const std::string& description, std::size_t dim = 32) {
    const ParsedAnnotation parsed = parse_annotation(description);
    std::vector<std::vector<double>> tokens;
    tokens.push_back(template_embedding(parsed.template_id, dim));
    tokens.push_back(attribute_embedding(parsed.target, dim));
    if (parsed.relation) tokens.push_back(relation_embedding(*parsed.relation, dim));
    if (parsed.relative) tokens.push_back(attribute_embedding(*parsed.relative, dim));

    TextSequence seq;
    seq.text = description;
    seq.tokens = Matrix(tokens.size(), dim);
    for (std::size_t i = 0; i < tokens.size(); ++i)
        std::copy(tokens[i].begin(), tokens[i].end(), seq.tokens.row(i));
    return seq;
}

namespace detail {

// Ray through pixel (u, v): P(t) = t * dir, dir = ((u-cx)/fx, (v-cy)/fy, 1).
// Since dir.z == 1, the ray parameter equals camera depth.

inline double ray_sphere_depth(const Vec3& dir, const Vec3& center, double radius) {
    const double a = dot(dir, dir);
    const double b = -2.0 * dot(dir, center);
    const double c = dot(center, center) - radius * radius;
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return -1.0;
    const double t = (-b - std::sqrt(disc)) / (2.0 * a);
    return t > 0.0 ? t : -1.0;
}

inline double ray_aabb_depth(const Vec3& dir, const Vec3& lo, const Vec3& hi) {
    double t_enter = 0.0, t_exit = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) {
        if (std::abs(dir[i]) < 1e-300) {
            if (0.0 < lo[i] || 0.0 > hi[i]) return -1.0;  // ray origin is (0,0,0)
            continue;
        }
        double t1 = lo[i] / dir[i];
        double t2 = hi[i] / dir[i];
        if (t1 > t2) std::swap(t1, t2);
        t_enter = std::max(t_enter, t1);
        t_exit = std::min(t_exit, t2);
    }
    return (t_enter <= t_exit && t_enter > 0.0) ? t_enter : -1.0;
}

inline double ray_cylinder_depth(const Vec3& dir, const Vec3& axis_base, double radius, double z_top,
                                 double z_bottom) {
    double best = -1.0;
    // top cap
    const double t_cap = z_top;  // dir.z == 1
    {
        const double px = t_cap * dir[0] - axis_base[0];
        const double py = t_cap * dir[1] - axis_base[1];
        if (px * px + py * py <= radius * radius) best = t_cap;
    }
    // lateral surface
    const double a = dir[0] * dir[0] + dir[1] * dir[1];
    if (a > 1e-300) {
        const double b = -2.0 * (dir[0] * axis_base[0] + dir[1] * axis_base[1]);
        const double c = axis_base[0] * axis_base[0] + axis_base[1] * axis_base[1] - radius * radius;
        const double disc = b * b - 4.0 * a * c;
        if (disc >= 0.0) {
            const double t = (-b - std::sqrt(disc)) / (2.0 * a);
            if (t > 0.0 && t >= z_top && t <= z_bottom)
                if (best < 0.0 || t < best) best = t;
        }
    }
    return best;
}

}  // namespace detail

/// Top-down depth render: plane depth everywhere, ray-cast object surfaces
/// where they project. Rows index v, columns index u; pixel (u, v) samples
/// the ray through integer coordinates.
inline Matrix render_depth(const SceneDescription& scene) {
    scene.camera.validate();
    const Camera& cam = scene.camera;
    const int W = scene.grid.image_w, H = scene.grid.image_h;
    Matrix depth(static_cast<std::size_t>(H), static_cast<std::size_t>(W), cam.height_m);

    for (const SceneObject& obj : scene.objects) {
        const double s = obj.size_m;
        const Vec3& c = obj.world_pos;
        // conservative pixel bounds from the widest spread of the body
        const double margin = s * 0.75;
        const double z_top = cam.height_m - s;
        auto u_of = [&](double x, double z) { return cam.cx + cam.fx * x / z; };
        auto v_of = [&](double y, double z) { return cam.cy + cam.fy * y / z; };
        const int u0 = std::max(0, static_cast<int>(std::floor(
                              std::min(u_of(c[0] - margin, z_top), u_of(c[0] - margin, cam.height_m)))));
        const int u1 = std::min(W - 1, static_cast<int>(std::ceil(
                              std::max(u_of(c[0] + margin, z_top), u_of(c[0] + margin, cam.height_m)))));
        const int v0 = std::max(0, static_cast<int>(std::floor(
                              std::min(v_of(c[1] - margin, z_top), v_of(c[1] - margin, cam.height_m)))));
        const int v1 = std::min(H - 1, static_cast<int>(std::ceil(
                              std::max(v_of(c[1] + margin, z_top), v_of(c[1] + margin, cam.height_m)))));

        for (int v = v0; v <= v1; ++v) {
            for (int u = u0; u <= u1; ++u) {
                const Vec3 dir{(u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0};
                double t = -1.0;
                switch (obj.shape) {
                    case Shape::sphere:
                        t = detail::ray_sphere_depth(dir, c, s / 2.0);
                        break;
                    case Shape::box: {
                        const Vec3 lo{c[0] - s / 2.0, c[1] - s / 2.0, cam.height_m - s};
                        const Vec3 hi{c[0] + s / 2.0, c[1] + s / 2.0, cam.height_m};
                        t = detail::ray_aabb_depth(dir, lo, hi);
                        break;
                    }
                    case Shape::cylinder:
                        t = detail::ray_cylinder_depth(dir, c, s / 2.0, cam.height_m - s, cam.height_m);
                        break;
                }
                if (t > 0.0) {
                    double& d = depth(static_cast<std::size_t>(v), static_cast<std::size_t>(u));
                    d = std::min(d, t);
                }
            }
        }
    }
    return depth;
}

/// Uniform surface sampling with outward unit normals, world frame.
inline PointCloud sample_point_cloud(const SceneObject& obj, std::size_t n, std::uint64_t seed) {
    if (n < 100) throw ParamError("sample_point_cloud: n must be >= 100");
    Rng rng(mix_seed(seed, 0x636c6475u));  // "cldu"
    PointCloud cloud;
    cloud.points.reserve(n);
    cloud.normals.reserve(n);
    const double s = obj.size_m;
    const Vec3& c = obj.world_pos;

    switch (obj.shape) {
        case Shape::sphere: {
            const double r = s / 2.0;
            for (std::size_t i = 0; i < n; ++i) {
                Vec3 d{rng.normal(), rng.normal(), rng.normal()};
                while (norm(d) < 1e-9) d = {rng.normal(), rng.normal(), rng.normal()};
                d = normalized(d);
                cloud.points.push_back(c + r * d);
                cloud.normals.push_back(d);
            }
            break;
        }
        case Shape::box: {
            // area-weighted face choice; all six faces of the cube tie
            const double h = s / 2.0;
            const double areas[6] = {s * s, s * s, s * s, s * s, s * s, s * s};
            double total = 0.0;
            for (double a : areas) total += a;
            for (std::size_t i = 0; i < n; ++i) {
                double pick = rng.uniform() * total;
                int face = 0;
                while (face < 5 && pick >= areas[face]) pick -= areas[face], ++face;
                const int axis = face / 2;
                const double sign = face % 2 == 0 ? 1.0 : -1.0;
                Vec3 p{rng.uniform(-h, h), rng.uniform(-h, h), rng.uniform(-h, h)};
                p[axis] = sign * h;
                Vec3 normal{0, 0, 0};
                normal[axis] = sign;
                cloud.points.push_back(c + p);
                cloud.normals.push_back(normal);
            }
            break;
        }
        case Shape::cylinder: {
            const double r = s / 2.0;
            const double lateral = 2.0 * 3.14159265358979323846 * r * s;
            const double cap = 3.14159265358979323846 * r * r;
            const double total = lateral + 2.0 * cap;
            for (std::size_t i = 0; i < n; ++i) {
                const double pick = rng.uniform() * total;
                const double phi = rng.uniform() * 2.0 * 3.14159265358979323846;
                if (pick < lateral) {
                    const double z = rng.uniform(-s / 2.0, s / 2.0);
                    const Vec3 radial{std::cos(phi), std::sin(phi), 0.0};
                    cloud.points.push_back(c + r * radial + Vec3{0, 0, z});
                    cloud.normals.push_back(radial);
                } else {
                    const double rr = r * std::sqrt(rng.uniform());
                    const double sign = pick < lateral + cap ? -1.0 : 1.0;  // -z is the top
                    cloud.points.push_back(c + Vec3{rr * std::cos(phi), rr * std::sin(phi),
                                                    sign * s / 2.0});
                    cloud.normals.push_back(Vec3{0, 0, sign});
                }
            }
            break;
        }
        default:
            throw ParamError("sample_point_cloud: unsupported shape");
    }
    return cloud;
}

}  // namespace ovg
