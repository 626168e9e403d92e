#include "commands.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "carmsim/conformance.hpp"
#include "carmsim/dataset.hpp"
#include "carmsim/gateway.hpp"
#include "carmsim/image_io.hpp"
#include "carmsim/metrics.hpp"
#include "carmsim/navloop.hpp"
#include "carmsim/phantom.hpp"
#include "carmsim/protocol.hpp"
#include "carmsim/rng.hpp"

namespace carmsim::cli {

int g_exit_code = kOk;

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string numbered(const char* prefix, std::size_t i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%03zu", prefix, i);
    return buf;
}

Vec3 parse_vec3(const std::string& text) {
    std::stringstream ss(text);
    std::vector<double> v;
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            if (item.find_first_not_of(' ', used) != std::string::npos) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw Error(ErrorKind::input, "expected x,y,z in mm, got '" + text + "'");
        }
    }
    if (v.size() != 3) throw Error(ErrorKind::input, "expected x,y,z in mm, got '" + text + "'");
    return {v[0], v[1], v[2]};
}

int resolve_landmark(const std::string& token, const LandmarkSchema& schema) {
    const auto idx = schema.resolve_token(token);
    if (!idx) throw Error(ErrorKind::input, "unknown landmark '" + token + "'");
    return *idx;
}

json vec_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
    out << text;
}

/// Records the invocation next to a command's outputs: run_config.json inside
/// an output directory, or <file>.run_config.json beside an output file.
void echo_run_config(const fs::path& where, bool is_dir, const CLI::App& sub, const Globals& g) {
    json options = json::object();
    for (const CLI::Option* opt : sub.get_options()) {
        if (opt->get_lnames().empty()) continue;
        const auto& name = opt->get_lnames().front();
        if (name == "help") continue;
        if (opt->count() > 0) {
            const auto& r = opt->results();
            options[name] = r.size() == 1 ? json(r.front()) : json(r);
        } else if (!opt->get_default_str().empty()) {
            options[name] = opt->get_default_str();
        }
    }
    json doc{{"command", sub.get_name()}, {"argv", g.argv}, {"threads", g.threads}, {"options", options}};
    const fs::path path = is_dir ? where / "run_config.json" : fs::path(where.string() + ".run_config.json");
    write_text(path, doc.dump(2) + "\n");
}

void add_scene_options(CLI::App* sub, SceneArgs& scene) {
    auto* vol = sub->add_option("--volume", scene.volume, "Volume header (.json)")->check(CLI::ExistingFile);
    auto* lm = sub->add_option("--landmarks", scene.landmarks, "Landmark file (.json)")->check(CLI::ExistingFile);
    vol->needs(lm);
    lm->needs(vol);
    sub->add_option("--phantom-seed", scene.phantom_seed, "Use the phantom gen-phantom makes for this seed")
        ->excludes(vol);
}

Phantom load_scene(const SceneArgs& scene, std::optional<std::uint64_t> seed) {
    if (!scene.volume.empty()) {
        Volume volume = load_volume(scene.volume);
        LandmarkSet landmarks = load_landmarks(scene.landmarks, volume.bounds());
        return {std::move(volume), std::move(landmarks)};
    }
    const auto base = scene.phantom_seed ? scene.phantom_seed : seed;
    if (!base) throw CLI::RequiredError("--volume/--landmarks, --phantom-seed or --seed");
    return generate_phantom(derive_seed(*base, "phantom", 0));
}

// ---- gen-phantom ----

struct GenPhantomArgs {
    std::uint64_t seed = 0;
    std::string out;
    std::size_t count = 1;
    double voxel_mm = 4.0;
};

void run_gen_phantom(const GenPhantomArgs& a, const CLI::App& sub, const Globals& g) {
    PhantomConfig config;
    config.voxel_mm = a.voxel_mm;
    json listing = json::array();
    for (std::size_t i = 0; i < a.count; ++i) {
        const auto id = numbered("phantom", i);
        const Phantom p = generate_phantom(derive_seed(a.seed, "phantom", i), config);
        const fs::path dir = fs::path(a.out) / id;
        const auto header = save_volume(p.volume, dir, "volume");
        save_landmarks(p.landmarks, dir / "landmarks.json", p.volume.bounds());
        listing.push_back({{"id", id}, {"volume", header.string()}, {"landmarks", (dir / "landmarks.json").string()}});
    }
    echo_run_config(a.out, true, sub, g);
    std::cout << json{{"phantoms", listing}}.dump(2) << '\n';
}

// ---- sample ----

struct SampleArgs {
    std::uint64_t seed = 0;
    std::size_t n = 1000;
    std::string out;
    std::string candidates;
    SceneArgs scene;
};

void run_sample(const SampleArgs& a, const CLI::App& sub, const Globals& g) {
    const Phantom scene = load_scene(a.scene, a.seed);
    SamplerConfig sc;
    sc.seed = derive_seed(a.seed, "sampler");
    const auto result = sample_isocenters(scene.volume, a.n, sc);
    std::ostringstream lines;
    for (std::size_t i = 0; i < result.poses.size(); ++i) {
        const auto& iso = result.poses[i].isocenter;
        const auto ranked = nearest_k(iso, scene.landmarks, 3);
        json nearest = json::array();
        for (std::size_t s = 0; s < ranked.size(); ++s) {
            nearest.push_back({{"index", ranked.indices[s]},
                               {"name", scene.landmarks.at(ranked.indices[s]).canonical_name},
                               {"distance_mm", ranked.distances_mm[s]}});
        }
        lines << json{{"sample_id", i}, {"isocenter_mm", vec_json(iso)}, {"nearest", nearest}}.dump() << '\n';
    }
    write_text(a.out, lines.str());
    if (!a.candidates.empty()) {
        std::ostringstream c;
        for (const auto& cand : result.candidates) {
            c << json{{"position_mm", vec_json(cand.position)}, {"accepted", cand.accepted}}.dump() << '\n';
        }
        write_text(a.candidates, c.str());
    }
    echo_run_config(a.out, false, sub, g);
    std::cout << json{{"accepted", result.poses.size()}, {"candidates", result.candidates.size()}}.dump() << '\n';
}

// ---- render ----

struct RenderArgs {
    SceneArgs scene;
    std::string isocenter;
    std::string at;
    std::string out;
    std::string raw;
};

void run_render(const RenderArgs& a, const CLI::App& sub, const Globals& g) {
    const Phantom scene = load_scene(a.scene, std::nullopt);
    CArmPose pose;
    pose.isocenter = a.at.empty() ? parse_vec3(a.isocenter)
                                  : scene.landmarks.at(resolve_landmark(a.at, scene.landmarks.schema())).position;
    RenderOptions opts;
    opts.threads = g.threads;
    const auto image = render(scene.volume, pose, opts);
    write_png(a.out, image);
    if (!a.raw.empty()) write_raw_f32(a.raw, image);
    echo_run_config(a.out, false, sub, g);
    std::cout << json{{"image", a.out}, {"isocenter_mm", vec_json(pose.isocenter)}, {"cols", image.cols},
                      {"rows", image.rows}}
                     .dump()
              << '\n';
}

// ---- build-dataset ----

struct DatasetArgs {
    std::size_t volumes = 0;
    std::size_t test_volumes = 0;
    int per_volume = 1024;
    std::uint64_t seed = 0;
    std::string out;
    bool no_images = false;
    double voxel_mm = 4.0;
};

void run_build_dataset(const DatasetArgs& a, const CLI::App& sub, const Globals& g) {
    PhantomConfig pc;
    pc.voxel_mm = a.voxel_mm;
    std::vector<DatasetSource> sources;
    for (std::size_t i = 0; i < a.volumes + a.test_volumes; ++i) {
        const std::uint64_t phantom_seed = derive_seed(a.seed, "phantom", i);
        sources.push_back({numbered("vol", i), i < a.volumes ? Split::train : Split::test, [phantom_seed, pc] {
                               Phantom p = generate_phantom(phantom_seed, pc);
                               return std::pair<Volume, LandmarkSet>(std::move(p.volume), std::move(p.landmarks));
                           }});
    }
    DatasetConfig config;
    config.per_volume = a.per_volume;
    config.seed = a.seed;
    config.render.threads = g.threads;
    config.write_images = !a.no_images;
    const auto summary = build_dataset(sources, config, a.out);
    echo_run_config(a.out, true, sub, g);
    std::cout << json{{"train", summary.counts.train},
                      {"test", summary.counts.test},
                      {"manifest", summary.manifest.string()}}
                     .dump()
              << '\n';
}

// ---- navigate ----

struct NavigateArgs {
    std::string agent = "oracle";
    std::string agent_cmd;
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;
    std::string start = "random";
    std::string target = "random";
    std::size_t episodes = 1;
    int max_steps = 20;
    double success_radius = 25.0;
    std::uint64_t seed = 0;
    std::string out;
    double timeout_s = 120.0;
    bool include_pose = false;
    std::string ground_truth;
    bool no_images = false;
    SceneArgs scene;
};

std::vector<std::string> split_command(const std::string& cmd) {
    std::istringstream ss(cmd);
    std::vector<std::string> argv;
    for (std::string word; ss >> word;) argv.push_back(word);
    return argv;
}

void run_navigate(const NavigateArgs& a, const CLI::App& sub, const Globals& g) {
    if ((a.agent == "subprocess") != !a.agent_cmd.empty()) {
        throw CLI::ValidationError("--agent-cmd", "is required with, and only with, --agent subprocess");
    }
    if (a.agent == "tcp" && a.port == 0) throw CLI::ValidationError("--port", "is required with --agent tcp");

    const Phantom scene = load_scene(a.scene, a.seed);
    const auto schema = scene.landmarks.schema();

    std::vector<EpisodeConfig> configs;
    for (std::size_t i = 0; i < a.episodes; ++i) {
        EpisodeConfig c;
        c.episode_id = numbered("ep", i);
        c.seed = derive_seed(a.seed, "episode", i);
        c.max_steps = a.max_steps;
        c.success_radius_mm = a.success_radius;
        c.render.threads = g.threads;
        if (a.start == "random") {
            SamplerConfig sc;
            sc.seed = derive_seed(a.seed, "start", i);
            c.start = sample_isocenters(scene.volume, 1, sc).poses.front().isocenter;
        } else {
            c.start = resolve_landmark(a.start, schema);
        }
        if (a.target == "random") {
            auto engine = make_engine(a.seed, "target", i);
            c.target = std::uniform_int_distribution<int>(1, kLandmarkCount)(engine);
        } else {
            c.target = resolve_landmark(a.target, schema);
        }
        c.validate();
        configs.push_back(std::move(c));
    }

    if (!a.ground_truth.empty()) {
        GroundTruth truth{scene.landmarks, scene.volume.extent(), {}};
        for (const auto& c : configs) truth.targets[c.episode_id] = c.target;
        write_ground_truth(a.ground_truth, truth);
    }

    WireOptions wire;
    wire.timeout = std::chrono::milliseconds(static_cast<long long>(a.timeout_s * 1000.0));
    wire.include_pose = a.include_pose;
    std::unique_ptr<Agent> shared;
    if (a.agent == "subprocess") shared = serve_subprocess(split_command(a.agent_cmd), wire);
    if (a.agent == "tcp") shared = connect_tcp(a.host, a.port, wire);

    const fs::path out(a.out);
    ImageSink sink;
    if (!a.no_images) sink = png_image_sink(out / "images");
    std::vector<EpisodeTrace> traces;
    json episodes = json::array();
    for (const auto& c : configs) {
        std::unique_ptr<Agent> local;
        Agent* agent = shared.get();
        if (a.agent == "oracle") {
            local = std::make_unique<OracleAgent>(scene.landmarks, c.target);
            agent = local.get();
        } else if (a.agent == "zero") {
            local = std::make_unique<ZeroMoveAgent>(&scene.landmarks);
            agent = local.get();
        }
        auto trace = run_episode(scene.volume, scene.landmarks, *agent, c, sink);
        write_trace(out / "traces" / (c.episode_id + ".jsonl"), trace);
        json ep{{"episode_id", c.episode_id},
                {"target", scene.landmarks.at(c.target).canonical_name},
                {"outcome", to_string(trace.outcome)},
                {"steps", trace.steps.size()},
                {"initial_distance_mm", trace.initial_distance_mm},
                {"final_distance_mm", trace.final_distance_mm}};
        if (!trace.error.empty()) ep["error"] = trace.error;
        episodes.push_back(std::move(ep));
        traces.push_back(std::move(trace));
    }
    const auto s = summarize_navigation(traces);
    json summary{{"episodes", s.episodes},
                 {"successes", s.successes},
                 {"success_rate", s.success_rate},
                 {"mean_steps_to_success", s.mean_steps_to_success ? json(*s.mean_steps_to_success) : json(nullptr)},
                 {"mean_final_distance_mm", s.mean_final_distance_mm},
                 {"per_episode", episodes}};
    write_text(out / "summary.json", summary.dump(2) + "\n");
    echo_run_config(out, true, sub, g);
    std::cout << summary.dump(2) << '\n';
}

// ---- evaluate ----

struct EvaluateArgs {
    std::string manifest;
    std::string predictions;
    std::vector<int> ks{1, 2, 3};
    std::string split = "all";
    std::string out;
    std::string heatmap;
    std::string counts;
};

void run_evaluate(const EvaluateArgs& a, const CLI::App& sub, const Globals& g) {
    auto records = load_manifest(a.manifest);
    const auto& schema = LandmarkSchema::default_schema();
    auto predictions = load_predictions(a.predictions, schema);
    if (a.split != "all") {
        // Predictions for the other split's records are ignored, not extra.
        const Split keep = a.split == "test" ? Split::test : Split::train;
        std::set<std::string> dropped;
        for (const auto& r : records) {
            if (r.split != keep) dropped.insert(r.record_id);
        }
        std::erase_if(records, [keep](const DatasetRecord& r) { return r.split != keep; });
        std::erase_if(predictions, [&](const Prediction& p) { return dropped.count(p.record_id) > 0; });
    }
    const auto score = score_corpus(records, predictions, a.ks);
    const auto report = score_report_json(score);
    if (!a.out.empty()) {
        write_text(a.out, report + "\n");
        echo_run_config(a.out, false, sub, g);
    }
    if (!a.heatmap.empty()) write_confusion_png(a.heatmap, score.confusion);
    if (!a.counts.empty()) write_confusion_csv(a.counts, score.confusion, schema);
    std::cout << report << '\n';
}

// ---- protocol-check ----

struct ProtocolCheckArgs {
    std::string vectors;
    std::string responses;
    std::string frames;
    std::string input;
};

json summarize(const std::vector<VectorResult>& results) {
    json failures = json::array();
    std::size_t passed = 0;
    for (const auto& r : results) {
        if (r.passed) {
            ++passed;
        } else {
            failures.push_back({{"id", r.id}, {"detail", r.detail}});
        }
    }
    if (!failures.empty()) g_exit_code = kInput;
    return {{"total", results.size()}, {"passed", passed}, {"failures", failures}};
}

void run_protocol_check(const ProtocolCheckArgs& a) {
    const auto& schema = LandmarkSchema::default_schema();
    json report = json::object();
    if (!a.vectors.empty()) {
        std::optional<std::map<std::string, std::optional<std::string>>> outputs;
        if (!a.responses.empty()) outputs = load_protocol_outputs(a.responses);
        report["protocol_vectors"] = summarize(check_protocol_vectors(a.vectors, schema, outputs));
    }
    if (!a.frames.empty()) report["frame_vectors"] = summarize(check_frame_vectors(a.frames));
    if (!a.input.empty()) {
        std::ifstream in(a.input, std::ios::binary);
        if (!in) throw Error(ErrorKind::io, "cannot open " + a.input);
        const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        const auto parsed = parse_response(text, schema);
        if (const auto* ok = std::get_if<ParsedResponse>(&parsed)) {
            report["input"] = {{"ok", true}, {"canonical", serialize(ok->response)}, {"warnings", ok->warnings}};
        } else {
            const auto& e = std::get<ParseError>(parsed);
            report["input"] = {{"ok", false}, {"offset", e.offset}, {"reason", e.reason}};
            g_exit_code = kInput;
        }
    }
    std::cout << report.dump(2) << '\n';
}

}  // namespace

void add_gen_phantom(CLI::App& app, Globals& g) {
    auto a = std::make_shared<GenPhantomArgs>();
    auto* sub = app.add_subcommand("gen-phantom", "Generate synthetic torso phantoms with landmarks");
    sub->add_option("--seed", a->seed, "Root seed")->required();
    sub->add_option("--out", a->out, "Output directory")->required();
    sub->add_option("--count", a->count, "Number of phantoms")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--voxel-mm", a->voxel_mm, "Isotropic voxel size")->capture_default_str();
    sub->callback([a, sub, &g] { run_gen_phantom(*a, *sub, g); });
}

void add_sample(CLI::App& app, Globals& g) {
    auto a = std::make_shared<SampleArgs>();
    auto* sub = app.add_subcommand("sample", "Sample isocenters and label their nearest landmarks");
    sub->add_option("--seed", a->seed, "Root seed")->required();
    sub->add_option("--n", a->n, "Number of accepted poses")->capture_default_str();
    sub->add_option("--out", a->out, "Output JSONL")->required();
    sub->add_option("--candidates", a->candidates, "Also write every candidate, accepted or not");
    add_scene_options(sub, a->scene);
    sub->callback([a, sub, &g] { run_sample(*a, *sub, g); });
}

void add_render(CLI::App& app, Globals& g) {
    auto a = std::make_shared<RenderArgs>();
    auto* sub = app.add_subcommand("render", "Render one radiograph");
    add_scene_options(sub, a->scene);
    auto* iso = sub->add_option("--isocenter", a->isocenter, "Isocenter x,y,z in mm");
    auto* at = sub->add_option("--at", a->at, "Center on a landmark (index, slug or name)");
    iso->excludes(at);
    sub->add_option("--out", a->out, "Output PNG")->required();
    sub->add_option("--raw", a->raw, "Also write float32 display values");
    sub->callback([a, sub, &g] {
        if (a->isocenter.empty() && a->at.empty()) throw CLI::RequiredError("--isocenter or --at");
        run_render(*a, *sub, g);
    });
}

void add_build_dataset(CLI::App& app, Globals& g) {
    auto a = std::make_shared<DatasetArgs>();
    auto* sub = app.add_subcommand("build-dataset", "Build a labelled nearest-landmark dataset from phantoms");
    sub->add_option("--volumes", a->volumes, "Training volumes")->required();
    sub->add_option("--test-volumes", a->test_volumes, "Held-out test volumes")->capture_default_str();
    sub->add_option("--per-volume", a->per_volume, "Images per volume")->capture_default_str()->check(
        CLI::PositiveNumber);
    sub->add_option("--seed", a->seed, "Root seed")->required();
    sub->add_option("--out", a->out, "Output directory")->required();
    sub->add_flag("--no-images", a->no_images, "Write the manifest only");
    sub->add_option("--voxel-mm", a->voxel_mm, "Phantom voxel size")->capture_default_str();
    sub->callback([a, sub, &g] { run_build_dataset(*a, *sub, g); });
}

void add_navigate(CLI::App& app, Globals& g) {
    auto a = std::make_shared<NavigateArgs>();
    auto* sub = app.add_subcommand("navigate", "Run closed-loop navigation episodes");
    sub->add_option("--agent", a->agent, "oracle, zero, subprocess or tcp")
        ->capture_default_str()
        ->check(CLI::IsMember({"oracle", "zero", "subprocess", "tcp"}));
    sub->add_option("--agent-cmd", a->agent_cmd, "Agent command line (split on whitespace)");
    sub->add_option("--host", a->host, "Agent host for --agent tcp")->capture_default_str();
    sub->add_option("--port", a->port, "Agent port for --agent tcp");
    sub->add_option("--start", a->start, "Start landmark or 'random'")->capture_default_str();
    sub->add_option("--target", a->target, "Target landmark or 'random'")->capture_default_str();
    sub->add_option("--episodes", a->episodes, "Number of episodes")->capture_default_str()->check(
        CLI::PositiveNumber);
    sub->add_option("--max-steps", a->max_steps, "Step budget")->capture_default_str();
    sub->add_option("--success-radius", a->success_radius, "In-plane success radius, mm")->capture_default_str();
    sub->add_option("--seed", a->seed, "Root seed")->required();
    sub->add_option("--out", a->out, "Output directory")->required();
    sub->add_option("--timeout", a->timeout_s, "Per-reply timeout, seconds")->capture_default_str();
    sub->add_flag("--include-pose", a->include_pose, "Send the isocenter in request frames (test mode)");
    sub->add_option("--write-ground-truth", a->ground_truth, "Write landmarks and targets for an external oracle");
    sub->add_flag("--no-images", a->no_images, "Do not save per-step PNGs");
    add_scene_options(sub, a->scene);
    sub->callback([a, sub, &g] { run_navigate(*a, *sub, g); });
}

void add_evaluate(CLI::App& app, Globals& g) {
    auto a = std::make_shared<EvaluateArgs>();
    auto* sub = app.add_subcommand("evaluate", "Score ranked predictions against a manifest");
    sub->add_option("--manifest", a->manifest, "manifest.jsonl")->required()->check(CLI::ExistingFile);
    sub->add_option("--predictions", a->predictions, "Predictions JSONL")->required()->check(CLI::ExistingFile);
    sub->add_option("--k", a->ks, "Cut-offs, comma separated")->delimiter(',')->capture_default_str();
    sub->add_option("--split", a->split, "all, train or test")
        ->capture_default_str()
        ->check(CLI::IsMember({"all", "train", "test"}));
    sub->add_option("--out", a->out, "Write the report here too");
    sub->add_option("--heatmap", a->heatmap, "Confusion heatmap PNG");
    sub->add_option("--counts", a->counts, "Confusion count table CSV");
    sub->callback([a, sub, &g] { run_evaluate(*a, *sub, g); });
}

void add_protocol_check(CLI::App& app, Globals&) {
    auto a = std::make_shared<ProtocolCheckArgs>();
    auto* sub = app.add_subcommand("protocol-check", "Check responses and frames against conformance vectors");
    auto* vec = sub->add_option("--vectors", a->vectors, "Protocol vector file")->check(CLI::ExistingFile);
    sub->add_option("--responses", a->responses, "Another implementation's outputs for --vectors")
        ->check(CLI::ExistingFile)
        ->needs(vec);
    sub->add_option("--frames", a->frames, "Frame vector file")->check(CLI::ExistingFile);
    sub->add_option("--input", a->input, "Parse one raw response file")->check(CLI::ExistingFile);
    sub->callback([a] {
        if (a->vectors.empty() && a->frames.empty() && a->input.empty()) {
            throw CLI::RequiredError("--vectors, --frames or --input");
        }
        run_protocol_check(*a);
    });
}

}  // namespace carmsim::cli
