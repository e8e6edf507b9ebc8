// alamp: adaptive multi-patch photo-aesthetics pipeline CLI.

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lamp/checkpoint.hpp"
#include "lamp/error.hpp"
#include "lamp/harness.hpp"
#include "lamp/image_io.hpp"
#include "lamp/layout.hpp"
#include "lamp/saliency.hpp"
#include "lamp/selector.hpp"

namespace {

using nlohmann::json;
using namespace lamp;

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::NotFound:
        case ErrorCode::UnsupportedFormat:
        case ErrorCode::CorruptData:
        case ErrorCode::IoError:
        case ErrorCode::ParseError:
        case ErrorCode::MissingLabelInfo:
        case ErrorCode::VersionMismatch:
        case ErrorCode::DigestMismatch:
            return 2;
        default:
            return 3;
    }
}

PipelineConfig config_or_default(const std::string& path) {
    if (path.empty()) {
        PipelineConfig cfg;
        cfg.normalize();
        return cfg;
    }
    return load_config(path);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorCode::IoError, "cannot open for writing: " + path);
    out << text;
    if (!out) raise(ErrorCode::IoError, "write failed: " + path);
}

int cmd_select_patches(const std::string& image_path, const std::string& config_path,
                       const std::string& out_path, const std::string& solver) {
    const PipelineConfig cfg = config_or_default(config_path);
    const Image img = load_image(image_path);
    const SaliencyMap sal = compute_saliency(img);
    const PlaneSet planes = derive_planes(img);
    std::vector<Candidate> cands =
        generate_candidates(img.width, img.height, cfg.selector, sal, planes);
    const SelectionContext ctx =
        make_selection_context(std::move(cands), img.width, img.height);

    PatchSet ps;
    if (solver == "exhaustive") {
        ps = select_exhaustive(ctx, cfg.selector);
    } else if (solver == "greedy") {
        ps = select_greedy(ctx, cfg.selector);
    } else {
        ps = select_local_search(ctx, cfg.selector, select_greedy(ctx, cfg.selector));
    }

    json members = json::array();
    for (const Candidate& c : ps.members) {
        members.push_back({{"x", c.rect.x},
                           {"y", c.rect.y},
                           {"w", c.rect.w},
                           {"h", c.rect.h},
                           {"saliency", c.saliency}});
    }
    const json doc = {{"image", image_path},
                      {"window", cfg.selector.window},
                      {"members", members},
                      {"objective", ps.objective},
                      {"solver", solver_name(ps.solver)}};
    write_text(out_path, doc.dump(2) + "\n");
    std::cerr << "wrote " << out_path << " (objective " << ps.objective << ")\n";
    return 0;
}

int cmd_build_graph(const std::string& image_path, const std::string& dets_path,
                    const std::string& out_path) {
    const Image img = load_image(image_path);
    const std::vector<Detection> dets =
        load_detections(dets_path, img.width, img.height);
    const AttributeGraph g = build_attribute_graph(dets, img.width, img.height);
    const LayoutVector v = vectorize_graph(g);

    json nodes = json::array();
    for (const GraphNode& n : g.nodes) {
        nodes.push_back({{"x", n.box.x},
                         {"y", n.box.y},
                         {"w", n.box.w},
                         {"h", n.box.h},
                         {"score", n.score},
                         {"centroid", {n.centroid[0], n.centroid[1]}},
                         {"area", n.area_frac}});
    }
    json local_edges = json::array();
    for (const LocalEdge& e : g.local_edges) {
        local_edges.push_back({{"i", e.i},
                               {"j", e.j},
                               {"dist", e.dist},
                               {"theta", e.theta},
                               {"overlap", e.overlap}});
    }
    json global_edges = json::array();
    for (const GlobalEdge& e : g.global_edges) {
        global_edges.push_back(
            {{"i", e.i}, {"dist", e.dist}, {"theta", e.theta}, {"area", e.area}});
    }
    const json doc = {{"width", g.width},
                      {"height", g.height},
                      {"nodes", nodes},
                      {"local_edges", local_edges},
                      {"global_edges", global_edges},
                      {"vector", v.v}};
    write_text(out_path, doc.dump(2) + "\n");
    std::cerr << "wrote " << out_path << "\n";
    return 0;
}

int cmd_train(const std::string& manifest_path, const std::string& config_path,
              const std::string& stage_name, const std::string& init_path,
              const std::string& out_path) {
    const PipelineConfig cfg = config_or_default(config_path);
    const auto entries = load_manifest(manifest_path);
    std::cerr << "building examples for " << entries.size() << " images...\n";
    const std::vector<Example> examples = build_examples(entries, cfg);

    const TrainStage stage =
        stage_name == "fused" ? TrainStage::fused : TrainStage::mp_only;
    ModelParams stage1;
    const ModelParams* init = nullptr;
    if (stage == TrainStage::fused) {
        stage1 = load_checkpoint(init_path, &cfg).params;
        init = &stage1;
    }

    const TrainResult res = train(examples, cfg.net, cfg.train, stage, init);
    for (size_t e = 0; e < res.epoch_losses.size(); ++e) {
        std::cerr << "epoch " << (e + 1) << " loss " << res.epoch_losses[e] << "\n";
    }
    save_checkpoint(out_path, res.params, cfg);
    std::cerr << "wrote " << out_path << "\n";
    return 0;
}

int cmd_evaluate(const std::string& manifest_path, const std::string& ckpt_path,
                 const std::string& config_path, bool skip_errors) {
    Checkpoint ck;
    if (!config_path.empty()) {
        const PipelineConfig expected = load_config(config_path);
        ck = load_checkpoint(ckpt_path, &expected);
    } else {
        ck = load_checkpoint(ckpt_path);
    }
    const auto entries = load_manifest(manifest_path);
    const Metrics m = evaluate(ck.params, entries, ck.config, skip_errors);
    const json doc = {{"accuracy", m.accuracy()},   {"f_measure", m.f_measure()},
                      {"precision", m.precision()}, {"recall", m.recall()},
                      {"tp", m.tp},                 {"fp", m.fp},
                      {"tn", m.tn},                 {"fn", m.fn},
                      {"skipped", m.skipped}};
    std::cout << doc.dump() << "\n";
    return 0;
}

int cmd_score(const std::string& image_path, const std::string& dets_path,
              const std::string& ckpt_path, const std::string& dump_path) {
    const Checkpoint ck = load_checkpoint(ckpt_path);
    const std::string dets =
        dets_path.empty() ? default_dets_path(image_path) : dets_path;
    Plane saliency;
    const double score =
        score_image(ck.params, ck.config, image_path, dets,
                    dump_path.empty() ? nullptr : &saliency);
    if (!dump_path.empty()) {
        save_png_gray(dump_path, saliency);
        std::cerr << "wrote " << dump_path << "\n";
    }
    const json doc = {{"score", score}};
    std::cout << doc.dump() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"adaptive multi-patch photo-aesthetics pipeline"};
    app.require_subcommand(1);

    std::string image, config, out, solver = "local_search", dets, manifest;
    std::string stage = "mp_only", init, checkpoint, dump;
    bool skip_errors = false;

    CLI::App* sel = app.add_subcommand("select-patches", "select a patch bag");
    sel->add_option("--image", image)->required();
    sel->add_option("--config", config);
    sel->add_option("--out", out)->required();
    sel->add_option("--solver", solver)
        ->check(CLI::IsMember({"exhaustive", "greedy", "local_search"}));

    CLI::App* graph = app.add_subcommand("build-graph", "attribute graph from detections");
    graph->add_option("--image", image)->required();
    graph->add_option("--dets", dets)->required();
    graph->add_option("--out", out)->required();

    CLI::App* tr = app.add_subcommand("train", "train the model");
    tr->add_option("--manifest", manifest)->required();
    tr->add_option("--config", config);
    tr->add_option("--stage", stage)->check(CLI::IsMember({"mp_only", "fused"}));
    tr->add_option("--init", init);
    tr->add_option("--out", out)->required();

    CLI::App* ev = app.add_subcommand("evaluate", "evaluate a checkpoint");
    ev->add_option("--manifest", manifest)->required();
    ev->add_option("--checkpoint", checkpoint)->required();
    ev->add_option("--config", config);
    ev->add_flag("--skip-errors", skip_errors);

    CLI::App* sc = app.add_subcommand("score", "score one image");
    sc->add_option("--image", image)->required();
    sc->add_option("--dets", dets);
    sc->add_option("--checkpoint", checkpoint)->required();
    sc->add_option("--dump-saliency", dump);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return 1;
    }

    try {
        if (sel->parsed()) return cmd_select_patches(image, config, out, solver);
        if (graph->parsed()) return cmd_build_graph(image, dets, out);
        if (tr->parsed()) {
            if (stage == "fused" && init.empty()) {
                std::cerr << "error: --stage fused requires --init\n";
                return 1;
            }
            return cmd_train(manifest, config, stage, init, out);
        }
        if (ev->parsed()) return cmd_evaluate(manifest, checkpoint, config, skip_errors);
        if (sc->parsed()) return cmd_score(image, dets, checkpoint, dump);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 1;
}
