#include "lamp/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lamp/error.hpp"

namespace lamp {

namespace {

using nlohmann::json;

Stat stat_from_name(const std::string& name) {
    if (name == "max") return Stat::max;
    if (name == "mean") return Stat::mean;
    if (name == "min") return Stat::min;
    if (name == "median") return Stat::median;
    raise(ErrorCode::ParseError, "unknown statistic: " + name);
}

ExtractorKind extractor_from_name(const std::string& name) {
    if (name == "handcrafted") return ExtractorKind::handcrafted;
    if (name == "tiny_conv") return ExtractorKind::tiny_conv;
    raise(ErrorCode::ParseError, "unknown extractor kind: " + name);
}

template <class T>
void read_field(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj[key].get<T>();
}

} // namespace

void PipelineConfig::normalize() {
    net.bag_size = selector.m;
    net.stats = canonical_stats(net.stats);
}

PipelineConfig desk_config(ExtractorKind kind) {
    PipelineConfig cfg;
    cfg.selector.m = 3;
    cfg.selector.window = 32;
    cfg.selector.stride = 16;
    cfg.net.extractor.kind = kind;
    cfg.net.extractor.feature_dim = 64;
    cfg.net.extractor.input_side = 32;
    cfg.net.stat_dim = 32;
    cfg.normalize();
    return cfg;
}

PipelineConfig parse_config_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        raise(ErrorCode::ParseError, std::string("bad config JSON: ") + e.what());
    }
    if (!doc.is_object()) raise(ErrorCode::ParseError, "config must be an object");

    PipelineConfig cfg;
    try {
        if (doc.contains("selector")) {
            const json& s = doc["selector"];
            read_field(s, "m", cfg.selector.m);
            read_field(s, "window", cfg.selector.window);
            read_field(s, "stride", cfg.selector.stride);
            read_field(s, "lambda_s", cfg.selector.lambda_s);
            read_field(s, "lambda_p", cfg.selector.lambda_p);
            read_field(s, "lambda_d", cfg.selector.lambda_d);
            read_field(s, "tau_overlap", cfg.selector.tau_overlap);
        }
        if (doc.contains("extractor")) {
            const json& e = doc["extractor"];
            if (e.contains("kind")) {
                cfg.net.extractor.kind = extractor_from_name(e["kind"].get<std::string>());
            }
            read_field(e, "feature_dim", cfg.net.extractor.feature_dim);
            read_field(e, "input_side", cfg.net.extractor.input_side);
        }
        if (doc.contains("net")) {
            const json& n = doc["net"];
            read_field(n, "stat_dim", cfg.net.stat_dim);
            if (n.contains("stats")) {
                cfg.net.stats.clear();
                for (const auto& s : n["stats"]) {
                    cfg.net.stats.push_back(stat_from_name(s.get<std::string>()));
                }
            }
        }
        if (doc.contains("train")) {
            const json& t = doc["train"];
            read_field(t, "lr", cfg.train.lr);
            read_field(t, "weight_decay", cfg.train.weight_decay);
            read_field(t, "momentum", cfg.train.momentum);
            read_field(t, "epochs", cfg.train.epochs);
            read_field(t, "batch_size", cfg.train.batch_size);
            read_field(t, "seed", cfg.train.seed);
        }
    } catch (const json::exception& e) {
        raise(ErrorCode::ParseError, std::string("bad config value: ") + e.what());
    }
    cfg.normalize();
    return cfg;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::NotFound, "no such file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_json(buf.str());
}

std::string canonical_model_config(const PipelineConfig& cfg) {
    PipelineConfig c = cfg;
    c.normalize();
    json doc;
    doc["selector"] = {{"m", c.selector.m},
                       {"window", c.selector.window},
                       {"stride", c.selector.stride},
                       {"lambda_s", c.selector.lambda_s},
                       {"lambda_p", c.selector.lambda_p},
                       {"lambda_d", c.selector.lambda_d},
                       {"tau_overlap", c.selector.tau_overlap}};
    doc["extractor"] = {{"kind", extractor_name(c.net.extractor.kind)},
                        {"feature_dim", c.net.extractor.feature_dim},
                        {"input_side", c.net.extractor.input_side}};
    json stats = json::array();
    for (Stat s : c.net.stats) stats.push_back(stat_name(s));
    doc["net"] = {{"stat_dim", c.net.stat_dim}, {"stats", stats}};
    return doc.dump();
}

std::string config_digest(const PipelineConfig& cfg) {
    const std::string text = canonical_model_config(cfg);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

} // namespace lamp
