#include "lamp/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "lamp/error.hpp"

namespace lamp {

namespace {

constexpr const char* kMagic = "ALAMP 1";

struct NamedTensor {
    std::string name;
    const Tensor* tensor;
};

std::vector<NamedTensor> collect(const ModelParams& params) {
    std::vector<NamedTensor> out;
    params.w.visit([&](const char* name, const Tensor& t) {
        if (!t.empty()) out.push_back({std::string("w.") + name, &t});
    });
    params.vel.visit([&](const char* name, const Tensor& t) {
        if (!t.empty()) out.push_back({std::string("vel.") + name, &t});
    });
    return out;
}

// Little-endian float payload; byte order is explicit so files are portable.
void write_f32le(std::ostream& out, const std::vector<double>& v) {
    std::vector<unsigned char> buf(v.size() * 4);
    for (size_t i = 0; i < v.size(); ++i) {
        const float f = static_cast<float>(v[i]);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        buf[i * 4 + 0] = static_cast<unsigned char>(bits & 0xff);
        buf[i * 4 + 1] = static_cast<unsigned char>((bits >> 8) & 0xff);
        buf[i * 4 + 2] = static_cast<unsigned char>((bits >> 16) & 0xff);
        buf[i * 4 + 3] = static_cast<unsigned char>((bits >> 24) & 0xff);
    }
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
}

void read_f32le(std::istream& in, std::vector<double>& v, const std::string& path) {
    std::vector<unsigned char> buf(v.size() * 4);
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
    if (!in) raise(ErrorCode::ParseError, "truncated checkpoint: " + path);
    for (size_t i = 0; i < v.size(); ++i) {
        const std::uint32_t bits = static_cast<std::uint32_t>(buf[i * 4 + 0]) |
                                   (static_cast<std::uint32_t>(buf[i * 4 + 1]) << 8) |
                                   (static_cast<std::uint32_t>(buf[i * 4 + 2]) << 16) |
                                   (static_cast<std::uint32_t>(buf[i * 4 + 3]) << 24);
        float f;
        std::memcpy(&f, &bits, 4);
        v[i] = static_cast<double>(f);
    }
}

std::string read_line(std::istream& in, const std::string& path) {
    std::string line;
    if (!std::getline(in, line)) {
        raise(ErrorCode::ParseError, "truncated checkpoint: " + path);
    }
    return line;
}

} // namespace

void save_checkpoint(const std::string& path, const ModelParams& params,
                     const PipelineConfig& cfg) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorCode::IoError, "cannot open for writing: " + path);

    const std::vector<NamedTensor> tensors = collect(params);
    out << kMagic << "\n";
    out << "config " << canonical_model_config(cfg) << "\n";
    out << "digest " << config_digest(cfg) << "\n";
    out << "tensors " << tensors.size() << "\n";
    for (const NamedTensor& nt : tensors) {
        out << "tensor " << nt.name << " " << nt.tensor->shape.size();
        for (int d : nt.tensor->shape) out << " " << d;
        out << "\n";
        write_f32le(out, nt.tensor->v);
    }
    out << "end\n";
    if (!out) raise(ErrorCode::IoError, "write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path, const PipelineConfig* expected) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::NotFound, "no such file: " + path);

    if (read_line(in, path) != kMagic) {
        raise(ErrorCode::VersionMismatch, "not an ALAMP version-1 checkpoint: " + path);
    }
    const std::string config_line = read_line(in, path);
    if (config_line.rfind("config ", 0) != 0) {
        raise(ErrorCode::ParseError, "missing config header: " + path);
    }
    const std::string digest_line = read_line(in, path);
    if (digest_line.rfind("digest ", 0) != 0) {
        raise(ErrorCode::ParseError, "missing digest header: " + path);
    }

    Checkpoint ck;
    ck.config = parse_config_json(config_line.substr(7));
    if (config_digest(ck.config) != digest_line.substr(7)) {
        raise(ErrorCode::DigestMismatch, "stored digest does not match config: " + path);
    }
    if (expected && config_digest(*expected) != config_digest(ck.config)) {
        raise(ErrorCode::DigestMismatch,
              "checkpoint was produced with a different config: " + path);
    }

    std::istringstream count_line(read_line(in, path));
    std::string word;
    size_t count = 0;
    if (!(count_line >> word >> count) || word != "tensors") {
        raise(ErrorCode::ParseError, "missing tensor count: " + path);
    }

    for (size_t t = 0; t < count; ++t) {
        std::istringstream header(read_line(in, path));
        std::string tag, name;
        size_t ndim = 0;
        if (!(header >> tag >> name >> ndim) || tag != "tensor") {
            raise(ErrorCode::ParseError, "bad tensor header: " + path);
        }
        std::vector<int> shape(ndim);
        size_t total = 1;
        for (size_t d = 0; d < ndim; ++d) {
            if (!(header >> shape[d]) || shape[d] < 1) {
                raise(ErrorCode::ParseError, "bad tensor shape: " + path);
            }
            total *= static_cast<size_t>(shape[d]);
        }

        Tensor* slot = nullptr;
        auto match = [&](const char* prefix, ParamSet& set) {
            set.visit([&](const char* n, Tensor& tensor) {
                if (name == std::string(prefix) + n) slot = &tensor;
            });
        };
        match("w.", ck.params.w);
        match("vel.", ck.params.vel);
        if (!slot) raise(ErrorCode::ParseError, "unknown tensor name: " + name);

        slot->shape = shape;
        slot->v.assign(total, 0.0);
        read_f32le(in, slot->v, path);
    }
    if (read_line(in, path) != "end") {
        raise(ErrorCode::ParseError, "missing end marker: " + path);
    }
    return ck;
}

} // namespace lamp
