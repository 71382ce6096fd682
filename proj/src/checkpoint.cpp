#include "chesslab/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace chesslab {

namespace {

constexpr uint32_t kMagic = 0x31424C43;  // "CLB1"
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_pod(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

}  // namespace

const TensorEntry& TensorFile::find(const std::string& name) const {
    for (const TensorEntry& t : tensors)
        if (t.name == name) return t;
    fail(ErrorKind::IoFailure, "tensor file has no entry named " + name);
}

void save_tensor_file(const TensorFile& file, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::IoFailure, "cannot open for writing: " + path);
    write_pod(out, kMagic);
    write_pod(out, kVersion);
    write_pod(out, uint64_t(file.config_json.size()));
    out.write(file.config_json.data(), std::streamsize(file.config_json.size()));
    write_pod(out, uint32_t(file.tensors.size()));
    for (const TensorEntry& t : file.tensors) {
        write_pod(out, uint32_t(t.name.size()));
        out.write(t.name.data(), std::streamsize(t.name.size()));
        write_pod(out, uint8_t(0));  // dtype f32
        write_pod(out, uint8_t(t.shape.size()));
        std::size_t expect = 1;
        for (int s : t.shape) {
            write_pod(out, uint64_t(s));
            expect *= std::size_t(s);
        }
        if (expect != t.data.size())
            fail(ErrorKind::Internal, "tensor " + t.name + " shape/data mismatch");
        out.write(reinterpret_cast<const char*>(t.data.data()),
                  std::streamsize(t.data.size() * sizeof(float)));
    }
    if (!out) fail(ErrorKind::IoFailure, "write failed: " + path);
}

TensorFile load_tensor_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::IoFailure, "cannot open for reading: " + path);
    if (read_pod<uint32_t>(in) != kMagic)
        fail(ErrorKind::IoFailure, "bad magic in tensor file: " + path);
    const uint32_t version = read_pod<uint32_t>(in);
    if (version != kVersion)
        fail(ErrorKind::IoFailure, "unsupported tensor file version " + std::to_string(version));
    TensorFile file;
    const uint64_t json_len = read_pod<uint64_t>(in);
    file.config_json.resize(json_len);
    in.read(file.config_json.data(), std::streamsize(json_len));
    const uint32_t n = read_pod<uint32_t>(in);
    file.tensors.resize(n);
    for (TensorEntry& t : file.tensors) {
        const uint32_t name_len = read_pod<uint32_t>(in);
        t.name.resize(name_len);
        in.read(t.name.data(), std::streamsize(name_len));
        const uint8_t dtype = read_pod<uint8_t>(in);
        if (dtype != 0) fail(ErrorKind::IoFailure, "unsupported dtype in " + path);
        const uint8_t ndim = read_pod<uint8_t>(in);
        std::size_t total = 1;
        t.shape.resize(ndim);
        for (int i = 0; i < ndim; ++i) {
            t.shape[i] = int(read_pod<uint64_t>(in));
            total *= std::size_t(t.shape[i]);
        }
        t.data.resize(total);
        in.read(reinterpret_cast<char*>(t.data.data()), std::streamsize(total * sizeof(float)));
    }
    if (!in) fail(ErrorKind::IoFailure, "truncated tensor file: " + path);
    return file;
}

void save_model(const Model& model, const std::string& path) {
    TensorFile file;
    file.config_json = model.config().to_json();
    for (const TensorView& v : model.tensors()) {
        TensorEntry t;
        t.name = v.name;
        t.shape = v.shape;
        t.data.assign(model.params().begin() + v.offset,
                      model.params().begin() + v.offset + v.size);
        file.tensors.push_back(std::move(t));
    }
    save_tensor_file(file, path);
}

Model load_model(const std::string& path) {
    const TensorFile file = load_tensor_file(path);
    Model model(ModelConfig::from_json(file.config_json));
    for (const TensorView& v : model.tensors()) {
        const TensorEntry& t = file.find(v.name);
        if (t.shape != v.shape)
            fail(ErrorKind::IoFailure, "checkpoint tensor " + v.name + " has the wrong shape");
        std::memcpy(model.params().data() + v.offset, t.data.data(), v.size * sizeof(float));
    }
    return model;
}

}  // namespace chesslab
