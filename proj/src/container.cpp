#include "szero/container.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <variant>

#include <json.hpp>

#include "szero/errors.hpp"

namespace szero {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'S', 'Z', 'M', '1'};

json tensor_entry(const std::string& name, const Tensor& t) {
    return {{"name", name}, {"shape", t.shape()}, {"bytes", t.size() * 4}};
}

void append_f32(std::string& out, const Tensor& t) {
    for (double v : t.data()) {
        const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
        for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
    }
}

std::uint32_t read_le32(const std::string& bytes, std::size_t offset) {
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) {
        v |= std::uint32_t{static_cast<unsigned char>(bytes[offset + b])} << (8 * b);
    }
    return v;
}

template <class T>
T field(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object() || !obj.contains(key)) throw ParseError(path + "." + key + ": missing");
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ParseError(path + "." + key + ": wrong type");
    }
}

Shape shape_field(const json& obj, const char* key, const std::string& path) {
    const auto dims = field<std::vector<std::int64_t>>(obj, key, path);
    Shape shape;
    for (std::int64_t d : dims) {
        if (d <= 0) throw ParseError(path + "." + key + ": dimensions must be positive");
        shape.push_back(static_cast<std::size_t>(d));
    }
    if (shape.empty()) throw ParseError(path + "." + key + ": empty shape");
    return shape;
}

class PayloadReader {
public:
    PayloadReader(const std::string& bytes, std::size_t offset) : bytes_(bytes), offset_(offset) {}

    Tensor read(const json& layer, std::size_t tensor_index, const std::string& expected_name,
                const std::string& path) {
        const std::string tpath = path + ".tensors[" + std::to_string(tensor_index) + "]";
        const auto& tensors = layer.at("tensors");
        if (tensor_index >= tensors.size()) throw ParseError(tpath + ": missing");
        const json& entry = tensors[tensor_index];
        const auto name = field<std::string>(entry, "name", tpath);
        if (name != expected_name) {
            throw ParseError(tpath + ".name: expected '" + expected_name + "', got '" + name + "'");
        }
        Shape shape = shape_field(entry, "shape", tpath);
        const auto nbytes = field<std::uint64_t>(entry, "bytes", tpath);
        if (nbytes != shape_size(shape) * 4) {
            throw ParseError(tpath + ".bytes: does not match shape " + shape_to_string(shape));
        }
        if (offset_ + nbytes > bytes_.size()) throw ParseError("payload truncated at " + tpath);
        std::vector<double> values(shape_size(shape));
        for (double& v : values) {
            v = static_cast<double>(std::bit_cast<float>(read_le32(bytes_, offset_)));
            offset_ += 4;
        }
        return Tensor(std::move(shape), std::move(values));
    }

    std::size_t offset() const { return offset_; }

private:
    const std::string& bytes_;
    std::size_t offset_;
};

}  // namespace

std::string serialize_model(const Model& model) {
    json layers = json::array();
    std::size_t payload_bytes = 0;
    for (const Layer& layer : model.layers()) {
        json entry = {{"kind", layer_kind(layer)}};
        if (const auto* d = std::get_if<Dense>(&layer)) {
            entry["tensors"] = {tensor_entry("weight", d->weight), tensor_entry("bias", d->bias)};
        } else if (const auto* c = std::get_if<Conv2D>(&layer)) {
            entry["tensors"] = {tensor_entry("weight", c->weight), tensor_entry("bias", c->bias)};
            entry["stride"] = c->stride;
            entry["padding"] = c->padding;
        } else if (const auto* p = std::get_if<MaxPool2D>(&layer)) {
            entry["kernel"] = p->kernel;
            entry["stride"] = p->stride;
        }
        layers.push_back(std::move(entry));
    }
    for (const Tensor* t : model.parameters()) payload_bytes += t->size() * 4;

    const json header = {{"dtype", "f32"},
                         {"input_shape", model.input_shape()},
                         {"num_classes", model.num_classes()},
                         {"layers", std::move(layers)},
                         {"payload_bytes", payload_bytes}};
    const std::string text = header.dump();

    std::string out(kMagic, 4);
    const auto len = static_cast<std::uint32_t>(text.size());
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((len >> (8 * b)) & 0xFF));
    out += text;
    out.reserve(out.size() + payload_bytes);
    for (const Tensor* t : model.parameters()) append_f32(out, *t);
    return out;
}

Model parse_model(const std::string& bytes) {
    if (bytes.size() < 8) throw ParseError("file too short for SZM1 container");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw ParseError("bad magic");
    const std::size_t header_len = read_le32(bytes, 4);
    if (bytes.size() < 8 + header_len) throw ParseError("header truncated");

    json header;
    try {
        header = json::parse(bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(header_len));
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("header is not valid JSON: ") + e.what());
    }
    if (!header.is_object()) throw ParseError("header: not an object");
    const auto dtype = field<std::string>(header, "dtype", "header");
    if (dtype != "f32") throw ParseError("header.dtype: unsupported '" + dtype + "'");
    Shape input_shape = shape_field(header, "input_shape", "header");
    const auto num_classes = field<std::uint64_t>(header, "num_classes", "header");
    const auto payload_bytes = field<std::uint64_t>(header, "payload_bytes", "header");
    if (!header.contains("layers") || !header["layers"].is_array()) {
        throw ParseError("header.layers: missing or not an array");
    }

    const std::size_t payload_start = 8 + header_len;
    if (bytes.size() - payload_start < payload_bytes) throw ParseError("payload truncated");
    if (bytes.size() - payload_start > payload_bytes) throw ParseError("payload has trailing bytes");

    PayloadReader reader(bytes, payload_start);
    std::vector<Layer> layers;
    const json& entries = header["layers"];
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const std::string path = "header.layers[" + std::to_string(i) + "]";
        const json& entry = entries[i];
        const auto kind = field<std::string>(entry, "kind", path);
        const bool has_tensors = kind == "Dense" || kind == "Conv2D";
        if (has_tensors && (!entry.contains("tensors") || !entry["tensors"].is_array())) {
            throw ParseError(path + ".tensors: missing");
        }
        if (kind == "Dense") {
            Tensor w = reader.read(entry, 0, "weight", path);
            Tensor b = reader.read(entry, 1, "bias", path);
            layers.emplace_back(Dense{std::move(w), std::move(b)});
        } else if (kind == "Conv2D") {
            Tensor w = reader.read(entry, 0, "weight", path);
            Tensor b = reader.read(entry, 1, "bias", path);
            layers.emplace_back(Conv2D{std::move(w), std::move(b),
                                       field<std::size_t>(entry, "stride", path),
                                       field<std::size_t>(entry, "padding", path)});
        } else if (kind == "ReLU") {
            layers.emplace_back(ReLU{});
        } else if (kind == "Flatten") {
            layers.emplace_back(Flatten{});
        } else if (kind == "MaxPool2D") {
            layers.emplace_back(MaxPool2D{field<std::size_t>(entry, "kernel", path),
                                          field<std::size_t>(entry, "stride", path)});
        } else {
            throw ParseError(path + ".kind: unknown layer kind '" + kind + "'");
        }
    }
    if (reader.offset() != bytes.size()) {
        throw ParseError("header.payload_bytes: tensor byte counts do not sum to payload length");
    }

    Model model;
    try {
        model = Model(std::move(input_shape), std::move(layers));
    } catch (const ConfigError& e) {
        throw ParseError(std::string("shape-inconsistent header: ") + e.what());
    }
    if (model.num_classes() != num_classes) {
        throw ParseError("header.num_classes: " + std::to_string(num_classes) +
                         " does not match final layer width " + std::to_string(model.num_classes()));
    }
    for (const Tensor* t : model.parameters()) {
        if (!t->all_finite()) throw ParseError("payload contains non-finite parameters");
    }
    model.set_storage_dtype(StorageDtype::F32);
    return model;
}

void save_model(const Model& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    const std::string bytes = serialize_model(model);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing " + path.string());
}

Model load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return parse_model(bytes);
}

void round_parameters_to_f32(Model& model) {
    for (Tensor* t : model.parameters()) {
        for (double& v : t->data()) v = static_cast<double>(static_cast<float>(v));
    }
}

}  // namespace szero
