#include "szero/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "szero/errors.hpp"

namespace szero {

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::size_t offset,
                        const std::string& what) {
    if (buf.size() < offset + 4) throw ParseError(what + ": truncated header");
    return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
           (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

void write_be32(std::ofstream& out, std::uint32_t v) {
    const std::array<char, 4> bytes{static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                                    static_cast<char>(v >> 8), static_cast<char>(v)};
    out.write(bytes.data(), 4);
}

std::string format_double(double v) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

double parse_double(std::string_view text, const std::string& where) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ParseError(where + ": not a number: '" + std::string(text) + "'");
    }
    return v;
}

}  // namespace

Tensor Dataset::sample(std::size_t i) const {
    const std::size_t d = sample_size();
    const auto begin = features.begin() + static_cast<std::ptrdiff_t>(i * d);
    return Tensor(sample_shape, std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(d)));
}

Dataset Dataset::slice(std::size_t begin, std::size_t end) const {
    end = std::min(end, size());
    begin = std::min(begin, end);
    Dataset out;
    out.id = id + "[" + std::to_string(begin) + ":" + std::to_string(end) + "]";
    out.sample_shape = sample_shape;
    out.num_classes = num_classes;
    const std::size_t d = sample_size();
    out.features.assign(features.begin() + static_cast<std::ptrdiff_t>(begin * d),
                        features.begin() + static_cast<std::ptrdiff_t>(end * d));
    out.labels.assign(labels.begin() + static_cast<std::ptrdiff_t>(begin),
                      labels.begin() + static_cast<std::ptrdiff_t>(end));
    return out;
}

void Dataset::validate() const {
    if (features.size() != size() * sample_size()) {
        throw ParseError("dataset features do not match sample count");
    }
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (!(features[i] >= 0.0 && features[i] <= 1.0)) {
            throw ParseError("dataset feature " + std::to_string(i) + " outside [0, 1]");
        }
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= num_classes) {
            throw ParseError("label of sample " + std::to_string(i) + " out of range");
        }
    }
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
    const auto img = read_file(images);
    const auto lab = read_file(labels);
    const std::string iname = images.filename().string();
    const std::string lname = labels.filename().string();

    if (read_be32(img, 0, iname) != 0x00000803) throw ParseError(iname + ": bad magic for IDX images");
    if (read_be32(lab, 0, lname) != 0x00000801) throw ParseError(lname + ": bad magic for IDX labels");
    const std::size_t n = read_be32(img, 4, iname);
    const std::size_t rows = read_be32(img, 8, iname);
    const std::size_t cols = read_be32(img, 12, iname);
    const std::size_t nl = read_be32(lab, 4, lname);
    if (n != nl) {
        throw ParseError("image count " + std::to_string(n) + " does not match label count " +
                         std::to_string(nl));
    }
    if (img.size() != 16 + n * rows * cols) {
        throw ParseError(iname + ": payload size does not match " + std::to_string(n) + "x" +
                         std::to_string(rows) + "x" + std::to_string(cols));
    }
    if (lab.size() != 8 + n) throw ParseError(lname + ": payload size does not match count");

    Dataset data;
    data.id = "idx:" + iname;
    data.sample_shape = {1, rows, cols};
    data.features.resize(n * rows * cols);
    for (std::size_t i = 0; i < data.features.size(); ++i) {
        data.features[i] = static_cast<double>(img[16 + i]) / 255.0;
    }
    data.labels.resize(n);
    std::size_t max_label = 0;
    for (std::size_t i = 0; i < n; ++i) {
        data.labels[i] = lab[8 + i];
        max_label = std::max(max_label, data.labels[i]);
    }
    data.num_classes = std::max<std::size_t>(10, max_label + 1);
    return data;
}

void save_idx(const Dataset& data, const std::filesystem::path& images,
              const std::filesystem::path& labels) {
    Shape s = data.sample_shape;
    if (s.size() == 3 && s[0] == 1) s.erase(s.begin());
    if (s.size() != 2) throw ConfigError("IDX export needs [H, W] or [1, H, W] samples");

    std::ofstream img(images, std::ios::binary);
    std::ofstream lab(labels, std::ios::binary);
    if (!img || !lab) throw IoError("cannot write IDX files");
    write_be32(img, 0x00000803);
    write_be32(img, static_cast<std::uint32_t>(data.size()));
    write_be32(img, static_cast<std::uint32_t>(s[0]));
    write_be32(img, static_cast<std::uint32_t>(s[1]));
    for (double v : data.features) {
        img.put(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
    }
    write_be32(lab, 0x00000801);
    write_be32(lab, static_cast<std::uint32_t>(data.size()));
    for (std::size_t y : data.labels) lab.put(static_cast<char>(y));
    if (!img || !lab) throw IoError("failed writing IDX files");
}

Dataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    Dataset data;
    data.id = "csv:" + path.filename().string();
    std::string line;
    std::size_t line_no = 0;
    std::size_t d = 0;
    std::size_t max_label = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line_no == 1 && !line.empty() && std::isalpha(static_cast<unsigned char>(line[0]))) {
            continue;  // header
        }
        std::vector<std::string_view> cells;
        std::string_view rest(line);
        while (true) {
            const auto comma = rest.find(',');
            cells.push_back(rest.substr(0, comma));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        const std::string where = path.filename().string() + ":" + std::to_string(line_no);
        if (cells.size() < 2) throw ParseError(where + ": need features and a label");
        if (d == 0) d = cells.size() - 1;
        if (cells.size() - 1 != d) throw ParseError(where + ": inconsistent column count");
        for (std::size_t j = 0; j < d; ++j) data.features.push_back(parse_double(cells[j], where));
        const double label = parse_double(cells.back(), where);
        if (label < 0 || label != std::floor(label)) throw ParseError(where + ": bad label");
        data.labels.push_back(static_cast<std::size_t>(label));
        max_label = std::max(max_label, data.labels.back());
    }
    if (data.labels.empty()) throw ParseError(path.string() + ": no samples");
    data.sample_shape = {d};
    data.num_classes = std::max<std::size_t>(2, max_label + 1);
    data.validate();
    return data;
}

void save_csv(const Dataset& data, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    const std::size_t d = data.sample_size();
    for (std::size_t j = 0; j < d; ++j) out << 'x' << j << ',';
    out << "label\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) out << format_double(data.features[i * d + j]) << ',';
        out << data.labels[i] << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

SynthKind parse_synth_kind(const std::string& name) {
    if (name == "two_gaussians") return SynthKind::TwoGaussians;
    if (name == "moons") return SynthKind::Moons;
    throw ConfigError("unknown synthetic dataset '" + name + "'");
}

std::string synth_kind_name(SynthKind kind) {
    return kind == SynthKind::TwoGaussians ? "two_gaussians" : "moons";
}

SynthDataset synth2d(SynthKind kind, std::size_t n, std::uint64_t seed) {
    if (n < 2) throw ConfigError("synthetic dataset needs n >= 2");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const double spread = kind == SynthKind::TwoGaussians ? 0.5 : 0.1;
    std::vector<double> raw(2 * n);
    std::vector<std::size_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t y = i % 2;
        labels[i] = y;
        double a = 0.0, b = 0.0;
        if (kind == SynthKind::TwoGaussians) {
            // Means at (-2, -2) and (2, 2), unit-free spread 0.5.
            const double c = y == 0 ? -2.0 : 2.0;
            a = c + spread * noise(rng);
            b = c + spread * noise(rng);
        } else {
            const double theta = std::numbers::pi * unit(rng);
            if (y == 0) {
                a = std::cos(theta);
                b = std::sin(theta);
            } else {
                a = 1.0 - std::cos(theta);
                b = 0.5 - std::sin(theta);
            }
            a += spread * noise(rng);
            b += spread * noise(rng);
        }
        raw[2 * i] = a;
        raw[2 * i + 1] = b;
    }

    // Min-max scale each axis into [0, 1].
    std::array<double, 2> lo{raw[0], raw[1]};
    std::array<double, 2> hi = lo;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            lo[j] = std::min(lo[j], raw[2 * i + j]);
            hi[j] = std::max(hi[j], raw[2 * i + j]);
        }
    }
    SynthDataset out;
    out.data.id = "synth:" + synth_kind_name(kind) + ":" + std::to_string(n) + ":" + std::to_string(seed);
    out.data.sample_shape = {2};
    out.data.num_classes = 2;
    out.data.labels = std::move(labels);
    out.data.features.resize(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            const double range = hi[j] - lo[j];
            const double v = range > 0 ? (raw[2 * i + j] - lo[j]) / range : 0.5;
            out.data.features[2 * i + j] = std::clamp(v, 0.0, 1.0);
        }
    }
    out.record = {{"kind", synth_kind_name(kind)},
                  {"n", n},
                  {"seed", seed},
                  {"noise", spread},
                  {"scale_min", {lo[0], lo[1]}},
                  {"scale_max", {hi[0], hi[1]}}};
    return out;
}

}  // namespace szero
