#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "szero/tensor.hpp"

namespace szero {

/// Labelled samples with every feature in [0, 1]. Immutable after load.
struct Dataset {
    std::string id;
    Shape sample_shape;
    std::vector<double> features;  // size() * shape_size(sample_shape), row-major
    std::vector<std::size_t> labels;
    std::size_t num_classes = 0;

    std::size_t size() const { return labels.size(); }
    std::size_t sample_size() const { return shape_size(sample_shape); }
    Tensor sample(std::size_t i) const;

    /// Samples [begin, end) as a new dataset.
    Dataset slice(std::size_t begin, std::size_t end) const;

    /// Throws ParseError unless features lie in [0, 1] and labels in range.
    void validate() const;
};

/// Reads an IDX ubyte image file (magic 0x00000803) and its label file
/// (magic 0x00000801). Pixels are divided by 255.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Writes pixels round(v * 255) in the IDX ubyte layout. Samples must be
/// rank-2 or [1, H, W].
void save_idx(const Dataset& data, const std::filesystem::path& images,
              const std::filesystem::path& labels);

/// CSV rows of `f_0,...,f_{d-1},label`, with a header line naming columns.
Dataset load_csv(const std::filesystem::path& path);
void save_csv(const Dataset& data, const std::filesystem::path& path);

enum class SynthKind { TwoGaussians, Moons };

struct SynthDataset {
    Dataset data;
    /// Generator parameters (kind, n, seed, noise, scaling) for reproduction.
    nlohmann::json record;
};

/// Two-dimensional two-class toy data scaled into [0, 1]^2. Labels alternate
/// so the classes are balanced within one sample; output is fixed by seed.
SynthDataset synth2d(SynthKind kind, std::size_t n, std::uint64_t seed);

SynthKind parse_synth_kind(const std::string& name);
std::string synth_kind_name(SynthKind kind);

}  // namespace szero
