#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "inspector/blob.hpp"
#include "inspector/dataset.hpp"
#include "inspector/pool.hpp"

namespace inspector {

inline constexpr int kDumpFormatVersion = 1;

struct DumpManifest {
    std::string model_id;
    std::string aspect;
    int num_layers = 0;
    int hidden_dim = 0;
    int num_heads = 0;
    std::vector<std::string> sample_ids;
    std::map<std::string, int> seq_lens;
    int format_version = kDumpFormatVersion;
    DType dtype = DType::f32;

    // Per-layer row: mean(d) | last(d) | min(d) | max(d) | entropies(R)
    int layer_width() const { return 4 * hidden_dim + num_heads; }
};

// Pooled vectors and head entropies for one sample, stored contiguously as an
// L x (4d + R) row-major block. Layers are addressed 1..L.
class SampleRepresentation {
public:
    SampleRepresentation() = default;
    SampleRepresentation(int num_layers, int hidden_dim, int num_heads);

    int num_layers() const { return layers_; }
    int hidden_dim() const { return dim_; }
    int num_heads() const { return heads_; }

    std::span<double> mean(int layer) { return block(layer, 0, dim_); }
    std::span<double> last(int layer) { return block(layer, dim_, dim_); }
    std::span<double> min(int layer) { return block(layer, 2 * dim_, dim_); }
    std::span<double> max(int layer) { return block(layer, 3 * dim_, dim_); }
    std::span<double> entropies(int layer) { return block(layer, 4 * dim_, heads_); }

    std::span<const double> mean(int layer) const { return block(layer, 0, dim_); }
    std::span<const double> last(int layer) const { return block(layer, dim_, dim_); }
    std::span<const double> min(int layer) const { return block(layer, 2 * dim_, dim_); }
    std::span<const double> max(int layer) const { return block(layer, 3 * dim_, dim_); }
    std::span<const double> entropies(int layer) const { return block(layer, 4 * dim_, heads_); }

    // Non-concat pools as a view; concat is assembled by pooled_vector().
    std::span<const double> pool(int layer, PoolMode mode) const;

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool operator==(const SampleRepresentation&) const = default;

private:
    std::span<double> block(int layer, int offset, int width);
    std::span<const double> block(int layer, int offset, int width) const;

    int layers_ = 0;
    int dim_ = 0;
    int heads_ = 0;
    std::vector<double> data_;
};

struct Dump {
    DumpManifest manifest;
    std::vector<SampleRepresentation> samples;

    std::size_t size() const { return samples.size(); }
    // Index of `id` in sample order; throws not_found.
    std::size_t index_of(const std::string& id) const;
};

// Writes `<path>/manifest.json` plus one `sample_NNNNNN.bin` per sample.
void write_dump(const DumpManifest& manifest, std::span<const SampleRepresentation> samples,
                const std::string& path);
inline void write_dump(const Dump& dump, const std::string& path) {
    write_dump(dump.manifest, dump.samples, path);
}

Dump read_dump(const std::string& path);

std::string sample_file_name(std::size_t index);

struct Violation {
    std::string sample_id;
    int layer = 0;  // 0 when not layer-specific
    std::string field;
    std::string kind;
    std::string detail;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool clean() const { return violations.empty(); }
    nlohmann::json to_json() const;
};

ValidationReport validate_dump(const Dump& dump);

// ---- synthetic dumps with planted signal ----

struct SynthSpec {
    int num_layers = 8;
    int hidden_dim = 32;
    int num_heads = 4;
    int num_samples = 400;
    int signal_layer = 5;
    PoolMode signal_pool = PoolMode::mean;
    double noise_std = 0.25;
    double class_balance = 0.5;
    // 0 removes the planted signal entirely (null-control dumps).
    double signal_scale = 1.0;
    std::uint64_t seed = 7;
    std::string aspect = "synthetic";
    std::string model_id = "synthetic";
};

struct SyntheticData {
    Dump dump;
    LabelTable labels;        // 5-level scores under spec.aspect
    std::vector<int> scores;  // aligned with dump order
    std::vector<int> binary;  // score >= 4, equals the drawn class
};

SyntheticData generate_synthetic_dump(const SynthSpec& spec);

}  // namespace inspector
