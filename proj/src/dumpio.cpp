#include "inspector/dumpio.hpp"

#include "inspector/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>

namespace fs = std::filesystem;
using nlohmann::json;

namespace inspector {

const char* to_string(PoolMode mode) {
    switch (mode) {
        case PoolMode::mean: return "mean";
        case PoolMode::last: return "last";
        case PoolMode::min: return "min";
        case PoolMode::max: return "max";
        case PoolMode::concat: return "concat";
    }
    return "?";
}

PoolMode parse_pool_mode(std::string_view text) {
    for (auto mode : kAllPools)
        if (text == to_string(mode)) return mode;
    throw Error(ErrorKind::invalid_argument, "unknown pool mode '" + std::string(text) + "'");
}

SampleRepresentation::SampleRepresentation(int num_layers, int hidden_dim, int num_heads)
    : layers_(num_layers), dim_(hidden_dim), heads_(num_heads),
      data_(static_cast<std::size_t>(num_layers) * (4 * hidden_dim + num_heads), 0.0) {}

std::span<double> SampleRepresentation::block(int layer, int offset, int width) {
    if (layer < 1 || layer > layers_)
        throw Error(ErrorKind::invalid_argument, "layer " + std::to_string(layer) + " outside 1.." +
                                                     std::to_string(layers_));
    const std::size_t row = static_cast<std::size_t>(layer - 1) * (4 * dim_ + heads_);
    return {data_.data() + row + offset, static_cast<std::size_t>(width)};
}

std::span<const double> SampleRepresentation::block(int layer, int offset, int width) const {
    return const_cast<SampleRepresentation*>(this)->block(layer, offset, width);
}

std::span<const double> SampleRepresentation::pool(int layer, PoolMode mode) const {
    switch (mode) {
        case PoolMode::mean: return mean(layer);
        case PoolMode::last: return last(layer);
        case PoolMode::min: return min(layer);
        case PoolMode::max: return max(layer);
        case PoolMode::concat: break;
    }
    throw Error(ErrorKind::invalid_argument, "concat pooling has no contiguous view");
}

std::size_t Dump::index_of(const std::string& id) const {
    auto it = std::find(manifest.sample_ids.begin(), manifest.sample_ids.end(), id);
    if (it == manifest.sample_ids.end()) throw Error(ErrorKind::not_found, "sample '" + id + "' not in dump");
    return static_cast<std::size_t>(it - manifest.sample_ids.begin());
}

std::string sample_file_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "sample_%06zu.bin", index);
    return buf;
}

namespace {

void check_manifest(const DumpManifest& m) {
    if (m.num_layers < 1 || m.hidden_dim < 1 || m.num_heads < 1)
        throw Error(ErrorKind::invalid_argument, "manifest dimensions must be positive");
    std::set<std::string> seen;
    for (const auto& id : m.sample_ids) {
        if (!seen.insert(id).second) throw Error(ErrorKind::invalid_argument, "duplicate sample id '" + id + "'");
        auto it = m.seq_lens.find(id);
        if (it == m.seq_lens.end()) throw Error(ErrorKind::invalid_argument, "no seq_len for sample '" + id + "'");
        if (it->second < 1) throw Error(ErrorKind::invalid_argument, "seq_len must be positive for '" + id + "'");
    }
}

json manifest_to_json(const DumpManifest& m) {
    return json{{"model_id", m.model_id},
                {"aspect", m.aspect},
                {"num_layers", m.num_layers},
                {"hidden_dim", m.hidden_dim},
                {"num_heads", m.num_heads},
                {"sample_ids", m.sample_ids},
                {"seq_lens", m.seq_lens},
                {"format_version", m.format_version},
                {"dtype", m.dtype == DType::f32 ? "f32" : "f64"}};
}

DumpManifest manifest_from_json(const json& j) {
    DumpManifest m;
    try {
        m.format_version = j.at("format_version").get<int>();
        if (m.format_version != kDumpFormatVersion)
            throw Error(ErrorKind::unsupported_version,
                        "unsupported dump format_version " + std::to_string(m.format_version));
        m.model_id = j.value("model_id", "");
        m.aspect = j.value("aspect", "");
        m.num_layers = j.at("num_layers").get<int>();
        m.hidden_dim = j.at("hidden_dim").get<int>();
        m.num_heads = j.at("num_heads").get<int>();
        m.sample_ids = j.at("sample_ids").get<std::vector<std::string>>();
        m.seq_lens = j.at("seq_lens").get<std::map<std::string, int>>();
        const auto dtype = j.value("dtype", "f32");
        if (dtype != "f32" && dtype != "f64") throw Error(ErrorKind::format, "unknown manifest dtype " + dtype);
        m.dtype = dtype == "f32" ? DType::f32 : DType::f64;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::format, std::string("malformed manifest: ") + e.what());
    }
    check_manifest(m);
    return m;
}

}  // namespace

void write_dump(const DumpManifest& manifest, std::span<const SampleRepresentation> samples,
                const std::string& path) {
    check_manifest(manifest);
    if (samples.size() != manifest.sample_ids.size())
        throw Error(ErrorKind::dimension_mismatch,
                    "manifest lists " + std::to_string(manifest.sample_ids.size()) + " samples, got " +
                        std::to_string(samples.size()));
    const std::size_t expected = static_cast<std::size_t>(manifest.num_layers) * manifest.layer_width();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        if (s.num_layers() != manifest.num_layers || s.hidden_dim() != manifest.hidden_dim ||
            s.num_heads() != manifest.num_heads || s.data().size() != expected)
            throw Error(ErrorKind::dimension_mismatch,
                        "sample '" + manifest.sample_ids[i] + "' has shape L=" + std::to_string(s.num_layers()) +
                            " d=" + std::to_string(s.hidden_dim()) + " R=" + std::to_string(s.num_heads()) +
                            ", manifest expects L=" + std::to_string(manifest.num_layers) +
                            " d=" + std::to_string(manifest.hidden_dim) + " R=" + std::to_string(manifest.num_heads));
    }

    std::error_code ec;
    fs::create_directories(path, ec);
    if (ec || !fs::is_directory(path)) throw Error(ErrorKind::io, "cannot create dump directory " + path);
    for (const auto& entry : fs::directory_iterator(path)) {
        const auto name = entry.path().filename().string();
        if (name.rfind("sample_", 0) == 0 && entry.path().extension() == ".bin") fs::remove(entry.path());
    }

    const std::string manifest_text = manifest_to_json(manifest).dump(2) + "\n";
    write_file_bytes((fs::path(path) / "manifest.json").string(),
                     {reinterpret_cast<const std::uint8_t*>(manifest_text.data()), manifest_text.size()});

    std::vector<std::uint8_t> buffer;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        TensorBlob blob;
        blob.dtype = manifest.dtype;
        blob.dims = {static_cast<std::uint32_t>(manifest.num_layers),
                     static_cast<std::uint32_t>(manifest.layer_width())};
        blob.values = samples[i].data();
        buffer.clear();
        append_blob(buffer, blob);
        write_file_bytes((fs::path(path) / sample_file_name(i)).string(), buffer);
    }
}

Dump read_dump(const std::string& path) {
    const auto manifest_path = fs::path(path) / "manifest.json";
    if (!fs::exists(manifest_path)) throw Error(ErrorKind::not_found, "no manifest.json under " + path);
    std::ifstream in(manifest_path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::format, "manifest.json is not valid JSON: " + std::string(e.what()));
    }

    Dump dump;
    dump.manifest = manifest_from_json(j);
    const auto& m = dump.manifest;
    dump.samples.reserve(m.sample_ids.size());
    for (std::size_t i = 0; i < m.sample_ids.size(); ++i) {
        const auto file = (fs::path(path) / sample_file_name(i)).string();
        const std::string context = "sample '" + m.sample_ids[i] + "' (" + file + ")";
        if (!fs::exists(file)) throw Error(ErrorKind::not_found, context + ": file missing");
        const auto bytes = read_file_bytes(file);
        std::size_t offset = 0;
        TensorBlob blob = parse_blob(bytes, offset, context);
        if (offset != bytes.size())
            throw Error(ErrorKind::format, context + ": " + std::to_string(bytes.size() - offset) + " trailing bytes");
        if (blob.dims.size() != 2 || blob.dims[0] != static_cast<std::uint32_t>(m.num_layers) ||
            blob.dims[1] != static_cast<std::uint32_t>(m.layer_width()))
            throw Error(ErrorKind::dimension_mismatch, context + ": tensor shape does not match manifest");
        SampleRepresentation s(m.num_layers, m.hidden_dim, m.num_heads);
        s.data() = std::move(blob.values);
        dump.samples.push_back(std::move(s));
    }
    return dump;
}

json ValidationReport::to_json() const {
    json arr = json::array();
    for (const auto& v : violations)
        arr.push_back({{"sample_id", v.sample_id}, {"layer", v.layer}, {"field", v.field}, {"kind", v.kind},
                       {"detail", v.detail}});
    return json{{"clean", clean()}, {"violations", arr}};
}

ValidationReport validate_dump(const Dump& dump) {
    constexpr double kEntropyFloor = -10 * 1e-10;
    ValidationReport report;
    const auto& m = dump.manifest;
    auto add = [&](const std::string& id, int layer, std::string field, std::string kind, std::string detail) {
        report.violations.push_back({id, layer, std::move(field), std::move(kind), std::move(detail)});
    };
    if (dump.samples.size() != m.sample_ids.size())
        add("", 0, "samples", "count_mismatch", "manifest and sample counts differ");

    const std::size_t n = std::min(dump.samples.size(), m.sample_ids.size());
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = dump.samples[i];
        const auto& id = m.sample_ids[i];
        if (s.num_layers() != m.num_layers || s.hidden_dim() != m.hidden_dim || s.num_heads() != m.num_heads) {
            add(id, 0, "shape", "dimension_mismatch", "sample shape differs from manifest");
            continue;
        }
        const auto seq_it = m.seq_lens.find(id);
        const double log_s = seq_it == m.seq_lens.end() ? std::numeric_limits<double>::infinity()
                                                        : std::log(static_cast<double>(seq_it->second));
        for (int layer = 1; layer <= m.num_layers; ++layer) {
            auto check_finite = [&](std::span<const double> v, const char* field) {
                auto bad = std::find_if(v.begin(), v.end(), [](double x) { return !std::isfinite(x); });
                if (bad != v.end())
                    add(id, layer, field, "non_finite",
                        "index " + std::to_string(bad - v.begin()) + " is " + std::to_string(*bad));
            };
            check_finite(s.mean(layer), "mean_vec");
            check_finite(s.last(layer), "last_vec");
            check_finite(s.min(layer), "min_vec");
            check_finite(s.max(layer), "max_vec");
            check_finite(s.entropies(layer), "head_entropies");

            const auto lo = s.min(layer), mid = s.mean(layer), hi = s.max(layer);
            for (int j = 0; j < m.hidden_dim; ++j) {
                const double slack = 1e-6 * (1.0 + std::abs(hi[j]));
                if (lo[j] > hi[j] + slack || lo[j] > mid[j] + slack || mid[j] > hi[j] + slack) {
                    add(id, layer, "min_vec/mean_vec/max_vec", "ordering",
                        "index " + std::to_string(j) + ": min=" + std::to_string(lo[j]) +
                            " mean=" + std::to_string(mid[j]) + " max=" + std::to_string(hi[j]));
                    break;
                }
            }
            const auto ent = s.entropies(layer);
            for (int h = 0; h < m.num_heads; ++h) {
                if (!std::isfinite(ent[h])) continue;
                if (ent[h] < kEntropyFloor || ent[h] > log_s + 1e-4) {
                    add(id, layer, "head_entropies", "entropy_range",
                        "head " + std::to_string(h) + " entropy " + std::to_string(ent[h]) + " outside [0, ln S]");
                    break;
                }
            }
        }
    }
    return report;
}

}  // namespace inspector
