#include "inspector/blob.hpp"
#include "inspector/error.hpp"
#include "inspector/log.hpp"
#include "inspector/parallel.hpp"

#include <omp.h>

#include <algorithm>
#include <bit>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>

#include <json.hpp>

static_assert(std::endian::native == std::endian::little, "blob encoding assumes a little-endian host");

namespace inspector {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::invalid_argument: return "invalid_argument";
        case ErrorKind::dimension_mismatch: return "dimension_mismatch";
        case ErrorKind::format: return "format_error";
        case ErrorKind::truncated: return "truncated";
        case ErrorKind::io: return "io_error";
        case ErrorKind::not_found: return "not_found";
        case ErrorKind::labels_not_found: return "labels_not_found";
        case ErrorKind::integrity: return "integrity_error";
        case ErrorKind::unsupported_version: return "unsupported_version";
        case ErrorKind::degenerate_labels: return "degenerate_labels";
        case ErrorKind::non_finite: return "non_finite";
    }
    return "unknown";
}

// ---- warnings ----

namespace {

std::mutex& sink_mutex() {
    static std::mutex m;
    return m;
}

WarningSink& sink_slot() {
    static WarningSink sink = [](const std::string& message) {
        std::cerr << nlohmann::json{{"warning", message}}.dump() << '\n';
    };
    return sink;
}

}  // namespace

void warn(const std::string& message) {
    std::lock_guard lock(sink_mutex());
    if (sink_slot()) sink_slot()(message);
}

void warn_once(const std::string& message) {
    static std::mutex seen_mutex;
    static std::set<std::string> seen;
    {
        std::lock_guard lock(seen_mutex);
        if (!seen.insert(message).second) return;
    }
    warn(message);
}

WarningSink set_warning_sink(WarningSink sink) {
    std::lock_guard lock(sink_mutex());
    return std::exchange(sink_slot(), std::move(sink));
}

ScopedWarningCapture::ScopedWarningCapture()
    : previous_(set_warning_sink([this](const std::string& m) { messages_.push_back(m); })) {}

ScopedWarningCapture::~ScopedWarningCapture() { set_warning_sink(std::move(previous_)); }

bool ScopedWarningCapture::contains(const std::string& needle) const {
    return std::any_of(messages_.begin(), messages_.end(),
                       [&](const std::string& m) { return m.find(needle) != std::string::npos; });
}

// ---- threads ----

int configured_threads() {
    const char* env = std::getenv("INSPECTOR_THREADS");
    if (env == nullptr) return omp_get_max_threads();
    char* end = nullptr;
    long value = std::strtol(env, &end, 10);
    if (end == env || value < 1) return omp_get_max_threads();
    return static_cast<int>(value);
}

void apply_thread_cap() { omp_set_num_threads(configured_threads()); }

// ---- blobs ----

std::size_t scalar_width(DType dtype) { return dtype == DType::f32 ? 4 : 8; }

std::size_t TensorBlob::element_count() const {
    std::size_t count = 1;
    for (auto d : dims) count *= d;
    return count;
}

namespace {

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    out.insert(out.end(), raw, raw + sizeof(T));
}

template <typename T>
T get(std::span<const std::uint8_t> bytes, std::size_t offset) {
    T value;
    std::memcpy(&value, bytes.data() + offset, sizeof(T));
    return value;
}

}  // namespace

void append_blob(std::vector<std::uint8_t>& out, const TensorBlob& blob) {
    if (blob.dims.empty() || blob.dims.size() > 255)
        throw Error(ErrorKind::invalid_argument, "tensor blob needs 1..255 dimensions");
    for (auto d : blob.dims)
        if (d == 0) throw Error(ErrorKind::invalid_argument, "tensor blob dimension must be >= 1");
    if (blob.values.size() != blob.element_count())
        throw Error(ErrorKind::dimension_mismatch, "tensor blob payload does not match dims");

    out.insert(out.end(), {'I', 'N', 'S', 'P'});
    put<std::uint8_t>(out, kBlobVersion);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(blob.dtype));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(blob.dims.size()));
    for (auto d : blob.dims) put<std::uint32_t>(out, d);
    out.reserve(out.size() + blob.values.size() * scalar_width(blob.dtype));
    if (blob.dtype == DType::f32) {
        for (double v : blob.values) put<float>(out, static_cast<float>(v));
    } else {
        for (double v : blob.values) put<double>(out, v);
    }
}

TensorBlob parse_blob(std::span<const std::uint8_t> bytes, std::size_t& offset,
                      const std::string& context) {
    auto need = [&](std::size_t n, const char* what) {
        if (offset + n > bytes.size())
            throw Error(ErrorKind::truncated, context + ": truncated " + what + " (need " +
                                                  std::to_string(offset + n) + " bytes, have " +
                                                  std::to_string(bytes.size()) + ")");
    };
    need(7, "header");
    if (std::memcmp(bytes.data() + offset, "INSP", 4) != 0)
        throw Error(ErrorKind::format, context + ": bad magic bytes");
    offset += 4;
    const auto version = get<std::uint8_t>(bytes, offset++);
    if (version != kBlobVersion)
        throw Error(ErrorKind::unsupported_version,
                    context + ": unsupported blob version " + std::to_string(version));
    const auto dtype_code = get<std::uint8_t>(bytes, offset++);
    if (dtype_code > 1)
        throw Error(ErrorKind::format, context + ": unknown dtype code " + std::to_string(dtype_code));
    const auto ndim = get<std::uint8_t>(bytes, offset++);
    if (ndim == 0) throw Error(ErrorKind::format, context + ": zero-dimensional blob");

    TensorBlob blob;
    blob.dtype = static_cast<DType>(dtype_code);
    need(4u * ndim, "dims");
    for (int i = 0; i < ndim; ++i) {
        auto d = get<std::uint32_t>(bytes, offset);
        offset += 4;
        if (d == 0) throw Error(ErrorKind::format, context + ": zero-length dimension");
        blob.dims.push_back(d);
    }
    const std::size_t count = blob.element_count();
    const std::size_t width = scalar_width(blob.dtype);
    need(count * width, "payload");
    blob.values.resize(count);
    if (blob.dtype == DType::f32) {
        for (std::size_t i = 0; i < count; ++i) blob.values[i] = get<float>(bytes, offset + i * 4);
    } else {
        for (std::size_t i = 0; i < count; ++i) blob.values[i] = get<double>(bytes, offset + i * 8);
    }
    offset += count * width;
    return blob;
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::not_found, "cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::io, "write failed for " + path);
}

}  // namespace inspector
