#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace inspector {

enum class DType : std::uint8_t { f32 = 0, f64 = 1 };

std::size_t scalar_width(DType dtype);

// Self-describing tensor section:
//   magic "INSP" | u8 version | u8 dtype | u8 ndim | u32-LE dims[ndim] | payload (row-major, LE)
// Values are always held as f64 in memory; f32 storage narrows on write.
struct TensorBlob {
    DType dtype = DType::f32;
    std::vector<std::uint32_t> dims;
    std::vector<double> values;

    std::size_t element_count() const;
};

inline constexpr std::uint8_t kBlobVersion = 1;

void append_blob(std::vector<std::uint8_t>& out, const TensorBlob& blob);

// Parses one blob starting at `offset`, advancing it past the payload.
// `context` names the owner (file, sample, section) in error messages.
TensorBlob parse_blob(std::span<const std::uint8_t> bytes, std::size_t& offset,
                      const std::string& context);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace inspector
