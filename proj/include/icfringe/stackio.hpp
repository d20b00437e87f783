#pragma once

// Binary frame-stack format (all integers and floats little-endian):
//
//   offset  size           field
//   0       5              magic "ICFS1"
//   5       4              width      (uint32)
//   9       4              height     (uint32)
//   13      4              n_frames   (uint32)
//   17      16             reserved, zero
//   33      8 * n          phases     (float64)
//   ...     4 * w * h * n  pixels     (float32, row-major, frame-major)
//
// Geometry and provenance live in a UTF-8 sidecar "<stack>.meta" of
// `key = value` lines; see format_metadata for the keys.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "icfringe/estimate.hpp"
#include "icfringe/pipeline.hpp"
#include "icfringe/synth.hpp"

namespace icfringe {

inline constexpr std::array<char, 5> kStackMagic{'I', 'C', 'F', 'S', '1'};
inline constexpr std::size_t kStackHeaderSize = 33;

/// Size in bytes of the binary stack file for the given dimensions.
std::uint64_t stack_file_size(std::uint32_t width, std::uint32_t height, std::uint32_t n_frames);

/// Writes the binary part only; returns the number of bytes written.
std::uint64_t write_stack_binary(const FrameStack& stack, std::ostream& out);

/// Reads the binary part. Geometry takes the stored size, the default pitch
/// and a centered pattern; metadata is "experimental/unknown".
/// Throws MalformedHeader or TruncatedFile.
FrameStack read_stack_binary(std::istream& in);

/// Sidecar text for the stack's geometry and metadata.
std::string format_metadata(const FrameStack& stack);

/// Applies sidecar text to a stack read from the binary file. Throws
/// MetadataMismatch when the recorded dimensions disagree with the stack, and
/// MalformedHeader for unknown keys or unparsable values.
void apply_metadata(FrameStack& stack, std::string_view text);

std::filesystem::path sidecar_path(const std::filesystem::path& stack_path);

/// Writes the binary file and its sidecar; returns the binary byte count.
/// Throws IoError.
std::uint64_t write_stack(const FrameStack& stack, const std::filesystem::path& path);

/// Reads the binary file and, if present, its sidecar.
FrameStack read_stack(const std::filesystem::path& path);

/// Shortest text that parses back to the same double.
std::string format_double(double value);

/// Columns: x,y,visibility,mean_intensity,mask,fit_residual
void write_visibility_map_csv(const VisibilityMap& vmap, std::ostream& out);

/// Columns: radius_m,visibility,samples
void write_profile_csv(const RadialProfile& profile, std::ostream& out);
RadialProfile read_profile_csv(std::istream& in);

/// Fixed column order of the estimate CSV.
std::string estimate_csv_header();
std::string estimate_csv_row(const CorrelationEstimate& estimate);
void write_estimate_csv(const CorrelationEstimate& estimate, std::ostream& out);

/// Human-readable summary of an estimate.
std::string estimate_report(const CorrelationEstimate& estimate);

}  // namespace icfringe
