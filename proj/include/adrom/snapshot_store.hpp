#pragma once

// Binary frame store shared by snapshots, bases and trajectories.
//
// Layout (little-endian):
//   char[4]  magic "ADRM"
//   u32      version (1)
//   u32      n      frame length
//   u32      count  number of frames
//   f64      dt     time between frames (0 when not meaningful, e.g. bases)
//   count * n f64 values, frame after frame.

#include "adrom/types.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>

namespace adrom {

struct FrameHeader {
  std::uint32_t version = 1;
  std::uint32_t n = 0;
  std::uint32_t count = 0;
  double dt = 0.0;
};

inline constexpr std::size_t kFrameHeaderBytes = 4 + 4 + 4 + 4 + 8;

/// Streams frames to disk; the frame count in the header is patched on
/// close() (and on destruction).
class SnapshotWriter {
public:
  SnapshotWriter(const std::filesystem::path &path, std::uint32_t n, double dt);
  ~SnapshotWriter();
  SnapshotWriter(const SnapshotWriter &) = delete;
  SnapshotWriter &operator=(const SnapshotWriter &) = delete;

  void append(std::span<const double> frame);
  void close();
  std::uint32_t count() const { return count_; }

private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::uint32_t n_;
  std::uint32_t count_ = 0;
};

/// Random-access reader.
class SnapshotReader {
public:
  explicit SnapshotReader(const std::filesystem::path &path);

  const FrameHeader &header() const { return header_; }
  std::uint32_t n() const { return header_.n; }
  std::uint32_t count() const { return header_.count; }
  double dt() const { return header_.dt; }

  Vec frame(std::uint32_t k);
  /// Frames first, first+stride, ... strictly below last, as matrix columns.
  Mat frames(std::uint32_t first, std::uint32_t last, std::uint32_t stride = 1);

private:
  std::filesystem::path path_;
  std::ifstream in_;
  FrameHeader header_;
};

/// Writes the columns of `cols` as frames.
void write_frames(const std::filesystem::path &path, const Mat &cols, double dt);
Mat read_frames(const std::filesystem::path &path, double *dt = nullptr);

/// 8-bit binary PGM (P5) of an nx-by-ny field stored row-major with j=0 at
/// the bottom; the image is written top row first. The affine map
/// value -> round(255 (value - lo) / (hi - lo)) uses lo/hi = field min/max
/// unless given; both are recorded in a sidecar "<path>.txt".
void write_pgm(const std::filesystem::path &path, std::span<const double> field,
               int nx, int ny, double lo = 0.0, double hi = 0.0);

} // namespace adrom
