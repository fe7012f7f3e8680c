#include "adrom/snapshot_store.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <vector>

namespace adrom {
namespace {

static_assert(std::endian::native == std::endian::little,
              "snapshot store assumes a little-endian host");

constexpr char kMagic[4] = {'A', 'D', 'R', 'M'};

template <class T> void put(std::ostream &os, T v) {
  os.write(reinterpret_cast<const char *>(&v), sizeof(T));
}
template <class T> T get(std::istream &is) {
  T v{};
  is.read(reinterpret_cast<char *>(&v), sizeof(T));
  return v;
}

} // namespace

SnapshotWriter::SnapshotWriter(const std::filesystem::path &path, std::uint32_t n,
                               double dt)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc), n_(n) {
  if (!out_)
    throw IoError("cannot open " + path.string() + " for writing");
  out_.write(kMagic, 4);
  put<std::uint32_t>(out_, 1);
  put<std::uint32_t>(out_, n);
  put<std::uint32_t>(out_, 0);
  put<double>(out_, dt);
}

SnapshotWriter::~SnapshotWriter() {
  try {
    close();
  } catch (...) {
  }
}

void SnapshotWriter::append(std::span<const double> frame) {
  require(frame.size() == n_, "SnapshotWriter: frame length mismatch");
  out_.write(reinterpret_cast<const char *>(frame.data()),
             static_cast<std::streamsize>(frame.size() * sizeof(double)));
  if (!out_)
    throw IoError("write failed on " + path_.string());
  ++count_;
}

void SnapshotWriter::close() {
  if (!out_.is_open())
    return;
  out_.seekp(12);
  put<std::uint32_t>(out_, count_);
  out_.close();
  if (out_.fail())
    throw IoError("closing " + path_.string() + " failed");
}

SnapshotReader::SnapshotReader(const std::filesystem::path &path)
    : path_(path), in_(path, std::ios::binary) {
  if (!in_)
    throw IoError("cannot open " + path.string());
  char magic[4];
  in_.read(magic, 4);
  if (!in_ || std::memcmp(magic, kMagic, 4) != 0)
    throw IoError(path.string() + ": bad magic");
  header_.version = get<std::uint32_t>(in_);
  header_.n = get<std::uint32_t>(in_);
  header_.count = get<std::uint32_t>(in_);
  header_.dt = get<double>(in_);
  if (!in_ || header_.version != 1)
    throw IoError(path.string() + ": unsupported header");
  const auto expected = kFrameHeaderBytes + static_cast<std::uintmax_t>(header_.n) *
                                                header_.count * sizeof(double);
  if (std::filesystem::file_size(path) < expected)
    throw IoError(path.string() + ": truncated file");
}

Vec SnapshotReader::frame(std::uint32_t k) {
  require(k < header_.count, "SnapshotReader: frame index out of range");
  Vec v(header_.n);
  in_.seekg(static_cast<std::streamoff>(kFrameHeaderBytes +
                                        static_cast<std::uintmax_t>(k) * header_.n *
                                            sizeof(double)));
  in_.read(reinterpret_cast<char *>(v.data()),
           static_cast<std::streamsize>(header_.n * sizeof(double)));
  if (!in_)
    throw IoError("read failed on " + path_.string());
  return v;
}

Mat SnapshotReader::frames(std::uint32_t first, std::uint32_t last,
                           std::uint32_t stride) {
  require(stride >= 1 && first <= last && last <= header_.count,
          "SnapshotReader: bad frame range");
  const std::uint32_t cols = (last - first + stride - 1) / stride;
  Mat m(header_.n, cols);
  for (std::uint32_t c = 0; c < cols; ++c)
    m.col(c) = frame(first + c * stride);
  return m;
}

void write_frames(const std::filesystem::path &path, const Mat &cols, double dt) {
  SnapshotWriter w(path, static_cast<std::uint32_t>(cols.rows()), dt);
  for (Eigen::Index c = 0; c < cols.cols(); ++c)
    w.append({cols.col(c).data(), static_cast<std::size_t>(cols.rows())});
  w.close();
}

Mat read_frames(const std::filesystem::path &path, double *dt) {
  SnapshotReader r(path);
  if (dt)
    *dt = r.dt();
  return r.frames(0, r.count());
}

void write_pgm(const std::filesystem::path &path, std::span<const double> field,
               int nx, int ny, double lo, double hi) {
  require(field.size() == static_cast<std::size_t>(nx) * ny, "write_pgm: size mismatch");
  if (lo == 0.0 && hi == 0.0) {
    const auto [mn, mx] = std::minmax_element(field.begin(), field.end());
    lo = *mn;
    hi = *mx;
  }
  const double span = hi > lo ? hi - lo : 1.0;
  std::vector<unsigned char> pix(field.size());
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double s = std::clamp((field[j * nx + i] - lo) / span, 0.0, 1.0);
      pix[static_cast<std::size_t>(ny - 1 - j) * nx + i] =
          static_cast<unsigned char>(std::lround(255.0 * s));
    }
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot open " + path.string());
  out << "P5\n" << nx << " " << ny << "\n255\n";
  out.write(reinterpret_cast<const char *>(pix.data()),
            static_cast<std::streamsize>(pix.size()));

  std::ofstream meta(path.string() + ".txt");
  meta << std::setprecision(17) << "width " << nx << "\nheight " << ny
       << "\nlo " << lo << "\nhi " << hi
       << "\nmap value = lo + (pixel / 255) * (hi - lo)\nrows top-to-bottom (first row is y = 1)\n";
}

} // namespace adrom
