#include "p2s/io.hpp"

#include <zlib.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace p2s {

namespace {

// NIfTI-1 header, 348 bytes. Field offsets follow the reference nifti1.h;
// the layout has no implicit padding on common platforms.
struct NiftiHeader {
  std::int32_t sizeof_hdr;
  char data_type[10];
  char db_name[18];
  std::int32_t extents;
  std::int16_t session_error;
  char regular;
  char dim_info;
  std::int16_t dim[8];
  float intent_p1, intent_p2, intent_p3;
  std::int16_t intent_code;
  std::int16_t datatype;
  std::int16_t bitpix;
  std::int16_t slice_start;
  float pixdim[8];
  float vox_offset;
  float scl_slope;
  float scl_inter;
  std::int16_t slice_end;
  char slice_code;
  char xyzt_units;
  float cal_max, cal_min;
  float slice_duration;
  float toffset;
  std::int32_t glmax, glmin;
  char descrip[80];
  char aux_file[24];
  std::int16_t qform_code, sform_code;
  float quatern_b, quatern_c, quatern_d;
  float qoffset_x, qoffset_y, qoffset_z;
  float srow_x[4], srow_y[4], srow_z[4];
  char intent_name[16];
  char magic[4];
};
static_assert(sizeof(NiftiHeader) == 348, "NIfTI-1 header must pack to 348 bytes");

constexpr std::int16_t kDtInt16 = 4;
constexpr std::int16_t kDtFloat32 = 16;
constexpr std::int16_t kDtFloat64 = 64;
constexpr std::int16_t kDtUint16 = 512;

void swap_bytes(void* p, std::size_t size) {
  auto* bytes = static_cast<unsigned char*>(p);
  for (std::size_t i = 0; i < size / 2; ++i)
    std::swap(bytes[i], bytes[size - 1 - i]);
}

template <typename T>
void swap_value(T& v) {
  swap_bytes(&v, sizeof(T));
}

void swap_header(NiftiHeader& h) {
  swap_value(h.sizeof_hdr);
  for (auto& d : h.dim) swap_value(d);
  swap_value(h.datatype);
  swap_value(h.bitpix);
  for (auto& p : h.pixdim) swap_value(p);
  swap_value(h.vox_offset);
  swap_value(h.scl_slope);
  swap_value(h.scl_inter);
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

class GzInput {
public:
  explicit GzInput(const std::string& path) : path_(path) {
    // gzopen reads plain (uncompressed) files transparently too.
    file_ = gzopen(path.c_str(), "rb");
    if (file_ == nullptr)
      throw Error(ErrorCode::io_open, path);
  }
  ~GzInput() {
    if (file_ != nullptr) gzclose(file_);
  }
  GzInput(const GzInput&) = delete;
  GzInput& operator=(const GzInput&) = delete;

  // Reads exactly `size` bytes or throws naming the shortfall.
  void read_exact(void* dst, std::size_t size, const char* what) {
    std::size_t got = 0;
    auto* out = static_cast<unsigned char*>(dst);
    while (got < size) {
      const unsigned chunk = static_cast<unsigned>(
          std::min<std::size_t>(size - got, 1u << 20));
      const int r = gzread(file_, out + got, chunk);
      if (r < 0)
        throw Error(ErrorCode::io_truncated,
                    path_ + ": read error in " + what);
      if (r == 0) break;
      got += static_cast<std::size_t>(r);
    }
    if (got != size) {
      std::ostringstream msg;
      msg << path_ << ": truncated " << what << " (expected " << size
          << " bytes, got " << got << ")";
      throw Error(ErrorCode::io_truncated, msg.str());
    }
  }

  void skip(std::size_t count) {
    char scratch[4096];
    while (count > 0) {
      const std::size_t chunk = std::min(count, sizeof scratch);
      read_exact(scratch, chunk, "header padding");
      count -= chunk;
    }
  }

private:
  std::string path_;
  gzFile file_ = nullptr;
};

Dim4 dims_from_header(const NiftiHeader& h, const std::string& path) {
  if (h.dim[0] < 3 || h.dim[0] > 4)
    throw Error(ErrorCode::io_unsupported,
                path + ": only 3D or 4D images are supported (dim[0] = " +
                    std::to_string(h.dim[0]) + ")");
  const std::int16_t n = h.dim[0] == 4 ? h.dim[4] : 1;
  if (h.dim[1] <= 0 || h.dim[2] <= 0 || h.dim[3] <= 0 || n <= 0)
    throw Error(ErrorCode::bad_dimensions,
                path + ": non-positive dimension in header");
  return {static_cast<std::size_t>(h.dim[1]), static_cast<std::size_t>(h.dim[2]),
          static_cast<std::size_t>(h.dim[3]), static_cast<std::size_t>(n)};
}

template <typename T>
std::vector<double> decode(const std::vector<unsigned char>& raw,
                           std::size_t count, bool swapped, float slope,
                           float inter) {
  std::vector<double> out(count);
  const bool rescale = slope != 0.0f;
  for (std::size_t i = 0; i < count; ++i) {
    T v;
    std::memcpy(&v, raw.data() + i * sizeof(T), sizeof(T));
    if (swapped) swap_value(v);
    double x = static_cast<double>(v);
    if (rescale) x = static_cast<double>(slope) * x + static_cast<double>(inter);
    out[i] = x;
  }
  return out;
}

void append_u32le(std::vector<unsigned char>& buf, std::uint32_t v) {
  buf.push_back(static_cast<unsigned char>(v));
  buf.push_back(static_cast<unsigned char>(v >> 8));
  buf.push_back(static_cast<unsigned char>(v >> 16));
  buf.push_back(static_cast<unsigned char>(v >> 24));
}

std::uint32_t read_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

void append_f32le(std::vector<unsigned char>& buf, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  append_u32le(buf, bits);
}

float read_f32le(const unsigned char* p) {
  const std::uint32_t bits = read_u32le(p);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

void append_u64le(std::vector<unsigned char>& buf, std::uint64_t v) {
  append_u32le(buf, static_cast<std::uint32_t>(v));
  append_u32le(buf, static_cast<std::uint32_t>(v >> 32));
}

std::uint64_t read_u64le(const unsigned char* p) {
  return static_cast<std::uint64_t>(read_u32le(p)) |
         (static_cast<std::uint64_t>(read_u32le(p + 4)) << 32);
}

constexpr char kRawMagic[7] = {'P', '2', 'S', 'R', 'A', 'W', '1'};
constexpr std::size_t kRawHeaderSize = 7 + 4 * 4 + 4 + 3 * 4;

}  // namespace

Volume4D read_nifti(const std::string& path) {
  if (!ends_with(path, ".nii") && !ends_with(path, ".nii.gz"))
    throw Error(ErrorCode::io_unsupported,
                path + ": unsupported extension (expected .nii or .nii.gz)");
  GzInput in(path);

  NiftiHeader header;
  in.read_exact(&header, sizeof header, "NIfTI header");

  bool swapped = false;
  if (header.sizeof_hdr != 348) {
    swap_header(header);
    swapped = true;
    if (header.sizeof_hdr != 348)
      throw Error(ErrorCode::io_magic,
                  path + ": not a NIfTI-1 file (sizeof_hdr mismatch)");
  }
  if (std::memcmp(header.magic, "n+1", 4) != 0) {
    if (std::memcmp(header.magic, "ni1", 4) == 0)
      throw Error(ErrorCode::io_unsupported,
                  path + ": two-file NIfTI (.hdr/.img) is not supported");
    throw Error(ErrorCode::io_magic, path + ": missing NIfTI-1 magic");
  }

  const Dim4 dims = dims_from_header(header, path);
  std::size_t elem_size;
  switch (header.datatype) {
    case kDtInt16:
    case kDtUint16:
      elem_size = 2;
      break;
    case kDtFloat32:
      elem_size = 4;
      break;
    case kDtFloat64:
      elem_size = 8;
      break;
    default:
      throw Error(ErrorCode::io_unsupported,
                  path + ": unsupported datatype code " +
                      std::to_string(header.datatype));
  }

  if (header.vox_offset < static_cast<float>(sizeof header))
    throw Error(ErrorCode::io_magic, path + ": vox_offset points into the header");
  in.skip(static_cast<std::size_t>(header.vox_offset) - sizeof header);

  const std::size_t count = dims.size();
  std::vector<unsigned char> raw(count * elem_size);
  in.read_exact(raw.data(), raw.size(), "voxel data");

  std::vector<double> data;
  switch (header.datatype) {
    case kDtInt16:
      data = decode<std::int16_t>(raw, count, swapped, header.scl_slope,
                                  header.scl_inter);
      break;
    case kDtUint16:
      data = decode<std::uint16_t>(raw, count, swapped, header.scl_slope,
                                   header.scl_inter);
      break;
    case kDtFloat32:
      data = decode<float>(raw, count, swapped, header.scl_slope,
                           header.scl_inter);
      break;
    default:
      data = decode<double>(raw, count, swapped, header.scl_slope,
                            header.scl_inter);
      break;
  }

  Spacing spacing;
  if (header.pixdim[1] > 0) spacing.dx = header.pixdim[1];
  if (header.pixdim[2] > 0) spacing.dy = header.pixdim[2];
  if (header.pixdim[3] > 0) spacing.dz = header.pixdim[3];
  return Volume4D(dims, spacing, std::move(data));
}

void write_nifti(const Volume4D& vol, const std::string& path) {
  NiftiHeader header;
  std::memset(&header, 0, sizeof header);
  header.sizeof_hdr = 348;
  header.regular = 'r';
  const Dim4& d = vol.dims();
  header.dim[0] = d.n == 1 ? 3 : 4;
  header.dim[1] = static_cast<std::int16_t>(d.l);
  header.dim[2] = static_cast<std::int16_t>(d.w);
  header.dim[3] = static_cast<std::int16_t>(d.h);
  header.dim[4] = static_cast<std::int16_t>(d.n);
  for (int i = header.dim[0] + 1; i < 8; ++i) header.dim[i] = 1;
  header.datatype = kDtFloat32;
  header.bitpix = 32;
  header.pixdim[0] = 1.0f;
  header.pixdim[1] = static_cast<float>(vol.spacing().dx);
  header.pixdim[2] = static_cast<float>(vol.spacing().dy);
  header.pixdim[3] = static_cast<float>(vol.spacing().dz);
  for (int i = 4; i < 8; ++i) header.pixdim[i] = 1.0f;
  header.vox_offset = 352.0f;
  header.scl_slope = 0.0f;
  header.xyzt_units = 2;  // millimetres
  std::memcpy(header.magic, "n+1", 4);

  if (static_cast<std::int16_t>(d.l) != static_cast<long long>(d.l) ||
      static_cast<std::int16_t>(d.w) != static_cast<long long>(d.w) ||
      static_cast<std::int16_t>(d.h) != static_cast<long long>(d.h) ||
      static_cast<std::int16_t>(d.n) != static_cast<long long>(d.n))
    throw Error(ErrorCode::bad_dimensions,
                path + ": dimensions exceed the NIfTI-1 16-bit limit");

  std::vector<float> floats(vol.size());
  const auto src = vol.data();
  for (std::size_t i = 0; i < floats.size(); ++i)
    floats[i] = static_cast<float>(src[i]);

  const char extender[4] = {0, 0, 0, 0};
  if (ends_with(path, ".gz")) {
    gzFile out = gzopen(path.c_str(), "wb");
    if (out == nullptr)
      throw Error(ErrorCode::io_write, "cannot write: " + path);
    bool ok = gzwrite(out, &header, sizeof header) ==
                  static_cast<int>(sizeof header) &&
              gzwrite(out, extender, 4) == 4;
    const std::size_t bytes = floats.size() * sizeof(float);
    ok = ok && gzwrite(out, floats.data(), static_cast<unsigned>(bytes)) ==
                   static_cast<int>(bytes);
    ok = gzclose(out) == Z_OK && ok;
    if (!ok) throw Error(ErrorCode::io_write, "failed writing: " + path);
  } else {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::io_write, "cannot write: " + path);
    out.write(reinterpret_cast<const char*>(&header), sizeof header);
    out.write(extender, 4);
    out.write(reinterpret_cast<const char*>(floats.data()),
              static_cast<std::streamsize>(floats.size() * sizeof(float)));
    out.flush();
    if (!out) throw Error(ErrorCode::io_write, "failed writing: " + path);
  }
}

Volume4D read_raw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_open, path);

  unsigned char header[kRawHeaderSize];
  in.read(reinterpret_cast<char*>(header), sizeof header);
  if (in.gcount() != static_cast<std::streamsize>(sizeof header))
    throw Error(ErrorCode::io_truncated, path + ": truncated raw header");
  if (std::memcmp(header, kRawMagic, sizeof kRawMagic) != 0)
    throw Error(ErrorCode::io_magic, path + ": bad raw magic");

  const unsigned char* p = header + sizeof kRawMagic;
  Dim4 dims{read_u32le(p), read_u32le(p + 4), read_u32le(p + 8),
            read_u32le(p + 12)};
  const std::uint64_t count = static_cast<std::uint64_t>(dims.l) * dims.w *
                              dims.h * static_cast<std::uint64_t>(dims.n);
  if (dims.l > 0xFFFF || dims.w > 0xFFFF || dims.h > 0xFFFF ||
      dims.n > 0xFFFF || count > (std::uint64_t{1} << 32))
    throw Error(ErrorCode::bad_dimensions,
                path + ": implausible dimensions in raw header");
  const std::uint32_t dtype = read_u32le(p + 16);
  Spacing spacing{read_f32le(p + 20), read_f32le(p + 24), read_f32le(p + 28)};

  std::size_t elem_size;
  if (dtype == static_cast<std::uint32_t>(RawDtype::f32))
    elem_size = 4;
  else if (dtype == static_cast<std::uint32_t>(RawDtype::f64))
    elem_size = 8;
  else
    throw Error(ErrorCode::io_unsupported,
                path + ": unknown raw dtype code " + std::to_string(dtype));

  const std::size_t expected = dims.size() * elem_size;
  std::vector<unsigned char> blob(expected);
  in.read(reinterpret_cast<char*>(blob.data()),
          static_cast<std::streamsize>(expected));
  const std::size_t got = static_cast<std::size_t>(in.gcount());
  if (got != expected) {
    std::ostringstream msg;
    msg << path << ": truncated raw blob (expected " << expected
        << " bytes, got " << got << ")";
    throw Error(ErrorCode::io_truncated, msg.str());
  }

  std::vector<double> data(dims.size());
  if (elem_size == 4) {
    for (std::size_t i = 0; i < data.size(); ++i)
      data[i] = static_cast<double>(read_f32le(blob.data() + i * 4));
  } else {
    for (std::size_t i = 0; i < data.size(); ++i) {
      const std::uint64_t bits = read_u64le(blob.data() + i * 8);
      double v;
      std::memcpy(&v, &bits, 8);
      data[i] = v;
    }
  }
  return Volume4D(dims, spacing, std::move(data));
}

void write_raw(const Volume4D& vol, const std::string& path, RawDtype dtype) {
  std::vector<unsigned char> buf;
  buf.reserve(kRawHeaderSize + vol.size() * 8);
  buf.insert(buf.end(), kRawMagic, kRawMagic + sizeof kRawMagic);
  append_u32le(buf, static_cast<std::uint32_t>(vol.dims().l));
  append_u32le(buf, static_cast<std::uint32_t>(vol.dims().w));
  append_u32le(buf, static_cast<std::uint32_t>(vol.dims().h));
  append_u32le(buf, static_cast<std::uint32_t>(vol.dims().n));
  append_u32le(buf, static_cast<std::uint32_t>(dtype));
  append_f32le(buf, static_cast<float>(vol.spacing().dx));
  append_f32le(buf, static_cast<float>(vol.spacing().dy));
  append_f32le(buf, static_cast<float>(vol.spacing().dz));
  for (double v : vol.data()) {
    if (dtype == RawDtype::f32) {
      append_f32le(buf, static_cast<float>(v));
    } else {
      std::uint64_t bits;
      std::memcpy(&bits, &v, 8);
      append_u64le(buf, bits);
    }
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_write, "cannot write: " + path);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
  out.flush();
  if (!out) throw Error(ErrorCode::io_write, "failed writing: " + path);
}

Volume4D read_volume(const std::string& path) {
  if (ends_with(path, ".raw")) return read_raw(path);
  return read_nifti(path);
}

void write_volume(const Volume4D& vol, const std::string& path) {
  if (ends_with(path, ".raw"))
    write_raw(vol, path);
  else if (ends_with(path, ".nii") || ends_with(path, ".nii.gz"))
    write_nifti(vol, path);
  else
    throw Error(ErrorCode::io_unsupported,
                path + ": unsupported extension (expected .nii, .nii.gz, or .raw)");
}

std::vector<std::vector<double>> read_numeric_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_open, path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(line);
    std::vector<double> row;
    std::string token;
    while (fields >> token) {
      try {
        std::size_t used = 0;
        const double v = std::stod(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
        row.push_back(v);
      } catch (const std::exception&) {
        throw Error(ErrorCode::bad_config,
                    path + ":" + std::to_string(lineno) +
                        ": not a number: '" + token + "'");
      }
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  return rows;
}

void atomic_write(const std::string& path,
                  const std::function<void(const std::string&)>& write) {
  // Prefix rather than suffix the marker so the temporary keeps the real
  // extension (writers dispatch on it).
  const std::filesystem::path p(path);
  const std::string tmp =
      (p.parent_path() / (".tmp-" + p.filename().string())).string();
  try {
    write(tmp);
    std::filesystem::rename(tmp, path);
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove(tmp, ec);
    throw;
  }
}

}  // namespace p2s
