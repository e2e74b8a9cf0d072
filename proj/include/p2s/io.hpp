#ifndef P2S_IO_HPP
#define P2S_IO_HPP

#include <functional>
#include <string>
#include <vector>

#include "p2s/volume.hpp"

namespace p2s {

// NIfTI-1 subset: single-file .nii / .nii.gz, dtypes int16/uint16/
// float32/float64, 3D or 4D, scl_slope/scl_inter honored. No .hdr/.img
// pairs, no header extensions, no orientation handling.
Volume4D read_nifti(const std::string& path);

// Always emits uncompressed-layout float32 with vox_offset 352; gzip
// compression is chosen by a .gz suffix.
void write_nifti(const Volume4D& vol, const std::string& path);

// Raw container: magic "P2SRAW1", dims as 4 little-endian u32, a u32
// dtype code (1 = float32, 2 = float64), spacing as 3 little-endian f32,
// then the data blob in canonical index order.
enum class RawDtype : std::uint32_t { f32 = 1, f64 = 2 };

Volume4D read_raw(const std::string& path);
void write_raw(const Volume4D& vol, const std::string& path,
               RawDtype dtype = RawDtype::f64);

// Dispatches on extension: .nii/.nii.gz or .raw.
Volume4D read_volume(const std::string& path);
void write_volume(const Volume4D& vol, const std::string& path);

// Whitespace-separated table of numbers (bval/bvec style), one row per
// non-empty line.
std::vector<std::vector<double>> read_numeric_table(const std::string& path);

// Runs `write` against a temporary sibling path (same extension), then
// renames it over `path`, so failures never leave a partial file behind.
void atomic_write(const std::string& path,
                  const std::function<void(const std::string&)>& write);

}  // namespace p2s

#endif
