#pragma once
/// @file volume.hpp
/// 3-d scalar volumes and their on-disk formats.
///
/// Native format (.hinv): magic "HINV", then u32 little-endian slices, rows,
/// cols, then float32 little-endian voxels in slice-major row-major order.
/// Medical volumes (.nii / .nii.gz) are read through the standard
/// single-file layout with the common scalar datatypes.

#include <cstdint>
#include <string>
#include <vector>

#include "hinet/tensor.hpp"

namespace hinet {

struct Volume {
    int slices = 0, rows = 0, cols = 0;
    std::vector<float> data;  // slice-major, then row-major

    Volume() = default;
    Volume(int s, int r, int c)
        : slices(s), rows(r), cols(c),
          data(static_cast<size_t>(s) * r * c, 0.0f) {}

    int64_t size() const { return static_cast<int64_t>(slices) * rows * cols; }
    float& at(int s, int r, int c) {
        return data[(static_cast<int64_t>(s) * rows + r) * cols + c];
    }
    float at(int s, int r, int c) const {
        return data[(static_cast<int64_t>(s) * rows + r) * cols + c];
    }
};

/// Dispatches on extension: .hinv, .nii, .nii.gz.
Volume load_volume(const std::string& path);
/// Writes the format matching the extension.
void save_volume(const std::string& path, const Volume& v);

Volume load_volume_hinv(const std::string& path);
void save_volume_hinv(const std::string& path, const Volume& v);
Volume load_volume_nifti(const std::string& path);
void save_volume_nifti(const std::string& path, const Volume& v);

/// Affine intensity map to [-1, 1] over the whole volume:
/// out = 2 * (v - min) / (max - min) - 1.  A constant volume maps to zeros.
/// The extremes land exactly on -1 and +1.
Volume normalize_volume(const Volume& v);

/// One slice as a (rows, cols) tensor.
Tensor volume_slice(const Volume& v, int slice);

}  // namespace hinet
