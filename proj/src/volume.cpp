#include "hinet/volume.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>

namespace hinet {

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void check_voxels_finite(const Volume& v, const std::string& path) {
    for (float x : v.data)
        HINET_CHECK(std::isfinite(x), DataError, "non-finite voxel value in ", path);
}

// The 348-byte single-file header.  Only the fields we read are named.
#pragma pack(push, 1)
struct NiftiHeader {
    int32_t sizeof_hdr;
    char unused1[36];
    int16_t dim[8];
    char unused2[14];
    int16_t datatype;
    int16_t bitpix;
    int16_t slice_start;
    float pixdim[8];
    float vox_offset;
    float scl_slope;
    float scl_inter;
    char unused3[224];
    char magic[4];
};
#pragma pack(pop)
static_assert(sizeof(NiftiHeader) == 348, "nifti header layout");

class GzReader {
public:
    explicit GzReader(const std::string& path) : path_(path), f_(gzopen(path.c_str(), "rb")) {
        HINET_CHECK(f_ != nullptr, DataError, "cannot open volume: ", path);
    }
    ~GzReader() {
        if (f_) gzclose(f_);
    }
    void read_exact(void* dst, size_t bytes) {
        const int got = gzread(f_, dst, static_cast<unsigned>(bytes));
        HINET_CHECK(got == static_cast<int>(bytes), DataError, "truncated volume file: ", path_);
    }
    void skip(size_t bytes) {
        std::vector<char> sink(4096);
        while (bytes > 0) {
            const size_t chunk = bytes < sink.size() ? bytes : sink.size();
            read_exact(sink.data(), chunk);
            bytes -= chunk;
        }
    }

private:
    std::string path_;
    gzFile f_;
};

template <typename T>
void convert_voxels(GzReader& r, Volume& vol, double slope, double inter) {
    std::vector<T> raw(static_cast<size_t>(vol.size()));
    r.read_exact(raw.data(), raw.size() * sizeof(T));
    for (size_t i = 0; i < raw.size(); ++i)
        vol.data[i] = static_cast<float>(slope * static_cast<double>(raw[i]) + inter);
}

}  // namespace

Volume load_volume_nifti(const std::string& path) {
    GzReader r(path);
    NiftiHeader h{};
    r.read_exact(&h, sizeof(h));
    HINET_CHECK(h.sizeof_hdr == 348, DataError,
                "bad volume header: sizeof_hdr = ", h.sizeof_hdr,
                " (expected 348; byte-swapped files are not supported): ", path);
    HINET_CHECK(std::memcmp(h.magic, "n+1", 4) == 0 || std::memcmp(h.magic, "ni1", 4) == 0,
                DataError, "bad volume header magic: ", path);
    HINET_CHECK(std::memcmp(h.magic, "n+1", 4) == 0, DataError,
                "two-file volumes (.hdr/.img) are not supported: ", path);
    const int nd = h.dim[0];
    HINET_CHECK(nd == 3 || (nd == 4 && h.dim[4] == 1), DataError,
                "expected a 3-d volume, got dim[0] = ", nd, " in ", path);
    const int nx = h.dim[1], ny = h.dim[2], nz = h.dim[3];
    HINET_CHECK(nx > 0 && ny > 0 && nz > 0, DataError, "bad volume dims ", nx, "x", ny, "x", nz,
                " in ", path);
    HINET_CHECK(h.vox_offset >= 348.0f, DataError, "bad vox_offset ", h.vox_offset, " in ", path);
    r.skip(static_cast<size_t>(h.vox_offset) - sizeof(h));

    // NIfTI stores x fastest; mapping x->col, y->row, z->slice keeps the raw
    // order identical to our slice-major layout.
    Volume vol(nz, ny, nx);
    const double slope = (h.scl_slope == 0.0f) ? 1.0 : static_cast<double>(h.scl_slope);
    const double inter = (h.scl_slope == 0.0f) ? 0.0 : static_cast<double>(h.scl_inter);
    switch (h.datatype) {
        case 2: convert_voxels<uint8_t>(r, vol, slope, inter); break;
        case 4: convert_voxels<int16_t>(r, vol, slope, inter); break;
        case 8: convert_voxels<int32_t>(r, vol, slope, inter); break;
        case 16: convert_voxels<float>(r, vol, slope, inter); break;
        case 64: convert_voxels<double>(r, vol, slope, inter); break;
        case 512: convert_voxels<uint16_t>(r, vol, slope, inter); break;
        default:
            fail<DataError>("unsupported volume datatype code ", h.datatype, " in ", path);
    }
    check_voxels_finite(vol, path);
    return vol;
}

void save_volume_nifti(const std::string& path, const Volume& v) {
    NiftiHeader h{};
    h.sizeof_hdr = 348;
    h.dim[0] = 3;
    h.dim[1] = static_cast<int16_t>(v.cols);
    h.dim[2] = static_cast<int16_t>(v.rows);
    h.dim[3] = static_cast<int16_t>(v.slices);
    h.dim[4] = h.dim[5] = h.dim[6] = h.dim[7] = 1;
    h.datatype = 16;  // float32
    h.bitpix = 32;
    for (int i = 0; i < 8; ++i) h.pixdim[i] = 1.0f;
    h.vox_offset = 352.0f;
    h.scl_slope = 1.0f;
    h.scl_inter = 0.0f;
    std::memcpy(h.magic, "n+1", 4);

    const char pad[4] = {0, 0, 0, 0};
    if (ends_with(path, ".gz")) {
        gzFile f = gzopen(path.c_str(), "wb");
        HINET_CHECK(f != nullptr, IoError, "cannot open for writing: ", path);
        bool ok = gzwrite(f, &h, sizeof(h)) == sizeof(h) && gzwrite(f, pad, 4) == 4 &&
                  gzwrite(f, v.data.data(),
                          static_cast<unsigned>(v.data.size() * sizeof(float))) ==
                      static_cast<int>(v.data.size() * sizeof(float));
        gzclose(f);
        HINET_CHECK(ok, IoError, "short write: ", path);
    } else {
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        HINET_CHECK(os.good(), IoError, "cannot open for writing: ", path);
        os.write(reinterpret_cast<const char*>(&h), sizeof(h));
        os.write(pad, 4);
        os.write(reinterpret_cast<const char*>(v.data.data()),
                 static_cast<std::streamsize>(v.data.size() * sizeof(float)));
        HINET_CHECK(os.good(), IoError, "short write: ", path);
    }
}

Volume load_volume_hinv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    HINET_CHECK(is.good(), DataError, "cannot open volume: ", path);
    char magic[4];
    uint32_t dims[3];
    is.read(magic, 4);
    is.read(reinterpret_cast<char*>(dims), sizeof(dims));
    HINET_CHECK(is.good() && std::memcmp(magic, "HINV", 4) == 0, DataError,
                "not a HINV volume (bad magic): ", path);
    HINET_CHECK(dims[0] > 0 && dims[1] > 0 && dims[2] > 0 && dims[0] < (1u << 16) &&
                    dims[1] < (1u << 16) && dims[2] < (1u << 16),
                DataError, "bad HINV dims in ", path);
    Volume v(static_cast<int>(dims[0]), static_cast<int>(dims[1]), static_cast<int>(dims[2]));
    is.read(reinterpret_cast<char*>(v.data.data()),
            static_cast<std::streamsize>(v.data.size() * sizeof(float)));
    HINET_CHECK(is.gcount() == static_cast<std::streamsize>(v.data.size() * sizeof(float)),
                DataError, "truncated HINV volume: ", path);
    check_voxels_finite(v, path);
    return v;
}

void save_volume_hinv(const std::string& path, const Volume& v) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    HINET_CHECK(os.good(), IoError, "cannot open for writing: ", path);
    const uint32_t dims[3] = {static_cast<uint32_t>(v.slices), static_cast<uint32_t>(v.rows),
                              static_cast<uint32_t>(v.cols)};
    os.write("HINV", 4);
    os.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    os.write(reinterpret_cast<const char*>(v.data.data()),
             static_cast<std::streamsize>(v.data.size() * sizeof(float)));
    HINET_CHECK(os.good(), IoError, "short write: ", path);
}

Volume load_volume(const std::string& path) {
    if (ends_with(path, ".hinv")) return load_volume_hinv(path);
    if (ends_with(path, ".nii") || ends_with(path, ".nii.gz")) return load_volume_nifti(path);
    fail<DataError>("unrecognized volume extension (want .hinv, .nii, or .nii.gz): ", path);
}

void save_volume(const std::string& path, const Volume& v) {
    if (ends_with(path, ".hinv")) return save_volume_hinv(path, v);
    if (ends_with(path, ".nii") || ends_with(path, ".nii.gz")) return save_volume_nifti(path, v);
    fail<DataError>("unrecognized volume extension (want .hinv, .nii, or .nii.gz): ", path);
}

Volume normalize_volume(const Volume& v) {
    HINET_CHECK(v.size() > 0, DataError, "cannot normalize an empty volume");
    float lo = v.data[0], hi = v.data[0];
    for (float x : v.data) {
        lo = x < lo ? x : lo;
        hi = x > hi ? x : hi;
    }
    Volume out(v.slices, v.rows, v.cols);
    if (hi == lo) return out;  // constant volume: all zeros
    const float range = hi - lo;
    for (size_t i = 0; i < v.data.size(); ++i)
        out.data[i] = 2.0f * ((v.data[i] - lo) / range) - 1.0f;
    return out;
}

Tensor volume_slice(const Volume& v, int slice) {
    HINET_CHECK(slice >= 0 && slice < v.slices, DimensionError, "slice ", slice,
                " out of range [0, ", v.slices, ")");
    Tensor t({v.rows, v.cols});
    std::memcpy(t.data(), v.data.data() + static_cast<int64_t>(slice) * v.rows * v.cols,
                sizeof(float) * static_cast<size_t>(v.rows) * v.cols);
    return t;
}

}  // namespace hinet
