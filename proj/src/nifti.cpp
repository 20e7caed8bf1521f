#include "tseg/nifti.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <vector>

namespace tseg {
namespace {

#pragma pack(push, 1)
struct Nifti1Header {
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
    float slice_duration, toffset;
    std::int32_t glmax, glmin;
    char descrip[80];
    char aux_file[24];
    std::int16_t qform_code;
    std::int16_t sform_code;
    float quatern_b, quatern_c, quatern_d;
    float qoffset_x, qoffset_y, qoffset_z;
    float srow_x[4];
    float srow_y[4];
    float srow_z[4];
    char intent_name[16];
    char magic[4];
};
#pragma pack(pop)
static_assert(sizeof(Nifti1Header) == 348, "NIfTI-1 header must be 348 bytes");

constexpr std::int16_t NIFTI_UINT8 = 2;
constexpr std::int16_t NIFTI_INT16 = 4;
constexpr std::int16_t NIFTI_FLOAT32 = 16;

struct GzFile {
    gzFile f = nullptr;
    ~GzFile() {
        if (f) gzclose(f);
    }
};

[[noreturn]] void fail(const std::string& path, const std::string& cause) {
    throw NiftiError("nifti: " + path + ": " + cause);
}

bool ends_with(const std::string& s, const std::string& suf) {
    return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

// Affine 3x3 part -> spacing, direction; rejects zero columns and shear.
void decode_affine(const std::string& path, const double m[3][3], Geometry& g) {
    for (int c = 0; c < 3; ++c) {
        double norm = std::sqrt(m[0][c] * m[0][c] + m[1][c] * m[1][c] + m[2][c] * m[2][c]);
        if (norm < 1e-12) fail(path, "non-invertible affine (zero column)");
        g.spacing[c] = norm;
        for (int r = 0; r < 3; ++r) g.direction[r][c] = m[r][c] / norm;
    }
    try {
        g.validate();
    } catch (const std::exception& e) {
        fail(path, std::string("bad affine: ") + e.what());
    }
}

}  // namespace

Volume read_volume(const std::string& path) {
    GzFile gf;
    gf.f = gzopen(path.c_str(), "rb");
    if (!gf.f) fail(path, "cannot open for reading");

    Nifti1Header h{};
    if (gzread(gf.f, &h, sizeof(h)) != static_cast<int>(sizeof(h)))
        fail(path, "truncated header");
    if (h.sizeof_hdr != 348) fail(path, "not a little-endian NIfTI-1 file");
    if (std::strncmp(h.magic, "n+1", 3) != 0) fail(path, "unsupported magic (expect single-file n+1)");
    if (h.dim[0] < 3 || h.dim[0] > 4) fail(path, "unsupported dimensionality " + std::to_string(h.dim[0]));
    if (h.dim[0] == 4 && h.dim[4] > 1) fail(path, "4D volumes not supported");

    Volume v;
    v.geom.dims = {h.dim[1], h.dim[2], h.dim[3]};
    if (v.geom.dims[0] <= 0 || v.geom.dims[1] <= 0 || v.geom.dims[2] <= 0)
        fail(path, "non-positive dims");

    if (h.sform_code > 0) {
        double m[3][3] = {{h.srow_x[0], h.srow_x[1], h.srow_x[2]},
                          {h.srow_y[0], h.srow_y[1], h.srow_y[2]},
                          {h.srow_z[0], h.srow_z[1], h.srow_z[2]}};
        decode_affine(path, m, v.geom);
        v.geom.origin = {h.srow_x[3], h.srow_y[3], h.srow_z[3]};
    } else if (h.qform_code > 0) {
        double b = h.quatern_b, c = h.quatern_c, d = h.quatern_d;
        double a2 = 1.0 - b * b - c * c - d * d;
        double a = a2 > 0 ? std::sqrt(a2) : 0.0;
        double qfac = (h.pixdim[0] < 0) ? -1.0 : 1.0;
        double R[3][3] = {
            {a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)},
            {2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b)},
            {2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - b * b - c * c}};
        double m[3][3];
        for (int r = 0; r < 3; ++r)
            for (int col = 0; col < 3; ++col)
                m[r][col] = R[r][col] * h.pixdim[col + 1] * (col == 2 ? qfac : 1.0);
        decode_affine(path, m, v.geom);
        v.geom.origin = {h.qoffset_x, h.qoffset_y, h.qoffset_z};
    } else {
        for (int i = 0; i < 3; ++i) {
            if (!(h.pixdim[i + 1] > 0)) fail(path, "non-positive pixdim");
            v.geom.spacing[i] = h.pixdim[i + 1];
        }
    }

    const std::size_t n = v.geom.voxel_count();
    v.data.resize(n);

    long offset = static_cast<long>(h.vox_offset);
    if (offset < static_cast<long>(sizeof(h))) fail(path, "bad vox_offset");
    std::vector<char> skip(offset - sizeof(h));
    if (!skip.empty() && gzread(gf.f, skip.data(), skip.size()) != static_cast<int>(skip.size()))
        fail(path, "truncated extension area");

    auto read_exact = [&](void* dst, std::size_t bytes) {
        if (gzread(gf.f, dst, static_cast<unsigned>(bytes)) != static_cast<int>(bytes))
            fail(path, "truncated voxel data");
    };

    switch (h.datatype) {
        case NIFTI_UINT8: {
            v.dtype = DType::UInt8;
            std::vector<std::uint8_t> buf(n);
            read_exact(buf.data(), n);
            for (std::size_t i = 0; i < n; ++i) v.data[i] = buf[i];
            break;
        }
        case NIFTI_INT16: {
            v.dtype = DType::Int16;
            std::vector<std::int16_t> buf(n);
            read_exact(buf.data(), n * 2);
            for (std::size_t i = 0; i < n; ++i) v.data[i] = buf[i];
            break;
        }
        case NIFTI_FLOAT32: {
            v.dtype = DType::Float32;
            read_exact(v.data.data(), n * 4);
            break;
        }
        default:
            fail(path, "unsupported datatype code " + std::to_string(h.datatype));
    }

    if (h.scl_slope != 0.0f && !(h.scl_slope == 1.0f && h.scl_inter == 0.0f)) {
        for (float& x : v.data) x = h.scl_slope * x + h.scl_inter;
        v.dtype = DType::Float32;
    }
    return v;
}

void write_volume(const Volume& v, const std::string& path) {
    v.validate();

    Nifti1Header h{};
    h.sizeof_hdr = 348;
    h.regular = 'r';
    h.dim[0] = 3;
    h.dim[1] = static_cast<std::int16_t>(v.geom.dims[0]);
    h.dim[2] = static_cast<std::int16_t>(v.geom.dims[1]);
    h.dim[3] = static_cast<std::int16_t>(v.geom.dims[2]);
    for (int i = 4; i < 8; ++i) h.dim[i] = 1;
    h.pixdim[0] = 1.0f;
    for (int i = 0; i < 3; ++i) h.pixdim[i + 1] = static_cast<float>(v.geom.spacing[i]);
    h.vox_offset = 352.0f;
    h.scl_slope = 1.0f;
    h.xyzt_units = 2;  // mm
    h.sform_code = 1;
    h.qform_code = 0;
    float* rows[3] = {h.srow_x, h.srow_y, h.srow_z};
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c)
            rows[r][c] = static_cast<float>(v.geom.direction[r][c] * v.geom.spacing[c]);
        rows[r][3] = static_cast<float>(v.geom.origin[r]);
    }
    std::memcpy(h.magic, "n+1", 4);

    const std::size_t n = v.geom.voxel_count();
    std::vector<char> payload;
    switch (v.dtype) {
        case DType::UInt8: {
            h.datatype = NIFTI_UINT8;
            h.bitpix = 8;
            payload.resize(n);
            for (std::size_t i = 0; i < n; ++i)
                payload[i] = static_cast<char>(static_cast<std::uint8_t>(v.data[i]));
            break;
        }
        case DType::Int16: {
            h.datatype = NIFTI_INT16;
            h.bitpix = 16;
            payload.resize(n * 2);
            auto* p = reinterpret_cast<std::int16_t*>(payload.data());
            for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<std::int16_t>(v.data[i]);
            break;
        }
        case DType::Float32: {
            h.datatype = NIFTI_FLOAT32;
            h.bitpix = 32;
            payload.resize(n * 4);
            std::memcpy(payload.data(), v.data.data(), payload.size());
            break;
        }
    }

    // gzip wrapper only for .gz paths; "T" writes transparently.
    const char* mode = ends_with(path, ".gz") ? "wb" : "wbT";
    GzFile gf;
    gf.f = gzopen(path.c_str(), mode);
    if (!gf.f) fail(path, "cannot open for writing");

    char pad[4] = {0, 0, 0, 0};
    if (gzwrite(gf.f, &h, sizeof(h)) != static_cast<int>(sizeof(h)) ||
        gzwrite(gf.f, pad, 4) != 4 ||
        gzwrite(gf.f, payload.data(), static_cast<unsigned>(payload.size())) !=
            static_cast<int>(payload.size()))
        fail(path, "write failure");
}

LabelVolume read_label_volume(const std::string& path, const LabelAlphabet& alphabet) {
    return volume_to_label(read_volume(path), alphabet);
}

void write_label_volume(const LabelVolume& lv, const std::string& path) {
    write_volume(label_to_volume(lv, DType::Int16), path);
}

}  // namespace tseg
