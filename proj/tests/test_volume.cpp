#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "tseg/nifti.hpp"
#include "tseg/resample.hpp"

using namespace tseg;

namespace {

std::string tmp_path(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "tseg_tests";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

Volume random_volume(std::mt19937& rng, DType dtype, Index3 dims, Vec3 spacing = {1, 1, 1}) {
    Geometry g;
    g.dims = dims;
    g.spacing = spacing;
    Volume v(g, dtype);
    std::uniform_real_distribution<float> uf(-100.f, 100.f);
    std::uniform_int_distribution<int> ui8(0, 255);
    std::uniform_int_distribution<int> ui16(-32000, 32000);
    for (auto& x : v.data) {
        switch (dtype) {
            case DType::UInt8: x = float(ui8(rng)); break;
            case DType::Int16: x = float(ui16(rng)); break;
            case DType::Float32: x = uf(rng); break;
        }
    }
    return v;
}

}  // namespace

TEST_CASE("nifti round-trip: zero uint8 volume") {
    Geometry g = oracle::make_geom(4, 4, 4);
    Volume v(g, DType::UInt8);
    auto p = tmp_path("zeros.nii");
    write_volume(v, p);
    Volume r = read_volume(p);
    CHECK(r.geom.dims == g.dims);
    CHECK(r.dtype == DType::UInt8);
    CHECK(r.data == std::vector<float>(64, 0.0f));
}

TEST_CASE("nifti round-trip: random payloads, all dtypes, .nii and .nii.gz") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        for (DType t : {DType::UInt8, DType::Int16, DType::Float32}) {
            Volume v = random_volume(rng, t, {5, 6, 7}, {0.5, 0.5, 2.0});
            for (const char* ext : {".nii", ".nii.gz"}) {
                auto p = tmp_path("rt" + std::to_string(trial) + dtype_name(t) + ext);
                write_volume(v, p);
                Volume r = read_volume(p);
                CHECK(r.dtype == v.dtype);
                CHECK(r.data == v.data);  // bit-identical
                for (int i = 0; i < 3; ++i)
                    CHECK(r.geom.spacing[i] == doctest::Approx(v.geom.spacing[i]).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("nifti: label volume round-trip") {
    Geometry g = oracle::make_geom(2, 2, 2);
    LabelVolume lv(g, {{1, "A"}, {2, "B"}});
    lv.data = {0, 1, 2, 0, 1, 1, 2, 0};
    auto p = tmp_path("labels.nii.gz");
    write_label_volume(lv, p);
    LabelVolume r = read_label_volume(p, lv.alphabet);
    CHECK(r.data == lv.data);
}

TEST_CASE("nifti: zero affine column rejected") {
    Geometry g = oracle::make_geom(3, 3, 3);
    Volume v(g, DType::Float32);
    auto p = tmp_path("degenerate.nii");
    write_volume(v, p);
    // corrupt the sform: zero out srow_x
    FILE* f = std::fopen(p.c_str(), "r+b");
    REQUIRE(f);
    float zeros[4] = {0, 0, 0, 0};
    std::fseek(f, 280, SEEK_SET);  // srow_x offset in the NIfTI-1 header
    std::fwrite(zeros, sizeof(float), 4, f);
    std::fclose(f);
    CHECK_THROWS_WITH_AS(read_volume(p), doctest::Contains("non-invertible affine"), NiftiError);
}

TEST_CASE("nifti: unreadable path and truncated file") {
    CHECK_THROWS_AS(read_volume(tmp_path("does_not_exist.nii")), NiftiError);
    auto p = tmp_path("trunc.nii");
    FILE* f = std::fopen(p.c_str(), "wb");
    std::fputs("short", f);
    std::fclose(f);
    CHECK_THROWS_AS(read_volume(p), NiftiError);
}

TEST_CASE("resample: identity when target equals isotropic spacing") {
    std::mt19937 rng(11);
    Volume v = random_volume(rng, DType::Float32, {6, 6, 6}, {1, 1, 1});
    Volume r = resample_isotropic(v, 1.0, Interp::Trilinear);
    CHECK(r.geom.dims == v.geom.dims);
    CHECK(r.data == v.data);
}

TEST_CASE("resample: dims follow the rounding formula") {
    std::mt19937 rng(12);
    Volume v = random_volume(rng, DType::Float32, {10, 10, 10}, {2, 2, 2});
    Volume r = resample_isotropic(v, 1.0, Interp::Trilinear);
    CHECK(r.geom.dims == Index3{20, 20, 20});
    CHECK(r.geom.spacing == Vec3{1.0, 1.0, 1.0});
}

TEST_CASE("resample: trilinear midpoint of a ramp is the average") {
    Geometry g = oracle::make_geom(2, 1, 1);
    Volume v(g, DType::Float32);
    v.data = {0.f, 10.f};
    // target 0.5 puts an output sample at continuous index 0.5 along x
    Volume r = resample_isotropic(v, 0.5, Interp::Trilinear);
    REQUIRE(r.geom.dims[0] == 4);
    CHECK(r.at(1, 0, 0) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("resample: trilinear output bounded by input range, nearest preserves labels") {
    std::mt19937 rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        Volume v = random_volume(rng, DType::Float32, {5, 4, 6}, {1.3, 0.8, 2.1});
        float lo = *std::min_element(v.data.begin(), v.data.end());
        float hi = *std::max_element(v.data.begin(), v.data.end());
        Volume r = resample_isotropic(v, 1.0, Interp::Trilinear);
        for (float x : r.data) {
            CHECK(x >= lo - 1e-4f);
            CHECK(x <= hi + 1e-4f);
        }
        Volume vi = random_volume(rng, DType::UInt8, {5, 4, 6}, {1.3, 0.8, 2.1});
        for (auto& x : vi.data) x = float(int(x) % 4);
        Volume ri = resample_isotropic(vi, 0.7, Interp::Nearest);
        for (float x : ri.data) CHECK((x == 0 || x == 1 || x == 2 || x == 3));
    }
}

TEST_CASE("resample: parallel kernel matches serial reference") {
    std::mt19937 rng(14);
    Volume v = random_volume(rng, DType::Float32, {9, 7, 8}, {1.5, 0.9, 1.1});
    Volume a = resample_isotropic(v, 1.0, Interp::Trilinear);
    Volume b = detail::resample_isotropic_serial(v, 1.0, Interp::Trilinear);
    CHECK(a.data == b.data);
}

TEST_CASE("resample: non-positive target rejected") {
    Geometry g = oracle::make_geom(3, 3, 3);
    Volume v(g, DType::Float32);
    CHECK_THROWS_AS(resample_isotropic(v, 0.0, Interp::Trilinear), std::invalid_argument);
}

TEST_CASE("geometry: shear rejected, spacing validated") {
    Geometry g = oracle::make_geom(2, 2, 2);
    g.direction[0][1] = 0.1;  // shear
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    Geometry g2 = oracle::make_geom(2, 2, 2, 1.0, -1.0, 1.0);
    CHECK_THROWS_AS(g2.validate(), std::invalid_argument);
}
