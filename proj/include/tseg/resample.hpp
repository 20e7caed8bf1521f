#ifndef TSEG_RESAMPLE_HPP
#define TSEG_RESAMPLE_HPP

#include "tseg/volume.hpp"

namespace tseg {

enum class Interp { Trilinear, Nearest };

/// Resample onto an isotropic grid of `target` mm spacing.
/// Output dims_i = max(1, round(dims_i * spacing_i / target)); origin and
/// direction are kept; out-of-bounds samples clamp to the border value.
Volume resample_isotropic(const Volume& v, double target, Interp mode);
LabelVolume resample_isotropic(const LabelVolume& lv, double target);
Mask resample_isotropic(const Mask& m, double target);

namespace detail {
// Serial reference for the parallel kernel; kept for tests and benchmarks.
Volume resample_isotropic_serial(const Volume& v, double target, Interp mode);
}

}  // namespace tseg

#endif
