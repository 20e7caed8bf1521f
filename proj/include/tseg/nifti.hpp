#ifndef TSEG_NIFTI_HPP
#define TSEG_NIFTI_HPP

#include <string>

#include "tseg/volume.hpp"

namespace tseg {

/// NIfTI-1 single-file (.nii / .nii.gz) I/O, little-endian,
/// dtypes uint8 / int16 / float32, sform preferred over qform.

Volume read_volume(const std::string& path);
void write_volume(const Volume& v, const std::string& path);

LabelVolume read_label_volume(const std::string& path, const LabelAlphabet& alphabet);
void write_label_volume(const LabelVolume& lv, const std::string& path);

struct NiftiError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace tseg

#endif
