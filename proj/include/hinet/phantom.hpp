#pragma once
/// @file phantom.hpp
/// Synthetic three-modality phantoms for desk-scale training and tests.
///
/// Each slice holds two independent smooth random fields sharing one random
/// shape mask.  The target blends the sources: their mean outside the mask
/// and their pointwise max inside, so neither source alone predicts it.

#include <string>

#include "hinet/pipeline.hpp"
#include "hinet/volume.hpp"

namespace hinet {

struct PhantomOptions {
    int subjects = 6;
    int slices = 4;
    int rows = 240;
    int cols = 240;
    uint64_t seed = 7;
    double train_fraction = 0.8;
};

struct PhantomVolumes {
    Volume x1, x2, y;  // raw (unnormalized) intensities
};

PhantomVolumes make_phantom_subject(uint64_t seed, int slices, int rows, int cols);

/// Writes <root>/<subject>/{T1,T2,Flair}.hinv plus manifest.json with a
/// deterministic subject split.  The two sources take the T1/T2 roles and
/// the blended target takes Flair.
DatasetManifest make_phantom_dataset(const std::string& root, const PhantomOptions& opt);

}  // namespace hinet
