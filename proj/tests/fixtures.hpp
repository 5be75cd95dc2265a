#pragma once

// Deterministic image fixtures used by unit and acceptance tests: procedural
// handwritten-style digits, smooth synthetic scenes, and a probe image with
// engineered most-significant-qubit marginals.

#include <cstdint>

#include "qcbm/image.hpp"

namespace fixtures {

// 28x28 grayscale digit (soft thick strokes). Supported glyphs: 0, 1, 3, 7.
qcbm::GrayImage digit_image(int digit);

// Smooth scene with a sky gradient, ridge line, road wedge and soft blobs.
qcbm::GrayImage scene_image(int height, int width, std::uint64_t seed);

// 16x16 image whose four most significant (vertical) qubits have zero-state
// probabilities 0.74, 0.62, 0.58, 0.54, so the maximally mixed baseline L1
// over qubits {0,1,2,3} is exactly 0.48.
qcbm::GrayImage marginal_probe_image();

} // namespace fixtures
