#pragma once

#include <string>
#include <vector>

#include "qcbm/prob.hpp"

namespace qcbm {

// Grayscale raster with intensities in [0, 1], row-major.
struct GrayImage {
    int height = 0;
    int width = 0;
    std::vector<double> intensity;

    double& at(int row, int col) { return intensity[static_cast<std::size_t>(row) * width + col]; }
    double at(int row, int col) const {
        return intensity[static_cast<std::size_t>(row) * width + col];
    }
    static GrayImage filled(int height, int width, double value = 0.0);
};

// PGM (P2 ASCII / P5 binary, maxval up to 65535). Intensities are pixel/maxval.
GrayImage load_image(const std::string& path);
void save_image(const GrayImage& image, const std::string& path, int maxval = 65535,
                bool binary = true);

// Zero-pads to the next power of two per axis, content kept top-left.
GrayImage pad_to_pow2(const GrayImage& image);

// Block-mean pooling by a power-of-two factor per axis.
GrayImage downsample(const GrayImage& image, int row_factor, int col_factor);

// Normalized pixel distribution of a 2^j x 2^k image. Outcome index is
// row * 2^k + col: the j row bits occupy the high half of the index (most
// significant first), the k column bits the low half. norm_constant is the
// total intensity.
ProbabilityVector image_to_distribution(const GrayImage& image);

// Inverse of image_to_distribution: intensity = mass * norm.
GrayImage distribution_to_image(const ProbabilityVector& p, int height, int width, double norm);

int row_qubits(const GrayImage& image);
int col_qubits(const GrayImage& image);

// Per-axis resolution change between qubit splits (j, k) -> (j', k') of the
// same image: coarser axes are block-mean pooled, finer axes split each
// outcome's mass equally. This is the resolution semantics used by staged
// training, where both axes lose least significant bits together.
ProbabilityVector pool_distribution_axes(const ProbabilityVector& p, int from_row_qubits,
                                         int from_col_qubits, int to_row_qubits,
                                         int to_col_qubits);
ProbabilityVector expand_distribution_axes(const ProbabilityVector& p, int from_row_qubits,
                                           int from_col_qubits, int to_row_qubits,
                                           int to_col_qubits);

// Square tiles of an image under block parameter b: the height is cut into b
// bands and the width into 2b, giving 2b^2 tiles of side height/b with their
// intensity totals tracked per tile. b = 0 means a single whole-image block.
struct BlockDecomposition {
    int block_param = 0;
    int tile_rows = 1;
    int tile_cols = 1;
    int tile_side_height = 0;
    int tile_side_width = 0;
    std::vector<GrayImage> blocks;  // row-major tile order
    std::vector<double> norms;      // per-tile intensity totals

    int num_blocks() const { return static_cast<int>(blocks.size()); }
};

BlockDecomposition partition_blocks(const GrayImage& image, int b);

// Rebuilds the full image from per-block distributions and their norms.
GrayImage assemble_blocks(const BlockDecomposition& layout,
                          const std::vector<ProbabilityVector>& block_distributions);

// Qubits needed per block: log2 of the tile pixel count.
int qubits_per_block(int height, int width, int b);

} // namespace qcbm
