#include "qcbm/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qcbm {

namespace {

int exact_log2(std::size_t value, const char* what) {
    if (value == 0 || (value & (value - 1)) != 0)
        throw std::invalid_argument(std::string(what) + " must be a power of two");
    int bits = 0;
    while ((std::size_t{1} << bits) < value) ++bits;
    return bits;
}

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_pnm_token(std::istream& in) {
    std::string token;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {}
            continue;
        }
        if (!std::isspace(c)) {
            token.push_back(static_cast<char>(c));
            break;
        }
    }
    while ((c = in.get()) != EOF && !std::isspace(c)) token.push_back(static_cast<char>(c));
    if (token.empty()) throw std::runtime_error("malformed PGM header: unexpected end of file");
    return token;
}

int parse_pnm_int(std::istream& in, const char* what) {
    std::string token = next_pnm_token(in);
    try {
        std::size_t pos = 0;
        int value = std::stoi(token, &pos);
        if (pos != token.size() || value < 0) throw std::invalid_argument(token);
        return value;
    } catch (const std::exception&) {
        throw std::runtime_error(std::string("malformed PGM header: bad ") + what);
    }
}

} // namespace

GrayImage GrayImage::filled(int height, int width, double value) {
    if (height < 1 || width < 1) throw std::invalid_argument("image dimensions must be positive");
    GrayImage img;
    img.height = height;
    img.width = width;
    img.intensity.assign(static_cast<std::size_t>(height) * width, value);
    return img;
}

GrayImage load_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open image file: " + path);
    std::string magic = next_pnm_token(in);
    if (magic != "P2" && magic != "P5")
        throw std::runtime_error("unsupported image format (expected PGM P2 or P5): " + path);
    int width = parse_pnm_int(in, "width");
    int height = parse_pnm_int(in, "height");
    int maxval = parse_pnm_int(in, "maxval");
    if (width < 1 || height < 1 || maxval < 1 || maxval > 65535)
        throw std::runtime_error("malformed PGM header: bad dimensions or maxval");

    GrayImage img = GrayImage::filled(height, width, 0.0);
    std::size_t pixels = img.intensity.size();
    double scale = 1.0 / maxval;
    if (magic == "P2") {
        for (std::size_t i = 0; i < pixels; ++i) {
            int value = parse_pnm_int(in, "pixel");
            if (value > maxval) throw std::runtime_error("PGM pixel exceeds maxval");
            img.intensity[i] = value * scale;
        }
    } else {
        int bytes = maxval < 256 ? 1 : 2;
        std::vector<unsigned char> raw(pixels * bytes);
        // Exactly one whitespace byte separates the header from raster data.
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        if (static_cast<std::size_t>(in.gcount()) != raw.size())
            throw std::runtime_error("truncated PGM raster data: " + path);
        for (std::size_t i = 0; i < pixels; ++i) {
            int value = bytes == 1 ? raw[i] : (raw[2 * i] << 8) | raw[2 * i + 1];
            if (value > maxval) throw std::runtime_error("PGM pixel exceeds maxval");
            img.intensity[i] = value * scale;
        }
    }
    return img;
}

void save_image(const GrayImage& image, const std::string& path, int maxval, bool binary) {
    if (maxval < 1 || maxval > 65535) throw std::invalid_argument("maxval out of range");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write image file: " + path);
    out << (binary ? "P5" : "P2") << "\n" << image.width << " " << image.height << "\n"
        << maxval << "\n";
    if (binary) {
        int bytes = maxval < 256 ? 1 : 2;
        std::vector<unsigned char> raw;
        raw.reserve(image.intensity.size() * bytes);
        for (double v : image.intensity) {
            int q = static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * maxval));
            if (bytes == 2) raw.push_back(static_cast<unsigned char>(q >> 8));
            raw.push_back(static_cast<unsigned char>(q & 0xff));
        }
        out.write(reinterpret_cast<const char*>(raw.data()),
                  static_cast<std::streamsize>(raw.size()));
    } else {
        for (int r = 0; r < image.height; ++r) {
            for (int c = 0; c < image.width; ++c) {
                int q = static_cast<int>(std::lround(std::clamp(image.at(r, c), 0.0, 1.0) * maxval));
                out << q << (c + 1 == image.width ? "\n" : " ");
            }
        }
    }
    if (!out) throw std::runtime_error("failed writing image file: " + path);
}

GrayImage pad_to_pow2(const GrayImage& image) {
    auto next_pow2 = [](int v) {
        int p = 1;
        while (p < v) p <<= 1;
        return p;
    };
    int height = next_pow2(image.height);
    int width = next_pow2(image.width);
    if (height == image.height && width == image.width) return image;
    GrayImage out = GrayImage::filled(height, width, 0.0);
    for (int r = 0; r < image.height; ++r)
        for (int c = 0; c < image.width; ++c) out.at(r, c) = image.at(r, c);
    return out;
}

GrayImage downsample(const GrayImage& image, int row_factor, int col_factor) {
    if (row_factor < 1 || col_factor < 1)
        throw std::invalid_argument("downsample factors must be positive");
    if (image.height % row_factor != 0 || image.width % col_factor != 0)
        throw std::invalid_argument("downsample: dimensions not divisible by factor");
    GrayImage out = GrayImage::filled(image.height / row_factor, image.width / col_factor, 0.0);
    double inv = 1.0 / (static_cast<double>(row_factor) * col_factor);
    for (int r = 0; r < image.height; ++r)
        for (int c = 0; c < image.width; ++c)
            out.at(r / row_factor, c / col_factor) += image.at(r, c) * inv;
    return out;
}

ProbabilityVector image_to_distribution(const GrayImage& image) {
    int j = row_qubits(image);
    int k = col_qubits(image);
    double total = 0.0;
    for (double v : image.intensity) total += v;
    if (total <= 0.0)
        throw std::invalid_argument("image has zero total intensity, no distribution");
    ProbabilityVector p;
    p.num_qubits = j + k;
    p.norm_constant = total;
    p.mass.resize(image.intensity.size());
    double inv = 1.0 / total;
    // Row-major pixel order is exactly index = row * 2^k + col.
    for (std::size_t i = 0; i < image.intensity.size(); ++i) p.mass[i] = image.intensity[i] * inv;
    return p;
}

GrayImage distribution_to_image(const ProbabilityVector& p, int height, int width, double norm) {
    if (p.mass.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width))
        throw std::invalid_argument("distribution size does not match image dimensions");
    GrayImage img = GrayImage::filled(height, width, 0.0);
    for (std::size_t i = 0; i < p.mass.size(); ++i)
        img.intensity[i] = std::clamp(p.mass[i] * norm, 0.0, 1.0);
    return img;
}

int row_qubits(const GrayImage& image) {
    return exact_log2(static_cast<std::size_t>(image.height), "image height");
}

int col_qubits(const GrayImage& image) {
    return exact_log2(static_cast<std::size_t>(image.width), "image width");
}

ProbabilityVector pool_distribution_axes(const ProbabilityVector& p, int from_row_qubits,
                                         int from_col_qubits, int to_row_qubits,
                                         int to_col_qubits) {
    if (from_row_qubits + from_col_qubits != p.num_qubits)
        throw std::invalid_argument("axis split does not match distribution size");
    if (to_row_qubits > from_row_qubits || to_col_qubits > from_col_qubits)
        throw std::invalid_argument("pool_distribution_axes cannot refine");
    int dr = from_row_qubits - to_row_qubits;
    int dc = from_col_qubits - to_col_qubits;
    ProbabilityVector out;
    out.num_qubits = to_row_qubits + to_col_qubits;
    out.norm_constant = p.norm_constant;
    out.mass.assign(std::size_t{1} << out.num_qubits, 0.0);
    std::size_t from_cols = std::size_t{1} << from_col_qubits;
    std::size_t to_cols = std::size_t{1} << to_col_qubits;
    for (std::size_t x = 0; x < p.mass.size(); ++x) {
        std::size_t r = x >> from_col_qubits;
        std::size_t c = x & (from_cols - 1);
        out.mass[(r >> dr) * to_cols + (c >> dc)] += p.mass[x];
    }
    return out;
}

ProbabilityVector expand_distribution_axes(const ProbabilityVector& p, int from_row_qubits,
                                           int from_col_qubits, int to_row_qubits,
                                           int to_col_qubits) {
    if (from_row_qubits + from_col_qubits != p.num_qubits)
        throw std::invalid_argument("axis split does not match distribution size");
    if (to_row_qubits < from_row_qubits || to_col_qubits < from_col_qubits)
        throw std::invalid_argument("expand_distribution_axes cannot coarsen");
    int dr = to_row_qubits - from_row_qubits;
    int dc = to_col_qubits - from_col_qubits;
    double scale = 1.0 / static_cast<double>(std::size_t{1} << (dr + dc));
    ProbabilityVector out;
    out.num_qubits = to_row_qubits + to_col_qubits;
    out.norm_constant = p.norm_constant;
    out.mass.resize(std::size_t{1} << out.num_qubits);
    std::size_t from_cols = std::size_t{1} << from_col_qubits;
    std::size_t to_cols = std::size_t{1} << to_col_qubits;
    for (std::size_t x = 0; x < out.mass.size(); ++x) {
        std::size_t r = (x / to_cols) >> dr;
        std::size_t c = (x & (to_cols - 1)) >> dc;
        out.mass[x] = p.mass[r * from_cols + c] * scale;
    }
    return out;
}

BlockDecomposition partition_blocks(const GrayImage& image, int b) {
    BlockDecomposition out;
    out.block_param = b;
    if (b < 0) throw std::invalid_argument("block parameter must be >= 0");
    if (b == 0) {
        out.tile_rows = 1;
        out.tile_cols = 1;
        out.tile_side_height = image.height;
        out.tile_side_width = image.width;
        out.blocks.push_back(image);
        double total = 0.0;
        for (double v : image.intensity) total += v;
        out.norms.push_back(total);
        return out;
    }
    if (image.height % b != 0 || image.width % (2 * b) != 0)
        throw std::invalid_argument("image dimensions not divisible by block grid");
    int side = image.height / b;
    if (side != image.width / (2 * b))
        throw std::invalid_argument("block grid does not produce square tiles");
    out.tile_rows = b;
    out.tile_cols = 2 * b;
    out.tile_side_height = side;
    out.tile_side_width = side;
    for (int tr = 0; tr < out.tile_rows; ++tr) {
        for (int tc = 0; tc < out.tile_cols; ++tc) {
            GrayImage tile = GrayImage::filled(side, side, 0.0);
            double total = 0.0;
            for (int r = 0; r < side; ++r) {
                for (int c = 0; c < side; ++c) {
                    double v = image.at(tr * side + r, tc * side + c);
                    tile.at(r, c) = v;
                    total += v;
                }
            }
            out.blocks.push_back(std::move(tile));
            out.norms.push_back(total);
        }
    }
    return out;
}

GrayImage assemble_blocks(const BlockDecomposition& layout,
                          const std::vector<ProbabilityVector>& block_distributions) {
    if (block_distributions.size() != layout.blocks.size())
        throw std::invalid_argument("assemble_blocks: missing block distributions");
    GrayImage out = GrayImage::filled(layout.tile_rows * layout.tile_side_height,
                                      layout.tile_cols * layout.tile_side_width, 0.0);
    for (int id = 0; id < layout.num_blocks(); ++id) {
        const ProbabilityVector& p = block_distributions[static_cast<std::size_t>(id)];
        GrayImage tile = distribution_to_image(p, layout.tile_side_height,
                                               layout.tile_side_width,
                                               layout.norms[static_cast<std::size_t>(id)]);
        int tr = id / layout.tile_cols;
        int tc = id % layout.tile_cols;
        for (int r = 0; r < tile.height; ++r)
            for (int c = 0; c < tile.width; ++c)
                out.at(tr * tile.height + r, tc * tile.width + c) = tile.at(r, c);
    }
    return out;
}

int qubits_per_block(int height, int width, int b) {
    std::size_t pixels = static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
    if (b == 0) return exact_log2(pixels, "block pixel count");
    std::size_t blocks = 2 * static_cast<std::size_t>(b) * static_cast<std::size_t>(b);
    if (pixels % blocks != 0)
        throw std::invalid_argument("block pixel count is not an integer power of two");
    return exact_log2(pixels / blocks, "block pixel count");
}

} // namespace qcbm
