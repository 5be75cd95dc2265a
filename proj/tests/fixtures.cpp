#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "qcbm/rng.hpp"

namespace fixtures {

namespace {

struct Point {
    double x;
    double y;
};

double segment_distance(Point p, Point a, Point b) {
    double dx = b.x - a.x, dy = b.y - a.y;
    double len2 = dx * dx + dy * dy;
    double t = len2 > 0 ? std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0) : 0.0;
    double px = a.x + t * dx - p.x, py = a.y + t * dy - p.y;
    return std::sqrt(px * px + py * py);
}

// Rasterize polylines as soft strokes: full intensity within the core
// radius, smooth falloff outside.
qcbm::GrayImage render_strokes(int size, const std::vector<std::vector<Point>>& strokes,
                               double thickness) {
    qcbm::GrayImage img = qcbm::GrayImage::filled(size, size, 0.0);
    for (int r = 0; r < size; ++r) {
        for (int c = 0; c < size; ++c) {
            Point p{c + 0.5, r + 0.5};
            double dist = 1e9;
            for (const auto& stroke : strokes)
                for (std::size_t i = 0; i + 1 < stroke.size(); ++i)
                    dist = std::min(dist, segment_distance(p, stroke[i], stroke[i + 1]));
            double edge = dist - thickness;
            double v = edge <= 0 ? 1.0 : std::max(0.0, 1.0 - edge / 1.4);
            img.at(r, c) = v;
        }
    }
    return img;
}

std::vector<Point> arc(Point center, double rx, double ry, double deg_from, double deg_to,
                       int samples = 24) {
    std::vector<Point> points;
    for (int i = 0; i <= samples; ++i) {
        double a = (deg_from + (deg_to - deg_from) * i / samples) * std::numbers::pi / 180.0;
        points.push_back({center.x + rx * std::cos(a), center.y + ry * std::sin(a)});
    }
    return points;
}

} // namespace

qcbm::GrayImage digit_image(int digit) {
    std::vector<std::vector<Point>> strokes;
    switch (digit) {
        case 0:
            strokes.push_back(arc({14, 14}, 6.5, 8.5, 0, 360, 48));
            break;
        case 1:
            strokes.push_back({{15.5, 5.0}, {14.5, 22.5}});
            strokes.push_back({{11.0, 8.5}, {15.5, 5.0}});
            strokes.push_back({{10.5, 22.5}, {18.5, 22.5}});
            break;
        case 3:
            strokes.push_back(arc({13.5, 9.5}, 5.0, 4.5, 150, -60, 30));
            strokes.push_back(arc({13.0, 18.0}, 5.5, 5.0, -70, 140, 30));
            break;
        case 7:
            strokes.push_back({{8.0, 6.5}, {20.0, 6.5}});
            strokes.push_back({{20.0, 6.5}, {12.0, 22.5}});
            strokes.push_back({{11.5, 14.0}, {18.0, 14.0}});
            break;
        default:
            throw std::invalid_argument("unsupported digit fixture");
    }
    return render_strokes(28, strokes, 1.3);
}

qcbm::GrayImage scene_image(int height, int width, std::uint64_t seed) {
    qcbm::CounterRng rng(seed);
    struct Blob {
        double r, c, radius, gain;
    };
    std::vector<Blob> blobs;
    for (int i = 0; i < 4; ++i) {
        blobs.push_back({(0.2 + 0.6 * rng.next_double()) * height,
                         (0.1 + 0.8 * rng.next_double()) * width,
                         (0.05 + 0.1 * rng.next_double()) * height,
                         0.35 * (rng.next_double() - 0.35)});
    }
    double horizon = 0.55 * height;
    double ridge_phase = rng.next_double() * 2.0 * std::numbers::pi;

    qcbm::GrayImage img = qcbm::GrayImage::filled(height, width, 0.0);
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            double ridge =
                horizon + 0.06 * height * std::sin(ridge_phase + 5.0 * c / width) +
                0.025 * height * std::sin(2.3 * ridge_phase + 13.0 * c / width);
            double v;
            if (r < ridge) {
                v = 0.85 - 0.45 * (r / ridge);  // sky, brightest at the top
            } else {
                v = 0.30 + 0.10 * (r - ridge) / std::max(1.0, height - ridge);
                double center = 0.5 * width + 0.2 * width * (r - ridge) / height;
                double road_half = 0.04 * width + 0.22 * width * (r - ridge) / height;
                if (std::abs(c - center) < road_half) v += 0.22;
            }
            for (const Blob& b : blobs) {
                double dr = (r - b.r) / b.radius, dc = (c - b.c) / b.radius;
                v += b.gain * std::exp(-(dr * dr + dc * dc));
            }
            v += 0.03 * std::sin(0.9 * r + 0.35 * c) * std::sin(0.21 * c + 1.7);
            img.at(r, c) = std::clamp(v, 0.0, 1.0);
        }
    }
    return img;
}

qcbm::GrayImage marginal_probe_image() {
    const double target[4] = {0.74, 0.62, 0.58, 0.54};
    double row_mass[16];
    double peak = 0.0;
    for (int r = 0; r < 16; ++r) {
        double m = 1.0;
        for (int bit = 0; bit < 4; ++bit)
            m *= ((r >> (3 - bit)) & 1) ? (1.0 - target[bit]) : target[bit];
        row_mass[r] = m;
        peak = std::max(peak, m);
    }
    qcbm::GrayImage img = qcbm::GrayImage::filled(16, 16, 0.0);
    for (int r = 0; r < 16; ++r)
        for (int c = 0; c < 16; ++c) img.at(r, c) = row_mass[r] / peak;
    return img;
}

} // namespace fixtures
