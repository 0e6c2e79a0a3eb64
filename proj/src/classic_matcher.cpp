#include "dpair/spatial.hpp"

#include <algorithm>
#include <cmath>

namespace dpair {

namespace {

struct Keypoint {
    int x = 0;
    int y = 0;
    double response = 0.0;
    double sub_x = 0.0;  // parabola-refined position
    double sub_y = 0.0;
};

std::vector<float> luminance_map(const ColorImage& img) {
    std::vector<float> lum(static_cast<size_t>(img.width) * img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            lum[static_cast<size_t>(y) * img.width + x] = static_cast<float>(img.luminance(x, y));
    return lum;
}

std::vector<Keypoint> harris_corners(const std::vector<float>& lum, int w, int h,
                                     const ClassicMatcherOptions& opt) {
    auto at = [&](int x, int y) { return static_cast<double>(lum[static_cast<size_t>(y) * w + x]); };

    std::vector<double> ix(static_cast<size_t>(w) * h, 0.0), iy(ix), response(ix);
    for (int y = 1; y < h - 1; ++y) {
        for (int x = 1; x < w - 1; ++x) {
            // Sobel
            const double gx = at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1) -
                              at(x - 1, y - 1) - 2.0 * at(x - 1, y) - at(x - 1, y + 1);
            const double gy = at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1) -
                              at(x - 1, y - 1) - 2.0 * at(x, y - 1) - at(x + 1, y - 1);
            ix[static_cast<size_t>(y) * w + x] = gx;
            iy[static_cast<size_t>(y) * w + x] = gy;
        }
    }

    const int win = 2;  // structure tensor window radius
    double max_response = 0.0;
    for (int y = win + 1; y < h - win - 1; ++y) {
        for (int x = win + 1; x < w - win - 1; ++x) {
            double sxx = 0.0, syy = 0.0, sxy = 0.0;
            for (int dy = -win; dy <= win; ++dy) {
                for (int dx = -win; dx <= win; ++dx) {
                    const size_t i = static_cast<size_t>(y + dy) * w + (x + dx);
                    sxx += ix[i] * ix[i];
                    syy += iy[i] * iy[i];
                    sxy += ix[i] * iy[i];
                }
            }
            const double det = sxx * syy - sxy * sxy;
            const double tr = sxx + syy;
            const double r = det - opt.harris_k * tr * tr;
            response[static_cast<size_t>(y) * w + x] = r;
            max_response = std::max(max_response, r);
        }
    }
    if (max_response <= 0.0) return {};

    const double threshold = opt.response_rel_threshold * max_response;
    std::vector<Keypoint> kps;
    const int margin = std::max(opt.patch_radius + 1, win + opt.nms_radius + 1);
    for (int y = margin; y < h - margin; ++y) {
        for (int x = margin; x < w - margin; ++x) {
            const double r = response[static_cast<size_t>(y) * w + x];
            if (r < threshold) continue;
            bool is_max = true;
            for (int dy = -opt.nms_radius; dy <= opt.nms_radius && is_max; ++dy) {
                for (int dx = -opt.nms_radius; dx <= opt.nms_radius; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const double rn = response[static_cast<size_t>(y + dy) * w + (x + dx)];
                    // Strict on one side so plateau ties keep exactly one point.
                    if (rn > r || (rn == r && (dy < 0 || (dy == 0 && dx < 0)))) {
                        is_max = false;
                        break;
                    }
                }
            }
            if (!is_max) continue;
            // Sub-pixel peak by a 1D parabola fit per axis.
            auto refine = [&](double rm, double r0, double rp) {
                const double denom = rm - 2.0 * r0 + rp;
                if (std::abs(denom) < 1e-12) return 0.0;
                return std::clamp(0.5 * (rm - rp) / denom, -0.5, 0.5);
            };
            Keypoint kp{x, y, r, 0.0, 0.0};
            kp.sub_x = x + refine(response[static_cast<size_t>(y) * w + (x - 1)], r,
                                  response[static_cast<size_t>(y) * w + (x + 1)]);
            kp.sub_y = y + refine(response[static_cast<size_t>(y - 1) * w + x], r,
                                  response[static_cast<size_t>(y + 1) * w + x]);
            kps.push_back(kp);
        }
    }
    std::stable_sort(kps.begin(), kps.end(), [&](const Keypoint& a, const Keypoint& b) {
        if (a.response != b.response) return a.response > b.response;
        if (a.y != b.y) return a.y < b.y;
        return a.x < b.x;
    });
    if (static_cast<int>(kps.size()) > opt.max_keypoints) kps.resize(opt.max_keypoints);
    return kps;
}

// Zero-mean, unit-norm luminance patch. Flat patches get a zero descriptor
// and never match.
std::vector<double> describe(const std::vector<float>& lum, int w, const Keypoint& kp, int radius) {
    const int side = 2 * radius + 1;
    std::vector<double> d(static_cast<size_t>(side) * side);
    double mean = 0.0;
    size_t n = 0;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            mean += lum[static_cast<size_t>(kp.y + dy) * w + (kp.x + dx)], ++n;
    mean /= static_cast<double>(n);
    double norm2 = 0.0;
    size_t i = 0;
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx, ++i) {
            d[i] = lum[static_cast<size_t>(kp.y + dy) * w + (kp.x + dx)] - mean;
            norm2 += d[i] * d[i];
        }
    }
    if (norm2 < 1e-12) return std::vector<double>(d.size(), 0.0);
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& v : d) v *= inv;
    return d;
}

double ncc(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Reprojected images are dithered with one-pixel holes wherever the source
// grid contracts. Borrow the first valid 8-neighbor (fixed scan order) so
// the detector sees contiguous texture; the donor's source index keeps the
// keypoint traceable to an HQ pixel.
struct FilledWarp {
    ColorImage color;
    std::vector<std::int32_t> source;
};

FilledWarp fill_single_pixel_holes(const ReprojectionResult& r) {
    FilledWarp f{r.color, r.source_index};
    const int w = r.color.width;
    const int h = r.color.height;
    static constexpr int kOff[8][2] = {{0, -1}, {-1, 0}, {1, 0}, {0, 1},
                                       {-1, -1}, {1, -1}, {-1, 1}, {1, 1}};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const size_t i = static_cast<size_t>(y) * w + x;
            if (r.source_index[i] >= 0) continue;
            for (const auto& o : kOff) {
                const int nx = x + o[0], ny = y + o[1];
                if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                const size_t j = static_cast<size_t>(ny) * w + nx;
                if (r.source_index[j] < 0) continue;
                std::copy(r.color.rgb.data() + j * 3, r.color.rgb.data() + j * 3 + 3,
                          f.color.rgb.data() + i * 3);
                f.source[i] = r.source_index[j];
                break;
            }
        }
    }
    return f;
}

struct BestTwo {
    int best = -1;
    double s1 = -2.0;
    double s2 = -2.0;
};

BestTwo best_two(const std::vector<double>& desc, const std::vector<std::vector<double>>& pool) {
    BestTwo bt;
    for (size_t j = 0; j < pool.size(); ++j) {
        const double s = ncc(desc, pool[j]);
        if (s > bt.s1) {
            bt.s2 = bt.s1;
            bt.s1 = s;
            bt.best = static_cast<int>(j);
        } else if (s > bt.s2) {
            bt.s2 = s;
        }
    }
    return bt;
}

}  // namespace

CorrespondenceSet ClassicCorrespondenceProvider::extract(const FramePairView& view) const {
    CorrespondenceSet out;
    out.pair_index = view.pair_index;
    if (!view.lq_frame || !view.hq_frame || !view.hq_in_lq)
        throw InvalidInputError("classic correspondence provider needs the reprojected HQ frame");

    const ColorImage& img_l = view.lq_frame->color;
    const FilledWarp warp = fill_single_pixel_holes(*view.hq_in_lq);
    const ColorImage& img_r = warp.color;
    const std::vector<float> lum_l = luminance_map(img_l);
    const std::vector<float> lum_r = luminance_map(img_r);

    std::vector<Keypoint> kp_l = harris_corners(lum_l, img_l.width, img_l.height, options_);
    std::vector<Keypoint> kp_r = harris_corners(lum_r, img_r.width, img_r.height, options_);
    if (kp_l.empty() || kp_r.empty()) return out;

    // Keypoints on the reprojected image are only useful if they trace back
    // to a source HQ pixel and sit on mostly-splatted support.
    auto src_at = [&](int x, int y) { return warp.source[static_cast<size_t>(y) * img_r.width + x]; };
    std::vector<Keypoint> kp_r_ok;
    for (const Keypoint& kp : kp_r) {
        int holes = 0;
        const int r = options_.patch_radius;
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx)
                if (src_at(kp.x + dx, kp.y + dy) < 0) ++holes;
        const int patch_px = (2 * r + 1) * (2 * r + 1);
        if (src_at(kp.x, kp.y) >= 0 && holes <= patch_px / 10) kp_r_ok.push_back(kp);
    }
    if (kp_r_ok.empty()) return out;

    std::vector<std::vector<double>> desc_l(kp_l.size()), desc_r(kp_r_ok.size());
    for (size_t i = 0; i < kp_l.size(); ++i)
        desc_l[i] = describe(lum_l, img_l.width, kp_l[i], options_.patch_radius);
    for (size_t i = 0; i < kp_r_ok.size(); ++i)
        desc_r[i] = describe(lum_r, img_r.width, kp_r_ok[i], options_.patch_radius);

    std::vector<int> best_for_r(kp_r_ok.size(), -1);
    for (size_t j = 0; j < kp_r_ok.size(); ++j) best_for_r[j] = best_two(desc_r[j], desc_l).best;

    const int src_w = view.hq_frame->depth.width;
    for (size_t i = 0; i < kp_l.size(); ++i) {
        const BestTwo bt = best_two(desc_l[i], desc_r);
        if (bt.best < 0) continue;
        if (best_for_r[bt.best] != static_cast<int>(i)) continue;  // mutual nearest
        const double d1 = std::sqrt(std::max(0.0, 2.0 - 2.0 * bt.s1));
        const double d2 = bt.s2 > -2.0 ? std::sqrt(std::max(0.0, 2.0 - 2.0 * bt.s2)) : 2.0;
        if (d1 > options_.ratio * d2) continue;

        const Keypoint& kr = kp_r_ok[bt.best];
        const std::int32_t src = src_at(kr.x, kr.y);
        const int hx = src % src_w;
        const int hy = src / src_w;
        const float depth = view.hq_frame->depth.at(hx, hy);
        if (!(depth > 0.0f)) continue;
        out.matches.push_back({Vec2(kp_l[i].sub_x, kp_l[i].sub_y), Vec2(hx, hy), static_cast<double>(depth)});
    }
    return out;
}

}  // namespace dpair
