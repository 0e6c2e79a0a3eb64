#include "dpair/metrics.hpp"

#include "dpair/parallel.hpp"

#include <cmath>

namespace dpair {

namespace {

void check_dimensions(const DepthImage& pred, const DepthImage& gt, const MaskImage& m,
                      const MaskImage& m_seg) {
    if (pred.width != gt.width || pred.height != gt.height || m.width != gt.width ||
        m.height != gt.height || m_seg.width != gt.width || m_seg.height != gt.height)
        throw InvalidInputError("masked loss: image and mask dimensions differ");
}

struct Accum {
    double abs_sum = 0.0;
    double sq_sum_mm2 = 0.0;
    std::int64_t count = 0;
};

Accum accumulate(const DepthImage& pred, const DepthImage& gt, const MaskImage& m, const MaskImage& m_seg) {
    Accum a;
    const size_t n = gt.values.size();
    for (size_t i = 0; i < n; ++i) {
        if (!m.bits[i] || !m_seg.bits[i]) continue;
        const double e_m = static_cast<double>(pred.values[i]) - static_cast<double>(gt.values[i]);
        a.abs_sum += std::abs(e_m);
        const double e_mm = e_m * 1000.0;
        a.sq_sum_mm2 += e_mm * e_mm;
        ++a.count;
    }
    return a;
}

}  // namespace

MaskedLoss masked_l1(const DepthImage& pred, const DepthImage& gt, const MaskImage& m,
                     const MaskImage& m_seg, LossMode mode) {
    check_dimensions(pred, gt, m, m_seg);
    const Accum a = accumulate(pred, gt, m, m_seg);
    MaskedLoss out;
    out.pixels = a.count;
    if (a.count == 0) {
        out.empty_mask = true;
        return out;
    }
    out.value = mode == LossMode::mean ? a.abs_sum / static_cast<double>(a.count) : a.abs_sum;
    return out;
}

MaskedLoss masked_mse(const DepthImage& pred, const DepthImage& gt, const MaskImage& m,
                      const MaskImage& m_seg) {
    check_dimensions(pred, gt, m, m_seg);
    const Accum a = accumulate(pred, gt, m, m_seg);
    MaskedLoss out;
    out.pixels = a.count;
    if (a.count == 0) {
        out.empty_mask = true;
        return out;
    }
    out.value = a.sq_sum_mm2 / static_cast<double>(a.count);
    return out;
}

namespace {

MaskImage validity_mask(const DepthImage& d) {
    MaskImage m(d.width, d.height);
    for (size_t i = 0; i < d.values.size(); ++i) m.bits[i] = d.values[i] > 0.0f ? 1 : 0;
    return m;
}

}  // namespace

FrameEval evaluate_record(const PairedRecord& record, const DepthImage& pred) {
    const MaskImage m = validity_mask(record.gt_depth);
    const MaskImage m_seg = record.lq.seg_mask
                                ? *record.lq.seg_mask
                                : MaskImage::all_on(record.gt_depth.width, record.gt_depth.height);
    const MaskedLoss l1 = masked_l1(pred, record.gt_depth, m, m_seg);
    const MaskedLoss mse = masked_mse(pred, record.gt_depth, m, m_seg);

    FrameEval ev;
    ev.l1_m = l1.value;
    ev.mse_mm2 = mse.value;
    ev.rmse_mm = std::sqrt(mse.value);
    ev.pixels = mse.pixels;
    ev.empty_mask = mse.empty_mask;
    return ev;
}

DatasetEval evaluate_dataset(const PairedDataset& dataset, std::span<const DepthImage> predictions) {
    if (!predictions.empty() && predictions.size() != dataset.records.size())
        throw InvalidInputError("prediction count does not match the dataset");

    DatasetEval out;
    out.frames.resize(dataset.records.size());
    parallel_for(0, static_cast<std::int64_t>(dataset.records.size()), [&](std::int64_t i) {
        const DepthImage& pred = predictions.empty() ? dataset.records[i].lq.depth : predictions[i];
        out.frames[i] = evaluate_record(dataset.records[i], pred);
    });

    double l1 = 0.0, mse = 0.0, rmse = 0.0;
    for (const FrameEval& f : out.frames) {
        if (f.empty_mask) {
            ++out.empty_frames;
            continue;
        }
        ++out.evaluated_frames;
        l1 += f.l1_m;
        mse += f.mse_mm2;
        rmse += f.rmse_mm;
    }
    if (out.evaluated_frames > 0) {
        out.mean_l1_m = l1 / out.evaluated_frames;
        out.mean_mse_mm2 = mse / out.evaluated_frames;
        out.mean_rmse_mm = rmse / out.evaluated_frames;
    }
    return out;
}

}  // namespace dpair
