#include "dpair/spatial.hpp"

#include "dpair/parallel.hpp"

#include <cmath>
#include <numeric>

namespace dpair {

namespace {

struct TermRecord {
    double loss = 0.0;
    std::array<double, 7> grad{};
    bool dropped = false;
};

// Huber penalty on the pixel distance e; huber_delta 0 keeps the raw
// distance of the correspondence loss.
inline double rho(double e, double delta) {
    if (delta <= 0.0) return e;
    return e <= delta ? 0.5 * e * e : delta * (e - 0.5 * delta);
}

inline double rho_prime(double e, double delta) {
    if (delta <= 0.0) return 1.0;
    return e <= delta ? e : delta;
}

inline Mat3 cross_matrix(const Vec3& p) {
    Mat3 m;
    m << 0.0, -p.z(), p.y(), p.z(), 0.0, -p.x(), -p.y(), p.x(), 0.0;
    return m;
}

// One correspondence term: loss and gradient w.r.t. (qw,qx,qy,qz,tx,ty,tz).
// The rotation acts through the normalized quaternion, so the raw-parameter
// gradient picks up the normalization Jacobian (I - q q^T)/|q_raw|.
TermRecord evaluate_term(const Correspondence& c, const CameraIntrinsics& k_hq,
                         const CameraIntrinsics& k_lq, double q_raw_norm, const Quat& q_unit,
                         const Mat3& rot, const Vec3& trans, const LossOptions& opt,
                         bool want_gradient) {
    TermRecord rec;
    const Vec3 p = unproject(c.p_h, c.hq_depth_m, k_hq);
    const Vec3 rotated = rot * p;
    const Vec3 x = rotated + trans;
    const double z = x.z();
    if (z <= opt.min_z_m) {
        rec.dropped = true;
        return rec;
    }

    const double u = k_lq.fx * x.x() / z + k_lq.cx;
    const double v = k_lq.fy * x.y() / z + k_lq.cy;
    const double rx = u - c.p_l.x();
    const double ry = v - c.p_l.y();
    const double e = std::sqrt(rx * rx + ry * ry);
    rec.loss = rho(e, opt.huber_delta_px);
    if (!want_gradient || e < 1e-12) return rec;

    const double alpha = rho_prime(e, opt.huber_delta_px) / e;
    // dL/dX through the projection.
    const Vec3 dx(alpha * rx * k_lq.fx / z, alpha * ry * k_lq.fy / z,
                  -alpha * (rx * k_lq.fx * x.x() + ry * k_lq.fy * x.y()) / (z * z));

    rec.grad[4] = dx.x();
    rec.grad[5] = dx.y();
    rec.grad[6] = dx.z();

    // d(R(q)p)/dq at the unit quaternion: R(q)p = p + 2w(v x p) + 2v x (v x p).
    const Vec3 qv(q_unit.x(), q_unit.y(), q_unit.z());
    const double qw = q_unit.w();
    const Vec3 dw = 2.0 * qv.cross(p);
    const Mat3 dv = 2.0 * (qv * p.transpose() + Mat3::Identity() * qv.dot(p) - 2.0 * p * qv.transpose() -
                           qw * cross_matrix(p));

    Eigen::Vector4d g_unit;
    g_unit(0) = dx.dot(dw);
    g_unit.tail<3>() = dv.transpose() * dx;

    // Chain through normalization.
    Eigen::Vector4d qh(qw, qv.x(), qv.y(), qv.z());
    const Eigen::Vector4d g_raw = (g_unit - qh * qh.dot(g_unit)) / q_raw_norm;
    rec.grad[0] = g_raw(0);
    rec.grad[1] = g_raw(1);
    rec.grad[2] = g_raw(2);
    rec.grad[3] = g_raw(3);
    return rec;
}

struct Reduced {
    double loss = 0.0;
    std::array<double, 7> grad{};
    int dropped = 0;
    int terms = 0;
};

// Fixed-shape tree reduction over the term records; the tree depends only
// on the record count, so the result does not depend on thread count.
Reduced reduce_terms(std::span<const TermRecord> recs) {
    if (recs.size() <= 16) {
        Reduced r;
        for (const TermRecord& t : recs) {
            if (t.dropped) {
                ++r.dropped;
                continue;
            }
            ++r.terms;
            r.loss += t.loss;
            for (int i = 0; i < 7; ++i) r.grad[i] += t.grad[i];
        }
        return r;
    }
    const size_t half = recs.size() / 2;
    Reduced a = reduce_terms(recs.first(half));
    const Reduced b = reduce_terms(recs.subspan(half));
    a.loss += b.loss;
    for (int i = 0; i < 7; ++i) a.grad[i] += b.grad[i];
    a.dropped += b.dropped;
    a.terms += b.terms;
    return a;
}

LossValue loss_impl(std::span<const CorrespondenceSet> sets, const CameraIntrinsics& k_hq,
                    const CameraIntrinsics& k_lq, const RigidTransform& hq_to_lq,
                    const LossOptions& options, bool want_gradient) {
    size_t total = 0;
    for (const CorrespondenceSet& s : sets) total += s.matches.size();
    if (total == 0) throw InvalidInputError("correspondence loss over an empty correspondence set");

    // Flatten so the reduction shape is a pure function of the match count.
    std::vector<const Correspondence*> flat;
    flat.reserve(total);
    for (const CorrespondenceSet& s : sets)
        for (const Correspondence& c : s.matches) flat.push_back(&c);

    const double q_raw_norm = hq_to_lq.rotation.norm();
    if (!(q_raw_norm > 1e-12)) throw InvalidInputError("degenerate quaternion in correspondence loss");
    const Quat q_unit = hq_to_lq.rotation.normalized();
    const Mat3 rot = q_unit.toRotationMatrix();

    std::vector<TermRecord> recs(total);
    parallel_for(0, static_cast<std::int64_t>(total), [&](std::int64_t i) {
        recs[i] = evaluate_term(*flat[i], k_hq, k_lq, q_raw_norm, q_unit, rot, hq_to_lq.translation,
                                options, want_gradient);
    });

    const Reduced r = reduce_terms(recs);
    LossValue out;
    out.loss = r.loss;
    out.gradient = r.grad;
    out.dropped = r.dropped;
    out.terms = r.terms;
    return out;
}

using Params = Eigen::Matrix<double, 7, 1>;

Params to_params(const RigidTransform& t) {
    Params p;
    p << t.rotation.w(), t.rotation.x(), t.rotation.y(), t.rotation.z(), t.translation.x(),
        t.translation.y(), t.translation.z();
    return p;
}

RigidTransform from_params(const Params& p) {
    RigidTransform t;
    t.rotation = Quat(p(0), p(1), p(2), p(3));
    t.translation = Vec3(p(4), p(5), p(6));
    return t;
}

}  // namespace

LossValue correspondence_loss(std::span<const CorrespondenceSet> sets, const CameraIntrinsics& k_hq,
                              const CameraIntrinsics& k_lq, const RigidTransform& hq_to_lq,
                              const LossOptions& options) {
    return loss_impl(sets, k_hq, k_lq, hq_to_lq, options, true);
}

namespace {

struct DescentResult {
    RigidTransform transform;
    double final_loss = 0.0;
    int dropped = 0;
};

// Gradient descent with Armijo backtracking; the quaternion is renormalized
// after every accepted step. Accepted losses are appended to trace and are
// non-increasing by construction. Steps that push additional points past the
// near-zero-depth guard are rejected: dropped terms leave the sum, so they
// would otherwise fake descent.
DescentResult descend(std::span<const CorrespondenceSet> sets, const CameraIntrinsics& k_hq,
                      const CameraIntrinsics& k_lq, RigidTransform start, const CalibrateOptions& opt,
                      std::vector<double>& trace) {
    const LossOptions loss_opt{opt.huber_delta_px, opt.min_z_m};
    RigidTransform cur = start.normalized();
    LossValue lv = loss_impl(sets, k_hq, k_lq, cur, loss_opt, true);
    trace.push_back(lv.loss);

    double step = opt.initial_step;
    for (int it = 0; it < opt.max_inner_steps; ++it) {
        Params g;
        for (int i = 0; i < 7; ++i) g(i) = lv.gradient[i];
        const double g2 = g.squaredNorm();
        if (g2 < 1e-28) break;

        const Params base = to_params(cur);
        double s = step;
        bool accepted = false;
        RigidTransform next;
        double next_loss = 0.0;
        while (s > 1e-16) {
            RigidTransform cand = from_params(base - s * g);
            if (cand.rotation.norm() < 1e-9) {
                s *= opt.backtrack;
                continue;
            }
            cand = cand.normalized();
            const LossValue cv = loss_impl(sets, k_hq, k_lq, cand, loss_opt, false);
            if (cv.dropped <= lv.dropped && cv.loss <= lv.loss - opt.armijo_c * s * g2) {
                accepted = true;
                next = cand;
                next_loss = cv.loss;
                break;
            }
            s *= opt.backtrack;
        }
        if (!accepted) break;

        const double update = s * std::sqrt(g2);
        cur = next;
        lv = loss_impl(sets, k_hq, k_lq, cur, loss_opt, true);
        // The gradient evaluation recomputes the loss; keep the accepted
        // line-search value so the recorded trace is exactly non-increasing.
        lv.loss = next_loss;
        trace.push_back(next_loss);
        step = s / opt.backtrack;
        if (update < opt.update_tol) break;
    }
    return {cur, lv.loss, lv.dropped};
}

}  // namespace

CalibrationReport calibrate(const Sequence& lq, const Sequence& hq, const FrameMapping& mapping,
                            const CorrespondenceProvider& provider, const CalibrateOptions& options) {
    if (mapping.pairs.empty()) throw InvalidInputError("calibrate requires a non-empty frame mapping");
    for (const FramePair& p : mapping.pairs) {
        if (p.lq_index < 0 || p.lq_index >= static_cast<int>(lq.frames.size()) || p.hq_index < 0 ||
            p.hq_index >= static_cast<int>(hq.frames.size()))
            throw InvalidInputError("frame mapping references frames outside the sequences");
    }

    CalibrationReport report;
    RigidTransform t = RigidTransform::identity();
    double initial_loss = -1.0;
    const size_t n_pairs = mapping.pairs.size();
    std::vector<CorrespondenceSet> sets(n_pairs);

    for (int pass = 0; pass < options.outer_passes; ++pass) {
        std::vector<ReprojectionResult> reprojections;
        const bool reproject = provider.needs_reprojection();
        if (reproject) reprojections.resize(n_pairs);

        parallel_for(0, static_cast<std::int64_t>(n_pairs), [&](std::int64_t i) {
            const FramePair& fp = mapping.pairs[i];
            FramePairView view;
            view.lq_index = fp.lq_index;
            view.hq_index = fp.hq_index;
            view.pair_index = static_cast<int>(i);
            view.gap_ms = fp.gap_ms;
            view.lq_frame = &lq.frames[fp.lq_index];
            view.hq_frame = &hq.frames[fp.hq_index];
            view.k_lq = &lq.intrinsics;
            view.k_hq = &hq.intrinsics;
            if (reproject) {
                reprojections[i] = reproject_depth(view.hq_frame->depth, view.hq_frame->color,
                                                   hq.intrinsics, lq.intrinsics, t);
                view.hq_in_lq = &reprojections[i];
            }
            sets[i] = provider.extract(view);
            sets[i].pair_index = static_cast<int>(i);
        });

        int total = 0;
        for (const CorrespondenceSet& s : sets) total += static_cast<int>(s.matches.size());
        report.pass_corr_counts.push_back(total);
        if (total < options.min_correspondences)
            throw AlignmentInfeasibleError("correspondence starvation: " + std::to_string(total) + " < " +
                                           std::to_string(options.min_correspondences) + " on pass " +
                                           std::to_string(pass));

        const RigidTransform before = t;
        DescentResult res = descend(sets, hq.intrinsics, lq.intrinsics, t, options, report.inner_loss_trace);
        t = res.transform;
        report.pass_final_loss.push_back(res.final_loss);
        report.total_correspondences = total;
        report.final_loss = res.final_loss;
        report.dropped_terms = res.dropped;

        if (pass == 0) {
            initial_loss = report.inner_loss_trace.empty() ? res.final_loss : report.inner_loss_trace.front();
        } else if (res.final_loss > options.divergence_factor * std::max(initial_loss, 1e-9)) {
            throw DivergenceError("calibration diverged: loss " + std::to_string(res.final_loss) +
                                  " exceeds " + std::to_string(options.divergence_factor) + "x initial " +
                                  std::to_string(initial_loss));
        }

        const TransformDelta delta = transform_delta(before, t);
        const double update = delta.rotation_deg * M_PI / 180.0 + delta.translation_m;
        if (pass > 0 && update < options.update_tol) {
            report.converged = true;
            break;
        }
    }

    report.transform = t;
    // The reported residual is always the plain per-correspondence pixel
    // distance, so calibrations run with different robust settings stay
    // comparable.
    const LossValue plain = loss_impl(sets, hq.intrinsics, lq.intrinsics, t, {0.0, options.min_z_m}, false);
    report.final_distance_loss = plain.loss;
    report.mean_residual_px =
        report.total_correspondences > 0 ? plain.loss / report.total_correspondences : 0.0;
    return report;
}

}  // namespace dpair
