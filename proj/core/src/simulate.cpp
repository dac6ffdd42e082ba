#include "ctrlcert/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <thread>
#include <vector>

#include "ctrlcert/numerics.hpp"

namespace ctrlcert::simulate {

Eigen::VectorXd integrate_segment(const LinearSystem& sys,
                                  const Eigen::VectorXd& q0,
                                  const Eigen::VectorXd& c, double sigma,
                                  int sign) {
    if (sign != 1 && sign != -1) {
        throw ValidationError("sign must be +1 or -1");
    }
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw ValidationError("segment duration must be nonnegative");
    }
    if (q0.size() != sys.state_dim() || c.size() != sys.input_dim()) {
        throw DimensionError("state or control dimension mismatch");
    }
    const double sg = static_cast<double>(sign);
    // q(sigma) = exp(sign A sigma) q0 + sign * (int_0^sigma exp(sign A v) dv) B c
    return numerics::mat_exp(sg * sys.A, sigma) * q0 +
           sg * (numerics::exp_integral(-sg * sys.A, sigma) * (sys.B * c));
}

const ExtendedState& SteppedGraph::final_state() const {
    if (order.empty()) {
        throw DimensionError("stepped graph has no arcs");
    }
    if (order.back() == Kind::Odd) {
        return odd_arcs.back().end;
    }
    return even_arcs.back().to;
}

SteppedGraph build_stepped_graph(const LinearSystem& sys,
                                 const PiecewiseConstantControl& control,
                                 const ExtendedState& x0) {
    if (control.empty()) {
        throw ValidationError("control has no segments");
    }
    if (x0.q.size() != sys.state_dim() || x0.u.size() != sys.input_dim()) {
        throw DimensionError("initial state dimensions mismatch the system");
    }

    SteppedGraph graph;
    ExtendedState current = x0;
    const auto& segments = control.segments();

    // A leading jump aligns the graph with the first control value when
    // the initial condition carries a different one.
    if (!(current.u.array() == segments.front().value.array()).all()) {
        ExtendedState to = current;
        to.u = segments.front().value;
        graph.even_arcs.push_back({current, to});
        graph.order.push_back(SteppedGraph::Kind::Even);
        current = to;
    }

    for (std::size_t k = 0; k < segments.size(); ++k) {
        if (k > 0) {
            ExtendedState to = current;
            to.u = segments[k].value;
            graph.even_arcs.push_back({current, to});
            graph.order.push_back(SteppedGraph::Kind::Even);
            current = to;
        }
        SteppedGraph::OddArc arc;
        arc.start = current;
        arc.duration = segments[k].duration;
        arc.end.t = current.t + arc.duration;
        arc.end.q = integrate_segment(sys, current.q, segments[k].value,
                                      arc.duration, -1);
        arc.end.u = segments[k].value;
        graph.odd_arcs.push_back(arc);
        graph.order.push_back(SteppedGraph::Kind::Odd);
        current = arc.end;
    }
    return graph;
}

namespace {

// Counter-based per-trial randomness: every trial owns a generator derived
// from (seed, trial index), so results never depend on how trials are
// scheduled across workers.
std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class TrialRng {
  public:
    TrialRng(std::uint64_t seed, std::uint64_t trial)
        : state_(splitmix64(seed ^ splitmix64(trial + 1))) {}

    double uniform01() {
        state_ = splitmix64(state_ + 0x632be59bd9b4e019ULL);
        return static_cast<double>(state_ >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

  private:
    std::uint64_t state_;
};

Eigen::VectorXd draw_control(const ControlSet& set, TrialRng& rng) {
    const int m = set.dimension();
    Eigen::VectorXd u(m);
    if (set.kind() == ControlSet::Kind::Box) {
        for (int i = 0; i < m; ++i) {
            u[i] = rng.uniform(-set.radius(i), set.radius(i));
        }
        return u;
    }
    const double r = set.radius(0);
    // Rejection from the bounding box keeps the ball draw uniform.
    do {
        for (int i = 0; i < m; ++i) {
            u[i] = rng.uniform(-r, r);
        }
    } while (u.norm() > r);
    return u;
}

}  // namespace

SampleCloud sample_reachable(const LinearSystem& sys, double T, int trials,
                             int segment_count, std::uint64_t seed,
                             int workers) {
    if (!(T > 0.0) || !std::isfinite(T)) {
        throw ValidationError("horizon T must be positive");
    }
    if (trials < 1) {
        throw ValidationError("need at least one trial");
    }
    if (segment_count < 1) {
        throw ValidationError("need at least one segment per trial");
    }
    if (workers < 1) {
        workers = 1;
    }
    workers = std::min(workers, trials);

    const int n = sys.state_dim();
    SampleCloud cloud;
    cloud.endpoints.resize(n, trials);
    cloud.horizon = T;
    cloud.seed = seed;
    cloud.segment_count = segment_count;

    auto run_trial = [&](int trial) {
        TrialRng rng(seed, static_cast<std::uint64_t>(trial));

        // Cut points sorted over [0, T] make the durations a uniform
        // sample of the simplex scaled to total time T.
        std::vector<double> cuts(static_cast<std::size_t>(segment_count) - 1);
        for (auto& c : cuts) {
            c = rng.uniform(0.0, T);
        }
        std::sort(cuts.begin(), cuts.end());

        Eigen::VectorXd q = Eigen::VectorXd::Zero(n);
        double previous = 0.0;
        for (int k = 0; k < segment_count; ++k) {
            const double next = k + 1 < segment_count
                                    ? cuts[static_cast<std::size_t>(k)]
                                    : T;
            const Eigen::VectorXd u = draw_control(sys.control_set, rng);
            q = integrate_segment(sys, q, u, next - previous, -1);
            previous = next;
        }
        cloud.endpoints.col(trial) = q;
    };

    if (workers == 1) {
        for (int trial = 0; trial < trials; ++trial) {
            run_trial(trial);
        }
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            const int begin = static_cast<int>(
                static_cast<long>(trials) * w / workers);
            const int end = static_cast<int>(
                static_cast<long>(trials) * (w + 1) / workers);
            pool.emplace_back([&, begin, end] {
                for (int trial = begin; trial < end; ++trial) {
                    run_trial(trial);
                }
            });
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    return cloud;
}

namespace {

Eigen::VectorXd endpoint_of(const LinearSystem& sys,
                            const PiecewiseConstantControl& control) {
    Eigen::VectorXd q = Eigen::VectorXd::Zero(sys.state_dim());
    for (const auto& seg : control.segments()) {
        q = integrate_segment(sys, q, seg.value, seg.duration, -1);
    }
    return q;
}

}  // namespace

ConvexityReport convexity_probe(
    const LinearSystem& sys, double T,
    const std::vector<std::pair<PiecewiseConstantControl,
                                PiecewiseConstantControl>>& pairs) {
    ConvexityReport report;
    for (const auto& [first, second] : pairs) {
        const double h1 = first.horizon();
        const double h2 = second.horizon();
        if (std::abs(h1 - T) > 1e-12 * std::max(1.0, T) ||
            std::abs(h2 - T) > 1e-12 * std::max(1.0, T)) {
            throw ValidationError("probe controls must share the horizon T");
        }

        // Merge both breakpoint ladders so the midpoint control is piecewise
        // constant on a common grid.
        std::vector<double> cuts{0.0};
        for (const auto* ctrl : {&first, &second}) {
            double acc = 0.0;
            for (const auto& seg : ctrl->segments()) {
                acc += seg.duration;
                cuts.push_back(std::min(acc, T));
            }
        }
        cuts.push_back(T);
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

        Eigen::VectorXd q_mid = Eigen::VectorXd::Zero(sys.state_dim());
        Eigen::VectorXd q_neg = Eigen::VectorXd::Zero(sys.state_dim());
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            const double dt = cuts[i + 1] - cuts[i];
            if (dt <= 0.0) {
                continue;
            }
            const double t_mid = 0.5 * (cuts[i] + cuts[i + 1]);
            const Eigen::VectorXd v1 = first.value_at(t_mid);
            const Eigen::VectorXd v2 = second.value_at(t_mid);
            const Eigen::VectorXd avg = 0.5 * (v1 + v2);
            if (!sys.control_set.contains(avg)) {
                throw ControlOutOfSet("midpoint control left the control set");
            }
            q_mid = integrate_segment(sys, q_mid, avg, dt, -1);
            q_neg = integrate_segment(sys, q_neg, Eigen::VectorXd(-v1), dt, -1);
        }

        const Eigen::VectorXd q1 = endpoint_of(sys, first);
        const Eigen::VectorXd q2 = endpoint_of(sys, second);
        report.max_midpoint_deviation =
            std::max(report.max_midpoint_deviation,
                     (q_mid - 0.5 * (q1 + q2)).norm());
        report.max_symmetry_deviation =
            std::max(report.max_symmetry_deviation, (q_neg + q1).norm());
        ++report.pairs_checked;
    }
    return report;
}

namespace {

// Largest rho with rho*v inside the region bounded by faces
// {x : normal . x <= offset}; 0 must be inside (all offsets >= 0).
double ray_exit(const std::vector<Eigen::VectorXd>& normals,
                const std::vector<double>& offsets, const Eigen::VectorXd& v) {
    double rho = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < normals.size(); ++i) {
        const double along = normals[i].dot(v);
        if (along > 0.0) {
            rho = std::min(rho, std::max(0.0, offsets[i]) / along);
        }
    }
    return std::isfinite(rho) ? rho : 0.0;
}

// Convex hull of 2d points as half-planes (outward normal, offset).
void hull_faces_2d(const Eigen::MatrixXd& pts,
                   std::vector<Eigen::VectorXd>& normals,
                   std::vector<double>& offsets) {
    std::vector<Eigen::Vector2d> p(static_cast<std::size_t>(pts.cols()));
    for (Eigen::Index i = 0; i < pts.cols(); ++i) {
        p[static_cast<std::size_t>(i)] = pts.col(i);
    }
    std::sort(p.begin(), p.end(), [](const auto& a, const auto& b) {
        return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
    });
    p.erase(std::unique(p.begin(), p.end(),
                        [](const auto& a, const auto& b) { return a == b; }),
            p.end());

    const auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a,
                          const Eigen::Vector2d& b) {
        return (a.x() - o.x()) * (b.y() - o.y()) -
               (a.y() - o.y()) * (b.x() - o.x());
    };
    // Monotone chain, counterclockwise result.
    std::vector<Eigen::Vector2d> hull(2 * p.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p[i]) <= 0.0) {
            --k;
        }
        hull[k++] = p[i];
    }
    for (std::size_t i = p.size() - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], p[i]) <= 0.0) {
            --k;
        }
        hull[k++] = p[i];
    }
    hull.resize(k > 1 ? k - 1 : k);

    for (std::size_t i = 0; i < hull.size(); ++i) {
        const Eigen::Vector2d a = hull[i];
        const Eigen::Vector2d b = hull[(i + 1) % hull.size()];
        const Eigen::Vector2d edge = b - a;
        Eigen::VectorXd normal(2);
        normal << edge.y(), -edge.x();  // outward for a counterclockwise hull
        normals.push_back(normal);
        offsets.push_back(normal.dot(a));
    }
}

// Incremental convex hull of 3d points as triangles; emits face planes.
void hull_faces_3d(const Eigen::MatrixXd& pts,
                   std::vector<Eigen::VectorXd>& normals,
                   std::vector<double>& offsets) {
    const Eigen::Index count = pts.cols();
    const double scale = pts.cwiseAbs().maxCoeff();
    const double eps = 1e-12 * std::max(scale, 1e-300);

    // Initial simplex: spread apart in every dimension.
    std::size_t i0 = 0, i1 = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < count; ++i) {
        for (Eigen::Index j = i + 1; j < count && j < i + 64; ++j) {
            const double d = (pts.col(i) - pts.col(j)).squaredNorm();
            if (d > best) {
                best = d;
                i0 = static_cast<std::size_t>(i);
                i1 = static_cast<std::size_t>(j);
            }
        }
    }
    const Eigen::Vector3d p0 = pts.col(static_cast<Eigen::Index>(i0));
    const Eigen::Vector3d p1 = pts.col(static_cast<Eigen::Index>(i1));
    std::size_t i2 = 0;
    best = -1.0;
    for (Eigen::Index i = 0; i < count; ++i) {
        const double d =
            (Eigen::Vector3d(pts.col(i)) - p0).cross(p1 - p0).squaredNorm();
        if (d > best) {
            best = d;
            i2 = static_cast<std::size_t>(i);
        }
    }
    const Eigen::Vector3d p2 = pts.col(static_cast<Eigen::Index>(i2));
    const Eigen::Vector3d plane_n = (p1 - p0).cross(p2 - p0);
    std::size_t i3 = 0;
    best = -1.0;
    for (Eigen::Index i = 0; i < count; ++i) {
        const double d = std::abs(plane_n.dot(Eigen::Vector3d(pts.col(i)) - p0));
        if (d > best) {
            best = d;
            i3 = static_cast<std::size_t>(i);
        }
    }
    const Eigen::Vector3d p3 = pts.col(static_cast<Eigen::Index>(i3));
    const Eigen::Vector3d centroid = 0.25 * (p0 + p1 + p2 + p3);

    struct Face {
        std::array<std::size_t, 3> v;
        Eigen::Vector3d normal;
        double offset;  // normal . vertex
        bool alive = true;
    };
    std::vector<Face> faces;
    auto add_face = [&](std::size_t a, std::size_t b, std::size_t c) {
        Face f;
        f.v = {a, b, c};
        const Eigen::Vector3d pa = pts.col(static_cast<Eigen::Index>(a));
        const Eigen::Vector3d pb = pts.col(static_cast<Eigen::Index>(b));
        const Eigen::Vector3d pc = pts.col(static_cast<Eigen::Index>(c));
        f.normal = (pb - pa).cross(pc - pa);
        if (f.normal.dot(centroid - pa) > 0.0) {
            std::swap(f.v[1], f.v[2]);
            f.normal = -f.normal;
        }
        f.offset = f.normal.dot(pa);
        faces.push_back(f);
    };
    add_face(i0, i1, i2);
    add_face(i0, i1, i3);
    add_face(i0, i2, i3);
    add_face(i1, i2, i3);

    for (Eigen::Index i = 0; i < count; ++i) {
        const std::size_t pi = static_cast<std::size_t>(i);
        if (pi == i0 || pi == i1 || pi == i2 || pi == i3) {
            continue;
        }
        const Eigen::Vector3d p = pts.col(i);

        std::vector<std::size_t> visible;
        for (std::size_t f = 0; f < faces.size(); ++f) {
            if (faces[f].alive &&
                faces[f].normal.dot(p) - faces[f].offset >
                    eps * faces[f].normal.norm()) {
                visible.push_back(f);
            }
        }
        if (visible.empty()) {
            continue;
        }

        // Horizon edges appear in exactly one visible face.
        std::vector<std::pair<std::size_t, std::size_t>> edges;
        for (std::size_t f : visible) {
            const auto& v = faces[f].v;
            for (int e = 0; e < 3; ++e) {
                const std::size_t a = v[static_cast<std::size_t>(e)];
                const std::size_t b = v[static_cast<std::size_t>((e + 1) % 3)];
                const auto key = std::minmax(a, b);
                auto it = std::find_if(edges.begin(), edges.end(),
                                       [&](const auto& ed) {
                                           return ed == std::pair(key.first,
                                                                  key.second);
                                       });
                if (it == edges.end()) {
                    edges.push_back({key.first, key.second});
                } else {
                    edges.erase(it);
                }
            }
        }
        for (std::size_t f : visible) {
            faces[f].alive = false;
        }
        for (const auto& [a, b] : edges) {
            add_face(a, b, pi);
        }
    }

    for (const auto& f : faces) {
        if (f.alive) {
            normals.push_back(Eigen::VectorXd(f.normal));
            offsets.push_back(f.offset);
        }
    }
}

}  // namespace

SubspaceProbe subspace_probe(const SampleCloud& cloud, double tol_rel) {
    SubspaceProbe probe;
    const auto rank = numerics::numerical_rank(cloud.endpoints, tol_rel);
    probe.dimension = rank.rank;
    probe.basis = rank.basis;
    if (probe.dimension == 0) {
        probe.ball_radius_estimate = 0.0;
        return probe;
    }

    const Eigen::MatrixXd projected = probe.basis.transpose() * cloud.endpoints;
    const int d = probe.dimension;

    std::vector<Eigen::VectorXd> normals;
    std::vector<double> offsets;
    std::vector<Eigen::VectorXd> directions;

    if (d == 1) {
        const double hi = projected.maxCoeff();
        const double lo = projected.minCoeff();
        probe.ball_radius_estimate = std::max(0.0, std::min(hi, -lo));
        return probe;
    }
    if (d == 2) {
        hull_faces_2d(projected, normals, offsets);
    } else if (d == 3) {
        hull_faces_3d(projected, normals, offsets);
    } else {
        // Sampled support functions stand in for the exact hull: each
        // direction gives the half-space {x . dir <= max_i p_i . dir}.
        std::uint64_t state = 0x51d5348a90c2f1d7ULL;
        const int samples = 256 * d;
        for (int i = 0; i < samples; ++i) {
            Eigen::VectorXd dir(d);
            for (int j = 0; j < d; ++j) {
                // Box-Muller on splitmix streams: direction uniform on the
                // sphere after normalization.
                state = splitmix64(state);
                const double u1 =
                    (static_cast<double>(state >> 11) + 0.5) * 0x1.0p-53;
                state = splitmix64(state);
                const double u2 = static_cast<double>(state >> 11) * 0x1.0p-53;
                dir[j] = std::sqrt(-2.0 * std::log(u1)) *
                         std::cos(2.0 * M_PI * u2);
            }
            if (dir.norm() == 0.0) {
                continue;
            }
            dir.normalize();
            directions.push_back(dir);
        }
        for (int j = 0; j < d; ++j) {
            Eigen::VectorXd axis = Eigen::VectorXd::Zero(d);
            axis[j] = 1.0;
            directions.push_back(axis);
            directions.push_back(-axis);
        }
        for (const auto& dir : directions) {
            normals.push_back(dir);
            offsets.push_back((dir.transpose() * projected).maxCoeff());
        }
    }

    // Any face with a negative offset puts the origin outside the hull.
    for (double o : offsets) {
        if (o < 0.0) {
            probe.ball_radius_estimate = 0.0;
            return probe;
        }
    }
    double delta = std::numeric_limits<double>::infinity();
    for (int j = 0; j < d; ++j) {
        Eigen::VectorXd axis = Eigen::VectorXd::Zero(d);
        axis[j] = 1.0;
        delta = std::min(delta, ray_exit(normals, offsets, axis));
        delta = std::min(delta, ray_exit(normals, offsets, Eigen::VectorXd(-axis)));
    }
    probe.ball_radius_estimate = std::isfinite(delta) ? delta : 0.0;
    return probe;
}

}  // namespace ctrlcert::simulate
