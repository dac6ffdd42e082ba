// Acceptance gate: one pass/fail line per criterion, exit code counts the
// failures. Tolerances are pinned here and nowhere else.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ctrlcert/attainability.hpp"
#include "ctrlcert/flows.hpp"
#include "ctrlcert/kalman.hpp"
#include "ctrlcert/lie.hpp"
#include "ctrlcert/simulate.hpp"
#include "ctrlcert/system.hpp"
#include "random_systems.hpp"

using namespace ctrlcert;

namespace {

constexpr double kRankTol = 1e-9;
constexpr double kRankAgreementBudgetSeconds = 10.0;
constexpr double kSeriesTol = 1e-10;
constexpr double kDeterminantTolRel = 1e-10;
constexpr double kRoundTripTol = 1e-9;
constexpr double kSteerResidualTol = 1e-6;
constexpr int kSteerIterationCap = 100;
constexpr double kSubspaceTol = 1e-8;
constexpr double kConvexityTol = 1e-10;

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
}

// Mirrored endpoint of a control, chained exactly segment by segment.
Eigen::VectorXd replay_mirrored(const LinearSystem& sys,
                                const PiecewiseConstantControl& control,
                                Eigen::VectorXd q) {
    for (const auto& seg : control.segments())
        q = simulate::integrate_segment(sys, q, seg.value, seg.duration, -1);
    return q;
}

Eigen::VectorXd replay_forward(const LinearSystem& sys,
                               const PiecewiseConstantControl& control,
                               Eigen::VectorXd q) {
    for (const auto& seg : control.segments())
        q = simulate::integrate_segment(sys, q, seg.value, seg.duration, 1);
    return q;
}

// Criterion 1: the algebraic rank, the Lie span dimension at the origin,
// and the flow Jacobian rank tell one story on random systems, quickly.
bool rank_agreement(std::string& detail) {
    std::mt19937_64 rng(0xacce9701u);
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < 200; ++i) {
        const int n = 2 + i % 4;
        const int m = 1 + i % 3;
        Eigen::MatrixXd A = testsupport::random_matrix(rng, n, n);
        Eigen::MatrixXd B = testsupport::random_matrix(rng, n, m);
        if (B.isZero(0.0)) B(0, 0) = 0.5;
        const LinearSystem sys(A, B, ControlSet::ball(1.0, m));
        const int kalman_rank = kalman::analyze(sys, kRankTol).rank;
        const int lie_dim =
            lie::lie_span_at(lie::system_fields(sys),
                             Eigen::VectorXd::Zero(n), kRankTol)
                .rank;
        const auto cert = attainability::certify(sys, 1.0, kRankTol);
        if (kalman_rank != lie_dim ||
            kalman_rank != cert.jacobian_rank - m) {
            detail = "mismatch at draw " + std::to_string(i) + ": kalman " +
                     std::to_string(kalman_rank) + ", lie " +
                     std::to_string(lie_dim) + ", jacobian-m " +
                     std::to_string(cert.jacobian_rank - m);
            return false;
        }
    }
    const double elapsed = seconds_since(start);
    if (elapsed >= kRankAgreementBudgetSeconds) {
        detail = "took " + std::to_string(elapsed) + " s";
        return false;
    }
    return true;
}

// Criterion 2: series pushforward against the closed form.
bool pushforward_oracle(std::string& detail) {
    std::mt19937_64 rng(0xacce9702u);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        const int n = 2 + i % 3;
        const int m = 1 + i % 2;
        Eigen::MatrixXd A = testsupport::random_matrix(rng, n, n);
        const double norm = A.operatorNorm();
        if (norm > 2.0) A *= 2.0 / norm;
        Eigen::MatrixXd B = testsupport::random_matrix(rng, n, m);
        if (B.isZero(0.0)) B(0, 0) = 0.5;
        const LinearSystem sys(A, B, ControlSet::ball(1.0, m));
        const int a = i % m;
        const double s = unit(rng);
        const auto profile = attainability::saturation_depth(sys, kRankTol);
        const auto basis =
            attainability::choose_basis(sys, profile.ell_max, kRankTol);
        const auto expansion =
            flows::pushforward_series(sys, a, s, profile.ell_max, basis);
        const auto series = flows::expansion_field(sys, expansion);
        const auto exact = flows::pushforward_exact(sys, a, s);
        const double err =
            std::max((series.du - exact.du).cwiseAbs().maxCoeff(),
                     (series.dq_const - exact.dq_const).cwiseAbs().maxCoeff());
        if (!(err <= kSeriesTol)) {
            detail = "entrywise error " + std::to_string(err) + " at draw " +
                     std::to_string(i);
            return false;
        }
    }
    return true;
}

// Criterion 3: block Vandermonde determinant against the product formula.
bool vandermonde_determinant(std::string& detail) {
    for (int m = 1; m <= 3; ++m) {
        for (int ell_max = 0; ell_max <= 4; ++ell_max) {
            for (const double eps : {1e-1, 1e-2}) {
                const attainability::TauGrid grid(m, ell_max);
                const double det =
                    attainability::vandermonde_block(grid, eps).determinant();
                const double predicted =
                    attainability::predicted_determinant(grid, eps);
                const double rel =
                    std::abs(det - predicted) / std::abs(predicted);
                if (!(rel <= kDeterminantTolRel)) {
                    detail = "m=" + std::to_string(m) +
                             " ell_max=" + std::to_string(ell_max) +
                             " eps=" + std::to_string(eps) + " rel " +
                             std::to_string(rel);
                    return false;
                }
            }
        }
    }
    return true;
}

// Criterion 4: reconstructed controls replayed by the exact simulator land
// on the attainability map value.
bool reconstruction_round_trip(std::string& detail) {
    std::mt19937_64 rng(0xacce9704u);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double T = 1.0;
    for (int i = 0; i < 50; ++i) {
        const int n = 2 + i % 3;
        const int m = 1 + i % 2;
        const LinearSystem sys =
            testsupport::random_controllable_system(rng, n, m);
        const double eps = attainability::choose_epsilon(sys, T, kRankTol);
        const auto profile = attainability::saturation_depth(sys, kRankTol);
        const attainability::TauGrid grid(m, profile.ell_max);
        ExtendedState base;
        base.t = 0.0;
        base.q = Eigen::VectorXd::Zero(n);
        base.u = Eigen::VectorXd::Zero(m);
        for (int draw = 0; draw < 20; ++draw) {
            Eigen::VectorXd s = testsupport::random_vector(rng, grid.size());
            if (s.norm() > 0) s *= 0.01 * unit(rng) / s.norm();
            const auto mapped =
                attainability::attainability_map(sys, eps, T, s, base);
            const auto rec = attainability::reconstruct_control(
                sys, s, eps, T, grid, base.u);
            const Eigen::VectorXd replay =
                replay_mirrored(sys, rec.control, base.q);
            const double err = (replay - mapped.q).norm();
            if (!(err <= kRoundTripTol)) {
                detail = "replay error " + std::to_string(err) + " at system " +
                         std::to_string(i) + " draw " + std::to_string(draw);
                return false;
            }
        }
    }
    return true;
}

// Criterion 5: steering to targets near the free-flow point, confirmed by
// an independent forward simulation and control-set membership.
bool steering(std::string& detail) {
    std::mt19937_64 rng(0xacce9705u);
    std::vector<LinearSystem> systems;
    systems.push_back(testsupport::double_integrator());
    // Gain-normalized draws: the steering construction reaches a
    // neighbourhood whose radius scales with the Jacobian gain, so a fixed
    // 0.01 target sphere needs draws with a fixed gain to stay admissible.
    for (int i = 0; i < 50; ++i) {
        const int n = 2 + i % 3;
        const int m = 1 + i % 2;
        systems.push_back(testsupport::steerable_system(rng, n, m));
    }
    for (std::size_t k = 0; k < systems.size(); ++k) {
        const LinearSystem& sys = systems[k];
        const int n = sys.state_dim();
        const Eigen::VectorXd qbar = Eigen::VectorXd::Zero(n);
        // Free flow from qbar backward over T = 1 stays at the origin, so
        // the target sphere is centred there.
        for (int rep = 0; rep < 3; ++rep) {
            Eigen::VectorXd dir = testsupport::random_vector(rng, n);
            while (dir.norm() < 1e-3) dir = testsupport::random_vector(rng, n);
            const Eigen::VectorXd target = 0.01 * dir / dir.norm();
            attainability::SteerOptions options;
            options.T = 1.0;
            attainability::SteeringResult result;
            try {
                result = attainability::steer(sys, target, qbar, options);
            } catch (const Error& e) {
                detail = "steer threw at system " + std::to_string(k) + ": " +
                         e.what();
                return false;
            }
            if (result.newton_iterations > kSteerIterationCap) {
                detail = "iterations " +
                         std::to_string(result.newton_iterations);
                return false;
            }
            if (!(result.residual <= kSteerResidualTol)) {
                detail = "residual " + std::to_string(result.residual);
                return false;
            }
            if (!result.control.values_in(sys.control_set)) {
                detail = "control left the set at system " + std::to_string(k);
                return false;
            }
            const Eigen::VectorXd endpoint =
                replay_forward(sys, result.control, result.initial_state);
            if (!((endpoint - qbar).norm() <= kSteerResidualTol)) {
                detail = "independent endpoint error " +
                         std::to_string((endpoint - qbar).norm());
                return false;
            }
            if (!((result.initial_state - target).norm() <=
                  kSteerResidualTol)) {
                detail = "initial state misses the target by " +
                         std::to_string((result.initial_state - target).norm());
                return false;
            }
        }
    }
    return true;
}

// Criterion 6: endpoints of rank-deficient systems stay in the subspace the
// construction prescribes. The oracle is the conjugating rotation itself,
// not the rank analysis.
bool deficiency_confinement(std::string& detail) {
    std::mt19937_64 rng(0xacce9706u);
    for (int i = 0; i < 20; ++i) {
        const int n = 3 + i % 2;
        const int n_prime = 1 + i % (n - 1);
        const int m = 1 + i % 2;
        const auto made = testsupport::constructed_deficient(rng, n, n_prime, m);
        const auto cloud = simulate::sample_reachable(
            made.sys, 1.0, 1000, 6, 0x51eedu + static_cast<unsigned>(i), 4);
        const Eigen::MatrixXd projector =
            made.subspace * made.subspace.transpose();
        for (int trial = 0; trial < cloud.endpoints.cols(); ++trial) {
            const Eigen::VectorXd q = cloud.endpoints.col(trial);
            const double dist = (q - projector * q).norm();
            if (!(dist <= kSubspaceTol)) {
                detail = "distance " + std::to_string(dist) + " at system " +
                         std::to_string(i) + " trial " + std::to_string(trial);
                return false;
            }
        }
    }
    return true;
}

// Criterion 7: reachable sets behave convexly and symmetrically on shared
// horizons.
bool convexity_symmetry(std::string& detail) {
    std::mt19937_64 rng(0xacce9707u);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<LinearSystem> systems;
    systems.push_back(testsupport::double_integrator());
    for (int i = 0; i < 4; ++i)
        systems.push_back(
            testsupport::random_system(rng, 2 + i % 3, 1 + i % 2));
    for (std::size_t k = 0; k < systems.size(); ++k) {
        const LinearSystem& sys = systems[k];
        const int m = sys.input_dim();
        auto draw_value = [&] {
            Eigen::VectorXd v = testsupport::random_vector(rng, m);
            if (!sys.control_set.contains(v)) v /= (v.norm() + 1e-12);
            return v;
        };
        auto draw_control = [&] {
            std::vector<PiecewiseConstantControl::Segment> segs;
            segs.push_back({0.25, draw_value()});
            segs.push_back({0.35, draw_value()});
            segs.push_back({0.40, draw_value()});
            return PiecewiseConstantControl(std::move(segs));
        };
        std::vector<std::pair<PiecewiseConstantControl,
                              PiecewiseConstantControl>> pairs;
        pairs.reserve(100);
        for (int rep = 0; rep < 100; ++rep)
            pairs.emplace_back(draw_control(), draw_control());
        const auto report = simulate::convexity_probe(sys, 1.0, pairs);
        if (!(report.max_midpoint_deviation <= kConvexityTol)) {
            detail = "midpoint deviation " +
                     std::to_string(report.max_midpoint_deviation) +
                     " on system " + std::to_string(k);
            return false;
        }
        if (!(report.max_symmetry_deviation <= kConvexityTol)) {
            detail = "symmetry deviation " +
                     std::to_string(report.max_symmetry_deviation) +
                     " on system " + std::to_string(k);
            return false;
        }
    }
    return true;
}

// Criterion 8: the sampling CLI is bitwise deterministic in the worker count.
bool sampling_determinism(std::string& detail) {
    namespace fs = std::filesystem;
    const fs::path dir =
        fs::temp_directory_path() /
        ("ctrlcert_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const fs::path sys_file = dir / "system.txt";
    {
        std::ofstream out(sys_file);
        out << "n = 2\nm = 1\nA = [0 1; 0 0]\nB = [0; 1]\n"
            << "control_set = box 1.0\n";
    }
    auto csv_for = [&](int workers) -> std::string {
        const fs::path csv = dir / ("w" + std::to_string(workers) + ".csv");
        std::ostringstream cmd;
        cmd << CTRLCERT_CLI_PATH << " sample " << sys_file.string()
            << " --trials 200 --segments 6 --seed 123 --workers " << workers
            << " --out " << csv.string() << " >/dev/null 2>&1";
        if (std::system(cmd.str().c_str()) != 0) return "";
        std::ifstream in(csv, std::ios::binary);
        std::ostringstream bytes;
        bytes << in.rdbuf();
        return bytes.str();
    };
    const std::string one = csv_for(1);
    const std::string two = csv_for(2);
    const std::string eight = csv_for(8);
    if (one.empty()) {
        detail = "sampling run failed";
        return false;
    }
    if (one != two || one != eight) {
        detail = "CSV bytes differ between worker counts";
        return false;
    }
    return true;
}

struct Criterion {
    int number;
    const char* label;
    bool (*run)(std::string&);
};

}  // namespace

int main() {
    const Criterion criteria[] = {
        {1, "rank agreement across kalman, lie span, and flow jacobian",
         rank_agreement},
        {2, "series pushforward matches the closed form", pushforward_oracle},
        {3, "coefficient determinant matches the product formula",
         vandermonde_determinant},
        {4, "reconstructed controls replay to the attainability map",
         reconstruction_round_trip},
        {5, "steering reaches sphere targets within budget", steering},
        {6, "deficient systems stay confined to their subspace",
         deficiency_confinement},
        {7, "endpoint clouds are convex and symmetric", convexity_symmetry},
        {8, "sampling CSV is bitwise stable across worker counts",
         sampling_determinism},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        const auto start = std::chrono::steady_clock::now();
        std::string detail;
        bool pass = false;
        try {
            pass = criterion.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("unexpected exception: ") + e.what();
        }
        const double elapsed = seconds_since(start);
        if (pass) {
            std::printf("criterion %d %s: PASS (%.2f s)\n", criterion.number,
                        criterion.label, elapsed);
        } else {
            std::printf("criterion %d %s: FAIL (%.2f s) [%s]\n",
                        criterion.number, criterion.label, elapsed,
                        detail.c_str());
            ++failures;
        }
        std::fflush(stdout);
    }
    return failures;
}
