#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ctrlcert/attainability.hpp"
#include "ctrlcert/kalman.hpp"
#include "ctrlcert/lie.hpp"
#include "ctrlcert/parse.hpp"
#include "ctrlcert/simulate.hpp"

namespace {

constexpr int kExitSuccess = 0;
constexpr int kExitNumeric = 1;
constexpr int kExitInput = 2;

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ctrlcert::ParseError("cannot open file: " + path, 0, 0);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::string join_values(const Eigen::VectorXd& v) {
    std::string out;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i > 0) {
            out += ' ';
        }
        out += ctrlcert::format_report(v[i]);
    }
    return out;
}

void print_kv(const std::string& key, const std::string& value) {
    std::cout << key << ": " << value << "\n";
}

void print_kv(const std::string& key, double value) {
    print_kv(key, ctrlcert::format_report(value));
}

void print_kv(const std::string& key, int value) {
    print_kv(key, std::to_string(value));
}

Eigen::VectorXd to_vector(const std::vector<double>& values) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) {
        v[static_cast<Eigen::Index>(i)] = values[i];
    }
    return v;
}

int cmd_analyze(const std::string& file, double tol, double T) {
    const auto total_start = std::chrono::steady_clock::now();
    const auto sys = ctrlcert::parse_system(read_file(file));

    auto start = std::chrono::steady_clock::now();
    const auto kalman = ctrlcert::kalman::analyze(sys, tol);
    const double kalman_seconds = seconds_since(start);

    start = std::chrono::steady_clock::now();
    const auto span = ctrlcert::lie::lie_span_at(
        ctrlcert::lie::system_fields(sys),
        Eigen::VectorXd::Zero(sys.state_dim()), tol);
    const double lie_seconds = seconds_since(start);

    start = std::chrono::steady_clock::now();
    const auto cert = ctrlcert::attainability::certify(sys, T, tol);
    const double certificate_seconds = seconds_since(start);

    print_kv("n", sys.state_dim());
    print_kv("m", sys.input_dim());
    print_kv("kalman_rank", kalman.rank);
    print_kv("lie_span_dim", span.rank);
    print_kv("ell_max", cert.profile.ell_max);
    std::string n_ell;
    for (std::size_t i = 0; i < cert.profile.n_ell.size(); ++i) {
        if (i > 0) {
            n_ell += ' ';
        }
        n_ell += std::to_string(cert.profile.n_ell[i]);
    }
    print_kv("n_ell", n_ell);
    print_kv("T", cert.T);
    print_kv("epsilon", cert.eps);
    print_kv("coefficient_determinant", cert.determinant);
    print_kv("predicted_determinant",
             ctrlcert::attainability::predicted_determinant(
                 ctrlcert::attainability::TauGrid(sys.input_dim(),
                                                  cert.profile.ell_max),
                 cert.eps));
    print_kv("jacobian_rank", cert.jacobian_rank);
    print_kv("verdict",
             cert.verdict ==
                     ctrlcert::attainability::CertVerdict::LocallyControllable
                 ? "LocallyControllable"
                 : "Deficient");
    print_kv("kalman_seconds", kalman_seconds);
    print_kv("lie_seconds", lie_seconds);
    print_kv("certificate_seconds", certificate_seconds);
    print_kv("total_seconds", seconds_since(total_start));
    return kExitSuccess;
}

int cmd_steer(const std::string& file, const std::vector<double>& target_raw,
              const std::vector<double>& qbar_raw, double T, double eps,
              double tol, const std::string& out) {
    const auto sys = ctrlcert::parse_system(read_file(file));
    const int n = sys.state_dim();
    if (static_cast<int>(target_raw.size()) != n) {
        std::cout << "error: target needs " << n << " components\n";
        return kExitInput;
    }
    if (!qbar_raw.empty() && static_cast<int>(qbar_raw.size()) != n) {
        std::cout << "error: qbar needs " << n << " components\n";
        return kExitInput;
    }
    const Eigen::VectorXd target = to_vector(target_raw);
    const Eigen::VectorXd qbar = qbar_raw.empty()
                                     ? Eigen::VectorXd::Zero(n)
                                     : to_vector(qbar_raw);

    ctrlcert::attainability::SteerOptions options;
    options.T = T;
    options.eps = eps;
    options.tol_rel = tol;

    const auto cert = ctrlcert::attainability::certify(sys, T, tol);
    if (cert.verdict != ctrlcert::attainability::CertVerdict::LocallyControllable) {
        print_kv("certificate", "Deficient");
        return kExitNumeric;
    }
    if (options.eps <= 0.0) {
        options.eps = cert.eps;
    }

    const auto result = ctrlcert::attainability::steer(sys, target, qbar, options);

    print_kv("certificate", "LocallyControllable");
    print_kv("T", T);
    print_kv("epsilon", options.eps);
    print_kv("newton_iterations", result.newton_iterations);
    print_kv("residual", result.residual);
    print_kv("q0", join_values(result.initial_state));
    print_kv("qbar", join_values(qbar));
    print_kv("segments",
             static_cast<int>(result.control.segments().size()));

    if (!out.empty()) {
        std::string header = "forward control steering q0 to qbar\n";
        header += "q0: " + join_values(result.initial_state) + "\n";
        header += "qbar: " + join_values(qbar) + "\n";
        header += "T: " + ctrlcert::format_report(T) + "\n";
        header += "residual: " + ctrlcert::format_report(result.residual);
        std::ofstream file_out(out);
        if (!file_out) {
            std::cout << "error: cannot write " << out << "\n";
            return kExitNumeric;
        }
        file_out << ctrlcert::serialize_control(result.control, header);
        print_kv("control_file", out);
    }
    return result.residual <= 1e-6 ? kExitSuccess : kExitNumeric;
}

int cmd_sample(const std::string& file, double T, int trials, int segments,
               std::uint64_t seed, int workers, const std::string& out) {
    const auto sys = ctrlcert::parse_system(read_file(file));
    if (trials < 1) {
        std::cout << "error: trials must be positive\n";
        return kExitInput;
    }
    if (segments < 1) {
        std::cout << "error: segments must be positive\n";
        return kExitInput;
    }
    const auto cloud =
        ctrlcert::simulate::sample_reachable(sys, T, trials, segments, seed,
                                             workers);

    std::ostringstream csv;
    csv << "trial,T";
    for (int i = 1; i <= sys.state_dim(); ++i) {
        csv << ",q_" << i;
    }
    csv << "\n";
    for (int trial = 0; trial < trials; ++trial) {
        csv << trial << ',' << ctrlcert::format_shortest(T);
        for (int i = 0; i < sys.state_dim(); ++i) {
            csv << ',' << ctrlcert::format_shortest(cloud.endpoints(i, trial));
        }
        csv << "\n";
    }

    std::ostream* summary = &std::cout;
    if (!out.empty()) {
        std::ofstream file_out(out, std::ios::binary);
        if (!file_out) {
            std::cout << "error: cannot write " << out << "\n";
            return kExitNumeric;
        }
        file_out << csv.str();
    } else {
        std::cout << csv.str();
        summary = &std::cerr;
    }

    const auto probe = ctrlcert::simulate::subspace_probe(cloud);
    *summary << "trials: " << trials << "\n";
    *summary << "segments: " << segments << "\n";
    *summary << "seed: " << seed << "\n";
    *summary << "T: " << ctrlcert::format_report(T) << "\n";
    *summary << "L_dimension: " << probe.dimension << "\n";
    *summary << "delta: " << ctrlcert::format_report(probe.ball_radius_estimate)
             << "\n";
    if (!out.empty()) {
        *summary << "csv_file: " << out << "\n";
    }
    return kExitSuccess;
}

int cmd_simulate(const std::string& file, const std::string& control_file,
                 const std::vector<double>& q0_raw, bool forward,
                 const std::string& out) {
    const auto parsed = ctrlcert::parse_system(read_file(file));
    const auto control = ctrlcert::parse_control(read_file(control_file));
    if (control.input_dim() != parsed.input_dim()) {
        std::cout << "error: control has " << control.input_dim()
                  << " inputs, system expects " << parsed.input_dim() << "\n";
        return kExitInput;
    }
    if (!control.values_in(parsed.control_set)) {
        std::cout << "error: control values leave the control set\n";
        return kExitInput;
    }
    if (!q0_raw.empty() &&
        static_cast<int>(q0_raw.size()) != parsed.state_dim()) {
        std::cout << "error: q0 needs " << parsed.state_dim()
                  << " components\n";
        return kExitInput;
    }

    // The graph integrates dq = -Aq - Bu; mirroring the system first makes
    // the same machinery trace dq = +Aq + Bu instead.
    const ctrlcert::LinearSystem sys = forward ? parsed.mirrored() : parsed;
    ctrlcert::ExtendedState x0;
    x0.t = 0.0;
    x0.q = q0_raw.empty() ? Eigen::VectorXd::Zero(parsed.state_dim())
                          : to_vector(q0_raw);
    x0.u = Eigen::VectorXd::Zero(parsed.input_dim());

    const auto graph = ctrlcert::simulate::build_stepped_graph(sys, control, x0);

    constexpr int kPointsPerArc = 64;
    std::ostringstream csv;
    csv << "t";
    for (int i = 1; i <= parsed.state_dim(); ++i) {
        csv << ",q_" << i;
    }
    for (int i = 1; i <= parsed.input_dim(); ++i) {
        csv << ",u_" << i;
    }
    csv << ",arc_kind\n";
    auto emit = [&](double t, const Eigen::VectorXd& q, const Eigen::VectorXd& u,
                    const char* kind) {
        csv << ctrlcert::format_shortest(t);
        for (int i = 0; i < q.size(); ++i) {
            csv << ',' << ctrlcert::format_shortest(q[i]);
        }
        for (int i = 0; i < u.size(); ++i) {
            csv << ',' << ctrlcert::format_shortest(u[i]);
        }
        csv << ',' << kind << "\n";
    };

    std::size_t odd_index = 0;
    std::size_t even_index = 0;
    for (const auto kind : graph.order) {
        if (kind == ctrlcert::simulate::SteppedGraph::Kind::Even) {
            const auto& arc = graph.even_arcs[even_index++];
            emit(arc.from.t, arc.from.q, arc.from.u, "even");
            emit(arc.to.t, arc.to.q, arc.to.u, "even");
            continue;
        }
        const auto& arc = graph.odd_arcs[odd_index++];
        for (int j = 0; j < kPointsPerArc; ++j) {
            const double sigma =
                arc.duration * static_cast<double>(j) / (kPointsPerArc - 1);
            const Eigen::VectorXd q = ctrlcert::simulate::integrate_segment(
                sys, arc.start.q, arc.start.u, sigma, -1);
            emit(arc.start.t + sigma, q, arc.start.u, "odd");
        }
    }

    if (!out.empty()) {
        std::ofstream file_out(out, std::ios::binary);
        if (!file_out) {
            std::cout << "error: cannot write " << out << "\n";
            return kExitNumeric;
        }
        file_out << csv.str();
    } else {
        std::cout << csv.str();
    }

    const auto& final_state = graph.final_state();
    std::ostream& report = out.empty() ? std::cerr : std::cout;
    report << "horizon: " << ctrlcert::format_report(control.horizon()) << "\n";
    report << "endpoint: " << join_values(final_state.q) << "\n";
    report << "odd_arcs: " << graph.odd_arcs.size() << "\n";
    report << "even_arcs: " << graph.even_arcs.size() << "\n";
    if (!out.empty()) {
        report << "csv_file: " << out << "\n";
    }
    return kExitSuccess;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"controllability certificates for linear systems"};
    app.require_subcommand(1);

    std::string file;
    double tol = 1e-9;
    double T = 1.0;

    auto* analyze = app.add_subcommand(
        "analyze", "rank certificates and the attainability verdict");
    analyze->add_option("file", file, "system description file")->required();
    analyze->add_option("--tol", tol, "relative rank tolerance");
    analyze->add_option("--T", T, "certificate horizon");

    std::vector<double> target_raw;
    std::vector<double> qbar_raw;
    double eps = 0.0;
    std::string out;

    auto* steer = app.add_subcommand(
        "steer", "construct a piecewise-constant control reaching qbar");
    steer->add_option("file", file, "system description file")->required();
    steer->add_option("--target", target_raw,
                      "initial state to steer from (comma separated)")
        ->required()
        ->delimiter(',');
    steer->add_option("--qbar", qbar_raw,
                      "terminal state, default origin (comma separated)")
        ->delimiter(',');
    steer->add_option("--T", T, "horizon");
    steer->add_option("--eps", eps, "flow-box parameter, 0 searches");
    steer->add_option("--tol", tol, "relative rank tolerance");
    steer->add_option("--out", out, "write the control file here");

    int trials = 1000;
    int segments = 8;
    std::uint64_t seed = 0;
    int workers = 1;

    auto* sample = app.add_subcommand(
        "sample", "random reachable endpoints and the subspace probe");
    sample->add_option("file", file, "system description file")->required();
    sample->add_option("--T", T, "horizon");
    sample->add_option("--trials", trials, "number of random controls");
    sample->add_option("--segments", segments, "segments per control");
    sample->add_option("--seed", seed, "base seed");
    sample->add_option("--workers", workers, "worker threads");
    sample->add_option("--out", out, "write the CSV here");

    std::string control_file;
    std::vector<double> q0_raw;
    bool forward = false;

    auto* simulate = app.add_subcommand(
        "simulate", "trace the stepped graph of a control file");
    simulate->add_option("file", file, "system description file")->required();
    simulate->add_option("--control", control_file, "control file")
        ->required();
    simulate->add_option("--q0", q0_raw,
                         "initial state, default origin (comma separated)")
        ->delimiter(',');
    simulate->add_flag("--forward", forward,
                       "integrate dq = +Aq + Bu instead of dq = -Aq - Bu");
    simulate->add_option("--out", out, "write the CSV here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitSuccess : kExitInput;
    }

    try {
        if (*analyze) {
            return cmd_analyze(file, tol, T);
        }
        if (*steer) {
            return cmd_steer(file, target_raw, qbar_raw, T, eps, tol, out);
        }
        if (*sample) {
            return cmd_sample(file, T, trials, segments, seed, workers, out);
        }
        if (*simulate) {
            return cmd_simulate(file, control_file, q0_raw, forward, out);
        }
    } catch (const ctrlcert::ParseError& e) {
        std::cout << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const ctrlcert::ValidationError& e) {
        std::cout << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const ctrlcert::DimensionError& e) {
        std::cout << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const ctrlcert::ControlOutOfSet& e) {
        std::cout << "error: " << e.what() << "\n";
        return *simulate ? kExitInput : kExitNumeric;
    } catch (const ctrlcert::Error& e) {
        std::cout << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cout << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitInput;
}
