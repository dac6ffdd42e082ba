#include "ctrlcert/parse.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <string>
#include <system_error>
#include <vector>

namespace ctrlcert {

namespace {

// Whitespace- and comment-skipping cursor with 1-based line/column tracking.
class Cursor {
  public:
    explicit Cursor(std::string_view text) : text_(text) {}

    void skip_space() {
        while (pos_ < text_.size()) {
            const char c = text_[pos_];
            if (c == '#') {
                while (pos_ < text_.size() && text_[pos_] != '\n') {
                    advance();
                }
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
    }

    bool at_end() {
        skip_space();
        return pos_ >= text_.size();
    }

    char peek() {
        skip_space();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    void expect(char c, const char* what) {
        if (peek() != c) {
            fail(std::string("expected '") + c + "' " + what);
        }
        advance();
    }

    bool consume(char c) {
        if (peek() == c) {
            advance();
            return true;
        }
        return false;
    }

    std::string identifier() {
        skip_space();
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                text_[pos_] == '_')) {
            advance();
        }
        if (start == pos_) {
            fail("expected an identifier");
        }
        return std::string(text_.substr(start, pos_ - start));
    }

    double number() {
        skip_space();
        const std::size_t start = pos_;
        if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) {
            advance();
        }
        bool digits = false;
        while (pos_ < text_.size() &&
               (std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
                text_[pos_] == '.' || text_[pos_] == 'e' || text_[pos_] == 'E' ||
                ((text_[pos_] == '+' || text_[pos_] == '-') &&
                 (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E')))) {
            digits = digits || std::isdigit(static_cast<unsigned char>(text_[pos_]));
            advance();
        }
        double value = 0.0;
        const char* first = text_.data() + start;
        const char* last = text_.data() + pos_;
        const auto res = std::from_chars(first, last, value);
        if (!digits || res.ec != std::errc() || res.ptr != last) {
            pos_ = start;
            sync_position();
            fail("expected a number");
        }
        return value;
    }

    long integer() {
        skip_space();
        const std::size_t start = pos_;
        long value = 0;
        if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) {
            advance();
        }
        while (pos_ < text_.size() &&
               std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
            advance();
        }
        const char* first = text_.data() + start;
        const char* last = text_.data() + pos_;
        const auto res = std::from_chars(first, last, value);
        if (res.ec != std::errc() || res.ptr != last || first == last) {
            pos_ = start;
            sync_position();
            fail("expected an integer");
        }
        return value;
    }

    bool next_is_number() {
        const char c = peek();
        return std::isdigit(static_cast<unsigned char>(c)) || c == '+' ||
               c == '-' || c == '.';
    }

    [[noreturn]] void fail(const std::string& what) {
        skip_space();
        throw ParseError(what, line_, col_);
    }

  private:
    void advance() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    // Recompute line/col after rolling pos_ back.
    void sync_position() {
        line_ = 1;
        col_ = 1;
        for (std::size_t i = 0; i < pos_; ++i) {
            if (text_[i] == '\n') {
                ++line_;
                col_ = 1;
            } else {
                ++col_;
            }
        }
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t col_ = 1;
};

void expect_key(Cursor& cur, const char* key) {
    const std::string id = cur.identifier();
    if (id != key) {
        cur.fail(std::string("expected '") + key + "', got '" + id + "'");
    }
    cur.expect('=', "after key");
}

Eigen::MatrixXd parse_matrix(Cursor& cur, long rows, long cols,
                             const char* name) {
    cur.expect('[', "to open the matrix");
    std::vector<std::vector<double>> data;
    data.emplace_back();
    while (!cur.consume(']')) {
        if (cur.consume(';')) {
            data.emplace_back();
            continue;
        }
        if (!cur.next_is_number()) {
            cur.fail(std::string("unexpected token inside ") + name);
        }
        data.back().push_back(cur.number());
    }
    if (static_cast<long>(data.size()) != rows) {
        cur.fail(std::string(name) + ": " + std::to_string(rows) +
                 " rows expected, got " + std::to_string(data.size()));
    }
    Eigen::MatrixXd M(rows, cols);
    for (long r = 0; r < rows; ++r) {
        if (static_cast<long>(data[r].size()) != cols) {
            cur.fail(std::string(name) + " row " + std::to_string(r + 1) +
                     ": " + std::to_string(cols) + " entries expected, got " +
                     std::to_string(data[r].size()));
        }
        for (long c = 0; c < cols; ++c) {
            M(r, c) = data[r][c];
        }
    }
    return M;
}

}  // namespace

LinearSystem parse_system(std::string_view text) {
    Cursor cur(text);

    expect_key(cur, "n");
    const long n = cur.integer();
    expect_key(cur, "m");
    const long m = cur.integer();
    if (n < 1 || m < 1) {
        throw ValidationError("n and m must be at least 1");
    }

    expect_key(cur, "A");
    Eigen::MatrixXd A = parse_matrix(cur, n, n, "A");
    expect_key(cur, "B");
    Eigen::MatrixXd B = parse_matrix(cur, n, m, "B");

    expect_key(cur, "control_set");
    const std::string kind = cur.identifier();
    std::vector<double> radii;
    while (cur.next_is_number()) {
        radii.push_back(cur.number());
    }
    if (!cur.at_end()) {
        cur.fail("unexpected trailing input");
    }

    if (kind == "box") {
        if (radii.size() != 1 && static_cast<long>(radii.size()) != m) {
            throw ValidationError("box takes one half-width or one per axis");
        }
        Eigen::VectorXd half_widths(m);
        for (long i = 0; i < m; ++i) {
            half_widths[i] = radii.size() == 1 ? radii[0] : radii[i];
        }
        return LinearSystem(std::move(A), std::move(B),
                            ControlSet::box(half_widths));
    }
    if (kind == "ball") {
        if (radii.size() != 1) {
            throw ValidationError("ball takes exactly one radius");
        }
        return LinearSystem(std::move(A), std::move(B),
                            ControlSet::ball(radii[0], static_cast<int>(m)));
    }
    throw ValidationError("control_set kind must be 'box' or 'ball'");
}

std::string format_shortest(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::string format_report(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return std::string(buf);
}

namespace {

std::string matrix_literal(const Eigen::MatrixXd& M) {
    std::string out = "[";
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        if (r > 0) {
            out += "; ";
        }
        for (Eigen::Index c = 0; c < M.cols(); ++c) {
            if (c > 0) {
                out += ' ';
            }
            out += format_shortest(M(r, c));
        }
    }
    out += "]";
    return out;
}

}  // namespace

std::string serialize_system(const LinearSystem& sys) {
    std::string out;
    out += "n = " + std::to_string(sys.state_dim()) + "\n";
    out += "m = " + std::to_string(sys.input_dim()) + "\n";
    out += "A = " + matrix_literal(sys.A) + "\n";
    out += "B = " + matrix_literal(sys.B) + "\n";
    out += "control_set = ";
    if (sys.control_set.kind() == ControlSet::Kind::Ball) {
        out += "ball " + format_shortest(sys.control_set.radius(0));
    } else {
        out += "box";
        for (int i = 0; i < sys.control_set.dimension(); ++i) {
            out += ' ' + format_shortest(sys.control_set.radius(i));
        }
    }
    out += "\n";
    return out;
}

PiecewiseConstantControl parse_control(std::string_view text) {
    std::vector<PiecewiseConstantControl::Segment> segments;
    std::size_t line_no = 0;
    std::size_t start = 0;
    long m = -1;
    while (start <= text.size()) {
        const std::size_t nl = text.find('\n', start);
        std::string_view line = text.substr(
            start, nl == std::string_view::npos ? text.size() - start : nl - start);
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }

        std::vector<double> nums;
        std::size_t i = 0;
        while (i < line.size()) {
            if (std::isspace(static_cast<unsigned char>(line[i]))) {
                ++i;
                continue;
            }
            double value = 0.0;
            const auto res =
                std::from_chars(line.data() + i, line.data() + line.size(), value);
            if (res.ec != std::errc() || !std::isfinite(value)) {
                throw ParseError("expected a number", line_no, i + 1);
            }
            nums.push_back(value);
            i = static_cast<std::size_t>(res.ptr - line.data());
        }

        if (!nums.empty()) {
            if (nums.size() < 2) {
                throw ParseError("segment line needs a duration and values",
                                 line_no, 1);
            }
            if (m < 0) {
                m = static_cast<long>(nums.size()) - 1;
            } else if (static_cast<long>(nums.size()) - 1 != m) {
                throw ParseError("segment line has inconsistent value count",
                                 line_no, 1);
            }
            if (!(nums[0] > 0.0)) {
                throw ParseError("segment duration must be positive", line_no, 1);
            }
            Eigen::VectorXd value(m);
            for (long k = 0; k < m; ++k) {
                value[k] = nums[static_cast<std::size_t>(k) + 1];
            }
            segments.push_back({nums[0], std::move(value)});
        }

        if (nl == std::string_view::npos) {
            break;
        }
        start = nl + 1;
    }
    if (segments.empty()) {
        throw ParseError("control file has no segments", line_no, 1);
    }
    return PiecewiseConstantControl(std::move(segments));
}

std::string serialize_control(const PiecewiseConstantControl& control,
                              const std::string& header) {
    std::string out;
    if (!header.empty()) {
        std::size_t start = 0;
        while (start <= header.size()) {
            const std::size_t nl = header.find('\n', start);
            const std::string_view line(
                header.data() + start,
                (nl == std::string::npos ? header.size() : nl) - start);
            out += "# ";
            out += line;
            out += "\n";
            if (nl == std::string::npos) {
                break;
            }
            start = nl + 1;
        }
    }
    for (const auto& seg : control.segments()) {
        out += format_shortest(seg.duration);
        for (Eigen::Index i = 0; i < seg.value.size(); ++i) {
            out += ' ' + format_shortest(seg.value[i]);
        }
        out += "\n";
    }
    return out;
}

}  // namespace ctrlcert
