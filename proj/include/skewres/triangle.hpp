#pragma once

// Run-off triangle: accident year i (rows), development year j (columns),
// calendar year t = i + j - 1. Indices are 1-based throughout.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "skewres/error.hpp"
#include "skewres/format.hpp"

namespace skewres {

enum class CellMask : std::uint8_t { observed, holdout, future };

enum class TriangleFormat { long_csv, wide_csv };

struct Cell {
    int i = 0;
    int j = 0;
    friend bool operator==(const Cell&, const Cell&) = default;
    friend auto operator<=>(const Cell&, const Cell&) = default;
};

inline int calendar_index(int i, int j, int n) {
    if (i < 1 || j < 1 || i > n || j > n) {
        throw InputError("cell (" + std::to_string(i) + "," + std::to_string(j) +
                         ") outside a triangle of size " + std::to_string(n));
    }
    return i + j - 1;
}

/// Square n x n grid; the upper wedge (j <= n - i + 1) carries amounts and is
/// masked observed or holdout, the lower wedge is future and has no amount.
class Triangle {
public:
    Triangle() = default;
    explicit Triangle(int n, int origin_year = 1)
        : n_(n), origin_year_(origin_year),
          amounts_(static_cast<std::size_t>(n) * n, std::numeric_limits<double>::quiet_NaN()),
          mask_(static_cast<std::size_t>(n) * n, CellMask::future) {
        if (n < 1) throw InputError("triangle size must be >= 1");
        for (int i = 1; i <= n; ++i) {
            for (int j = 1; j <= n - i + 1; ++j) mask_[idx(i, j)] = CellMask::observed;
        }
    }

    [[nodiscard]] int n() const noexcept { return n_; }
    [[nodiscard]] int origin_year() const noexcept { return origin_year_; }

    [[nodiscard]] bool is_upper(int i, int j) const noexcept { return j <= n_ - i + 1; }

    [[nodiscard]] CellMask mask(int i, int j) const { return mask_[checked(i, j)]; }

    [[nodiscard]] std::optional<double> amount(int i, int j) const {
        const auto k = checked(i, j);
        if (mask_[k] == CellMask::future) return std::nullopt;
        return amounts_[k];
    }

    [[nodiscard]] double at(int i, int j) const {
        auto a = amount(i, j);
        if (!a) {
            throw InputError("cell (" + std::to_string(i) + "," + std::to_string(j) + ") has no amount");
        }
        return *a;
    }

    void set_amount(int i, int j, double amount) {
        const auto k = checked(i, j);
        if (!is_upper(i, j)) {
            throw InputError("cell (" + std::to_string(i) + "," + std::to_string(j) +
                             ") lies in the future wedge");
        }
        if (!std::isfinite(amount)) throw InputError("non-finite amount in cell (" + std::to_string(i) + "," + std::to_string(j) + ")");
        if (amount < 0.0) {
            throw InputError("negative amount in cell (" + std::to_string(i) + "," + std::to_string(j) + ")");
        }
        amounts_[k] = amount;
    }

    void set_mask(int i, int j, CellMask m) {
        const auto k = checked(i, j);
        if ((m == CellMask::future) != !is_upper(i, j)) {
            throw InputError("mask inconsistent with cell position");
        }
        mask_[k] = m;
    }

    /// Cells with the given mask in row-major order.
    [[nodiscard]] std::vector<Cell> cells(CellMask m) const {
        std::vector<Cell> out;
        for (int i = 1; i <= n_; ++i) {
            for (int j = 1; j <= n_; ++j) {
                if (mask_[idx(i, j)] == m) out.push_back({i, j});
            }
        }
        return out;
    }

    [[nodiscard]] std::size_t upper_count() const noexcept {
        return static_cast<std::size_t>(n_) * (n_ + 1) / 2;
    }

    friend bool operator==(const Triangle& a, const Triangle& b) {
        if (a.n_ != b.n_ || a.origin_year_ != b.origin_year_ || a.mask_ != b.mask_) return false;
        for (std::size_t k = 0; k < a.amounts_.size(); ++k) {
            if (a.mask_[k] == CellMask::future) continue;
            if (a.amounts_[k] != b.amounts_[k]) return false;
        }
        return true;
    }

private:
    [[nodiscard]] std::size_t idx(int i, int j) const noexcept {
        return static_cast<std::size_t>(i - 1) * n_ + (j - 1);
    }
    [[nodiscard]] std::size_t checked(int i, int j) const {
        calendar_index(i, j, n_);
        return idx(i, j);
    }

    int n_ = 0;
    int origin_year_ = 1;
    std::vector<double> amounts_;
    std::vector<CellMask> mask_;
};

// ---------------------------------------------------------------------------
// Parsing and serialization
// ---------------------------------------------------------------------------

namespace detail {

inline bool looks_numeric(std::string_view s) {
    s = trim(s);
    if (s.empty()) return false;
    double v;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    return ec == std::errc() && ptr == s.data() + s.size();
}

inline Triangle read_long_layout(std::istream& in) {
    struct Row {
        long ay, dev;
        double amount;
        int line;
    };
    std::vector<Row> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto f = split_csv(line);
        if (rows.empty() && !looks_numeric(f[0])) continue;  // header
        if (f.size() != 3) {
            throw InputError("line " + std::to_string(lineno) + ": expected 3 fields, got " +
                             std::to_string(f.size()));
        }
        const std::string ctx = "line " + std::to_string(lineno);
        rows.push_back({parse_long(f[0], ctx), parse_long(f[1], ctx), parse_double(f[2], ctx), lineno});
        if (rows.back().amount < 0.0) throw InputError(ctx + ": negative amount");
    }
    if (rows.empty()) throw InputError("no data rows");

    long origin = rows.front().ay;
    for (const auto& r : rows) origin = std::min(origin, r.ay);
    long n = 0;
    for (const auto& r : rows) n = std::max(n, r.ay - origin + 1);

    Triangle tri(static_cast<int>(n), static_cast<int>(origin));
    std::map<Cell, int> seen;
    for (const auto& r : rows) {
        const int i = static_cast<int>(r.ay - origin + 1);
        const int j = static_cast<int>(r.dev);
        const std::string ctx = "line " + std::to_string(r.line);
        if (j < 1 || j > n - i + 1) {
            throw InputError(ctx + ": development year " + std::to_string(j) +
                             " outside the upper triangle for accident year " + std::to_string(r.ay));
        }
        auto [it, inserted] = seen.emplace(Cell{i, j}, r.line);
        if (!inserted) {
            throw InputError("duplicate cell (" + std::to_string(r.ay) + "," + std::to_string(j) +
                             ") on lines " + std::to_string(it->second) + " and " + std::to_string(r.line));
        }
        tri.set_amount(i, j, r.amount);
    }
    if (seen.size() != tri.upper_count()) {
        for (int i = 1; i <= n; ++i) {
            for (int j = 1; j <= n - i + 1; ++j) {
                if (!seen.count({i, j})) {
                    throw InputError("missing upper-triangle cell (" + std::to_string(origin + i - 1) + "," +
                                     std::to_string(j) + ")");
                }
            }
        }
    }
    return tri;
}

inline Triangle read_wide_layout(std::istream& in) {
    std::vector<std::pair<long, std::vector<std::string>>> rows;
    std::vector<int> linenos;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto f = split_csv(line);
        if (rows.empty() && !looks_numeric(f[0])) continue;  // header
        const std::string ctx = "line " + std::to_string(lineno);
        std::vector<std::string> vals;
        for (std::size_t k = 1; k < f.size(); ++k) vals.emplace_back(f[k]);
        rows.emplace_back(parse_long(f[0], ctx), std::move(vals));
        linenos.push_back(lineno);
    }
    if (rows.empty()) throw InputError("no data rows");
    const int n = static_cast<int>(rows.size());
    Triangle tri(n, static_cast<int>(rows.front().first));
    for (int i = 1; i <= n; ++i) {
        const auto& [label, vals] = rows[i - 1];
        const std::string ctx = "line " + std::to_string(linenos[i - 1]);
        if (label != rows.front().first + i - 1) throw InputError(ctx + ": accident years must be contiguous");
        const int expect = n - i + 1;
        for (int j = 1; j <= static_cast<int>(vals.size()); ++j) {
            const bool blank = vals[j - 1].empty();
            if (j <= expect && blank) {
                throw InputError(ctx + ": ragged row, expected " + std::to_string(expect) + " values");
            }
            if (j > expect && !blank) {
                throw InputError(ctx + ": ragged row, value beyond development year " + std::to_string(expect));
            }
            if (!blank) {
                const double a = parse_double(vals[j - 1], ctx);
                if (a < 0.0) throw InputError(ctx + ": negative amount");
                tri.set_amount(i, j, a);
            }
        }
        if (static_cast<int>(vals.size()) < expect) {
            throw InputError(ctx + ": ragged row, expected " + std::to_string(expect) + " values");
        }
    }
    return tri;
}

}  // namespace detail

inline Triangle parse_triangle(std::istream& in, TriangleFormat format) {
    return format == TriangleFormat::long_csv ? detail::read_long_layout(in) : detail::read_wide_layout(in);
}

inline Triangle parse_triangle(const std::string& text, TriangleFormat format) {
    std::istringstream in(text);
    return parse_triangle(in, format);
}

/// Writes every upper-triangle cell (observed and holdout); masks are not part
/// of the interchange formats.
inline void serialize_triangle(const Triangle& tri, TriangleFormat format, std::ostream& out) {
    const int n = tri.n();
    if (format == TriangleFormat::long_csv) {
        out << "accident_year,dev_year,amount\n";
        for (int i = 1; i <= n; ++i) {
            for (int j = 1; j <= n - i + 1; ++j) {
                out << tri.origin_year() + i - 1 << ',' << j << ',' << format_double(tri.at(i, j)) << '\n';
            }
        }
        return;
    }
    out << "accident_year";
    for (int j = 1; j <= n; ++j) out << ',' << j;
    out << '\n';
    for (int i = 1; i <= n; ++i) {
        out << tri.origin_year() + i - 1;
        for (int j = 1; j <= n; ++j) {
            out << ',';
            if (j <= n - i + 1) out << format_double(tri.at(i, j));
        }
        out << '\n';
    }
}

inline std::string serialize_triangle(const Triangle& tri, TriangleFormat format) {
    std::ostringstream out;
    serialize_triangle(tri, format, out);
    return out.str();
}

// ---------------------------------------------------------------------------
// Transformations
// ---------------------------------------------------------------------------

/// Re-mask the k most recent calendar diagonals as holdout.
inline Triangle holdout_split(const Triangle& tri, int k) {
    const int n = tri.n();
    if (k < 0 || k >= n) {
        throw ConfigError("holdout must satisfy 0 <= k < n (k=" + std::to_string(k) + ", n=" + std::to_string(n) + ")");
    }
    Triangle out = tri;
    for (int i = 1; i <= n; ++i) {
        for (int j = 1; j <= n - i + 1; ++j) {
            out.set_mask(i, j, i + j - 1 > n - k ? CellMask::holdout : CellMask::observed);
        }
    }
    return out;
}

/// Running row sums over cells carrying amounts; masks are preserved.
inline Triangle cumulative(const Triangle& tri) {
    Triangle out = tri;
    for (int i = 1; i <= tri.n(); ++i) {
        double acc = 0.0;
        for (int j = 1; j <= tri.n() - i + 1; ++j) {
            acc += tri.at(i, j);
            out.set_amount(i, j, acc);
        }
    }
    return out;
}

struct ZeroPolicy {
    enum class Kind { drop, offset };
    Kind kind = Kind::drop;
    double c = 1.0;

    static ZeroPolicy drop() { return {}; }
    static ZeroPolicy offset(double c) {
        if (!(c > 0.0)) throw ConfigError("zero offset must be > 0");
        return {Kind::offset, c};
    }

    [[nodiscard]] std::string describe() const {
        return kind == Kind::drop ? std::string("drop") : "offset(" + format_double(c) + ")";
    }

    /// Log-scale value of an amount, or nullopt if the cell leaves the likelihood.
    [[nodiscard]] std::optional<double> apply(double y) const {
        if (y < 0.0) throw InputError("negative amount cannot be log-transformed");
        if (kind == Kind::offset) return std::log(y + c);
        if (y == 0.0) return std::nullopt;
        return std::log(y);
    }
};

inline ZeroPolicy parse_zero_policy(std::string_view s) {
    s = trim(s);
    if (s == "drop") return ZeroPolicy::drop();
    if (s.rfind("offset", 0) == 0) {
        auto rest = s.substr(6);
        if (rest.empty()) return ZeroPolicy::offset(1.0);
        if (rest.front() == ':' || rest.front() == '=') rest.remove_prefix(1);
        else if (rest.front() == '(' && rest.back() == ')') rest = rest.substr(1, rest.size() - 2);
        return ZeroPolicy::offset(parse_double(rest, "zero policy"));
    }
    throw ConfigError("unknown zero policy '" + std::string(s) + "' (use drop or offset[:c])");
}

struct LogCell {
    int i = 0;
    int j = 0;
    double z = 0.0;
};

/// Log-scale observed cells that enter the likelihood.
struct LogTriangle {
    int n = 0;
    std::vector<LogCell> cells;
    std::vector<Cell> dropped;  // observed cells removed by the zero policy
    std::vector<Cell> training;  // every observed cell, dropped or not
    ZeroPolicy policy;
};

/// Log-transform the observed cells; holdout and future cells are ignored.
inline LogTriangle log_transform(const Triangle& tri, ZeroPolicy policy) {
    LogTriangle out;
    out.n = tri.n();
    out.policy = policy;
    for (const Cell& c : tri.cells(CellMask::observed)) {
        out.training.push_back(c);
        if (auto z = policy.apply(tri.at(c.i, c.j))) {
            out.cells.push_back({c.i, c.j, *z});
        } else {
            out.dropped.push_back(c);
        }
    }
    return out;
}

}  // namespace skewres
