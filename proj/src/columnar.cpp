#include "fband/columnar.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "fband/error.hpp"

namespace fband {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_columnar(std::ostream& out, const FunctionalSample& sample) {
    const Grid& g = sample.grid(0);
    for (std::size_t j = 1; j < sample.p(); ++j)
        if (!(sample.grid(j) == g)) throw StructuralError("write_columnar: components must share one grid");
    out << "grid " << format_double(g.lo()) << ' ' << format_double(g.hi()) << ' ' << g.size() << ' '
        << sample.p() << '\n';
    for (std::size_t i = 0; i < g.size(); ++i) {
        out << format_double(g.point(i));
        for (std::size_t j = 0; j < sample.p(); ++j) out << ' ' << format_double(sample(j, i));
        out << '\n';
    }
}

void write_columnar(std::ostream& out, std::span<const FunctionalSample> samples) {
    for (const auto& s : samples) write_columnar(out, s);
}

std::vector<FunctionalSample> read_columnar(std::istream& in) {
    std::vector<FunctionalSample> out;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream hdr(line);
        std::string tag;
        double lo = 0, hi = 0;
        std::size_t n = 0, p = 0;
        if (!(hdr >> tag >> lo >> hi >> n >> p) || tag != "grid")
            throw ParseError("block " + std::to_string(out.size()), lineno, "expected 'grid lo hi n p' header");
        const Grid grid(lo, hi, n);
        std::vector<std::vector<double>> comps(p, std::vector<double>(n));
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::getline(in, line))
                throw ParseError("block " + std::to_string(out.size()), lineno, "truncated block");
            ++lineno;
            std::istringstream row(line);
            double q = 0;
            if (!(row >> q)) throw ParseError("row " + std::to_string(i), lineno, "missing grid point");
            for (std::size_t j = 0; j < p; ++j)
                if (!(row >> comps[j][i]))
                    throw ParseError("row " + std::to_string(i), lineno, "missing component value");
        }
        out.emplace_back(grid, std::move(comps));
    }
    return out;
}

}  // namespace fband
