#include "mlmcopt/grid_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace mlmcopt {

void write_grid_function(std::ostream& os, const GridFunction& g, const std::string& comment) {
    if (g.values.size() != g.expected_size())
        throw std::invalid_argument("write_grid_function: malformed grid function");
    if (!comment.empty()) os << "# " << comment << "\n";
    os << "d,m0,level,index,value\n";
    os << std::setprecision(17);
    for (std::size_t i = 0; i < g.values.size(); ++i)
        os << g.dim << "," << g.m0 << "," << g.level << "," << i << "," << g.values[i] << "\n";
}

GridFunction read_grid_function(std::istream& is) {
    std::string line;
    GridFunction g;
    bool header_seen = false;
    std::size_t expected = 0;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line != "d,m0,level,index,value")
                throw std::runtime_error("read_grid_function: unexpected header '" + line + "'");
            header_seen = true;
            continue;
        }
        std::istringstream row(line);
        int d, m0, level;
        std::size_t index;
        double value;
        char c;
        if (!(row >> d >> c >> m0 >> c >> level >> c >> index >> c >> value))
            throw std::runtime_error("read_grid_function: malformed row '" + line + "'");
        if (g.values.empty()) {
            g.dim = d;
            g.m0 = m0;
            g.level = level;
            expected = g.expected_size();
            g.values.reserve(expected);
        } else if (d != g.dim || m0 != g.m0 || level != g.level) {
            throw std::runtime_error("read_grid_function: inconsistent metadata in row '" + line + "'");
        }
        if (index != g.values.size())
            throw std::runtime_error("read_grid_function: rows out of order at index " +
                                     std::to_string(index));
        g.values.push_back(value);
    }
    if (!header_seen) throw std::runtime_error("read_grid_function: missing header");
    if (g.values.size() != expected)
        throw std::runtime_error("read_grid_function: expected " + std::to_string(expected) +
                                 " rows, found " + std::to_string(g.values.size()));
    return g;
}

void save_grid_function(const std::string& path, const GridFunction& g, const std::string& comment) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_grid_function: cannot open " + path);
    write_grid_function(os, g, comment);
}

GridFunction load_grid_function(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_grid_function: cannot open " + path);
    return read_grid_function(is);
}

}  // namespace mlmcopt
