#ifndef MLMCOPT_GRID_IO_HPP
#define MLMCOPT_GRID_IO_HPP

#include <iosfwd>
#include <string>

#include "mlmcopt/grid.hpp"

namespace mlmcopt {

/// CSV field format: one header row `d,m0,level,index,value`, then one row
/// per cell in lexicographic order (x1 fastest). The metadata columns repeat
/// per row so any slice of the file stays self-describing.
void write_grid_function(std::ostream& os, const GridFunction& g, const std::string& comment = "");
GridFunction read_grid_function(std::istream& is);

void save_grid_function(const std::string& path, const GridFunction& g,
                        const std::string& comment = "");
GridFunction load_grid_function(const std::string& path);

}  // namespace mlmcopt

#endif
