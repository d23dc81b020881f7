#ifndef MLMCOPT_TRANSFER_HPP
#define MLMCOPT_TRANSFER_HPP

#include "mlmcopt/grid.hpp"

namespace mlmcopt {

/// Level transfer operators for the cell-centered hierarchy.
///
/// Prolongation interpolates cell-center values multilinearly, extrapolating
/// the boundary-adjacent line beyond the outermost coarse centers; linear
/// profiles (and in particular constants) are reproduced exactly on every
/// level. Restriction is defined as c^{-1} times the transpose of
/// prolongation with c = 2^d, never an independent stencil, which makes the
/// adjoint identity
///   (prolong(v), w)_{l+1} = (v, restrict(w))_l
/// exact in the discrete inner product.

/// Interpolate one level up.
GridFunction prolong(const GridFunction& v, const GridHierarchy& h);

/// Restrict one level down (scaled transpose of prolong).
GridFunction restrict(const GridFunction& v, const GridHierarchy& h);

/// Chained transfer between arbitrary levels; identity when levels are equal.
GridFunction transfer(const GridFunction& v, int target_level, const GridHierarchy& h);

}  // namespace mlmcopt

#endif
