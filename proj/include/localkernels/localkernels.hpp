#ifndef LOCALKERNELS_LOCALKERNELS_HPP
#define LOCALKERNELS_LOCALKERNELS_HPP

#include "localkernels/analytic.hpp"
#include "localkernels/conformal.hpp"
#include "localkernels/density.hpp"
#include "localkernels/diffeo.hpp"
#include "localkernels/errors.hpp"
#include "localkernels/generators.hpp"
#include "localkernels/kernel_matrix.hpp"
#include "localkernels/kernels.hpp"
#include "localkernels/lanczos.hpp"
#include "localkernels/manifolds.hpp"
#include "localkernels/metrics.hpp"
#include "localkernels/neighbors.hpp"
#include "localkernels/parallel.hpp"
#include "localkernels/point_cloud.hpp"
#include "localkernels/spectral.hpp"

#endif
