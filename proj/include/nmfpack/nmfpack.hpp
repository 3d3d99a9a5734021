#pragma once

#include "nmfpack/approx_nmf.hpp"
#include "nmfpack/convex_oracle.hpp"
#include "nmfpack/errors.hpp"
#include "nmfpack/exact_nmf.hpp"
#include "nmfpack/factorization.hpp"
#include "nmfpack/instance_gen.hpp"
#include "nmfpack/io.hpp"
#include "nmfpack/linprog.hpp"
#include "nmfpack/matrix.hpp"
#include "nmfpack/nmf_heuristics.hpp"
#include "nmfpack/parallel.hpp"
#include "nmfpack/partition_enum.hpp"
#include "nmfpack/rng.hpp"
#include "nmfpack/separable.hpp"
#include "nmfpack/separable_robust.hpp"
#include "nmfpack/svd.hpp"
