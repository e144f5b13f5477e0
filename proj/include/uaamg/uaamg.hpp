#pragma once

#include "uaamg/aggregation.hpp"
#include "uaamg/analysis.hpp"
#include "uaamg/dense.hpp"
#include "uaamg/error.hpp"
#include "uaamg/galerkin.hpp"
#include "uaamg/hierarchy.hpp"
#include "uaamg/io.hpp"
#include "uaamg/parallel.hpp"
#include "uaamg/partition.hpp"
#include "uaamg/reshaping.hpp"
#include "uaamg/smoother.hpp"
#include "uaamg/solvers.hpp"
#include "uaamg/sparse.hpp"
