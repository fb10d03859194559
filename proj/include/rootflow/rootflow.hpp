#pragma once

#include "rootflow/error.hpp"
#include "rootflow/random.hpp"
#include "rootflow/parallel.hpp"
#include "rootflow/polynomial.hpp"
#include "rootflow/roots.hpp"
#include "rootflow/ensembles.hpp"
#include "rootflow/lattice.hpp"
#include "rootflow/grid.hpp"
#include "rootflow/density.hpp"
#include "rootflow/transforms.hpp"
#include "rootflow/dynamics.hpp"
#include "rootflow/experiments.hpp"
