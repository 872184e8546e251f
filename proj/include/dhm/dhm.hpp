#pragma once

#include "dhm/errors.hpp"
#include "dhm/types.hpp"
#include "dhm/grid.hpp"
#include "dhm/spectral.hpp"
#include "dhm/fields.hpp"
#include "dhm/target.hpp"
#include "dhm/curvature.hpp"
#include "dhm/operators.hpp"
#include "dhm/energy.hpp"
#include "dhm/gmres.hpp"
#include "dhm/solver.hpp"
#include "dhm/diagnostics.hpp"
#include "dhm/io.hpp"
#include "dhm/experiment.hpp"
