#pragma once

#include "nkpp/config.hpp"
#include "nkpp/errors.hpp"
#include "nkpp/extended.hpp"
#include "nkpp/fft.hpp"
#include "nkpp/fronts.hpp"
#include "nkpp/grid.hpp"
#include "nkpp/io.hpp"
#include "nkpp/kernels.hpp"
#include "nkpp/model.hpp"
#include "nkpp/polytope.hpp"
#include "nkpp/quadrature.hpp"
#include "nkpp/runner.hpp"
#include "nkpp/solver.hpp"
#include "nkpp/speed.hpp"
#include "nkpp/stats.hpp"
#include "nkpp/vec.hpp"
#include "nkpp/weinberger.hpp"
