#pragma once

#include "sct/classical_tests.hpp"
#include "sct/compare.hpp"
#include "sct/engine.hpp"
#include "sct/error.hpp"
#include "sct/model.hpp"
#include "sct/quantile.hpp"
#include "sct/random.hpp"
#include "sct/sup_solver.hpp"
#include "sct/tube.hpp"
