#pragma once

#include "quadma/angular.hpp"
#include "quadma/benchmarks.hpp"
#include "quadma/geometry.hpp"
#include "quadma/mesh.hpp"
#include "quadma/operator.hpp"
#include "quadma/quadrature.hpp"
#include "quadma/solver.hpp"
