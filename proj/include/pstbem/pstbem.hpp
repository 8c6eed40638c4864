#pragma once

#include "pstbem/adaptive.hpp"
#include "pstbem/bench.hpp"
#include "pstbem/core.hpp"
#include "pstbem/mesh.hpp"
#include "pstbem/operators.hpp"
#include "pstbem/pst.hpp"
#include "pstbem/quadrature.hpp"
