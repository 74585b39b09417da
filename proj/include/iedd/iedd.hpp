#pragma once

#include "iedd/common.hpp"
#include "iedd/geometry.hpp"
#include "iedd/quadrature.hpp"
#include "iedd/kernel.hpp"
#include "iedd/toeplitz.hpp"
#include "iedd/dense.hpp"
#include "iedd/rskel.hpp"
#include "iedd/preconditioner.hpp"
#include "iedd/pcg.hpp"
#include "iedd/spectrum.hpp"
#include "iedd/experiment.hpp"
#include "iedd/golden.hpp"
