#pragma once

#include "snnlap/continuum.hpp"
#include "snnlap/density.hpp"
#include "snnlap/errors.hpp"
#include "snnlap/evolution.hpp"
#include "snnlap/experiment.hpp"
#include "snnlap/io.hpp"
#include "snnlap/manifold.hpp"
#include "snnlap/neighbor_index.hpp"
#include "snnlap/operators.hpp"
#include "snnlap/quadrature.hpp"
#include "snnlap/rng.hpp"
#include "snnlap/sampling.hpp"
#include "snnlap/snn_graph.hpp"
#include "snnlap/spectral.hpp"
#include "snnlap/test_function.hpp"
