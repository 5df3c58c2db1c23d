#pragma once

#include "catspec/analysis.hpp"
#include "catspec/dpss.hpp"
#include "catspec/errors.hpp"
#include "catspec/filter.hpp"
#include "catspec/io.hpp"
#include "catspec/moments.hpp"
#include "catspec/nnls.hpp"
#include "catspec/noise.hpp"
#include "catspec/parallel.hpp"
#include "catspec/reconstruction.hpp"
#include "catspec/rng.hpp"
#include "catspec/sequence.hpp"
#include "catspec/simulator.hpp"
