#pragma once

#include "icmap/association.hpp"
#include "icmap/curvefit.hpp"
#include "icmap/error.hpp"
#include "icmap/evaluation.hpp"
#include "icmap/geometry.hpp"
#include "icmap/hungarian.hpp"
#include "icmap/instance.hpp"
#include "icmap/io.hpp"
#include "icmap/mapstore.hpp"
#include "icmap/metrics.hpp"
#include "icmap/pipeline.hpp"
#include "icmap/polygon.hpp"
#include "icmap/svg.hpp"
#include "icmap/sweep.hpp"
#include "icmap/synth.hpp"
