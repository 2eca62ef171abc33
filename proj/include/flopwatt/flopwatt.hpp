#pragma once

// Umbrella header: the whole library in one include.

#include "flopwatt/errors.hpp"
#include "flopwatt/telemetry.hpp"
#include "flopwatt/trace_io.hpp"
#include "flopwatt/methodology.hpp"
#include "flopwatt/window_analysis.hpp"
#include "flopwatt/aggregation.hpp"
#include "flopwatt/power_model.hpp"
#include "flopwatt/roofline.hpp"
#include "flopwatt/json_io.hpp"
