#pragma once

#include "gcbcoint/cvar_core.hpp"
#include "gcbcoint/data_ingest.hpp"
#include "gcbcoint/diagnostics.hpp"
#include "gcbcoint/errors.hpp"
#include "gcbcoint/hypothesis_tests.hpp"
#include "gcbcoint/json_io.hpp"
#include "gcbcoint/projection.hpp"
#include "gcbcoint/stats.hpp"
#include "gcbcoint/structural_model.hpp"
