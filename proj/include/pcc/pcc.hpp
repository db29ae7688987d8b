// pcc.hpp - umbrella header.

#pragma once

#include "pcc/chamfer.hpp"
#include "pcc/core.hpp"
#include "pcc/emd.hpp"
#include "pcc/expansion.hpp"
#include "pcc/io.hpp"
#include "pcc/parallel.hpp"
#include "pcc/pipeline.hpp"
#include "pcc/sampling.hpp"
#include "pcc/spatial.hpp"
