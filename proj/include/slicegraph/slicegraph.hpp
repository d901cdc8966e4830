#pragma once

#include "slicegraph/builder.hpp"
#include "slicegraph/context.hpp"
#include "slicegraph/diff.hpp"
#include "slicegraph/error.hpp"
#include "slicegraph/eval.hpp"
#include "slicegraph/frontend.hpp"
#include "slicegraph/graph.hpp"
#include "slicegraph/graph_io.hpp"
#include "slicegraph/metrics.hpp"
#include "slicegraph/service.hpp"
#include "slicegraph/session.hpp"
#include "slicegraph/slicer.hpp"
