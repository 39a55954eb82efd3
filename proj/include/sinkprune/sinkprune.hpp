// Copyright (C) 2026 The sinkprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "sinkprune/attention_scores.hpp"
#include "sinkprune/compare.hpp"
#include "sinkprune/core.hpp"
#include "sinkprune/diagnostics.hpp"
#include "sinkprune/npy.hpp"
#include "sinkprune/parallel.hpp"
#include "sinkprune/pipeline.hpp"
#include "sinkprune/serialization.hpp"
#include "sinkprune/sink_score.hpp"
#include "sinkprune/spatial_pruning.hpp"
#include "sinkprune/synth_bench.hpp"
#include "sinkprune/temporal_pruning.hpp"
#include "sinkprune/version.hpp"
