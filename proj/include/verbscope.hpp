#pragma once

#include "verbscope/analysis.hpp"
#include "verbscope/corpus.hpp"
#include "verbscope/eval.hpp"
#include "verbscope/experiment.hpp"
#include "verbscope/external.hpp"
#include "verbscope/hash.hpp"
#include "verbscope/ingest.hpp"
#include "verbscope/pairgen.hpp"
#include "verbscope/parallel.hpp"
#include "verbscope/perturb.hpp"
#include "verbscope/rng.hpp"
#include "verbscope/scorer.hpp"
#include "verbscope/stats.hpp"
#include "verbscope/tagger.hpp"
#include "verbscope/util.hpp"
