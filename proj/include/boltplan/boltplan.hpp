#pragma once

// Umbrella header: the whole toolkit in one include.

#include "boltplan/action.hpp"
#include "boltplan/bundle.hpp"
#include "boltplan/clustering.hpp"
#include "boltplan/corpus.hpp"
#include "boltplan/corpus_gen.hpp"
#include "boltplan/errors.hpp"
#include "boltplan/executor.hpp"
#include "boltplan/experiment.hpp"
#include "boltplan/latent.hpp"
#include "boltplan/matrix.hpp"
#include "boltplan/pipeline.hpp"
#include "boltplan/planner.hpp"
#include "boltplan/rng.hpp"
#include "boltplan/sim.hpp"
#include "boltplan/situation.hpp"
#include "boltplan/state_space.hpp"
#include "boltplan/transition.hpp"
