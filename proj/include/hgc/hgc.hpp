#pragma once

#include "hgc/agents.hpp"
#include "hgc/claims.hpp"
#include "hgc/commands.hpp"
#include "hgc/consensus.hpp"
#include "hgc/dag.hpp"
#include "hgc/error.hpp"
#include "hgc/eval.hpp"
#include "hgc/external.hpp"
#include "hgc/rng.hpp"
#include "hgc/serialize.hpp"
