#ifndef DISCOEXPLORER_DISCOEXPLORER_HPP
#define DISCOEXPLORER_DISCOEXPLORER_HPP

#include "discoexplorer/deql.hpp"
#include "discoexplorer/engine.hpp"
#include "discoexplorer/error.hpp"
#include "discoexplorer/format.hpp"
#include "discoexplorer/ingest.hpp"
#include "discoexplorer/manifest.hpp"
#include "discoexplorer/model.hpp"
#include "discoexplorer/state.hpp"
#include "discoexplorer/stats.hpp"

#endif  // DISCOEXPLORER_DISCOEXPLORER_HPP
