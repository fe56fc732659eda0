#ifndef DISCOEXPLORER_TESTS_FIXTURES_HPP
#define DISCOEXPLORER_TESTS_FIXTURES_HPP

#include <string>

#include "discoexplorer/ingest.hpp"
#include "discoexplorer/manifest.hpp"

#ifndef DX_FIXTURE_DIR
#error "DX_FIXTURE_DIR must point at tests/fixtures"
#endif

namespace fixtures {

inline std::string path(const std::string& name) { return std::string(DX_FIXTURE_DIR) + "/" + name; }

inline discoexplorer::ingest::DatasetSource golden_source() {
  return {"golden", {path("golden.rels")}, {path("golden.conllu")}, {}};
}

inline discoexplorer::Dataset golden() { return discoexplorer::ingest::load_dataset(golden_source()); }

inline discoexplorer::Dataset nosig() {
  return discoexplorer::ingest::load_dataset({"nosig", {path("nosig.rels")}, {path("golden.conllu")}, {}});
}

}  // namespace fixtures

#endif  // DISCOEXPLORER_TESTS_FIXTURES_HPP
