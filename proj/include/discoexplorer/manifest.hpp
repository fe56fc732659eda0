#ifndef DISCOEXPLORER_MANIFEST_HPP
#define DISCOEXPLORER_MANIFEST_HPP

// Dataset manifests. Two spellings are accepted:
//
//   JSON:       {"datasets": [{"id": "eng.erst.gum", "rels": [...], "conllu": [...], "language": "English"}]}
//               (a bare top-level array works too; "rels"/"conllu" may be a string or a list)
//
//   key/value:  id = eng.erst.gum
//               rels = eng.erst.gum_train.rels, eng.erst.gum_dev.rels
//               conllu = eng.erst.gum_train.conllu, eng.erst.gum_dev.conllu
//               language = English
//               <blank line starts the next record; '#' starts a comment>
//
// Relative paths resolve against `data_root` when given, otherwise against
// the manifest's own directory.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "discoexplorer/error.hpp"
#include "discoexplorer/ingest.hpp"
#include "discoexplorer/text.hpp"

namespace discoexplorer::ingest {

namespace detail {

inline std::string resolve_path(const std::string& path, const std::filesystem::path& base) {
  std::filesystem::path p(path);
  if (p.is_absolute() || base.empty()) return p.string();
  return (base / p).lexically_normal().string();
}

inline void finish_record(DatasetSource& rec, std::vector<DatasetSource>& out, const std::string& origin) {
  if (rec.dataset_id.empty() && rec.rels_paths.empty() && rec.conllu_paths.empty() && rec.display.empty()) return;
  if (rec.dataset_id.empty()) throw FormatError("manifest record without 'id'", origin);
  if (rec.rels_paths.empty() || rec.conllu_paths.empty()) {
    throw FormatError("manifest record '" + rec.dataset_id + "' needs both 'rels' and 'conllu'", origin);
  }
  for (const auto& existing : out) {
    if (existing.dataset_id == rec.dataset_id) throw FormatError("duplicate dataset id '" + rec.dataset_id + "'", origin);
  }
  out.push_back(std::move(rec));
  rec = DatasetSource{};
}

inline std::vector<std::string> path_list(const nlohmann::json& value, const std::filesystem::path& base) {
  std::vector<std::string> out;
  if (value.is_string()) {
    out.push_back(resolve_path(value.get<std::string>(), base));
  } else if (value.is_array()) {
    for (const auto& v : value) out.push_back(resolve_path(v.get<std::string>(), base));
  } else {
    throw FormatError("manifest paths must be a string or a list of strings");
  }
  return out;
}

}  // namespace detail

inline std::vector<DatasetSource> parse_manifest(const std::string& content, const std::filesystem::path& base,
                                                 const std::string& origin = "manifest") {
  std::vector<DatasetSource> out;
  auto body = text::trim(content);
  if (!body.empty() && (body.front() == '{' || body.front() == '[')) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("invalid JSON manifest: ") + e.what(), origin);
    }
    const nlohmann::json& list = doc.is_array() ? doc : doc.value("datasets", nlohmann::json::array());
    for (const auto& item : list) {
      DatasetSource rec;
      for (const auto& [key, value] : item.items()) {
        if (key == "id") rec.dataset_id = value.get<std::string>();
        else if (key == "rels") rec.rels_paths = detail::path_list(value, base);
        else if (key == "conllu") rec.conllu_paths = detail::path_list(value, base);
        else rec.display[key] = value.is_string() ? value.get<std::string>() : value.dump();
      }
      detail::finish_record(rec, out, origin);
    }
    return out;
  }

  DatasetSource rec;
  std::istringstream in(content);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto view = text::trim(line);
    if (view.empty()) {
      detail::finish_record(rec, out, origin);
      continue;
    }
    if (view.front() == '#') continue;
    auto sep = view.find_first_of("=:");
    if (sep == std::string_view::npos) throw FormatError("expected 'key = value'", origin, line_no);
    auto key = text::ascii_lower(text::trim(view.substr(0, sep)));
    auto value = std::string(text::trim(view.substr(sep + 1)));
    if (key == "id") {
      if (!rec.dataset_id.empty()) detail::finish_record(rec, out, origin);
      rec.dataset_id = value;
    } else if (key == "rels" || key == "conllu") {
      auto& target = key == "rels" ? rec.rels_paths : rec.conllu_paths;
      for (auto p : text::split(value, ',')) {
        auto trimmed = text::trim(p);
        if (!trimmed.empty()) target.push_back(detail::resolve_path(std::string(trimmed), base));
      }
    } else {
      rec.display[key] = value;
    }
  }
  detail::finish_record(rec, out, origin);
  return out;
}

inline std::vector<DatasetSource> load_manifest(const std::string& path, const std::string& data_root = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::filesystem::path base = data_root.empty() ? std::filesystem::path(path).parent_path()
                                                 : std::filesystem::path(data_root);
  return parse_manifest(buffer.str(), base, path);
}

}  // namespace discoexplorer::ingest

#endif  // DISCOEXPLORER_MANIFEST_HPP
