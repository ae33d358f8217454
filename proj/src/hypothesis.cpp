#include "smelt/hypothesis.hpp"

#include <algorithm>

#include "smelt/digest.hpp"
#include "smelt/error.hpp"
#include "smelt/util.hpp"

namespace smelt {

const char* edit_kind_name(EditKind kind) {
  switch (kind) {
    case EditKind::replace_region: return "replace_region";
    case EditKind::insert: return "insert";
    case EditKind::delete_region: return "delete";
    case EditKind::set_parameter: return "set_parameter";
  }
  return "unknown";
}

EditKind edit_kind_from_name(const std::string& name) {
  if (name == "replace_region") return EditKind::replace_region;
  if (name == "insert") return EditKind::insert;
  if (name == "delete") return EditKind::delete_region;
  if (name == "set_parameter") return EditKind::set_parameter;
  raise(Errc::config, "unknown edit kind '" + name + "'");
}

std::string ArtifactSnapshot::content_hash() const {
  Digest d;
  d.field_u64(files.size());
  for (const auto& [path, content] : files) {
    d.field(path);
    d.field(content);
  }
  return d.hex();
}

std::string candidate_id(const std::string& base_id,
                         const std::vector<Edit>& edits) {
  Digest d;
  d.field(base_id);
  d.field_u64(edits.size());
  for (const auto& e : edits) {
    d.field_u64(static_cast<std::uint64_t>(e.kind));
    d.field(e.target);
    d.field_u64(e.offset);
    d.field_u64(e.length);
    d.field(e.payload);
    d.field(e.parameter);
  }
  return d.hex();
}

Candidate make_candidate(const std::string& base_id, std::vector<Edit> edits,
                         std::optional<std::string> parent,
                         int birth_iteration) {
  Candidate c;
  c.id = candidate_id(base_id, edits);
  c.edits = std::move(edits);
  c.parent = std::move(parent);
  c.birth_iteration = birth_iteration;
  return c;
}

Candidate root_candidate(const std::string& base_id) {
  return make_candidate(base_id, {}, std::nullopt, 0);
}

namespace {

std::string& resolve_target(ArtifactSnapshot& snap, const Edit& e) {
  auto it = snap.files.find(e.target);
  if (it == snap.files.end())
    raise(Errc::materialization, "edit target '" + e.target + "' not found");
  return it->second;
}

void apply_edit(ArtifactSnapshot& snap, const Edit& e) {
  std::string& content = resolve_target(snap, e);
  switch (e.kind) {
    case EditKind::replace_region:
      if (e.offset > content.size() || e.length > content.size() - e.offset)
        raise(Errc::materialization,
              "replace_region out of range in '" + e.target + "'");
      content.replace(e.offset, e.length, e.payload);
      break;
    case EditKind::insert:
      if (e.offset > content.size())
        raise(Errc::materialization,
              "insert offset out of range in '" + e.target + "'");
      content.insert(e.offset, e.payload);
      break;
    case EditKind::delete_region:
      if (e.offset > content.size() || e.length > content.size() - e.offset)
        raise(Errc::materialization,
              "delete out of range in '" + e.target + "'");
      content.erase(e.offset, e.length);
      break;
    case EditKind::set_parameter: {
      // Rewrites the value of the first "key = value" line (or "key=value").
      const auto lines = split_lines(content);
      std::string rebuilt;
      bool found = false;
      const bool had_trailing_newline =
          !content.empty() && content.back() == '\n';
      for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string line = lines[i];
        if (!found) {
          std::size_t eq = line.find('=');
          if (eq != std::string::npos) {
            std::string key = line.substr(0, eq);
            while (!key.empty() && (key.back() == ' ' || key.back() == '\t'))
              key.pop_back();
            if (key == e.parameter) {
              line = line.substr(0, eq + 1) + " " + e.payload;
              found = true;
            }
          }
        }
        rebuilt += line;
        if (i + 1 < lines.size() || had_trailing_newline) rebuilt += '\n';
      }
      if (!found)
        raise(Errc::materialization, "parameter '" + e.parameter +
                                         "' not found in '" + e.target + "'");
      content = std::move(rebuilt);
      break;
    }
  }
}

}  // namespace

ArtifactSnapshot materialize(const ArtifactSnapshot& base, const Candidate& c) {
  ArtifactSnapshot out = base;
  for (const auto& e : c.edits) apply_edit(out, e);
  out.provenance = c.id;
  return out;
}

ArtifactSnapshot snapshot_from_directory(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root))
    raise(Errc::io, "artifact directory '" + root.string() + "' not found");
  ArtifactSnapshot snap;
  for (auto it = std::filesystem::recursive_directory_iterator(root);
       it != std::filesystem::recursive_directory_iterator(); ++it) {
    if (!it->is_regular_file()) continue;
    const auto rel = std::filesystem::relative(it->path(), root);
    snap.files[rel.generic_string()] = read_file(it->path());
  }
  return snap;
}

void snapshot_to_directory(const ArtifactSnapshot& snap,
                           const std::filesystem::path& root) {
  std::filesystem::create_directories(root);
  for (const auto& [path, content] : snap.files) {
    const auto full = root / std::filesystem::path(path);
    if (full.has_parent_path())
      std::filesystem::create_directories(full.parent_path());
    write_file(full, content);
  }
}

}  // namespace smelt
