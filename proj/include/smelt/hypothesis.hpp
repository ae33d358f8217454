#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace smelt {

enum class EditKind { replace_region, insert, delete_region, set_parameter };

const char* edit_kind_name(EditKind kind);
EditKind edit_kind_from_name(const std::string& name);

/// One deterministic textual/parametric change. Offsets are byte positions
/// into the current content of `target` at application time.
struct Edit {
  EditKind kind = EditKind::replace_region;
  std::string target;       // file path within the artifact
  std::size_t offset = 0;   // replace_region / insert / delete_region
  std::size_t length = 0;   // replace_region / delete_region
  std::string payload;      // new bytes, or the scalar for set_parameter
  std::string parameter;    // key name for set_parameter ("key = value" lines)
};

struct Candidate {
  std::string id;  // content hash of (base id, ordered edits)
  std::vector<Edit> edits;
  std::optional<std::string> parent;
  int birth_iteration = 0;
};

struct ArtifactSnapshot {
  std::map<std::string, std::string> files;  // path -> content bytes
  std::string provenance;                    // candidate id

  std::string content_hash() const;
};

/// Stable, collision-resistant id for (base, edits). Pure function of its
/// byte encoding; reordering edits changes the id.
std::string candidate_id(const std::string& base_id,
                         const std::vector<Edit>& edits);

Candidate make_candidate(const std::string& base_id, std::vector<Edit> edits,
                         std::optional<std::string> parent,
                         int birth_iteration);

/// The empty-edit candidate over the given base.
Candidate root_candidate(const std::string& base_id);

/// Applies the candidate's edits in order. Raises Errc::materialization when
/// an edit does not resolve (missing file, out-of-range region, unknown
/// parameter key).
ArtifactSnapshot materialize(const ArtifactSnapshot& base, const Candidate& c);

/// Reads a directory tree into a snapshot (paths relative, '/'-separated,
/// sorted by the map ordering).
ArtifactSnapshot snapshot_from_directory(const std::filesystem::path& root);

/// Writes the snapshot under `root`, creating directories as needed.
void snapshot_to_directory(const ArtifactSnapshot& snap,
                           const std::filesystem::path& root);

}  // namespace smelt
