#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "patchcluster/util.hpp"

namespace patchcluster {

enum class Label { Correct, Incorrect };

std::string_view to_string(Label label);
std::optional<Label> parse_label(std::string_view text);

/// One hunk line: ' ' context, '-' removed, '+' added.
struct HunkLine {
  char kind;
  std::string text;
  /// Set when the line is followed by "\ No newline at end of file".
  bool no_newline = false;
};

struct Hunk {
  std::size_t old_start = 0;
  std::size_t old_count = 0;
  std::size_t new_start = 0;
  std::size_t new_count = 0;
  std::vector<HunkLine> lines;
};

/// All hunks that touch one file. An empty old_path or new_path means
/// /dev/null (file creation or deletion).
struct FileDiff {
  std::string old_path;
  std::string new_path;
  std::vector<Hunk> hunks;

  const std::string& path() const { return new_path.empty() ? old_path : new_path; }
};

struct Patch {
  std::string id;
  std::string tool;
  std::string diff_text;
  std::vector<std::string> files_touched;
  std::optional<Label> label;
  std::size_t length = 0;
  std::vector<FileDiff> files;
};

inline const std::vector<std::string> kDefaultCommentPrefixes = {"//", "/*", "*", "#"};

struct DuplicateRecord {
  std::string patch_id;
  std::string kept_id;
};

struct PatchSet {
  std::string bug_id;
  std::vector<Patch> patches;  // ascending id
  std::vector<DuplicateRecord> duplicates;

  const Patch* find(std::string_view id) const;
  std::vector<std::string> ids() const;
};

struct ProgramSnapshot {
  fs::path root;
  std::map<std::string, std::string> file_index;  // relative path -> sha256
};

/// Hashes every regular file under root.
ProgramSnapshot snapshot_of(const fs::path& root);

/// Parses a unified diff. Throws MalformedDiff. Length is computed with the
/// default comment prefixes.
Patch parse_patch(std::string diff_text, std::string id, std::string tool);

/// Copies the snapshot into workspace and applies the patch there.
ProgramSnapshot apply_patch(const ProgramSnapshot& snapshot, const Patch& patch,
                            const fs::path& workspace);

/// Reverses a patch in place inside an applied workspace.
ProgramSnapshot revert_patch(const ProgramSnapshot& applied, const Patch& patch);

/// File index of the program the patch would produce, computed in memory.
std::map<std::string, std::string> patched_index(const ProgramSnapshot& snapshot,
                                                 const Patch& patch);

/// Applies the hunks of one file to its content. Throws HunkMismatch.
std::string apply_file_diff(std::string_view original, const FileDiff& diff);

PatchSet dedup(std::vector<Patch> patches, const ProgramSnapshot& snapshot,
               std::string bug_id = {});

std::size_t patch_length(const Patch& patch,
                         const std::vector<std::string>& comment_prefixes = kDefaultCommentPrefixes);

/// Reads `<dir>/*.diff` and the optional `manifest.json` of one bug.
std::vector<Patch> load_patch_dir(const fs::path& bug_dir,
                                  const std::vector<std::string>& comment_prefixes = kDefaultCommentPrefixes);

/// Labels from `<bug_dir>/manifest.json`; empty map when absent.
std::map<std::string, Label> load_labels(const fs::path& bug_dir);

}  // namespace patchcluster
