#include "patchcluster/diffkit.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <set>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "patchcluster/error.hpp"

namespace patchcluster {

std::string_view to_string(Label label) {
  return label == Label::Correct ? "correct" : "incorrect";
}

std::optional<Label> parse_label(std::string_view text) {
  if (text == "correct") return Label::Correct;
  if (text == "incorrect") return Label::Incorrect;
  return std::nullopt;
}

const Patch* PatchSet::find(std::string_view id) const {
  auto it = std::lower_bound(patches.begin(), patches.end(), id,
                             [](const Patch& p, std::string_view v) { return p.id < v; });
  if (it == patches.end() || it->id != id) return nullptr;
  return &*it;
}

std::vector<std::string> PatchSet::ids() const {
  std::vector<std::string> out;
  out.reserve(patches.size());
  for (const auto& p : patches) out.push_back(p.id);
  return out;
}

ProgramSnapshot snapshot_of(const fs::path& root) {
  ProgramSnapshot snap;
  snap.root = root;
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw Error(ErrorKind::Workspace, "program root is not a directory: " + root.string());
  }
  for (auto it = fs::recursive_directory_iterator(root); it != fs::recursive_directory_iterator(); ++it) {
    if (!it->is_regular_file()) continue;
    const auto rel = fs::relative(it->path(), root).generic_string();
    snap.file_index.emplace(rel, sha256_hex(read_file(it->path())));
  }
  return snap;
}

namespace {

[[noreturn]] void malformed(const std::string& what, std::size_t line_no) {
  throw Error(ErrorKind::MalformedDiff, what + " (diff line " + std::to_string(line_no + 1) + ")");
}

std::string strip_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return std::string(s);
}

std::string header_path(std::string_view line) {
  std::string_view rest = line.substr(4);
  if (auto tab = rest.find('\t'); tab != std::string_view::npos) rest = rest.substr(0, tab);
  std::string path(trim(strip_cr(rest)));
  if (path == "/dev/null") return {};
  if (path.size() > 2 && (path.starts_with("a/") || path.starts_with("b/"))) path = path.substr(2);
  return path;
}

bool parse_range(std::string_view text, std::size_t& start, std::size_t& count) {
  auto comma = text.find(',');
  auto first = text.substr(0, comma);
  auto r = std::from_chars(first.data(), first.data() + first.size(), start);
  if (r.ec != std::errc{} || r.ptr != first.data() + first.size()) return false;
  if (comma == std::string_view::npos) {
    count = 1;
    return true;
  }
  auto second = text.substr(comma + 1);
  r = std::from_chars(second.data(), second.data() + second.size(), count);
  return r.ec == std::errc{} && r.ptr == second.data() + second.size();
}

Hunk parse_hunk_header(std::string_view line, std::size_t line_no) {
  // @@ -a,b +c,d @@ optional section
  Hunk h;
  if (!line.starts_with("@@ -")) malformed("bad hunk header", line_no);
  auto close = line.find(" @@", 4);
  if (close == std::string_view::npos) malformed("bad hunk header", line_no);
  auto body = line.substr(4, close - 4);
  auto space = body.find(" +");
  if (space == std::string_view::npos) malformed("bad hunk header", line_no);
  if (!parse_range(body.substr(0, space), h.old_start, h.old_count) ||
      !parse_range(body.substr(space + 2), h.new_start, h.new_count)) {
    malformed("bad hunk range", line_no);
  }
  return h;
}

struct FileText {
  std::vector<std::string> lines;
  bool final_newline = true;
};

FileText split_content(std::string_view content) {
  FileText ft;
  ft.lines = split_lines(content);
  ft.final_newline = content.empty() || content.back() == '\n';
  return ft;
}

std::string join_content(const FileText& ft) {
  std::string out;
  for (std::size_t i = 0; i < ft.lines.size(); ++i) {
    out += ft.lines[i];
    if (i + 1 < ft.lines.size() || ft.final_newline) out.push_back('\n');
  }
  return out;
}

bool matches_at(const std::vector<std::string>& lines, std::size_t at,
                const std::vector<const HunkLine*>& old_side) {
  if (at + old_side.size() > lines.size()) return false;
  for (std::size_t k = 0; k < old_side.size(); ++k) {
    if (lines[at + k] != old_side[k]->text) return false;
  }
  return true;
}

FileDiff reversed(const FileDiff& fd) {
  FileDiff r;
  r.old_path = fd.new_path;
  r.new_path = fd.old_path;
  for (const auto& h : fd.hunks) {
    Hunk rh;
    rh.old_start = h.new_start;
    rh.old_count = h.new_count;
    rh.new_start = h.old_start;
    rh.new_count = h.old_count;
    rh.lines = h.lines;
    for (auto& l : rh.lines) {
      if (l.kind == '+') {
        l.kind = '-';
      } else if (l.kind == '-') {
        l.kind = '+';
      }
    }
    r.hunks.push_back(std::move(rh));
  }
  return r;
}

using Reader = std::function<std::optional<std::string>(const std::string&)>;

/// Applies every file diff against contents supplied by read; returns the
/// resulting content per path (nullopt = deleted).
std::map<std::string, std::optional<std::string>> apply_in_memory(const std::vector<FileDiff>& files,
                                                                  const Reader& read) {
  std::map<std::string, std::optional<std::string>> overlay;
  auto current = [&](const std::string& path) -> std::optional<std::string> {
    if (auto it = overlay.find(path); it != overlay.end()) return it->second;
    return read(path);
  };
  for (const auto& fd : files) {
    std::string original;
    if (!fd.old_path.empty()) {
      auto content = current(fd.old_path);
      if (!content) throw Error(ErrorKind::HunkMismatch, "patched file does not exist: " + fd.old_path);
      original = std::move(*content);
    } else if (current(fd.new_path)) {
      throw Error(ErrorKind::HunkMismatch, "file to create already exists: " + fd.new_path);
    }
    std::string result = apply_file_diff(original, fd);
    if (fd.new_path.empty()) {
      if (!result.empty()) {
        throw Error(ErrorKind::HunkMismatch, "deleted file has leftover content: " + fd.old_path);
      }
      overlay[fd.old_path] = std::nullopt;
      continue;
    }
    if (!fd.old_path.empty() && fd.old_path != fd.new_path) overlay[fd.old_path] = std::nullopt;
    overlay[fd.new_path] = std::move(result);
  }
  return overlay;
}

}  // namespace

std::string apply_file_diff(std::string_view original, const FileDiff& diff) {
  const FileText in = split_content(original);
  FileText out;
  out.final_newline = in.final_newline;
  std::size_t pos = 0;
  for (const auto& h : diff.hunks) {
    std::vector<const HunkLine*> old_side;
    std::vector<const HunkLine*> new_side;
    for (const auto& l : h.lines) {
      if (l.kind != '+') old_side.push_back(&l);
      if (l.kind != '-') new_side.push_back(&l);
    }
    std::size_t expected = h.old_count == 0 ? h.old_start : (h.old_start == 0 ? 0 : h.old_start - 1);
    expected = std::clamp(expected, pos, in.lines.size());
    // Exact match at the stated line, else the nearest exact match after the
    // previous hunk. No fuzz.
    std::optional<std::size_t> found;
    const std::size_t span = in.lines.size() + 1;
    for (std::size_t delta = 0; delta <= span && !found; ++delta) {
      if (expected + delta <= in.lines.size() && matches_at(in.lines, expected + delta, old_side)) {
        found = expected + delta;
      } else if (delta > 0 && expected >= pos + delta && matches_at(in.lines, expected - delta, old_side)) {
        found = expected - delta;
      }
    }
    if (!found) {
      throw Error(ErrorKind::HunkMismatch,
                  "hunk @@ -" + std::to_string(h.old_start) + "," + std::to_string(h.old_count) +
                      " does not match " + diff.path());
    }
    out.lines.insert(out.lines.end(), in.lines.begin() + static_cast<std::ptrdiff_t>(pos),
                     in.lines.begin() + static_cast<std::ptrdiff_t>(*found));
    for (const auto* l : new_side) out.lines.push_back(l->text);
    pos = *found + old_side.size();
    if (pos == in.lines.size()) {
      if (!new_side.empty()) {
        out.final_newline = !new_side.back()->no_newline;
      } else if (!old_side.empty() && old_side.back()->no_newline) {
        out.final_newline = true;
      }
    }
  }
  out.lines.insert(out.lines.end(), in.lines.begin() + static_cast<std::ptrdiff_t>(pos), in.lines.end());
  if (out.lines.empty()) return {};
  return join_content(out);
}

Patch parse_patch(std::string diff_text, std::string id, std::string tool) {
  Patch patch;
  patch.id = std::move(id);
  patch.tool = std::move(tool);
  const auto lines = split_lines(diff_text);
  FileDiff* current = nullptr;
  std::size_t i = 0;
  while (i < lines.size()) {
    const std::string& line = lines[i];
    if (line.starts_with("--- ")) {
      if (i + 1 >= lines.size() || !lines[i + 1].starts_with("+++ ")) {
        malformed("'---' header without '+++'", i);
      }
      FileDiff fd;
      fd.old_path = header_path(line);
      fd.new_path = header_path(lines[i + 1]);
      if (fd.old_path.empty() && fd.new_path.empty()) malformed("both sides are /dev/null", i);
      patch.files.push_back(std::move(fd));
      current = &patch.files.back();
      i += 2;
      continue;
    }
    if (line.starts_with("@@")) {
      if (current == nullptr) malformed("hunk before file header", i);
      Hunk h = parse_hunk_header(strip_cr(line), i);
      std::size_t old_left = h.old_count;
      std::size_t new_left = h.new_count;
      ++i;
      while (old_left > 0 || new_left > 0) {
        if (i >= lines.size()) malformed("truncated hunk", i);
        const std::string& body = lines[i];
        char kind = body.empty() ? ' ' : body[0];
        if (kind == '\\') {
          if (h.lines.empty()) malformed("stray no-newline marker", i);
          h.lines.back().no_newline = true;
          ++i;
          continue;
        }
        HunkLine hl{kind, body.empty() ? std::string() : body.substr(1)};
        if (kind == ' ') {
          if (old_left == 0 || new_left == 0) malformed("hunk body longer than header", i);
          --old_left;
          --new_left;
        } else if (kind == '-') {
          if (old_left == 0) malformed("hunk body longer than header", i);
          --old_left;
        } else if (kind == '+') {
          if (new_left == 0) malformed("hunk body longer than header", i);
          --new_left;
        } else {
          malformed("truncated hunk", i);
        }
        h.lines.push_back(std::move(hl));
        ++i;
      }
      if (i < lines.size() && lines[i].starts_with("\\")) {
        if (!h.lines.empty()) h.lines.back().no_newline = true;
        ++i;
      }
      current->hunks.push_back(std::move(h));
      continue;
    }
    // diff --git, index, mode and similar header noise.
    ++i;
  }
  std::set<std::string> touched;
  for (const auto& fd : patch.files) touched.insert(fd.path());
  patch.files_touched.assign(touched.begin(), touched.end());
  patch.diff_text = std::move(diff_text);
  patch.length = patch_length(patch);
  return patch;
}

std::size_t patch_length(const Patch& patch, const std::vector<std::string>& comment_prefixes) {
  std::size_t count = 0;
  for (const auto& fd : patch.files) {
    for (const auto& h : fd.hunks) {
      for (const auto& l : h.lines) {
        if (l.kind == ' ') continue;
        const auto t = trim(l.text);
        if (t.empty()) continue;
        const bool comment = std::any_of(comment_prefixes.begin(), comment_prefixes.end(),
                                         [&](const std::string& p) { return !p.empty() && t.starts_with(p); });
        if (!comment) ++count;
      }
    }
  }
  return count;
}

std::map<std::string, std::string> patched_index(const ProgramSnapshot& snapshot, const Patch& patch) {
  auto overlay = apply_in_memory(patch.files, [&](const std::string& path) -> std::optional<std::string> {
    if (!snapshot.file_index.contains(path)) return std::nullopt;
    return read_file(snapshot.root / path);
  });
  auto index = snapshot.file_index;
  for (auto& [path, content] : overlay) {
    if (content) {
      index[path] = sha256_hex(*content);
    } else {
      index.erase(path);
    }
  }
  return index;
}

namespace {

ProgramSnapshot apply_files_in_place(const ProgramSnapshot& base, const std::vector<FileDiff>& files,
                                     const fs::path& root) {
  auto overlay = apply_in_memory(files, [&](const std::string& path) -> std::optional<std::string> {
    std::error_code ec;
    if (!fs::is_regular_file(root / path, ec)) return std::nullopt;
    return read_file(root / path);
  });
  ProgramSnapshot out{root, base.file_index};
  for (auto& [path, content] : overlay) {
    const fs::path target = root / path;
    if (content) {
      write_file(target, *content);
      out.file_index[path] = sha256_hex(*content);
    } else {
      std::error_code ec;
      fs::remove(target, ec);
      if (ec) throw Error(ErrorKind::Workspace, "cannot remove " + target.string() + ": " + ec.message());
      out.file_index.erase(path);
    }
  }
  return out;
}

}  // namespace

ProgramSnapshot apply_patch(const ProgramSnapshot& snapshot, const Patch& patch, const fs::path& workspace) {
  std::error_code ec;
  if (fs::exists(workspace, ec) && !fs::is_empty(workspace, ec)) {
    throw Error(ErrorKind::Workspace, "workspace is not empty: " + workspace.string());
  }
  fs::create_directories(workspace, ec);
  fs::copy(snapshot.root, workspace, fs::copy_options::recursive | fs::copy_options::copy_symlinks, ec);
  if (ec) throw Error(ErrorKind::Workspace, "cannot copy program into " + workspace.string() + ": " + ec.message());
  return apply_files_in_place(snapshot, patch.files, workspace);
}

ProgramSnapshot revert_patch(const ProgramSnapshot& applied, const Patch& patch) {
  std::vector<FileDiff> reverse;
  for (auto it = patch.files.rbegin(); it != patch.files.rend(); ++it) reverse.push_back(reversed(*it));
  return apply_files_in_place(applied, reverse, applied.root);
}

PatchSet dedup(std::vector<Patch> patches, const ProgramSnapshot& snapshot, std::string bug_id) {
  std::sort(patches.begin(), patches.end(), [](const Patch& a, const Patch& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < patches.size(); ++i) {
    if (patches[i].id == patches[i - 1].id) throw Error(ErrorKind::Schema, "duplicate patch id " + patches[i].id);
  }
  PatchSet set;
  set.bug_id = std::move(bug_id);
  std::unordered_map<std::string, std::string> kept_by_digest;
  for (auto& p : patches) {
    std::string key;
    for (const auto& [path, hash] : patched_index(snapshot, p)) {
      key += path;
      key.push_back('\0');
      key += hash;
      key.push_back('\n');
    }
    auto [it, inserted] = kept_by_digest.emplace(sha256_hex(key), p.id);
    if (inserted) {
      set.patches.push_back(std::move(p));
    } else {
      set.duplicates.push_back({p.id, it->second});
    }
  }
  return set;
}

std::map<std::string, Label> load_labels(const fs::path& bug_dir) {
  std::map<std::string, Label> labels;
  const auto manifest = bug_dir / "manifest.json";
  std::error_code ec;
  if (!fs::exists(manifest, ec)) return labels;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(manifest));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Schema, manifest.string() + ": " + e.what());
  }
  if (!doc.is_array()) throw Error(ErrorKind::Schema, manifest.string() + ": expected an array");
  for (const auto& rec : doc) {
    if (!rec.is_object() || !rec.contains("patch_id") || !rec["patch_id"].is_string()) {
      throw Error(ErrorKind::Schema, manifest.string() + ": record without patch_id");
    }
    if (rec.contains("label") && !rec["label"].is_null()) {
      auto label = rec["label"].is_string() ? parse_label(rec["label"].get<std::string>()) : std::nullopt;
      if (!label) throw Error(ErrorKind::Schema, manifest.string() + ": bad label");
      labels[rec["patch_id"].get<std::string>()] = *label;
    }
  }
  return labels;
}

std::vector<Patch> load_patch_dir(const fs::path& bug_dir, const std::vector<std::string>& comment_prefixes) {
  std::error_code ec;
  if (!fs::is_directory(bug_dir, ec)) throw Error(ErrorKind::Config, "no such patch directory: " + bug_dir.string());
  std::map<std::string, std::string> tools;
  const auto manifest = bug_dir / "manifest.json";
  if (fs::exists(manifest, ec)) {
    auto doc = nlohmann::json::parse(read_file(manifest), nullptr, false);
    if (doc.is_discarded() || !doc.is_array()) throw Error(ErrorKind::Schema, manifest.string() + ": expected an array");
    for (const auto& rec : doc) {
      if (rec.contains("patch_id") && rec.contains("tool") && rec["tool"].is_string()) {
        tools[rec["patch_id"].get<std::string>()] = rec["tool"].get<std::string>();
      }
    }
  }
  const auto labels = load_labels(bug_dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(bug_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".diff") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Patch> patches;
  for (const auto& f : files) {
    const auto id = f.stem().string();
    auto tool_it = tools.find(id);
    Patch p = parse_patch(read_file(f), id, tool_it == tools.end() ? "unknown" : tool_it->second);
    p.length = patch_length(p, comment_prefixes);
    if (auto l = labels.find(id); l != labels.end()) p.label = l->second;
    patches.push_back(std::move(p));
  }
  return patches;
}

}  // namespace patchcluster
